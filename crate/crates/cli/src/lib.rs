//! Config-driven pipeline behind the `cfx` binary: train, forge the boundary,
//! explain cases and evaluate, each stage caching its artifacts under
//! `<output>/<run-id>/`.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{ModeSelect, Overrides, RunConfig, Seeds};
pub use pipeline::CaseSelector;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, missing inputs or artifacts, bad selectors.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] cfx_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub(crate) fn validation(e: cfx_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }

    /// 1 for validation problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        use cfx_core::Error as E;
        match self {
            CliError::Validation(_) => 1,
            CliError::Core(E::InvalidConfig(_) | E::Schema(_) | E::Csv { .. } | E::UnknownLevel { .. }) => 1,
            CliError::Core(_) | CliError::Runtime(_) => 2,
        }
    }
}
