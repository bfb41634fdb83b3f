use std::path::PathBuf;
use std::process::ExitCode;

use cfx_cli::commands;
use cfx_cli::{CaseSelector, CliError, ModeSelect, Overrides, RunConfig};
use cfx_core::intervention::NormMode;
use cfx_core::par::Exec;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cfx", version, about = "Counterfactual explanations from a forged decision boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the classifier and the validity simulators.
    Train(Common),
    /// Train the boundary autoencoders and build the critical set.
    Boundary(Common),
    /// Compute counterfactuals for selected test cases.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all-abnormal")]
        cases: CaseSelector,
    },
    /// Score saved explanations and write the report.
    Evaluate(Common),
    /// train, boundary, explain and evaluate in one go.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all-abnormal")]
        cases: CaseSelector,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    /// Each vector scaled to unit length.
    Literal,
    /// Euclidean over min-max encoded features.
    Minmax,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Sets all four seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeSelect>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run batch stages on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, Exec), CliError> {
        let o = Overrides {
            seed: self.seed,
            beta: self.beta,
            alpha: self.alpha,
            mode: self.mode,
            norm: self.norm.map(|n| match n {
                NormArg::Literal => NormMode::SampleL2,
                NormArg::Minmax => NormMode::MinMax,
            }),
            output: self.output.clone(),
        };
        let exec = if self.sequential { Exec::Sequential } else { Exec::default() };
        Ok((RunConfig::load(&self.config, &o)?, exec))
    }
}

fn print_notices(notices: &[String]) {
    for n in notices {
        eprintln!("note: {n}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(c) => {
            let (cfg, _) = c.load()?;
            let s = commands::cmd_train(&cfg)?;
            println!("train accuracy {:.4}", s.train_accuracy);
            if let Some(a) = s.test_accuracy {
                println!("test accuracy  {a:.4}");
            }
            if let Some(a) = s.simulator_test_accuracy {
                println!("simulator test accuracy {a:.4}");
            }
            println!("artifacts in {}", s.dir.display());
        }
        Command::Boundary(c) => {
            let (cfg, exec) = c.load()?;
            let s = commands::cmd_boundary(&cfg, exec)?;
            println!(
                "critical set: {} instances ({} bisected, {} from autoencoders), mean gap {:.4}",
                s.size, s.bisected, s.ae_only, s.gap_mean
            );
        }
        Command::Explain { common, cases } => {
            let (cfg, exec) = common.load()?;
            let s = commands::cmd_explain(&cfg, &cases, exec)?;
            print_notices(&s.notices);
            print!("{}", s.table);
        }
        Command::Evaluate(c) => {
            let (cfg, _) = c.load()?;
            let (_, text) = commands::cmd_evaluate(&cfg)?;
            print!("{text}");
        }
        Command::Run { common, cases } => {
            let (cfg, exec) = common.load()?;
            let s = commands::cmd_run(&cfg, &cases, exec)?;
            print_notices(&s.explain.notices);
            print!("{}", s.report_text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
