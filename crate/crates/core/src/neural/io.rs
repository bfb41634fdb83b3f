//! Plain-text model files: JSON holding dims, activations and row-major
//! parameters. Floats are written in shortest round-trip form and parsed with
//! correct rounding, so save/load is lossless.

use std::path::Path;

use super::Network;
use crate::error::{Error, Result};

impl Network {
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let net: Network =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
