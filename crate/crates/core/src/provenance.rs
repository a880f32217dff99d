//! Provenance stamped onto every output artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "tmclin";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    /// `config` is any serializable description of the effective settings.
    pub fn new<C: Serialize>(seed: u64, config: &C) -> Self {
        let text = serde_json::to_string(config).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        Provenance {
            tool: TOOL.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            config_hash: hex::encode(&digest[..8]),
        }
    }

    /// Comment line for CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} seed={} config={}\n",
            self.tool, self.version, self.seed, self.config_hash
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config() {
        let a = Provenance::new(1, &("x", 1));
        assert_eq!(a, Provenance::new(1, &("x", 1)));
        assert_ne!(a.config_hash, Provenance::new(1, &("x", 2)).config_hash);
        assert!(a.csv_comment().starts_with("# tmclin "));
    }
}
