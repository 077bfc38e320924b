use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Contents of a `--config` file. Every key is optional; command-line flags
/// take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub omega: OmegaSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Option<String>,
    pub k: Option<f64>,
    pub phi0: Option<f64>,
    pub phi_t: Option<f64>,
    pub delta_phi: Option<f64>,
    pub p: Option<u32>,
    pub n_modes: Option<usize>,
    pub epsilon: Option<f64>,
    pub branch: Option<String>,
    pub form: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSection {
    pub max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<String>,
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

/// First present value, else the default.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

/// First present value, else an error naming `field`.
pub fn require<T: Clone>(flag: Option<T>, file: &Option<T>, field: &str) -> Result<T, CliError> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| CliError::Config(format!("missing required parameter `{field}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg: RunConfig = toml::from_str(
            "[model]\nkind = \"twomode\"\nk = 2.5\np = 3\n\n[omega]\npoints = 11\n",
        )
        .unwrap();
        assert_eq!(cfg.model.p, Some(3));
        assert_eq!(cfg.omega.points, Some(11));
        assert_eq!(cfg.scan, ScanSection::default());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<RunConfig>("[model]\nkk = 1.0\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        assert_eq!(pick(Some(1.0), &Some(2.0), 3.0), 1.0);
        assert_eq!(pick(None, &Some(2.0), 3.0), 2.0);
        assert_eq!(pick(None, &None, 3.0), 3.0);
        assert!(require::<f64>(None, &None, "k").is_err());
    }
}
