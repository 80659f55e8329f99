//! TOML run configuration. Every key is optional; command-line flags win.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub d: Option<u32>,
    pub r: Option<String>,
    pub gamma: Option<String>,
    pub theta: Option<String>,
    pub m: Option<String>,
    pub grid_d: Option<usize>,
    pub n_cells: Option<usize>,
    pub datum: Option<String>,
    pub schedule: Option<Vec<u64>>,
    pub lambdas: Option<Vec<f64>>,
    pub n_fixed: Option<u64>,
    pub tol_inner: Option<f64>,
    pub tol_outer: Option<f64>,
    pub max_inner: Option<usize>,
    pub max_outer: Option<usize>,
    pub newton: Option<bool>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_strings_and_lists() {
        let c: FileConfig =
            toml::from_str("m = \"6/5\"\nschedule = [1, 2, 4]\nnewton = true\n").unwrap();
        assert_eq!(c.m.as_deref(), Some("6/5"));
        assert_eq!(c.schedule, Some(vec![1, 2, 4]));
        assert_eq!(c.newton, Some(true));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("gama = \"1/2\"\n").is_err());
    }
}
