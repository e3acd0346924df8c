use std::path::{Path, PathBuf};

use pdm_core::dataset::WindowingConfig;
use pdm_core::fusion::FusionMode;
use pdm_core::pipeline::{LstmSettings, SvmSettings};
use pdm_core::synth::{BenchConfig, DatasetConfig};
use pdm_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "PDM_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: PathBuf,
    pub models: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data: "data".into(),
            models: "models".into(),
            reports: "reports".into(),
        }
    }
}

/// The single JSON document every subcommand reads. Missing keys take the
/// desk defaults; unknown keys are an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub n_runs: usize,
    pub test_runs: usize,
    pub dataset: DatasetConfig,
    pub svm: SvmSettings,
    pub lstm: LstmSettings,
    pub tau_ms: Option<f64>,
    pub fusion: FusionMode,
    pub sustain: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BenchConfig::default();
        Self {
            seed: b.master_seed,
            paths: Paths::default(),
            n_runs: b.n_runs,
            test_runs: b.test_runs,
            dataset: b.data,
            svm: b.svm,
            lstm: b.lstm,
            tau_ms: b.tau_ms,
            fusion: b.fusion,
            sustain: b.sustain,
        }
    }
}

impl RunConfig {
    /// Reads `path` (or defaults when `None`) and applies `PDM_SEED`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Ok(s) = std::env::var(SEED_ENV) {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV} must be an unsigned integer, got {s:?}")))?;
        }
        cfg.bench().validate()?;
        Ok(cfg)
    }

    pub fn windowing(&self) -> WindowingConfig {
        self.dataset.windowing
    }

    pub fn tau(&self) -> f64 {
        self.bench().tau()
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            master_seed: self.seed,
            n_runs: self.n_runs,
            test_runs: self.test_runs,
            data: self.dataset.clone(),
            svm: self.svm,
            lstm: self.lstm,
            tau_ms: self.tau_ms,
            fusion: self.fusion,
            sustain: self.sustain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"paths": {"dta": "x"}}"#).is_err());
    }

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }
}
