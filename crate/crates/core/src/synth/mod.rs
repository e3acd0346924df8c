//! Synthetic run-to-failure telemetry with known ground truth, and the
//! end-to-end benchmark built on it.

mod bench;
mod generator;

pub use bench::{
    run_benchmark, BenchConfig, BenchmarkAbort, BenchmarkReport, LeadTimeRun, LeadTimeStats, LstmBenchConfig,
    SvmBenchConfig, TrainedModels,
};
pub use generator::{generate_degradation_run, ChannelBaseline, DegradationConfig, DegradationRun};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FaultTruth, WindowingConfig};
use crate::error::{Error, Result};
use crate::par;

/// Mixes a master seed with a stream tag and index (splitmix64 finalizer).
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const TAG_RUN: u64 = 1;
pub const TAG_JITTER: u64 = 2;
pub const TAG_SVM: u64 = 3;
pub const TAG_LSTM: u64 = 4;

pub fn run_id(index: usize) -> String {
    format!("run-{index:03}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub template: DegradationConfig,
    pub windowing: WindowingConfig,
    /// Windows whose RUL is below this many samples are labeled `+1`.
    pub label_horizon: usize,
    /// Per-run fault onset is shifted uniformly within `+-onset_jitter`.
    #[serde(default)]
    pub onset_jitter: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            template: DegradationConfig::default(),
            windowing: WindowingConfig::default(),
            label_horizon: 256,
            onset_jitter: 128,
        }
    }
}

impl DatasetConfig {
    pub fn horizon_ms(&self) -> i64 {
        self.label_horizon as i64 * self.template.sample_period_ms
    }

    /// Degradation config of run `index` under `master_seed`.
    pub fn run_config(&self, master_seed: u64, index: usize) -> DegradationConfig {
        let mut cfg = self.template.clone();
        cfg.seed = derive_seed(master_seed, TAG_RUN, index as u64);
        if self.onset_jitter > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, TAG_JITTER, index as u64));
            let j = self.onset_jitter as i64;
            let onset = cfg.fault_onset as i64 + rng.random_range(-j..=j);
            cfg.fault_onset = onset.clamp(1, cfg.run_length as i64 - 1) as usize;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub runs: Vec<DegradationRun>,
    pub run_seeds: Vec<u64>,
    pub truth: BTreeMap<String, FaultTruth>,
    pub dataset: Dataset,
}

impl GeneratedData {
    pub fn class_counts(&self) -> (usize, usize) {
        self.dataset.class_counts()
    }
}

/// Generates runs `indices` (seeded from `master_seed`) and their labeled
/// windows. Runs are generated in parallel.
pub fn generate_runs(cfg: &DatasetConfig, indices: &[usize], master_seed: u64) -> Result<GeneratedData> {
    if indices.is_empty() {
        return Err(Error::InvalidConfig("at least one run is required".into()));
    }
    cfg.template.validate()?;
    cfg.windowing.validate()?;
    let configs: Vec<(usize, DegradationConfig)> = indices
        .iter()
        .map(|&i| (i, cfg.run_config(master_seed, i)))
        .collect();
    let runs = par::map_slice(&configs, |(i, c)| generate_degradation_run(&run_id(*i), c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let truth = runs.iter().map(|r| (r.series.machine_id.clone(), r.truth)).collect();
    let machines: Vec<_> = runs.iter().map(|r| r.series.clone()).collect();
    let dataset = Dataset::build(&machines, &cfg.windowing, &truth, cfg.horizon_ms())?;
    Ok(GeneratedData {
        run_seeds: configs.iter().map(|(_, c)| c.seed).collect(),
        runs,
        truth,
        dataset,
    })
}

pub fn generate_dataset(n_runs: usize, cfg: &DatasetConfig, seed: u64) -> Result<GeneratedData> {
    if n_runs == 0 {
        return Err(Error::InvalidConfig("n_runs must be >= 1".into()));
    }
    generate_runs(cfg, &(0..n_runs).collect::<Vec<_>>(), seed)
}
