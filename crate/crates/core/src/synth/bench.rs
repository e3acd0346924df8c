use serde::{Deserialize, Serialize};

use super::{derive_seed, generate_runs, DatasetConfig, GeneratedData, TAG_LSTM, TAG_SVM};
use crate::error::{Error, Result};
use crate::fusion::{evaluate_models, FusionMode, MetricsReport, ModelSet, MODEL_ORDER};
use crate::lstm::{LstmModel, RulLinearModel};
use crate::pipeline::{lead_times, train_linear, train_lstm, train_svm};
use crate::svm::SvmModel;

pub use crate::pipeline::{LeadTimeRun, LeadTimeStats, LstmSettings as LstmBenchConfig, SvmSettings as SvmBenchConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub master_seed: u64,
    /// Total runs; the last `test_runs` of them form the test split.
    pub n_runs: usize,
    pub test_runs: usize,
    pub data: DatasetConfig,
    pub svm: SvmBenchConfig,
    pub lstm: LstmBenchConfig,
    /// Alert threshold on predicted RUL; `None` uses the label horizon.
    #[serde(default)]
    pub tau_ms: Option<f64>,
    #[serde(default)]
    pub fusion: FusionMode,
    /// Consecutive positive windows that make an alert sustained.
    pub sustain: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            n_runs: 20,
            test_runs: 6,
            data: DatasetConfig::default(),
            svm: SvmBenchConfig::default(),
            lstm: LstmBenchConfig::default(),
            tau_ms: None,
            fusion: FusionMode::Or,
            sustain: 3,
        }
    }
}

impl BenchConfig {
    pub fn tau(&self) -> f64 {
        self.tau_ms.unwrap_or(self.data.horizon_ms() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_runs == 0 || self.test_runs >= self.n_runs {
            return Err(Error::InvalidConfig(format!(
                "test_runs must be in 1..{}, got {}",
                self.n_runs, self.test_runs
            )));
        }
        if self.sustain == 0 {
            return Err(Error::InvalidConfig("sustain must be >= 1".into()));
        }
        if !(self.tau() >= 0.0) {
            return Err(Error::InvalidConfig("tau must be >= 0".into()));
        }
        self.data.template.validate()?;
        self.data.windowing.validate()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.n_runs - self.test_runs).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        (self.n_runs - self.test_runs..self.n_runs).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub run_ids: Vec<String>,
    pub run_seeds: Vec<u64>,
    pub samples: usize,
    pub positives: usize,
    pub negatives: usize,
}

impl SplitInfo {
    fn of(d: &GeneratedData) -> Self {
        let (positives, negatives) = d.class_counts();
        Self {
            run_ids: d.truth.keys().cloned().collect(),
            run_seeds: d.run_seeds.clone(),
            samples: d.dataset.len(),
            positives,
            negatives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLeadTimes {
    pub model: String,
    #[serde(flatten)]
    pub stats: LeadTimeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub status: String,
    pub config: BenchConfig,
    pub tau_ms: f64,
    pub train: SplitInfo,
    pub test: SplitInfo,
    pub svm_support_vectors: Option<usize>,
    pub metrics: Option<MetricsReport>,
    pub lead_times: Vec<ModelLeadTimes>,
    pub lstm_loss_curve: Vec<f64>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn lead_time(&self, model: &str) -> Option<&LeadTimeStats> {
        self.lead_times.iter().find(|l| l.model == model).map(|l| &l.stats)
    }

    /// `model,run_id,detected,lead_time_ms,lead_time_samples`
    pub fn lead_times_csv(&self) -> String {
        let period = self.config.data.template.sample_period_ms as f64;
        let mut out = String::from("model,run_id,detected,lead_time_ms,lead_time_samples\n");
        for l in &self.lead_times {
            for r in &l.stats.per_run {
                let (ms, samples) = match r.lead_time_ms {
                    Some(ms) => (ms.to_string(), (ms as f64 / period).to_string()),
                    None => (String::new(), String::new()),
                };
                out.push_str(&format!("{},{},{},{ms},{samples}\n", l.model, r.run_id, r.detected));
            }
        }
        out
    }

    /// `epoch,loss`
    pub fn loss_curve_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.lstm_loss_curve.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        out
    }
}

/// Benchmark stopped by a training failure, with what was finished.
#[derive(Debug)]
pub struct BenchmarkAbort {
    pub error: Error,
    pub partial: Option<Box<BenchmarkReport>>,
}

impl From<Error> for BenchmarkAbort {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

impl std::fmt::Display for BenchmarkAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "benchmark aborted: {}", self.error)
    }
}

impl std::error::Error for BenchmarkAbort {}

pub struct TrainedModels {
    pub svm: SvmModel,
    pub lstm: LstmModel,
    pub rul_linear: RulLinearModel,
    pub loss_curve: Vec<f64>,
}

pub fn run_benchmark(cfg: &BenchConfig) -> std::result::Result<(BenchmarkReport, TrainedModels), BenchmarkAbort> {
    cfg.validate()?;
    let train_idx = cfg.train_indices();
    let test_idx = cfg.test_indices();
    let train = generate_runs(&cfg.data, &train_idx, cfg.master_seed)?;
    let test = generate_runs(&cfg.data, &test_idx, cfg.master_seed)?;

    if train.run_seeds.iter().any(|s| test.run_seeds.contains(s))
        || train.truth.keys().any(|k| test.truth.contains_key(k))
    {
        return Err(Error::InvalidConfig("train and test runs overlap".into()).into());
    }

    let mut report = BenchmarkReport {
        status: "running".into(),
        config: cfg.clone(),
        tau_ms: cfg.tau(),
        train: SplitInfo::of(&train),
        test: SplitInfo::of(&test),
        svm_support_vectors: None,
        metrics: None,
        lead_times: Vec::new(),
        lstm_loss_curve: Vec::new(),
    };

    let abort = |error: Error, mut partial: BenchmarkReport| {
        partial.status = format!("aborted: {error}");
        BenchmarkAbort {
            error,
            partial: Some(Box::new(partial)),
        }
    };

    let svm = match train_svm(&train.dataset, &cfg.svm, derive_seed(cfg.master_seed, TAG_SVM, 0)) {
        Ok(m) => m,
        Err(e) => return Err(abort(e, report)),
    };
    report.svm_support_vectors = Some(svm.support_vectors.len());
    let rul_linear = match train_linear(&train.dataset) {
        Ok(m) => m,
        Err(e) => return Err(abort(e, report)),
    };
    let mut lstm_settings = cfg.lstm;
    lstm_settings.train.seed = derive_seed(cfg.master_seed, TAG_LSTM, 0);
    let (lstm, loss_curve) = match train_lstm(&train.dataset, &lstm_settings) {
        Ok(r) => r,
        Err(e) => return Err(abort(e, report)),
    };
    report.lstm_loss_curve = loss_curve.clone();

    let models = ModelSet {
        svm: &svm,
        lstm: &lstm,
        rul_linear: &rul_linear,
        history: cfg.lstm.history,
    };
    let (metrics, preds) = match evaluate_models(&test.dataset, &models, cfg.tau(), cfg.fusion) {
        Ok(r) => r,
        Err(e) => return Err(abort(e, report)),
    };
    let period = cfg.data.template.sample_period_ms;
    for (name, labels) in MODEL_ORDER
        .iter()
        .zip([&preds.svm, &preds.lstm, &preds.rul_linear, &preds.hybrid])
    {
        let stats = match lead_times(&test.dataset, labels, &test.truth, cfg.sustain, period) {
            Ok(s) => s,
            Err(e) => return Err(abort(e, report)),
        };
        report.lead_times.push(ModelLeadTimes {
            model: name.to_string(),
            stats,
        });
    }
    report.metrics = Some(metrics);
    report.status = "complete".into();

    Ok((
        report,
        TrainedModels {
            svm,
            lstm,
            rul_linear,
            loss_curve,
        },
    ))
}
