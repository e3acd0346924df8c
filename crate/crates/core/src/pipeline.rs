//! Model training on feature datasets, shared by the benchmark and the CLI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FaultTruth};
use crate::error::{Error, Result};
use crate::lstm::{lstm_train, rul_fit_linear, Example, LstmDims, LstmModel, RulLinearModel, TrainConfig};
use crate::scaling::Scaling;
use crate::svm::{svm_train, KernelSpec, Label, SvmConfig, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSettings {
    pub c: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub max_passes: Option<usize>,
    pub kernel: KernelKind,
    /// RBF width; `None` means `1 / dim` on standardized features.
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl Default for SvmSettings {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: None,
            kernel: KernelKind::Rbf,
            gamma: None,
        }
    }
}

impl SvmSettings {
    pub fn kernel_spec(&self, dim: usize) -> Result<KernelSpec> {
        match self.kernel {
            KernelKind::Linear => Ok(KernelSpec::Linear),
            KernelKind::Rbf => KernelSpec::rbf(self.gamma.unwrap_or(1.0 / dim.max(1) as f64)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmSettings {
    pub hidden_dim: usize,
    /// Feature windows per input sequence.
    pub history: usize,
    pub train: TrainConfig,
}

impl Default for LstmSettings {
    fn default() -> Self {
        Self {
            hidden_dim: 8,
            history: 8,
            train: TrainConfig {
                learning_rate: 0.5,
                epochs: 300,
                grad_clip: 5.0,
                seed: 0,
            },
        }
    }
}

fn labeled_rows(ds: &Dataset) -> Result<Vec<(Vec<f64>, Label)>> {
    let labels = ds.labels()?;
    Ok(ds
        .samples
        .iter()
        .zip(labels)
        .map(|(s, l)| (s.features.clone(), l.label))
        .collect())
}

pub fn train_svm(ds: &Dataset, settings: &SvmSettings, seed: u64) -> Result<SvmModel> {
    if ds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cfg = SvmConfig {
        c: settings.c,
        tolerance: settings.tolerance,
        max_passes: settings.max_passes,
        seed,
        standardize: true,
    };
    svm_train(&labeled_rows(ds)?, &cfg, settings.kernel_spec(ds.dim())?)
}

pub fn train_linear(ds: &Dataset) -> Result<RulLinearModel> {
    let targets: Vec<f64> = ds.labels()?.iter().map(|l| l.rul_ms).collect();
    let rows: Vec<&[f64]> = ds.samples.iter().map(|s| s.features.as_slice()).collect();
    rul_fit_linear(&rows, &targets)
}

/// Trains the LSTM on standardized feature sequences with RUL targets
/// divided by their maximum; both transforms are stored in the model.
pub fn train_lstm(ds: &Dataset, settings: &LstmSettings) -> Result<(LstmModel, Vec<f64>)> {
    if ds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let labels = ds.labels()?;
    let rows: Vec<Vec<f64>> = ds.samples.iter().map(|s| s.features.clone()).collect();
    let scaling = Scaling::fit(&rows)?;
    let max_rul = labels.iter().map(|l| l.rul_ms).fold(0.0, f64::max);
    let target_scale = if max_rul > 0.0 { max_rul } else { 1.0 };

    let data: Vec<Example> = ds
        .sequences(settings.history)
        .into_iter()
        .zip(&labels)
        .map(|(seq, l)| {
            let seq = seq.iter().map(|x| scaling.apply(x)).collect::<Result<Vec<_>>>()?;
            Ok((seq, l.rul_ms / target_scale))
        })
        .collect::<Result<_>>()?;

    let dims = LstmDims {
        input_dim: ds.dim(),
        hidden_dim: settings.hidden_dim,
    };
    let (mut model, curve) = lstm_train(&data, &settings.train, dims)?;
    model.target_scale = target_scale;
    model.input_scaling = Some(scaling);
    Ok((model, curve))
}

/// Time from the first sustained alert of a run to its failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeRun {
    pub run_id: String,
    pub detected: bool,
    pub alert_ms: Option<i64>,
    pub lead_time_ms: Option<i64>,
    /// Whether the first sustained alert came before fault onset.
    pub before_onset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeStats {
    pub runs: usize,
    pub detected: usize,
    pub median_ms: Option<f64>,
    pub min_ms: Option<i64>,
    pub median_samples: Option<f64>,
    pub min_samples: Option<f64>,
    pub per_run: Vec<LeadTimeRun>,
}

/// First window per machine that closes `sustain` consecutive positive
/// predictions.
pub fn lead_times(
    ds: &Dataset,
    predicted: &[Label],
    truth: &BTreeMap<String, FaultTruth>,
    sustain: usize,
    sample_period_ms: i64,
) -> Result<LeadTimeStats> {
    if predicted.len() != ds.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: ds.len(),
        });
    }
    let sustain = sustain.max(1);
    let mut per_run = Vec::new();
    for (id, range) in ds.machine_ranges() {
        let t = truth
            .get(&id)
            .ok_or_else(|| Error::InvalidConfig(format!("no ground truth for {id}")))?;
        let mut streak = 0;
        let mut alert_ms = None;
        for i in range {
            streak = if predicted[i] == 1 { streak + 1 } else { 0 };
            if streak >= sustain {
                alert_ms = Some(ds.samples[i].end_timestamp_ms);
                break;
            }
        }
        per_run.push(LeadTimeRun {
            run_id: id,
            detected: alert_ms.is_some(),
            alert_ms,
            lead_time_ms: alert_ms.map(|a| (t.failure_ms - a).max(0)),
            before_onset: alert_ms.map(|a| a < t.fault_onset_ms).unwrap_or(false),
        });
    }

    let mut leads: Vec<i64> = per_run.iter().filter_map(|r| r.lead_time_ms).collect();
    leads.sort_unstable();
    let median_ms = match leads.len() {
        0 => None,
        n if n % 2 == 1 => Some(leads[n / 2] as f64),
        n => Some((leads[n / 2 - 1] + leads[n / 2]) as f64 / 2.0),
    };
    let period = sample_period_ms as f64;
    Ok(LeadTimeStats {
        runs: per_run.len(),
        detected: leads.len(),
        median_ms,
        min_ms: leads.first().copied(),
        median_samples: median_ms.map(|m| m / period),
        min_samples: leads.first().map(|&m| m as f64 / period),
        per_run,
    })
}
