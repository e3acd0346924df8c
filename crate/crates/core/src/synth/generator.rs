use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::FaultTruth;
use crate::error::{Error, Result};
use crate::signal::{Channel, MachineSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBaseline {
    pub channel: Channel,
    pub mean: f64,
    pub noise_dev: f64,
}

/// One run-to-failure record. Before `fault_onset` every channel is its
/// baseline plus Gaussian noise; afterwards the vibration channel gains a
/// fault tone whose RMS grows by `ramp` per sample. The record ends at
/// `run_length`, which is taken as the failure point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    pub run_length: usize,
    pub sample_period_ms: i64,
    pub fault_onset: usize,
    pub baselines: Vec<ChannelBaseline>,
    pub ramp: f64,
    /// Fault tone frequency in cycles per sample.
    #[serde(default = "default_fault_frequency")]
    pub fault_frequency: f64,
    #[serde(default)]
    pub start_ms: i64,
    pub seed: u64,
}

fn default_fault_frequency() -> f64 {
    1.0 / 16.0
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self {
            run_length: 2048,
            sample_period_ms: 60_000,
            fault_onset: 1408,
            baselines: vec![
                ChannelBaseline { channel: Channel::Vibration, mean: 2.0, noise_dev: 0.5 },
                ChannelBaseline { channel: Channel::Temperature, mean: 65.0, noise_dev: 1.5 },
                ChannelBaseline { channel: Channel::Load, mean: 40.0, noise_dev: 4.0 },
            ],
            ramp: 0.004,
            fault_frequency: default_fault_frequency(),
            start_ms: 0,
            seed: 0,
        }
    }
}

impl DegradationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0 < self.fault_onset && self.fault_onset < self.run_length) {
            return bad(format!(
                "fault_onset {} must lie strictly inside run_length {}",
                self.fault_onset, self.run_length
            ));
        }
        if self.sample_period_ms <= 0 {
            return bad("sample_period_ms must be > 0".into());
        }
        if self.baselines.is_empty() {
            return bad("at least one channel baseline is required".into());
        }
        let mut chans: Vec<Channel> = self.baselines.iter().map(|b| b.channel).collect();
        chans.sort();
        chans.dedup();
        if chans.len() != self.baselines.len() {
            return bad("duplicate channel in baselines".into());
        }
        if self.baselines.iter().any(|b| !(b.noise_dev > 0.0 && b.noise_dev.is_finite() && b.mean.is_finite())) {
            return bad("noise_dev must be > 0 and means finite".into());
        }
        if !(self.ramp >= 0.0 && self.ramp.is_finite()) {
            return bad("ramp must be >= 0".into());
        }
        if !(self.fault_frequency > 0.0 && self.fault_frequency <= 0.5) {
            return bad("fault_frequency must be in (0, 0.5]".into());
        }
        Ok(())
    }

    pub fn truth(&self) -> FaultTruth {
        FaultTruth {
            fault_onset_ms: self.start_ms + self.fault_onset as i64 * self.sample_period_ms,
            failure_ms: self.start_ms + self.run_length as i64 * self.sample_period_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationRun {
    pub series: MachineSeries,
    pub truth: FaultTruth,
    /// RUL label per sample, `max(0, onset - t) * period`.
    pub rul_ms: Vec<f64>,
}

pub fn generate_degradation_run(machine_id: &str, cfg: &DegradationConfig) -> Result<DegradationRun> {
    cfg.validate()?;
    let n = cfg.run_length;
    let timestamps: Vec<i64> = (0..n as i64).map(|t| cfg.start_ms + t * cfg.sample_period_ms).collect();

    let mut baselines = cfg.baselines.clone();
    baselines.sort_by_key(|b| b.channel);
    let channels = baselines
        .iter()
        .map(|b| {
            // One independent stream per channel keeps each channel's noise
            // unchanged when other channels are added or removed.
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b.channel as u64);
            let values = (0..n)
                .map(|t| {
                    let z: f64 = rng.sample(StandardNormal);
                    let mut v = b.mean + b.noise_dev * z;
                    if b.channel == Channel::Vibration && t >= cfg.fault_onset {
                        let amp = std::f64::consts::SQRT_2 * cfg.ramp * (t - cfg.fault_onset) as f64;
                        v += amp * (2.0 * PI * cfg.fault_frequency * t as f64).sin();
                    }
                    v
                })
                .collect();
            (b.channel, values)
        })
        .collect();

    let rul_ms = (0..n)
        .map(|t| (cfg.fault_onset.saturating_sub(t) as i64 * cfg.sample_period_ms) as f64)
        .collect();

    Ok(DegradationRun {
        series: MachineSeries {
            machine_id: machine_id.to_string(),
            timestamps,
            channels,
        },
        truth: cfg.truth(),
        rul_ms,
    })
}
