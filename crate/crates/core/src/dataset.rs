//! Labeled multichannel feature windows, the unit every model trains and
//! is evaluated on.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{channel_features, feature_names, ChannelFeatures, FeatureVector};
use crate::par;
use crate::signal::{is_valid_width, window_count, Channel, FilterConfig, MachineSeries};
use crate::svm::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowingConfig {
    /// Moving-average length applied before windowing; `None` skips smoothing.
    pub filter_k: Option<usize>,
    pub width: usize,
    pub stride: usize,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        Self {
            filter_k: Some(4),
            width: 64,
            stride: 32,
        }
    }
}

impl WindowingConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.filter_k {
            FilterConfig::new(k)?;
        }
        if !is_valid_width(self.width) {
            return Err(Error::InvalidWidth(self.width));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Raw samples consumed before the first window is complete.
    pub fn warmup(&self) -> usize {
        self.filter_k.unwrap_or(1) - 1 + self.width
    }
}

/// Ground truth for one machine or run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultTruth {
    pub fault_onset_ms: i64,
    /// End of the run-to-failure record.
    pub failure_ms: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleLabel {
    pub label: Label,
    pub rul_ms: f64,
}

/// Labels a window ending at `end_ms`: RUL counts down to fault onset and
/// the window is positive when that RUL is strictly inside the horizon.
pub fn label_window(end_ms: i64, truth: &FaultTruth, horizon_ms: i64) -> SampleLabel {
    let rul = (truth.fault_onset_ms - end_ms).max(0);
    SampleLabel {
        label: if rul < horizon_ms { 1 } else { -1 },
        rul_ms: rul as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub machine_id: String,
    /// Index of the window's last raw sample.
    pub end_index: usize,
    pub end_timestamp_ms: i64,
    pub features: Vec<f64>,
    pub label: Option<SampleLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub channels: Vec<Channel>,
    pub samples: Vec<LabeledSample>,
}

/// Features of all channels for the window of `width` samples starting at
/// `start` of each channel's (already smoothed) values.
pub fn window_features(channels: &[(Channel, Vec<f64>)], start: usize, width: usize) -> Result<Vec<f64>> {
    let parts = channels
        .iter()
        .map(|(c, v)| Ok(FeatureVector::single(*c, channel_features(&v[start..start + width])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector::concat(parts)?.to_vec())
}

impl Dataset {
    /// Smooths, windows and featurizes each machine; windows are labeled
    /// from `truth` when the machine has an entry.
    pub fn build(
        machines: &[MachineSeries],
        cfg: &WindowingConfig,
        truth: &BTreeMap<String, FaultTruth>,
        horizon_ms: i64,
    ) -> Result<Self> {
        cfg.validate()?;
        let channels = match machines.first() {
            Some(m) => m.channel_ids(),
            None => return Err(Error::EmptyInput),
        };
        let smoothed = machines
            .iter()
            .map(|m| {
                if m.channel_ids() != channels {
                    return Err(Error::ShapeMismatch(format!(
                        "machine {} has channels {:?}, expected {:?}",
                        m.machine_id,
                        m.channel_ids(),
                        channels
                    )));
                }
                match cfg.filter_k {
                    Some(k) => m.smoothed(FilterConfig::new(k)?),
                    None => Ok(m.clone()),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let shift = cfg.filter_k.unwrap_or(1) - 1;

        let mut jobs = Vec::new();
        for (mi, m) in smoothed.iter().enumerate() {
            let count = window_count(m.len(), cfg.width, cfg.stride);
            if count == 0 {
                return Err(Error::SeriesTooShort {
                    needed: cfg.warmup(),
                    have: machines[mi].len(),
                });
            }
            jobs.extend((0..count).map(|w| (mi, w * cfg.stride)));
        }

        let samples = par::map_slice(&jobs, |&(mi, start)| {
            let m = &smoothed[mi];
            let end = start + cfg.width - 1;
            let end_ts = m.timestamps[end];
            Ok(LabeledSample {
                machine_id: m.machine_id.clone(),
                end_index: end + shift,
                end_timestamp_ms: end_ts,
                features: window_features(&m.channels, start, cfg.width)?,
                label: truth.get(&m.machine_id).map(|t| label_window(end_ts, t, horizon_ms)),
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        Ok(Self { channels, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map(|s| s.features.len()).unwrap_or(0)
    }

    pub fn feature_names(&self) -> Vec<String> {
        feature_names(&self.channels)
    }

    /// Contiguous index ranges per machine, in sample order.
    pub fn machine_ranges(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut out: Vec<(String, std::ops::Range<usize>)> = Vec::new();
        for (i, s) in self.samples.iter().enumerate() {
            match out.last_mut() {
                Some((id, r)) if *id == s.machine_id => r.end = i + 1,
                _ => out.push((s.machine_id.clone(), i..i + 1)),
            }
        }
        out
    }

    /// For every sample, the feature vectors of up to `history` windows of
    /// the same machine ending with it.
    pub fn sequences(&self, history: usize) -> Vec<Vec<Vec<f64>>> {
        let history = history.max(1);
        let mut out = Vec::with_capacity(self.samples.len());
        for (_, r) in self.machine_ranges() {
            for i in r.clone() {
                let lo = (i + 1).saturating_sub(history).max(r.start);
                out.push(self.samples[lo..=i].iter().map(|s| s.features.clone()).collect());
            }
        }
        out
    }

    pub fn labels(&self) -> Result<Vec<SampleLabel>> {
        self.samples
            .iter()
            .map(|s| s.label.ok_or_else(|| Error::InvalidConfig(format!("sample of {} is unlabeled", s.machine_id))))
            .collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .samples
            .iter()
            .filter(|s| s.label.map(|l| l.label == 1).unwrap_or(false))
            .count();
        let labeled = self.samples.iter().filter(|s| s.label.is_some()).count();
        (pos, labeled - pos)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec![
            "machine_id".to_string(),
            "end_index".into(),
            "end_timestamp_ms".into(),
            "label".into(),
            "rul_ms".into(),
        ];
        header.extend(self.feature_names());
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![
                s.machine_id.clone(),
                s.end_index.to_string(),
                s.end_timestamp_ms.to_string(),
                s.label.map(|l| l.label.to_string()).unwrap_or_default(),
                s.label.map(|l| l.rul_ms.to_string()).unwrap_or_default(),
            ];
            row.extend(s.features.iter().map(|v| v.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let fixed = ["machine_id", "end_index", "end_timestamp_ms", "label", "rul_ms"];
        if header.len() < fixed.len() || header.iter().take(5).ne(fixed.iter().copied()) {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("feature header must start with {}", fixed.join(",")),
            });
        }
        let names: Vec<&str> = header.iter().skip(5).collect();
        let channels = channels_from_names(&names)?;

        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let bad = |reason: String| Error::MalformedRow { line, reason };
            if rec.len() != header.len() {
                return Err(bad(format!("expected {} columns, found {}", header.len(), rec.len())));
            }
            let num = |k: usize| rec[k].parse::<f64>().map_err(|e| bad(format!("column {}: {e}", &header[k])));
            let label = match (&rec[3], &rec[4]) {
                ("", "") => None,
                (l, _) => {
                    let label: Label = l.parse().map_err(|e| bad(format!("label: {e}")))?;
                    if label != 1 && label != -1 {
                        return Err(Error::InvalidLabel(label as i32));
                    }
                    Some(SampleLabel { label, rul_ms: num(4)? })
                }
            };
            let features = (5..rec.len()).map(num).collect::<Result<Vec<_>>>()?;
            if features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { line });
            }
            samples.push(LabeledSample {
                machine_id: rec[0].to_string(),
                end_index: rec[1].parse().map_err(|e| bad(format!("end_index: {e}")))?,
                end_timestamp_ms: rec[2].parse().map_err(|e| bad(format!("end_timestamp_ms: {e}")))?,
                features,
                label,
            });
        }
        Ok(Self { channels, samples })
    }
}

fn channels_from_names(names: &[&str]) -> Result<Vec<Channel>> {
    let mut channels = Vec::new();
    for chunk in names.chunks(crate::features::FEATURES_PER_CHANNEL) {
        let first = chunk[0];
        let channel: Channel = first
            .split('_')
            .next()
            .unwrap_or_default()
            .parse()?;
        channels.push(channel);
    }
    if feature_names(&channels) != names {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "feature columns do not follow the channel_statistic layout".into(),
        });
    }
    Ok(channels)
}

/// Reads the ground-truth JSONL format, one `{run_id, fault_onset_ms, failure_ms}` per line.
pub fn read_truth_jsonl<R: Read>(reader: R) -> Result<BTreeMap<String, FaultTruth>> {
    #[derive(Deserialize)]
    struct Line {
        run_id: String,
        fault_onset_ms: i64,
        failure_ms: Option<i64>,
    }
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let l: Line = serde_json::from_str(line)?;
        out.insert(
            l.run_id,
            FaultTruth {
                fault_onset_ms: l.fault_onset_ms,
                failure_ms: l.failure_ms.unwrap_or(l.fault_onset_ms),
            },
        );
    }
    Ok(out)
}

pub fn write_truth_jsonl<W: Write>(mut writer: W, truth: &BTreeMap<String, FaultTruth>) -> Result<()> {
    for (run_id, t) in truth {
        let line = serde_json::json!({
            "run_id": run_id,
            "fault_onset_ms": t.fault_onset_ms,
            "failure_ms": t.failure_ms,
        });
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Channel quadruple view of one flattened row.
pub fn split_row(channels: &[Channel], row: &[f64]) -> Vec<(Channel, ChannelFeatures)> {
    channels
        .iter()
        .zip(row.chunks(crate::features::FEATURES_PER_CHANNEL))
        .map(|(c, q)| {
            (
                *c,
                ChannelFeatures {
                    sigma: q[0],
                    rms: q[1],
                    entropy_bits: q[2],
                    kurtosis: q[3],
                },
            )
        })
        .collect()
}
