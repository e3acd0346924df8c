//! Frame-at-a-time alerting over a sensor reading stream.
//!
//! A frame is every reading of one machine at one timestamp. A machine's
//! frame is complete once a later timestamp for that machine arrives, or
//! at end of stream. Per machine, frames are smoothed, windowed and
//! featurized exactly as the batch dataset builder does, so the RUL
//! estimate of each window matches the batch prediction for it.

use std::collections::{BTreeMap, VecDeque};

use crate::dataset::{window_features, WindowingConfig};
use crate::decision::{alert, AlertPolicy};
use crate::error::{Error, Result};
use crate::lstm::{lstm_forward, LstmModel};
use crate::signal::{moving_average_values, Channel, Reading};

#[derive(Debug, Clone, PartialEq)]
pub struct AlertLine {
    pub timestamp_ms: i64,
    pub machine_id: String,
    pub rul_hat_ms: f64,
    pub alert: u8,
}

impl AlertLine {
    pub const HEADER: &'static str = "timestamp_ms,machine_id,rul_hat_ms,alert";

    pub fn to_csv_line(&self) -> String {
        format!("{},{},{},{}", self.timestamp_ms, self.machine_id, self.rul_hat_ms, self.alert)
    }
}

#[derive(Default)]
struct MachineState {
    channels: Vec<Channel>,
    pending_ts: Option<i64>,
    pending: BTreeMap<Channel, f64>,
    raw: Vec<Vec<f64>>,
    smoothed: Vec<Vec<f64>>,
    timestamps: Vec<i64>,
    history: VecDeque<Vec<f64>>,
}

pub struct Monitor<'a> {
    model: &'a LstmModel,
    windowing: WindowingConfig,
    history: usize,
    policy: AlertPolicy,
    machines: BTreeMap<String, MachineState>,
}

impl<'a> Monitor<'a> {
    pub fn new(model: &'a LstmModel, windowing: WindowingConfig, history: usize, policy: AlertPolicy) -> Result<Self> {
        windowing.validate()?;
        Ok(Self {
            model,
            windowing,
            history: history.max(1),
            policy,
            machines: BTreeMap::new(),
        })
    }

    /// Feeds one reading; returns lines for windows completed by it.
    pub fn push(&mut self, r: Reading) -> Result<Vec<AlertLine>> {
        let state = self.machines.entry(r.machine_id.clone()).or_default();
        let mut out = Vec::new();
        match state.pending_ts {
            Some(ts) if r.timestamp_ms < ts => {
                return Err(Error::InvalidSeries(format!(
                    "machine {}: timestamp {} after {}",
                    r.machine_id, r.timestamp_ms, ts
                )))
            }
            Some(ts) if r.timestamp_ms > ts => {
                if let Some(line) = self.close_frame(&r.machine_id)? {
                    out.push(line);
                }
            }
            _ => {}
        }
        let state = self.machines.get_mut(&r.machine_id).expect("inserted above");
        if state.pending.insert(r.channel, r.value).is_some() {
            return Err(Error::DuplicateTimestamp {
                machine_id: r.machine_id,
                channel: r.channel.to_string(),
                timestamp_ms: r.timestamp_ms,
            });
        }
        state.pending_ts = Some(r.timestamp_ms);
        Ok(out)
    }

    /// Closes every open frame at end of stream.
    pub fn finish(&mut self) -> Result<Vec<AlertLine>> {
        let ids: Vec<String> = self.machines.keys().cloned().collect();
        let mut out = Vec::new();
        for id in ids {
            if let Some(line) = self.close_frame(&id)? {
                out.push(line);
            }
        }
        Ok(out)
    }

    fn close_frame(&mut self, id: &str) -> Result<Option<AlertLine>> {
        let cfg = self.windowing;
        let state = self.machines.get_mut(id).expect("known machine");
        let Some(ts) = state.pending_ts.take() else {
            return Ok(None);
        };
        let frame = std::mem::take(&mut state.pending);
        let chans: Vec<Channel> = frame.keys().copied().collect();
        if state.channels.is_empty() {
            state.channels = chans;
            state.raw = vec![Vec::new(); state.channels.len()];
            state.smoothed = vec![Vec::new(); state.channels.len()];
        } else if chans != state.channels {
            return Err(Error::MisalignedChannels(format!(
                "machine {id} at {ts}: channels {chans:?}, expected {:?}",
                state.channels
            )));
        }

        let k = cfg.filter_k.unwrap_or(1);
        for (i, v) in frame.values().enumerate() {
            state.raw[i].push(*v);
            let raw = &state.raw[i];
            if raw.len() >= k {
                let s = moving_average_values(&raw[raw.len() - k..], k)?[0];
                state.smoothed[i].push(s);
            }
        }
        if state.raw[0].len() < k {
            return Ok(None);
        }
        state.timestamps.push(ts);

        let n = state.smoothed[0].len();
        if n < cfg.width || !(n - cfg.width).is_multiple_of(cfg.stride) {
            return Ok(None);
        }
        let start = n - cfg.width;
        let channels: Vec<(Channel, Vec<f64>)> = state
            .channels
            .iter()
            .zip(&state.smoothed)
            .map(|(c, v)| (*c, v[start..].to_vec()))
            .collect();
        let features = window_features(&channels, 0, cfg.width)?;
        state.history.push_back(features);
        if state.history.len() > self.history {
            state.history.pop_front();
        }
        let seq: Vec<Vec<f64>> = state.history.iter().cloned().collect();
        let (rul_hat_ms, _) = lstm_forward(self.model, &seq)?;
        Ok(Some(AlertLine {
            timestamp_ms: ts,
            machine_id: id.to_string(),
            rul_hat_ms,
            alert: alert(rul_hat_ms, self.policy),
        }))
    }
}
