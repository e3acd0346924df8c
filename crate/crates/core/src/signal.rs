//! Telemetry containers, CSV ingestion, smoothing and windowing.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["timestamp_ms", "machine_id", "channel", "value"];

/// Sensor channel. Declaration order fixes the feature-vector layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Vibration,
    Temperature,
    Pressure,
    Acoustic,
    Current,
    Load,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Vibration,
        Channel::Temperature,
        Channel::Pressure,
        Channel::Acoustic,
        Channel::Current,
        Channel::Load,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Vibration => "vibration",
            Channel::Temperature => "temperature",
            Channel::Pressure => "pressure",
            Channel::Acoustic => "acoustic",
            Channel::Current => "current",
            Channel::Load => "load",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownChannel(s.to_string()))
    }
}

/// One channel of telemetry for one machine.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSeries {
    machine_id: String,
    channel: Channel,
    timestamps: Vec<i64>,
    values: Vec<f64>,
}

impl SensorSeries {
    pub fn new(
        machine_id: impl Into<String>,
        channel: Channel,
        timestamps: Vec<i64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSeries(
                "timestamps must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite value".into()));
        }
        Ok(Self {
            machine_id: machine_id.into(),
            channel,
            timestamps,
            values,
        })
    }

    pub fn machine_id(&self) -> &str {
        &self.machine_id
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub window_k: usize,
}

impl FilterConfig {
    pub fn new(window_k: usize) -> Result<Self> {
        if window_k == 0 {
            return Err(Error::InvalidConfig("filter window_k must be >= 1".into()));
        }
        Ok(Self { window_k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub failure: bool,
    pub rul_ms: u64,
}

/// Fixed-length slice of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub machine_id: String,
    pub channel: Channel,
    pub start_index: usize,
    /// Timestamp of the last sample in the window.
    pub end_timestamp_ms: i64,
    pub samples: Vec<f64>,
    pub label: Option<WindowLabel>,
}

impl Window {
    pub fn width(&self) -> usize {
        self.samples.len()
    }
}

pub fn is_valid_width(w: usize) -> bool {
    w >= 8 && w.is_power_of_two()
}

/// Reads a long-format sensor CSV and groups it per (machine, channel).
///
/// Groups come back ordered by machine id, then channel declaration order.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<SensorSeries>> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file))
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SensorSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("header must be `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut groups: BTreeMap<(String, Channel), Vec<(i64, f64)>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let row = parse_row(&record, line)?;
        groups
            .entry((row.machine_id, row.channel))
            .or_default()
            .push((row.timestamp_ms, row.value));
    }

    groups
        .into_iter()
        .map(|((machine_id, channel), mut rows)| {
            rows.sort_by_key(|r| r.0);
            if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateTimestamp {
                    machine_id,
                    channel: channel.to_string(),
                    timestamp_ms: w[0].0,
                });
            }
            let (ts, vs) = rows.into_iter().unzip();
            SensorSeries::new(machine_id, channel, ts, vs)
        })
        .collect()
}

/// A single parsed CSV reading.
#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub timestamp_ms: i64,
    pub machine_id: String,
    pub channel: Channel,
    pub value: f64,
}

pub(crate) fn parse_row(record: &csv::StringRecord, line: usize) -> Result<Reading> {
    if record.len() != 4 {
        return Err(Error::MalformedRow {
            line,
            reason: format!("expected 4 columns, found {}", record.len()),
        });
    }
    let timestamp_ms = record[0].parse::<i64>().map_err(|e| Error::MalformedRow {
        line,
        reason: format!("timestamp {:?}: {e}", &record[0]),
    })?;
    let machine_id = record[1].to_string();
    if machine_id.is_empty() {
        return Err(Error::MalformedRow {
            line,
            reason: "empty machine_id".into(),
        });
    }
    let channel: Channel = record[2].parse()?;
    let value = record[3].parse::<f64>().map_err(|e| Error::MalformedRow {
        line,
        reason: format!("value {:?}: {e}", &record[3]),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteValue { line });
    }
    Ok(Reading {
        timestamp_ms,
        machine_id,
        channel,
        value,
    })
}

/// Row-at-a-time reader over the sensor CSV format, for streaming consumers.
pub struct ReadingStream<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    line: usize,
}

impl<R: Read> ReadingStream<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("header must be `{}`", CSV_HEADER.join(",")),
            });
        }
        Ok(Self {
            records: rdr.into_records(),
            line: 1,
        })
    }
}

impl<R: Read> Iterator for ReadingStream<R> {
    type Item = Result<Reading>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = self.records.next()?;
        self.line += 1;
        Some(
            record
                .map_err(Error::from)
                .and_then(|r| parse_row(&r, self.line)),
        )
    }
}

/// Writes series in the long format `load_csv` reads, ordered by
/// timestamp, then machine, then channel, so the file replays as a stream
/// of frames.
pub fn write_csv<W: Write>(writer: W, series: &[SensorSeries]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    let mut rows: Vec<(i64, &str, Channel, f64)> = series
        .iter()
        .flat_map(|s| {
            s.timestamps
                .iter()
                .zip(&s.values)
                .map(move |(&t, &v)| (t, s.machine_id.as_str(), s.channel, v))
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    for (t, id, ch, v) in rows {
        wtr.write_record([t.to_string().as_str(), id, ch.as_str(), &v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, series: &[SensorSeries]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), series)
}

/// Trailing moving average in "valid" mode: output `j` is the mean of input
/// samples `j..j+k`, stamped with the time of the last of them.
pub fn moving_average(series: &SensorSeries, cfg: FilterConfig) -> Result<SensorSeries> {
    let out = moving_average_values(&series.values, cfg.window_k)?;
    let k = cfg.window_k;
    Ok(SensorSeries {
        machine_id: series.machine_id.clone(),
        channel: series.channel,
        timestamps: series.timestamps[k - 1..].to_vec(),
        values: out,
    })
}

pub fn moving_average_values(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidConfig("filter window_k must be >= 1".into()));
    }
    if values.len() < k {
        return Err(Error::SeriesTooShort {
            needed: k,
            have: values.len(),
        });
    }
    // Each output is summed directly rather than with a running sum, so a
    // constant input maps to itself exactly.
    let inv = 1.0 / k as f64;
    Ok(values
        .windows(k)
        .map(|w| {
            if w.iter().all(|&v| v == w[0]) {
                w[0]
            } else {
                w.iter().sum::<f64>() * inv
            }
        })
        .collect())
}

/// Number of windows `make_windows` yields for a series of length `n`.
pub fn window_count(n: usize, width: usize, stride: usize) -> usize {
    if n < width || stride == 0 {
        0
    } else {
        (n - width) / stride + 1
    }
}

pub fn make_windows(series: &SensorSeries, width_w: usize, stride: usize) -> Result<Vec<Window>> {
    if !is_valid_width(width_w) {
        return Err(Error::InvalidWidth(width_w));
    }
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be >= 1".into()));
    }
    if series.len() < width_w {
        return Err(Error::SeriesTooShort {
            needed: width_w,
            have: series.len(),
        });
    }
    let count = window_count(series.len(), width_w, stride);
    Ok((0..count)
        .map(|i| {
            let start = i * stride;
            Window {
                machine_id: series.machine_id.clone(),
                channel: series.channel,
                start_index: start,
                end_timestamp_ms: series.timestamps[start + width_w - 1],
                samples: series.values[start..start + width_w].to_vec(),
                label: None,
            }
        })
        .collect())
}

/// All channels of one machine, sampled at identical timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineSeries {
    pub machine_id: String,
    pub timestamps: Vec<i64>,
    /// Sorted by channel declaration order.
    pub channels: Vec<(Channel, Vec<f64>)>,
}

impl MachineSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel_ids(&self) -> Vec<Channel> {
        self.channels.iter().map(|(c, _)| *c).collect()
    }

    pub fn into_series(self) -> Vec<SensorSeries> {
        let MachineSeries {
            machine_id,
            timestamps,
            channels,
        } = self;
        channels
            .into_iter()
            .map(|(channel, values)| SensorSeries {
                machine_id: machine_id.clone(),
                channel,
                timestamps: timestamps.clone(),
                values,
            })
            .collect()
    }

    /// Applies the moving average to every channel.
    pub fn smoothed(&self, cfg: FilterConfig) -> Result<MachineSeries> {
        let k = cfg.window_k;
        let channels = self
            .channels
            .iter()
            .map(|(c, v)| Ok((*c, moving_average_values(v, k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MachineSeries {
            machine_id: self.machine_id.clone(),
            timestamps: self.timestamps[k - 1..].to_vec(),
            channels,
        })
    }
}

/// Groups series by machine, checking that each machine's channels share
/// one time base.
pub fn group_by_machine(series: Vec<SensorSeries>) -> Result<Vec<MachineSeries>> {
    let mut machines: BTreeMap<String, MachineSeries> = BTreeMap::new();
    for s in series {
        match machines.get_mut(&s.machine_id) {
            Some(m) => {
                if m.timestamps != s.timestamps {
                    return Err(Error::MisalignedChannels(s.machine_id));
                }
                if m.channels.iter().any(|(c, _)| *c == s.channel) {
                    return Err(Error::InvalidSeries(format!(
                        "channel {} repeated for {}",
                        s.channel, s.machine_id
                    )));
                }
                m.channels.push((s.channel, s.values));
            }
            None => {
                machines.insert(
                    s.machine_id.clone(),
                    MachineSeries {
                        machine_id: s.machine_id,
                        timestamps: s.timestamps,
                        channels: vec![(s.channel, s.values)],
                    },
                );
            }
        }
    }
    Ok(machines
        .into_values()
        .map(|mut m| {
            m.channels.sort_by_key(|(c, _)| *c);
            m
        })
        .collect())
}
