//! Threshold alerts on predicted RUL and maintenance cost accounting.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertPolicy {
    /// Same unit as the RUL estimate (milliseconds here).
    pub tau: f64,
}

impl AlertPolicy {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self { tau })
    }
}

/// 1 when the predicted RUL is at or below the threshold.
pub fn alert(rul_hat: f64, policy: AlertPolicy) -> u8 {
    u8::from(rul_hat <= policy.tau)
}

/// US dollars held as integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cents(pub i64);

impl Cents {
    pub fn from_dollars(d: i64) -> Self {
        Cents(d * 100)
    }
}

impl std::ops::Add for Cents {
    type Output = Cents;
    fn add(self, o: Cents) -> Cents {
        Cents(self.0 + o.0)
    }
}

impl std::ops::Sub for Cents {
    type Output = Cents;
    fn sub(self, o: Cents) -> Cents {
        Cents(self.0 - o.0)
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl FromStr for Cents {
    type Err = Error;

    /// Accepts `1234`, `1234.5`, `1234.56`, optionally prefixed with `$`
    /// and a sign.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("invalid currency amount {s:?}"));
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, t),
        };
        let t = t.strip_prefix('$').unwrap_or(t);
        let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let w: i64 = whole.parse().map_err(|_| bad())?;
        let f: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().map_err(|_| bad())? * 10,
            _ => frac.parse().map_err(|_| bad())?,
        };
        let v = w.checked_mul(100).and_then(|c| c.checked_add(f)).ok_or_else(bad)?;
        Ok(Cents(if neg { -v } else { v }))
    }
}

/// Savings exactly as the cost model defines it: `S = C_p - (C_f + C_d)`.
pub fn savings(c_p: Cents, c_f: Cents, c_d: Cents) -> Cents {
    c_p - (c_f + c_d)
}

/// The opposite sign convention, `(C_f + C_d) - C_p`, under which a positive
/// value means predictive maintenance costs less than failure plus downtime.
pub fn savings_alt(c_p: Cents, c_f: Cents, c_d: Cents) -> Cents {
    (c_f + c_d) - c_p
}

pub const SAVINGS_NOTE: &str = "savings = preventive - (corrective + failure_recovery) follows the \
literal cost equation, where S > 0 is called viable; savings_alt = (corrective + failure_recovery) - \
preventive is the sign under which a positive value means predictive spending is below failure and \
downtime cost. Compare them before drawing conclusions.";

pub const COST_CSV_HEADER: [&str; 4] = ["period", "preventive_usd", "corrective_usd", "failure_recovery_usd"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub period: String,
    pub preventive: Cents,
    pub corrective: Cents,
    pub failure_recovery: Cents,
}

impl CostLedger {
    pub fn new(period: impl Into<String>, preventive: Cents, corrective: Cents, failure_recovery: Cents) -> Result<Self> {
        if [preventive, corrective, failure_recovery].iter().any(|c| c.0 < 0) {
            return Err(Error::InvalidConfig("cost components must be >= 0".into()));
        }
        Ok(Self {
            period: period.into(),
            preventive,
            corrective,
            failure_recovery,
        })
    }

    pub fn total(&self) -> Cents {
        self.preventive + self.corrective + self.failure_recovery
    }

    pub fn savings(&self) -> Cents {
        savings(self.preventive, self.corrective, self.failure_recovery)
    }

    pub fn savings_alt(&self) -> Cents {
        savings_alt(self.preventive, self.corrective, self.failure_recovery)
    }
}

pub fn read_cost_csv<R: Read>(reader: R) -> Result<Vec<CostLedger>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(COST_CSV_HEADER.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("header must be `{}`", COST_CSV_HEADER.join(",")),
        });
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 4 {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("expected 4 columns, found {}", rec.len()),
                });
            }
            let money = |k: usize| {
                rec[k].parse::<Cents>().map_err(|e| Error::MalformedRow {
                    line,
                    reason: e.to_string(),
                })
            };
            CostLedger::new(&rec[0], money(1)?, money(2)?, money(3)?).map_err(|e| Error::MalformedRow {
                line,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub period: String,
    pub preventive: Cents,
    pub corrective: Cents,
    pub failure_recovery: Cents,
    pub total: Cents,
    pub savings: Cents,
    pub savings_alt: Cents,
}

impl From<&CostLedger> for LedgerSummary {
    fn from(l: &CostLedger) -> Self {
        Self {
            period: l.period.clone(),
            preventive: l.preventive,
            corrective: l.corrective,
            failure_recovery: l.failure_recovery,
            total: l.total(),
            savings: l.savings(),
            savings_alt: l.savings_alt(),
        }
    }
}

/// Before/after comparison. Amounts are in cents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub before: LedgerSummary,
    pub after: LedgerSummary,
    /// `before.total - after.total`
    pub delta: Cents,
    pub note: String,
}

pub fn cost_report(before: &CostLedger, after: &CostLedger) -> CostReport {
    CostReport {
        before: before.into(),
        after: after.into(),
        delta: before.total() - after.total(),
        note: SAVINGS_NOTE.into(),
    }
}

impl CostReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plot-ready rows in dollars: both ledgers, then the component deltas.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("period,preventive_usd,corrective_usd,failure_recovery_usd,total_usd\n");
        for l in [&self.before, &self.after] {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                l.period, l.preventive, l.corrective, l.failure_recovery, l.total
            ));
        }
        let (b, a) = (&self.before, &self.after);
        out.push_str(&format!(
            "delta,{},{},{},{}\n",
            b.preventive - a.preventive,
            b.corrective - a.corrective,
            b.failure_recovery - a.failure_recovery,
            self.delta
        ));
        out
    }
}
