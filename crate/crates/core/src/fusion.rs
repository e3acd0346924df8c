//! Hybrid SVM + LSTM decisions and classification metrics.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lstm::{lstm_predict_batch, rul_predict_linear, LstmModel, RulLinearModel};
use crate::par;
use crate::svm::{svm_decide_batch, Label, SvmModel};

/// Counts with `+1` (failure imminent) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion_matrix(predicted: &[Label], actual: &[Label]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (1, 1) => cm.tp += 1,
            (1, -1) => cm.fp += 1,
            (-1, -1) => cm.tn += 1,
            (-1, 1) => cm.fn_ += 1,
            (1 | -1, bad) | (bad, _) => return Err(Error::InvalidLabel(bad as i32)),
        }
    }
    Ok(cm)
}

/// Precision, recall and F1. A metric whose denominator is zero is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl Metrics {
    /// Names of the metrics that could not be computed.
    pub fn undefined(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.precision.is_none() {
            out.push("precision");
        }
        if self.recall.is_none() {
            out.push("recall");
        }
        if self.f1.is_none() {
            out.push("f1");
        }
        out
    }
}

/// Harmonic mean of precision and recall. Zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision == recall {
        return precision;
    }
    let s = precision + recall;
    if s == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / s
    }
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> Metrics {
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) => Some(f1_score(p, r)),
        _ => None,
    };
    Metrics {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Alert when either model alerts.
    #[default]
    Or,
    /// Alert only when both agree.
    And,
}

pub fn fuse_with(mode: FusionMode, svm_label: Label, rul_hat: f64, tau: f64) -> Label {
    let rul_alert = rul_hat <= tau;
    let hit = match mode {
        FusionMode::Or => svm_label == 1 || rul_alert,
        FusionMode::And => svm_label == 1 && rul_alert,
    };
    if hit {
        1
    } else {
        -1
    }
}

/// OR-fusion: positive iff the SVM says failure or the RUL is within `tau`.
pub fn fuse_predictions(svm_label: Label, rul_hat: f64, tau: f64) -> Label {
    fuse_with(FusionMode::Or, svm_label, rul_hat, tau)
}

pub fn rul_label(rul_hat: f64, tau: f64) -> Label {
    if rul_hat <= tau {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Per-model metrics in a fixed row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub models: Vec<ModelReport>,
}

impl MetricsReport {
    pub fn from_predictions(actual: &[Label], rows: &[(&str, &[Label])]) -> Result<Self> {
        let models = rows
            .iter()
            .map(|(name, pred)| {
                let confusion = confusion_matrix(pred, actual)?;
                Ok(ModelReport {
                    model: name.to_string(),
                    confusion,
                    metrics: precision_recall_f1(&confusion),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { models })
    }

    pub fn get(&self, model: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == model)
    }

    /// Plot-ready `model,precision,recall,f1`; absent metrics are empty.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("model,precision,recall,f1\n");
        for m in &self.models {
            out.push_str(&format!(
                "{},{},{},{}\n",
                m.model,
                fmt(m.metrics.precision),
                fmt(m.metrics.recall),
                fmt(m.metrics.f1)
            ));
        }
        out
    }
}

/// Trained models evaluated side by side.
pub struct ModelSet<'a> {
    pub svm: &'a SvmModel,
    pub lstm: &'a LstmModel,
    pub rul_linear: &'a RulLinearModel,
    /// Windows of history fed to the LSTM per decision.
    pub history: usize,
}

/// Per-sample outputs of every model.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub svm: Vec<Label>,
    pub svm_scores: Vec<f64>,
    pub lstm_rul: Vec<f64>,
    pub linear_rul: Vec<f64>,
    pub lstm: Vec<Label>,
    pub rul_linear: Vec<Label>,
    pub hybrid: Vec<Label>,
}

pub fn predict_all(dataset: &Dataset, models: &ModelSet<'_>, tau: f64, mode: FusionMode) -> Result<Predictions> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let xs: Vec<Vec<f64>> = dataset.samples.iter().map(|s| s.features.clone()).collect();
    let (svm_scores, svm): (Vec<f64>, Vec<Label>) = svm_decide_batch(models.svm, &xs)?.into_iter().unzip();
    let lstm_rul = lstm_predict_batch(models.lstm, &dataset.sequences(models.history))?;
    let linear_rul = par::map_slice(&xs, |x| rul_predict_linear(models.rul_linear, x))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let lstm: Vec<Label> = lstm_rul.iter().map(|&r| rul_label(r, tau)).collect();
    let rul_linear = linear_rul.iter().map(|&r| rul_label(r, tau)).collect();
    let hybrid = svm
        .iter()
        .zip(&lstm_rul)
        .map(|(&s, &r)| fuse_with(mode, s, r, tau))
        .collect();
    Ok(Predictions {
        svm,
        svm_scores,
        lstm_rul,
        linear_rul,
        lstm,
        rul_linear,
        hybrid,
    })
}

pub const MODEL_ORDER: [&str; 4] = ["svm", "lstm", "rul_linear", "hybrid"];

/// Metrics for svm, lstm (as `rul_hat <= tau`), rul_linear and hybrid.
pub fn evaluate_models(
    dataset: &Dataset,
    models: &ModelSet<'_>,
    tau: f64,
    mode: FusionMode,
) -> Result<(MetricsReport, Predictions)> {
    let actual: Vec<Label> = dataset.labels()?.iter().map(|l| l.label).collect();
    let p = predict_all(dataset, models, tau, mode)?;
    let report = MetricsReport::from_predictions(
        &actual,
        &[
            (MODEL_ORDER[0], &p.svm),
            (MODEL_ORDER[1], &p.lstm),
            (MODEL_ORDER[2], &p.rul_linear),
            (MODEL_ORDER[3], &p.hybrid),
        ],
    )?;
    Ok((report, p))
}
