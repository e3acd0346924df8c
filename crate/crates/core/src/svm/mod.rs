//! Soft-margin SVM for binary failure classification.

mod smo;

pub use smo::SmoStep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::Scaling;

pub const SVM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("rbf gamma must be > 0, got {gamma}")));
        }
        Ok(KernelSpec::Rbf { gamma })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } => Self::rbf(gamma).map(|_| ()),
        }
    }
}

pub fn kernel_eval(k: KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(kernel_unchecked(k, x, y))
}

fn kernel_unchecked(k: KernelSpec, x: &[f64], y: &[f64]) -> f64 {
    match k {
        KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        KernelSpec::Rbf { gamma } => {
            let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            (-gamma * d2).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    /// KKT tolerance; training stops once the maximal violating pair is
    /// within it.
    pub tolerance: f64,
    /// Cap on SMO work in units of `n` pair updates. `None` means `10 n`.
    pub max_passes: Option<usize>,
    pub seed: u64,
    /// Standardize features inside the model.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: None,
            seed: 0,
            standardize: true,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        if self.max_passes == Some(0) {
            return Err(Error::InvalidConfig("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trained classifier. Support vectors are stored in standardized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SvmDoc", try_from = "SvmDoc")]
pub struct SvmModel {
    pub schema_version: u32,
    pub model_type: String,
    pub kernel: KernelSpec,
    pub c: f64,
    pub bias: f64,
    pub scaling: Scaling,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i`, aligned with `support_vectors`.
    pub dual_coefs: Vec<f64>,
}

/// On-disk layout: the kernel is a name with an optional top-level gamma.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvmDoc {
    schema_version: u32,
    model_type: String,
    kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    c: f64,
    bias: f64,
    scaling: Scaling,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
}

impl From<SvmModel> for SvmDoc {
    fn from(m: SvmModel) -> Self {
        let (kernel, gamma) = match m.kernel {
            KernelSpec::Linear => ("linear", None),
            KernelSpec::Rbf { gamma } => ("rbf", Some(gamma)),
        };
        SvmDoc {
            schema_version: m.schema_version,
            model_type: m.model_type,
            kernel: kernel.into(),
            gamma,
            c: m.c,
            bias: m.bias,
            scaling: m.scaling,
            support_vectors: m.support_vectors,
            dual_coefs: m.dual_coefs,
        }
    }
}

impl TryFrom<SvmDoc> for SvmModel {
    type Error = Error;

    fn try_from(d: SvmDoc) -> Result<Self> {
        if d.model_type != "svm" {
            return Err(Error::InvalidConfig(format!("expected svm model, found {}", d.model_type)));
        }
        if d.schema_version != SVM_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported svm schema_version {}", d.schema_version)));
        }
        let kernel = match (d.kernel.as_str(), d.gamma) {
            ("linear", None) => KernelSpec::Linear,
            ("rbf", Some(g)) => KernelSpec::rbf(g)?,
            (k, g) => {
                return Err(Error::InvalidConfig(format!("bad kernel spec {k:?} with gamma {g:?}")))
            }
        };
        SvmModel::from_parts(kernel, d.c, d.bias, d.scaling, d.support_vectors, d.dual_coefs)
    }
}

/// Labels are `-1` or `+1`; `+1` means failure imminent.
pub type Label = i8;

pub fn sign_label(score: f64) -> Label {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

impl SvmModel {
    /// Builds a model from already standardized support vectors.
    pub fn from_parts(
        kernel: KernelSpec,
        c: f64,
        bias: f64,
        scaling: Scaling,
        support_vectors: Vec<Vec<f64>>,
        dual_coefs: Vec<f64>,
    ) -> Result<Self> {
        kernel.validate()?;
        if support_vectors.len() != dual_coefs.len() {
            return Err(Error::LengthMismatch {
                left: support_vectors.len(),
                right: dual_coefs.len(),
            });
        }
        if let Some(sv) = support_vectors.iter().find(|sv| sv.len() != scaling.dim()) {
            return Err(Error::DimensionMismatch {
                expected: scaling.dim(),
                got: sv.len(),
            });
        }
        Ok(Self {
            schema_version: SVM_SCHEMA_VERSION,
            model_type: "svm".into(),
            kernel,
            c,
            bias,
            scaling,
            support_vectors,
            dual_coefs,
        })
    }

    pub fn dim(&self) -> usize {
        self.scaling.dim()
    }

    /// `sum (alpha_i y_i) k(sv_i, x) + b` for a raw input.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let z = self.scaling.apply(x)?;
        Ok(self.decision_standardized(&z))
    }

    fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * kernel_unchecked(self.kernel, sv, z))
            .sum::<f64>()
            + self.bias
    }

    /// Primal weights in standardized space; linear kernel only.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let mut w = vec![0.0; self.dim()];
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            for (wi, xi) in w.iter_mut().zip(sv) {
                *wi += coef * xi;
            }
        }
        Some(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn svm_decision(model: &SvmModel, x: &[f64]) -> Result<(f64, Label)> {
    let score = model.decision(x)?;
    Ok((score, sign_label(score)))
}

pub fn logistic(score: f64) -> f64 {
    1.0 / (1.0 + (-score).exp())
}

pub fn svm_predict_proba(model: &SvmModel, x: &[f64]) -> Result<f64> {
    Ok(logistic(model.decision(x)?))
}

/// Full training result, including every dual variable.
#[derive(Debug, Clone)]
pub struct SvmTraining {
    pub model: SvmModel,
    /// One per training sample, in input order.
    pub alphas: Vec<f64>,
    pub iterations: usize,
    /// Filled only by `svm_train_traced`.
    pub trace: Vec<SmoStep>,
}

pub fn svm_train(data: &[(Vec<f64>, Label)], cfg: &SvmConfig, kernel: KernelSpec) -> Result<SvmModel> {
    train_impl(data, cfg, kernel, false).map(|t| t.model)
}

pub fn svm_train_traced(
    data: &[(Vec<f64>, Label)],
    cfg: &SvmConfig,
    kernel: KernelSpec,
) -> Result<SvmTraining> {
    train_impl(data, cfg, kernel, true)
}

fn train_impl(
    data: &[(Vec<f64>, Label)],
    cfg: &SvmConfig,
    kernel: KernelSpec,
    record_trace: bool,
) -> Result<SvmTraining> {
    cfg.validate()?;
    kernel.validate()?;
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            samples: data.len(),
            params: 2,
        });
    }
    let dim = data[0].0.len();
    for (x, y) in data {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if *y != 1 && *y != -1 {
            return Err(Error::InvalidLabel(*y as i32));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite feature value".into()));
        }
    }
    let labels: Vec<f64> = data.iter().map(|(_, y)| f64::from(*y)).collect();
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::DegenerateLabels);
    }

    let rows: Vec<Vec<f64>> = data.iter().map(|(x, _)| x.clone()).collect();
    let scaling = if cfg.standardize {
        Scaling::fit(&rows)?
    } else {
        Scaling::identity(dim)
    };
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| scaling.apply(r))
        .collect::<Result<_>>()?;

    let n = z.len();
    let kmat = smo::gram(n, |i, j| kernel_unchecked(kernel, &z[i], &z[j]));
    let passes = cfg.max_passes.unwrap_or(10 * n);
    let sol = smo::SmoProblem {
        kernel: &kmat,
        labels: &labels,
        c: cfg.c,
        tolerance: cfg.tolerance,
        max_iterations: passes.saturating_mul(n),
        seed: cfg.seed,
        record_trace,
    }
    .solve()?;

    let (support_vectors, dual_coefs) = sol
        .alphas
        .iter()
        .zip(&labels)
        .zip(z)
        .filter(|((a, _), _)| **a > 0.0)
        .map(|((a, y), zi)| (zi, a * y))
        .unzip();

    Ok(SvmTraining {
        model: SvmModel::from_parts(kernel, cfg.c, sol.bias, scaling, support_vectors, dual_coefs)?,
        alphas: sol.alphas,
        iterations: sol.iterations,
        trace: sol.trace,
    })
}

/// Decisions for many inputs at once.
pub fn svm_decide_batch(model: &SvmModel, xs: &[Vec<f64>]) -> Result<Vec<(f64, Label)>> {
    crate::par::map_slice(xs, |x| svm_decision(model, x))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn raw(c: f64) -> SvmConfig {
        SvmConfig {
            c,
            standardize: false,
            ..SvmConfig::default()
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_eval(KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let rbf = KernelSpec::rbf(0.5).unwrap();
        assert_eq!(kernel_eval(rbf, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(kernel_eval(rbf, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(kernel_eval(rbf, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.367879, epsilon = 1e-6);
        assert!(matches!(kernel_eval(rbf, &[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(KernelSpec::rbf(0.0).is_err());
    }

    fn w10_model() -> SvmModel {
        // A single support vector e1 with coefficient 1 gives w = (1, 0).
        SvmModel::from_parts(
            KernelSpec::Linear,
            1.0,
            -0.5,
            Scaling::identity(2),
            vec![vec![1.0, 0.0]],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn decision_examples() {
        let m = w10_model();
        assert_eq!(svm_decision(&m, &[1.0, 0.0]).unwrap(), (0.5, 1));
        assert_eq!(svm_decision(&m, &[0.0, 0.0]).unwrap(), (-0.5, -1));
        assert_eq!(svm_decision(&m, &[0.5, 3.0]).unwrap(), (0.0, 1));
        assert!(svm_decision(&m, &[1.0]).is_err());
    }

    #[test]
    fn proba_examples() {
        let m = w10_model();
        assert_eq!(svm_predict_proba(&m, &[0.5, 0.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(logistic(1.0), 0.731059, epsilon = 1e-6);
        assert!(logistic(50.0) > 0.999_999);
        assert!(logistic(2.0) > logistic(1.0));
    }

    #[test]
    fn two_point_max_margin() {
        let data = vec![(vec![-1.0, -1.0], -1), (vec![1.0, 1.0], 1)];
        let m = svm_train(&data, &raw(10.0), KernelSpec::Linear).unwrap();
        let w = m.linear_weights().unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(m.bias, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn xor_with_rbf() {
        let data = vec![
            (vec![0.0, 0.0], -1),
            (vec![1.0, 1.0], -1),
            (vec![0.0, 1.0], 1),
            (vec![1.0, 0.0], 1),
        ];
        let m = svm_train(&data, &raw(10.0), KernelSpec::rbf(1.0).unwrap()).unwrap();
        for (x, y) in &data {
            assert_eq!(svm_decision(&m, x).unwrap().1, *y);
        }
    }

    #[test]
    fn training_errors() {
        let one_class = vec![(vec![0.0], 1), (vec![1.0], 1)];
        assert!(matches!(
            svm_train(&one_class, &SvmConfig::default(), KernelSpec::Linear),
            Err(Error::DegenerateLabels)
        ));
        let ragged = vec![(vec![0.0], 1), (vec![1.0, 2.0], -1)];
        assert!(matches!(
            svm_train(&ragged, &SvmConfig::default(), KernelSpec::Linear),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad_c = SvmConfig { c: 0.0, ..SvmConfig::default() };
        assert!(svm_train(&[(vec![0.0], 1), (vec![1.0], -1)], &bad_c, KernelSpec::Linear).is_err());
    }

    #[test]
    fn no_convergence_reports_diagnostics() {
        let data: Vec<_> = (0..30)
            .map(|i| (vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()], if i % 3 == 0 { 1 } else { -1 }))
            .collect();
        let cfg = SvmConfig { max_passes: Some(1), tolerance: 1e-12, c: 100.0, ..SvmConfig::default() };
        match svm_train(&data, &cfg, KernelSpec::rbf(2.0).unwrap()) {
            Err(Error::NoConvergence { iterations, gap, .. }) => {
                assert_eq!(iterations, 30);
                assert!(gap > 1e-12);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let data = vec![
            (vec![0.1, 3.0], -1),
            (vec![1.7, 2.2], 1),
            (vec![0.4, 2.9], -1),
            (vec![2.0, 1.0], 1),
        ];
        let m = svm_train(&data, &SvmConfig::default(), KernelSpec::rbf(0.7).unwrap()).unwrap();
        let text = m.to_json().unwrap();
        assert!(text.contains("\"model_type\": \"svm\""));
        assert!(text.contains("\"kernel\": \"rbf\""));
        assert!(text.contains("\"gamma\": 0.7"));
        let back = SvmModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
