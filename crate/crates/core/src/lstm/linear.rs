//! Linear RUL baseline `R(t) = beta0 + sum beta_i F_i(t)` fitted by ordinary
//! least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal load added when the feature Gram matrix is singular.
pub const RIDGE_FALLBACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulLinearModel {
    pub schema_version: u32,
    pub model_type: String,
    pub dims: usize,
    pub beta0: f64,
    pub betas: Vec<f64>,
    /// Whether the ridge fallback was needed during fitting.
    #[serde(default)]
    pub ridge_applied: bool,
}

impl RulLinearModel {
    pub fn new(beta0: f64, betas: Vec<f64>) -> Self {
        Self {
            schema_version: 1,
            model_type: "rul_linear".into(),
            dims: betas.len(),
            beta0,
            betas,
            ridge_applied: false,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: RulLinearModel = serde_json::from_str(s)?;
        if m.model_type != "rul_linear" || m.dims != m.betas.len() {
            return Err(Error::InvalidConfig("not a rul_linear model".into()));
        }
        Ok(m)
    }

    /// Unclamped linear response.
    pub fn raw(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.betas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.betas.len(),
                got: f.len(),
            });
        }
        Ok(self.beta0 + self.betas.iter().zip(f).map(|(b, x)| b * x).sum::<f64>())
    }
}

/// Least-squares fit through the normal equations of the centered design.
/// Centering leaves the intercept out of the ridge fallback.
pub fn rul_fit_linear<F: AsRef<[f64]>>(features: &[F], targets: &[f64]) -> Result<RulLinearModel> {
    if features.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows, {} targets",
            features.len(),
            targets.len()
        )));
    }
    let n = features.len();
    let p = features.first().map(|f| f.as_ref().len()).unwrap_or(0);
    if n < p + 1 || n == 0 {
        return Err(Error::InsufficientData {
            samples: n,
            params: p + 1,
        });
    }
    if features.iter().any(|f| f.as_ref().len() != p) {
        return Err(Error::ShapeMismatch("ragged feature rows".into()));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidSeries("non-finite target".into()));
    }

    let nf = n as f64;
    let y_mean = targets.iter().sum::<f64>() / nf;
    let x_mean: Vec<f64> = (0..p)
        .map(|j| features.iter().map(|f| f.as_ref()[j]).sum::<f64>() / nf)
        .collect();

    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (f, &y) in features.iter().zip(targets) {
        let xc: Vec<f64> = f.as_ref().iter().zip(&x_mean).map(|(x, m)| x - m).collect();
        let yc = y - y_mean;
        for a in 0..p {
            rhs[a] += xc[a] * yc;
            for b in 0..=a {
                gram[a][b] += xc[a] * xc[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[b][a] = gram[a][b];
        }
    }

    let (betas, ridge_applied) = match cholesky_solve(&gram, &rhs) {
        Some(b) => (b, false),
        None => {
            let mut loaded = gram.clone();
            for (a, row) in loaded.iter_mut().enumerate() {
                row[a] += RIDGE_FALLBACK;
            }
            let b = cholesky_solve(&loaded, &rhs)
                .ok_or_else(|| Error::ShapeMismatch("normal equations unsolvable".into()))?;
            (b, true)
        }
    };
    let beta0 = y_mean - betas.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    let mut model = RulLinearModel::new(beta0, betas);
    model.ridge_applied = ridge_applied;
    Ok(model)
}

/// Solves `A x = b` for symmetric `A`; `None` if `A` is not numerically
/// positive definite.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let p = b.len();
    if p == 0 {
        return Some(Vec::new());
    }
    let scale = (0..p).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 1e-12 * scale {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    Some(x)
}

/// The linear response, clamped at zero.
pub fn rul_predict_linear(model: &RulLinearModel, f: &[f64]) -> Result<f64> {
    Ok(model.raw(f)?.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(0.0..20.0)])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 10.0 + 2.0 * r[0] - 3.0 * r[1]).collect();
        let m = rul_fit_linear(&rows, &y).unwrap();
        assert!((m.beta0 - 10.0).abs() < 1e-8, "{}", m.beta0);
        assert!((m.betas[0] - 2.0).abs() < 1e-8);
        assert!((m.betas[1] + 3.0).abs() < 1e-8);
        assert!(!m.ridge_applied);
    }

    #[test]
    fn zero_features_fall_back_to_intercept() {
        let rows = vec![vec![0.0; 3]; 6];
        let y = [4.0, 8.0, 1.0, 3.0, 9.0, 5.0];
        let m = rul_fit_linear(&rows, &y).unwrap();
        assert_eq!(m.beta0, 5.0);
        assert_eq!(m.betas, vec![0.0; 3]);
        assert!(m.ridge_applied);
    }

    #[test]
    fn fit_errors() {
        let rows = vec![vec![1.0; 5]; 2];
        assert!(matches!(rul_fit_linear(&rows, &[1.0, 2.0]), Err(Error::InsufficientData { .. })));
        assert!(matches!(rul_fit_linear(&rows, &[1.0]), Err(Error::ShapeMismatch(_))));
        let ragged = vec![vec![1.0], vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(rul_fit_linear(&ragged, &[1.0, 2.0, 3.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn predict_examples() {
        assert_eq!(rul_predict_linear(&RulLinearModel::new(100.0, vec![0.0, 0.0]), &[4.0, -2.0]).unwrap(), 100.0);
        assert_eq!(rul_predict_linear(&RulLinearModel::new(1.0, vec![2.0]), &[3.0]).unwrap(), 7.0);
        assert_eq!(rul_predict_linear(&RulLinearModel::new(-5.0, vec![0.0]), &[1.0]).unwrap(), 0.0);
        assert!(rul_predict_linear(&RulLinearModel::new(1.0, vec![2.0]), &[3.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = RulLinearModel::new(0.1 + 0.2, vec![1.0 / 3.0, -2e-300]);
        assert_eq!(RulLinearModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_to_columns(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let y: Vec<f64> = rows.iter().map(|r| r[0] - r[2] + rng.random_range(-0.5..0.5)).collect();
            let m = rul_fit_linear(&rows, &y).unwrap();
            let resid: Vec<f64> = rows.iter().zip(&y).map(|(r, t)| t - m.raw(r).unwrap()).collect();
            prop_assert!(resid.iter().sum::<f64>().abs() < 1e-8);
            for j in 0..3 {
                let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
                prop_assert!(dot.abs() < 1e-8, "column {} dot {}", j, dot);
            }
            for r in &rows {
                prop_assert!(rul_predict_linear(&m, r).unwrap() >= 0.0);
            }
        }
    }
}
