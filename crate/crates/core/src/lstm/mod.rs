//! LSTM remaining-useful-life regressor trained by backpropagation through
//! time, and the linear feature baseline.

mod linear;

pub use linear::{rul_fit_linear, rul_predict_linear, RulLinearModel, RIDGE_FALLBACK};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::scaling::Scaling;

pub const LSTM_SCHEMA_VERSION: u32 = 1;
const INIT_RANGE: f64 = 0.08;
const FORGET_BIAS_INIT: f64 = 1.0;

/// Gate blocks inside the stacked pre-activation, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmCellState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            c: vec![0.0; hidden_dim],
            h: vec![0.0; hidden_dim],
        }
    }
}

/// Gate activations of one step, kept for inspection and for BPTT.
#[derive(Debug, Clone, PartialEq)]
pub struct GateValues {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmDims {
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Single-layer LSTM with a linear head on the last hidden state.
///
/// All trainable parameters live in one flat vector:
/// `gate_weights [4H x (I+H)]`, `gate_bias [4H]`, `head_weights [H]`,
/// `head_bias [1]`. Gate rows are stacked input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    dims: LstmDims,
    params: Vec<f64>,
    pub seed: u64,
    /// Head output is multiplied by this to give RUL in target units.
    pub target_scale: f64,
    /// Applied to every input step before the cell when present.
    pub input_scaling: Option<Scaling>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmModel {
    pub fn param_count(dims: LstmDims) -> usize {
        let h = dims.hidden_dim;
        4 * h * (dims.input_dim + h) + 4 * h + h + 1
    }

    pub fn zeros(dims: LstmDims) -> Result<Self> {
        if dims.input_dim == 0 || dims.hidden_dim == 0 {
            return Err(Error::InvalidConfig("LSTM dimensions must be positive".into()));
        }
        Ok(Self {
            dims,
            params: vec![0.0; Self::param_count(dims)],
            seed: 0,
            target_scale: 1.0,
            input_scaling: None,
        })
    }

    /// Uniform init in `[-0.08, 0.08]`, forget-gate bias 1, head bias 0.
    pub fn init(dims: LstmDims, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(dims)?;
        m.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head_bias = m.params.len() - 1;
        for p in &mut m.params[..head_bias] {
            *p = rng.random_range(-INIT_RANGE..=INIT_RANGE);
        }
        m.params[head_bias] = 0.0;
        for v in m.gate_bias_mut(Gate::Forget) {
            *v = FORGET_BIAS_INIT;
        }
        Ok(m)
    }

    pub fn dims(&self) -> LstmDims {
        self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn z(&self) -> usize {
        self.dims.input_dim + self.dims.hidden_dim
    }

    fn bias_offset(&self) -> usize {
        4 * self.dims.hidden_dim * self.z()
    }

    fn head_offset(&self) -> usize {
        self.bias_offset() + 4 * self.dims.hidden_dim
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.dims.hidden_dim;
        let start = self.bias_offset() + gate as usize * h;
        &mut self.params[start..start + h]
    }

    pub fn head_weights_mut(&mut self) -> &mut [f64] {
        let (start, h) = (self.head_offset(), self.dims.hidden_dim);
        &mut self.params[start..start + h]
    }

    pub fn head_bias(&self) -> f64 {
        self.params[self.params.len() - 1]
    }

    pub fn set_head_bias(&mut self, b: f64) {
        let last = self.params.len() - 1;
        self.params[last] = b;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.dims.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// One cell update on an already scaled input.
    fn step_raw(&self, x: &[f64], prev: &LstmCellState) -> (LstmCellState, GateValues) {
        let h = self.dims.hidden_dim;
        let z = self.z();
        let w = &self.params[..self.bias_offset()];
        let b = &self.params[self.bias_offset()..self.head_offset()];
        let mut pre = b.to_vec();
        for (r, a) in pre.iter_mut().enumerate() {
            let row = &w[r * z..(r + 1) * z];
            let (wx, wh) = row.split_at(self.dims.input_dim);
            *a += wx.iter().zip(x).map(|(p, v)| p * v).sum::<f64>()
                + wh.iter().zip(&prev.h).map(|(p, v)| p * v).sum::<f64>();
        }
        let gates = GateValues {
            input: pre[..h].iter().map(|&v| sigmoid(v)).collect(),
            forget: pre[h..2 * h].iter().map(|&v| sigmoid(v)).collect(),
            output: pre[2 * h..3 * h].iter().map(|&v| sigmoid(v)).collect(),
            candidate: pre[3 * h..].iter().map(|&v| v.tanh()).collect(),
        };
        let c: Vec<f64> = (0..h)
            .map(|k| gates.forget[k] * prev.c[k] + gates.input[k] * gates.candidate[k])
            .collect();
        let hs = (0..h).map(|k| gates.output[k] * c[k].tanh()).collect();
        (LstmCellState { c, h: hs }, gates)
    }

    fn scaled(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match &self.input_scaling {
            Some(s) => s.apply(x),
            None => Ok(x.to_vec()),
        }
    }

    fn head(&self, h: &[f64]) -> f64 {
        let start = self.head_offset();
        let hw = &self.params[start..start + self.dims.hidden_dim];
        hw.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() + self.head_bias()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LstmDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<LstmDoc>(s)?.try_into()
    }
}

pub fn lstm_cell_step(model: &LstmModel, x_t: &[f64], prev: &LstmCellState) -> Result<LstmCellState> {
    lstm_cell_step_gates(model, x_t, prev).map(|(s, _)| s)
}

/// Like `lstm_cell_step`, also returning the gate activations.
pub fn lstm_cell_step_gates(
    model: &LstmModel,
    x_t: &[f64],
    prev: &LstmCellState,
) -> Result<(LstmCellState, GateValues)> {
    let hd = model.dims.hidden_dim;
    if prev.c.len() != hd || prev.h.len() != hd {
        return Err(Error::DimensionMismatch {
            expected: hd,
            got: prev.c.len().max(prev.h.len()),
        });
    }
    let x = model.scaled(x_t)?;
    Ok(model.step_raw(&x, prev))
}

/// Runs the sequence from the zero state; RUL is the head output scaled by
/// `target_scale` and clamped at zero.
pub fn lstm_forward(model: &LstmModel, sequence: &[Vec<f64>]) -> Result<(f64, LstmCellState)> {
    if sequence.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut state = LstmCellState::zeros(model.dims.hidden_dim);
    for x in sequence {
        let xs = model.scaled(x)?;
        state = model.step_raw(&xs, &state).0;
    }
    let rul = (model.head(&state.h) * model.target_scale).max(0.0);
    Ok((rul, state))
}

pub fn lstm_predict_batch(model: &LstmModel, sequences: &[Vec<Vec<f64>>]) -> Result<Vec<f64>> {
    par::map_slice(sequences, |s| lstm_forward(model, s).map(|r| r.0))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 100,
            grad_clip: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::InvalidConfig("grad_clip must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// One training example: an input sequence and its RUL target.
pub type Example = (Vec<Vec<f64>>, f64);

/// Unclamped head output of the raw cell (no input scaling, no target scale).
fn head_output(model: &LstmModel, seq: &[Vec<f64>]) -> f64 {
    let mut state = LstmCellState::zeros(model.dims.hidden_dim);
    for x in seq {
        state = model.step_raw(x, &state).0;
    }
    model.head(&state.h)
}

/// Mean squared error of the unclamped head output over `data`.
pub fn mse_loss(model: &LstmModel, data: &[Example]) -> f64 {
    let n = data.len() as f64;
    let sums = par::sum_vectors(data.len(), 1, |i, acc| {
        let (seq, t) = &data[i];
        let e = head_output(model, seq) - t;
        acc[0] += e * e;
    });
    sums[0] / n
}

/// Adds the gradient of `(y - target)^2 * weight` for one sequence into `grad`.
fn backprop_example(model: &LstmModel, seq: &[Vec<f64>], target: f64, weight: f64, grad: &mut [f64]) {
    let hd = model.dims.hidden_dim;
    let id = model.dims.input_dim;
    let z = model.z();
    let bias_off = model.bias_offset();
    let head_off = model.head_offset();

    let mut states = Vec::with_capacity(seq.len() + 1);
    let mut gates = Vec::with_capacity(seq.len());
    states.push(LstmCellState::zeros(hd));
    for x in seq {
        let (s, g) = model.step_raw(x, states.last().unwrap());
        states.push(s);
        gates.push(g);
    }
    let last = states.last().unwrap();
    let y = model.head(&last.h);
    let dy = 2.0 * (y - target) * weight;

    let hw = &model.params[head_off..head_off + hd];
    for k in 0..hd {
        grad[head_off + k] += dy * last.h[k];
    }
    grad[head_off + hd] += dy;

    let w = &model.params[..bias_off];
    let mut dh: Vec<f64> = hw.iter().map(|v| v * dy).collect();
    let mut dc = vec![0.0; hd];
    let mut da = vec![0.0; 4 * hd];
    for t in (0..seq.len()).rev() {
        let g = &gates[t];
        let prev = &states[t];
        let cur = &states[t + 1];
        for k in 0..hd {
            let tc = cur.c[k].tanh();
            let d_o = dh[k] * tc;
            dc[k] += dh[k] * g.output[k] * (1.0 - tc * tc);
            let d_i = dc[k] * g.candidate[k];
            let d_g = dc[k] * g.input[k];
            let d_f = dc[k] * prev.c[k];
            da[k] = d_i * g.input[k] * (1.0 - g.input[k]);
            da[hd + k] = d_f * g.forget[k] * (1.0 - g.forget[k]);
            da[2 * hd + k] = d_o * g.output[k] * (1.0 - g.output[k]);
            da[3 * hd + k] = d_g * (1.0 - g.candidate[k] * g.candidate[k]);
            dc[k] *= g.forget[k];
        }
        let x = &seq[t];
        let mut dh_prev = vec![0.0; hd];
        for (r, &dar) in da.iter().enumerate() {
            if dar == 0.0 {
                continue;
            }
            let row = r * z;
            for c in 0..id {
                grad[row + c] += dar * x[c];
            }
            for c in 0..hd {
                grad[row + id + c] += dar * prev.h[c];
                dh_prev[c] += dar * w[row + id + c];
            }
            grad[bias_off + r] += dar;
        }
        dh = dh_prev;
    }
}

/// Mean squared error and its exact gradient with respect to the flat
/// parameter vector.
pub fn loss_and_gradient(model: &LstmModel, data: &[Example]) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    validate_examples(model, data)?;
    let np = model.params.len();
    let weight = 1.0 / data.len() as f64;
    // Slot `np` carries the squared-error sum alongside the gradient.
    let mut acc = par::sum_vectors(data.len(), np + 1, |i, acc| {
        let (seq, t) = &data[i];
        let e = head_output(model, seq) - t;
        acc[np] += e * e;
        backprop_example(model, seq, *t, weight, &mut acc[..np]);
    });
    let loss = acc.pop().unwrap() * weight;
    Ok((loss, acc))
}

fn validate_examples(model: &LstmModel, data: &[Example]) -> Result<()> {
    for (seq, t) in data {
        if seq.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(t.is_finite() && *t >= 0.0) {
            return Err(Error::InvalidConfig(format!("RUL target must be finite and >= 0, got {t}")));
        }
        for x in seq {
            model.check_input(x)?;
        }
    }
    Ok(())
}

/// Full-batch gradient descent with gradient-norm clipping.
///
/// Returns the trained model and the mean loss at the start of each epoch
/// followed by the loss after the final update (`epochs + 1` entries).
pub fn lstm_train(data: &[Example], cfg: &TrainConfig, dims: LstmDims) -> Result<(LstmModel, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut model = LstmModel::init(dims, cfg.seed)?;
    validate_examples(&model, data)?;

    let mut curve = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let (loss, mut grad) = loss_and_gradient(&model, data)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch,
                last_finite: curve.last().copied(),
            });
        }
        curve.push(loss);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > cfg.grad_clip {
            let s = cfg.grad_clip / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
        for (p, g) in model.params.iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
    }
    let final_loss = mse_loss(&model, data);
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: cfg.epochs,
            last_finite: curve.last().copied(),
        });
    }
    curve.push(final_loss);
    Ok((model, curve))
}

#[derive(Serialize, Deserialize)]
struct ParamBlock {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LstmDoc {
    schema_version: u32,
    model_type: String,
    dims: LstmDims,
    seed: u64,
    target_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_scaling: Option<Scaling>,
    parameters: Vec<ParamBlock>,
}

impl From<&LstmModel> for LstmDoc {
    fn from(m: &LstmModel) -> Self {
        let h = m.dims.hidden_dim;
        let (bo, ho) = (m.bias_offset(), m.head_offset());
        let block = |name: &str, shape: Vec<usize>, r: std::ops::Range<usize>| ParamBlock {
            name: name.into(),
            shape,
            values: m.params[r].to_vec(),
        };
        LstmDoc {
            schema_version: LSTM_SCHEMA_VERSION,
            model_type: "lstm".into(),
            dims: m.dims,
            seed: m.seed,
            target_scale: m.target_scale,
            input_scaling: m.input_scaling.clone(),
            parameters: vec![
                block("gate_weights", vec![4 * h, m.z()], 0..bo),
                block("gate_bias", vec![4 * h], bo..ho),
                block("head_weights", vec![h], ho..ho + h),
                block("head_bias", vec![1], ho + h..ho + h + 1),
            ],
        }
    }
}

impl TryFrom<LstmDoc> for LstmModel {
    type Error = Error;

    fn try_from(d: LstmDoc) -> Result<Self> {
        if d.model_type != "lstm" || d.schema_version != LSTM_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "expected lstm model v{LSTM_SCHEMA_VERSION}, found {} v{}",
                d.model_type, d.schema_version
            )));
        }
        let mut m = LstmModel::zeros(d.dims)?;
        let h = d.dims.hidden_dim;
        let expected = [
            ("gate_weights", vec![4 * h, m.z()]),
            ("gate_bias", vec![4 * h]),
            ("head_weights", vec![h]),
            ("head_bias", vec![1]),
        ];
        if d.parameters.len() != expected.len() {
            return Err(Error::ShapeMismatch("lstm parameter blocks".into()));
        }
        let mut flat = Vec::with_capacity(m.params.len());
        for (block, (name, shape)) in d.parameters.into_iter().zip(expected) {
            let count: usize = shape.iter().product();
            if block.name != name || block.shape != shape || block.values.len() != count {
                return Err(Error::ShapeMismatch(format!("lstm block {name}")));
            }
            flat.extend(block.values);
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite lstm parameter".into()));
        }
        if let Some(s) = &d.input_scaling {
            if s.dim() != d.dims.input_dim {
                return Err(Error::ShapeMismatch("input scaling dimension".into()));
            }
        }
        m.params = flat;
        m.seed = d.seed;
        m.target_scale = d.target_scale;
        m.input_scaling = d.input_scaling;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMS: LstmDims = LstmDims { input_dim: 2, hidden_dim: 3 };

    #[test]
    fn saturated_forget_keeps_cell() {
        let mut m = LstmModel::init(DIMS, 5).unwrap();
        m.gate_bias_mut(Gate::Forget).fill(1e3);
        m.gate_bias_mut(Gate::Input).fill(-1e3);
        let prev = LstmCellState { c: vec![0.3, -1.2, 2.0], h: vec![0.1, 0.2, -0.3] };
        let next = lstm_cell_step(&m, &[0.5, -0.5], &prev).unwrap();
        assert_eq!(next.c, prev.c);
    }

    #[test]
    fn saturated_input_takes_candidate() {
        let mut m = LstmModel::init(DIMS, 6).unwrap();
        m.gate_bias_mut(Gate::Forget).fill(-1e3);
        m.gate_bias_mut(Gate::Input).fill(1e3);
        let prev = LstmCellState { c: vec![0.3, -1.2, 2.0], h: vec![0.1, 0.2, -0.3] };
        let (next, g) = lstm_cell_step_gates(&m, &[0.5, -0.5], &prev).unwrap();
        assert_eq!(next.c, g.candidate);
    }

    #[test]
    fn zero_model_stays_at_origin() {
        let m = LstmModel::zeros(DIMS).unwrap();
        let mut s = LstmCellState::zeros(3);
        for t in 0..6 {
            let (next, g) = lstm_cell_step_gates(&m, &[t as f64, -2.0], &s).unwrap();
            assert!(g.input.iter().chain(&g.forget).chain(&g.output).all(|&v| v == 0.5));
            assert_eq!(next, LstmCellState::zeros(3));
            s = next;
        }
    }

    #[test]
    fn forward_examples() {
        let mut m = LstmModel::zeros(DIMS).unwrap();
        m.set_head_bias(7.0);
        let seq = vec![vec![1.0, 2.0], vec![-4.0, 0.5]];
        assert_eq!(lstm_forward(&m, &seq).unwrap().0, 7.0);
        m.set_head_bias(-3.0);
        assert_eq!(lstm_forward(&m, &seq).unwrap().0, 0.0);
        assert!(matches!(lstm_forward(&m, &[]), Err(Error::EmptyInput)));
        assert!(matches!(lstm_forward(&m, &[vec![1.0]]), Err(Error::DimensionMismatch { .. })));

        let r = LstmModel::init(DIMS, 11).unwrap();
        assert_eq!(lstm_forward(&r, &seq).unwrap(), lstm_forward(&r, &seq).unwrap());
    }

    #[test]
    fn forward_is_fold_of_steps() {
        let mut m = LstmModel::init(DIMS, 2).unwrap();
        m.head_weights_mut().copy_from_slice(&[0.5, -1.0, 2.0]);
        m.set_head_bias(0.9);
        let seq: Vec<Vec<f64>> = (0..5).map(|t| vec![t as f64 * 0.3, 1.0 - t as f64]).collect();
        let mut s = LstmCellState::zeros(3);
        for x in &seq {
            s = lstm_cell_step(&m, x, &s).unwrap();
        }
        let (rul, fin) = lstm_forward(&m, &seq).unwrap();
        assert_eq!(fin, s);
        let manual = 0.5 * s.h[0] - s.h[1] + 2.0 * s.h[2] + 0.9;
        assert_eq!(rul, manual.max(0.0));
    }

    #[test]
    fn init_ranges() {
        let mut m = LstmModel::init(LstmDims { input_dim: 4, hidden_dim: 4 }, 1).unwrap();
        let forget = m.gate_bias_mut(Gate::Forget).to_vec();
        assert_eq!(forget, vec![1.0; 4]);
        assert_eq!(m.head_bias(), 0.0);
        let bo = m.bias_offset();
        assert!(m.params()[..bo].iter().all(|p| p.abs() <= 0.08));
        assert_eq!(m.params().len(), LstmModel::param_count(m.dims()));
    }

    fn fd_check(seed: u64, dims: LstmDims, steps: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = LstmModel::init(dims, seed).unwrap();
        for p in m.params_mut() {
            *p = rng.random_range(-0.8..0.8);
        }
        let data: Vec<Example> = (0..3)
            .map(|_| {
                let seq = (0..steps)
                    .map(|_| (0..dims.input_dim).map(|_| rng.random_range(-1.5..1.5)).collect())
                    .collect();
                (seq, rng.random_range(0.0..2.0))
            })
            .collect();
        let (_, grad) = loss_and_gradient(&m, &data).unwrap();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..grad.len() {
            let mut plus = m.clone();
            plus.params_mut()[k] += eps;
            let mut minus = m.clone();
            minus.params_mut()[k] -= eps;
            let fd = (mse_loss(&plus, &data) - mse_loss(&minus, &data)) / (2.0 * eps);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let worst = fd_check(17, DIMS, 2);
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn constant_target_is_learned() {
        let data = vec![(vec![vec![0.4, -0.2], vec![0.1, 0.3], vec![-0.5, 0.0]], 1.0)];
        let cfg = TrainConfig { epochs: 200, ..TrainConfig::default() };
        let (_, curve) = lstm_train(&data, &cfg, DIMS).unwrap();
        assert_eq!(curve.len(), 201);
        assert!(curve[200] < 1e-2 * curve[0], "{} -> {}", curve[0], curve[200]);
        let (_, again) = lstm_train(&data, &cfg, DIMS).unwrap();
        assert_eq!(curve, again);
    }

    #[test]
    fn divergence_is_reported() {
        // The squared error of a 1e300 target overflows.
        let data = vec![(vec![vec![0.5, 0.5]], 1e300)];
        let err = lstm_train(&data, &TrainConfig::default(), DIMS).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { epoch: 0, last_finite: None }), "{err}");
        assert!(err.is_numerical());
    }

    #[test]
    fn train_rejects_bad_input() {
        assert!(matches!(lstm_train(&[], &TrainConfig::default(), DIMS), Err(Error::EmptyInput)));
        let neg = vec![(vec![vec![0.0, 0.0]], -1.0)];
        assert!(lstm_train(&neg, &TrainConfig::default(), DIMS).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = LstmModel::init(DIMS, 99).unwrap();
        m.target_scale = 1234.5;
        m.input_scaling = Some(Scaling { means: vec![0.1, 0.2], devs: vec![3.0, 0.7] });
        let text = m.to_json().unwrap();
        let back = LstmModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
        assert!(LstmModel::from_json(&text.replace("\"lstm\"", "\"svm\"")).is_err());
    }
}
