//! Float LogNNet: reservoir layer, sigmoid hidden layer, sigmoid outputs.
//!
//! Only the two dense layers after the reservoir are trained. The loss is
//! an independent binary cross-entropy per output neuron against one-hot
//! targets, which keeps inference identical to the device loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chaos::{fit_reservoir_coeffs, ChaosParams, ReservoirCoeffs, ReservoirMatrix, Topology};
use crate::data::{fit_scaler, Dataset, ScalerKind, ScalerParams};
use crate::validate::{Classifier, Trainer};
use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionOutcome {
    pub predicted_class: usize,
    pub activations: Vec<f64>,
}

impl PredictionOutcome {
    /// Lowest index attaining the maximum, matching the device's strict `>`.
    pub fn from_activations(activations: Vec<f64>) -> Self {
        let mut best = 0;
        for j in 1..activations.len() {
            if activations[j] > activations[best] {
                best = j;
            }
        }
        Self {
            predicted_class: best,
            activations,
        }
    }

    /// Activation of the winning output.
    pub fn confidence(&self) -> f64 {
        self.activations[self.predicted_class]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNNetModel {
    pub topology: Topology,
    pub chaos: ChaosParams,
    pub coeffs: ReservoirCoeffs,
    /// `(P+1)×(M+1)`; column 0 is unused and kept at zero.
    pub w1: Matrix,
    /// `(M+1)×(N+1)`.
    pub w2: Matrix,
}

/// Mini-batch gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Initial weights are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 1.0,
            batch_size: 32,
            init_range: 0.5,
            seed: 0,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

impl LogNNetModel {
    /// A model with zero output-layer weights, for the given coefficients.
    pub fn zeroed(topology: Topology, chaos: ChaosParams, coeffs: ReservoirCoeffs) -> Self {
        Self {
            topology,
            chaos,
            coeffs,
            w1: Matrix::zeros(topology.p + 1, topology.m + 1),
            w2: Matrix::zeros(topology.m + 1, topology.n + 1),
        }
    }

    /// Checks shapes against the topology and that every weight is finite.
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        t.validate()?;
        self.chaos.validate()?;
        let shapes = [
            (self.w1.rows, t.p + 1),
            (self.w1.cols, t.m + 1),
            (self.w2.rows, t.m + 1),
            (self.w2.cols, t.n + 1),
            (self.coeffs.min_s.len(), t.p),
            (self.coeffs.max_s.len(), t.p),
            (self.coeffs.mean10.len(), t.p),
        ];
        for (got, expected) in shapes {
            if got != expected {
                return Err(Error::Arity { expected, got });
            }
        }
        let finite = self.w1.data.iter().chain(&self.w2.data).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("model contains non-finite weights"));
        }
        Ok(())
    }

    /// Full forward pass on `S` feature values.
    pub fn forward(&self, features: &[f64]) -> Result<PredictionOutcome> {
        let y = self.topology.input_array(features)?;
        let sh = crate::chaos::reservoir_transform(&y, &self.chaos, &self.coeffs, &self.topology)?;
        Ok(PredictionOutcome::from_activations(self.forward_from_reservoir(&sh).1))
    }

    /// Hidden layer (with bias slot 0) and output activations for a
    /// precomputed reservoir layer.
    pub fn forward_from_reservoir(&self, sh: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = &self.topology;
        let mut hidden = vec![1.0; t.m + 1];
        for (j, h) in hidden.iter_mut().enumerate().skip(1) {
            let z = (0..=t.p).fold(0.0, |acc, i| acc + sh[i] * self.w1.get(i, j));
            *h = sigmoid(z);
        }
        let out = (0..=t.n)
            .map(|k| sigmoid((0..=t.m).fold(0.0, |acc, i| acc + hidden[i] * self.w2.get(i, k))))
            .collect();
        (hidden, out)
    }

    /// Mean per-output binary cross-entropy over reservoir rows.
    pub fn loss(&self, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
        let mut total = 0.0;
        for (sh, &label) in rows.iter().zip(labels) {
            let (_, out) = self.forward_from_reservoir(sh);
            for (k, &o) in out.iter().enumerate() {
                let target = if k == label as usize { 1.0 } else { 0.0 };
                let o = o.clamp(1e-15, 1.0 - 1e-15);
                total -= target * o.ln() + (1.0 - target) * (1.0 - o).ln();
            }
        }
        total / rows.len() as f64
    }

    /// Analytic gradients of [`LogNNetModel::loss`] with respect to `w1`
    /// and `w2`. Column 0 of the `w1` gradient is always zero.
    pub fn gradients(&self, rows: &[Vec<f64>], labels: &[u8]) -> (Matrix, Matrix) {
        let t = &self.topology;
        let mut g1 = Matrix::zeros(t.p + 1, t.m + 1);
        let mut g2 = Matrix::zeros(t.m + 1, t.n + 1);
        let mut delta_hidden = vec![0.0; t.m + 1];
        for (sh, &label) in rows.iter().zip(labels) {
            let (hidden, out) = self.forward_from_reservoir(sh);
            let delta_out: Vec<f64> = out
                .iter()
                .enumerate()
                .map(|(k, &o)| o - if k == label as usize { 1.0 } else { 0.0 })
                .collect();
            for i in 0..=t.m {
                for (k, &d) in delta_out.iter().enumerate() {
                    g2.data[i * g2.cols + k] += hidden[i] * d;
                }
            }
            for j in 1..=t.m {
                let back: f64 = delta_out.iter().enumerate().map(|(k, &d)| self.w2.get(j, k) * d).sum();
                delta_hidden[j] = back * hidden[j] * (1.0 - hidden[j]);
            }
            for (i, &s) in sh.iter().enumerate() {
                let row = &mut g1.data[i * g1.cols..(i + 1) * g1.cols];
                for j in 1..=t.m {
                    row[j] += s * delta_hidden[j];
                }
            }
        }
        let n = rows.len() as f64;
        g1.data.iter_mut().chain(g2.data.iter_mut()).for_each(|g| *g /= n);
        (g1, g2)
    }
}

/// Reservoir layers for every record of `d`.
pub fn reservoir_rows(
    d: &Dataset,
    chaos: &ChaosParams,
    t: &Topology,
    coeffs: &ReservoirCoeffs,
) -> Result<Vec<Vec<f64>>> {
    let matrix = ReservoirMatrix::new(chaos, t)?;
    d.records()
        .iter()
        .map(|r| matrix.transform(&t.input_array(&r.values)?, coeffs))
        .collect()
}

/// Fits the reservoir coefficients on `d`, then trains `w1`/`w2` by seeded
/// mini-batch gradient descent with the reservoir held fixed.
pub fn train(d: &Dataset, t: &Topology, chaos: &ChaosParams, h: &TrainParams) -> Result<LogNNetModel> {
    h.validate()?;
    t.validate()?;
    let labels = d.labels()?;
    if d.feature_count() != t.s {
        return Err(Error::Arity {
            expected: t.s,
            got: d.feature_count(),
        });
    }
    if labels.iter().any(|&l| l as usize > t.n) {
        return Err(Error::invalid("label exceeds the number of output neurons"));
    }
    let coeffs = fit_reservoir_coeffs(d, chaos, t)?;
    let rows = reservoir_rows(d, chaos, t, &coeffs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let mut model = LogNNetModel::zeroed(*t, *chaos, coeffs);
    for i in 0..=t.p {
        for j in 1..=t.m {
            model.w1.set(i, j, rng.random_range(-h.init_range..=h.init_range));
        }
    }
    for v in model.w2.data.iter_mut() {
        *v = rng.random_range(-h.init_range..=h.init_range);
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut batch_rows = Vec::with_capacity(h.batch_size);
    let mut batch_labels = Vec::with_capacity(h.batch_size);
    for _ in 0..h.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(h.batch_size) {
            batch_rows.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_rows.push(rows[i].clone());
                batch_labels.push(labels[i]);
            }
            let (g1, g2) = model.gradients(&batch_rows, &batch_labels);
            for (w, g) in model.w1.data.iter_mut().zip(&g1.data) {
                *w -= h.learning_rate * g;
            }
            for (w, g) in model.w2.data.iter_mut().zip(&g2.data) {
                *w -= h.learning_rate * g;
            }
        }
    }
    Ok(model)
}

/// A LogNNet model together with the input scaler fitted on its training
/// data. The device receives already-scaled vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNNetClassifier {
    pub scaler: Option<ScalerParams>,
    pub model: LogNNetModel,
}

impl LogNNetClassifier {
    pub fn prepare(&self, values: &[f64]) -> Result<Vec<f64>> {
        match &self.scaler {
            Some(s) => s.apply_values(values),
            None => Ok(values.to_vec()),
        }
    }

    pub fn predict(&self, values: &[f64]) -> Result<PredictionOutcome> {
        self.model.forward(&self.prepare(values)?)
    }
}

impl Classifier for LogNNetClassifier {
    fn predict_class(&self, values: &[f64]) -> Result<usize> {
        Ok(self.predict(values)?.predicted_class)
    }
}

impl Classifier for LogNNetModel {
    fn predict_class(&self, values: &[f64]) -> Result<usize> {
        Ok(self.forward(values)?.predicted_class)
    }
}

/// Trains a [`LogNNetClassifier`] over whatever features the dataset has:
/// the topology input width follows the dataset, `P`, `M` and `N` come
/// from `shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogNNetTrainer {
    pub shape: Topology,
    pub chaos: ChaosParams,
    pub params: TrainParams,
    pub scaling: Option<ScalerKind>,
}

impl Default for LogNNetTrainer {
    fn default() -> Self {
        Self {
            shape: Topology::RBV,
            chaos: ChaosParams::default(),
            params: TrainParams::default(),
            scaling: Some(ScalerKind::MinMax),
        }
    }
}

impl LogNNetTrainer {
    pub fn train(&self, d: &Dataset, seed: u64) -> Result<LogNNetClassifier> {
        let scaler = self.scaling.map(|k| fit_scaler(d, k)).transpose()?;
        let scaled = match &scaler {
            Some(s) => s.apply_dataset(d)?,
            None => d.clone(),
        };
        let topology = Topology {
            s: d.feature_count(),
            ..self.shape
        };
        let params = TrainParams {
            seed,
            ..self.params.clone()
        };
        let model = train(&scaled, &topology, &self.chaos, &params)?;
        Ok(LogNNetClassifier { scaler, model })
    }
}

impl Trainer for LogNNetTrainer {
    type Model = LogNNetClassifier;

    fn fit(&self, d: &Dataset, seed: u64) -> Result<LogNNetClassifier> {
        self.train(d, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, AttractorSpec};
    use crate::validate::accuracy;

    fn random_model(seed: u64, t: Topology) -> LogNNetModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = ReservoirCoeffs {
            min_s: (0..t.p).map(|_| rng.random_range(-2.0..-0.5)).collect(),
            max_s: (0..t.p).map(|_| rng.random_range(0.5..2.0)).collect(),
            mean10: (0..t.p).map(|_| rng.random_range(-0.1..0.1)).collect(),
        };
        let mut m = LogNNetModel::zeroed(t, ChaosParams::default(), coeffs);
        for i in 0..=t.p {
            for j in 1..=t.m {
                m.w1.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        m.w2.data.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        m
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1.0) - 0.7310585786).abs() < 1e-9);
        for x in [-3.0, -0.2, 0.7, 12.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_weights_tie_to_class_zero() {
        let t = Topology::new(3, 4, 2, 1).unwrap();
        let m = LogNNetModel::zeroed(t, ChaosParams::default(), ReservoirCoeffs::identity(4));
        let out = m.forward(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(out.activations, vec![0.5, 0.5]);
        assert_eq!(out.predicted_class, 0);
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let t = Topology::new(5, 7, 4, 1).unwrap();
        for seed in 0..10 {
            let m = random_model(seed, t);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
            let out = m.forward(&x).unwrap();
            assert_eq!(out, m.forward(&x).unwrap());

            // Oracle: build W from the raw recurrence and multiply explicitly.
            let mut state = 73i64;
            let mut sh = vec![1.0];
            for j in 0..t.p {
                let mut raw = 0.0;
                for i in 0..=t.s {
                    state = (68 - 93 * state) % 9276;
                    let y = if i < t.s { x[i] } else { 0.0 };
                    raw += state as f64 / 9276.0 * y;
                }
                let c = &m.coeffs;
                sh.push((raw - c.min_s[j]) / (c.max_s[j] - c.min_s[j]) - 0.5 - c.mean10[j]);
            }
            let mut hidden = vec![1.0];
            for j in 1..=t.m {
                let z: f64 = (0..=t.p).map(|i| sh[i] * m.w1.data[i * (t.m + 1) + j]).sum();
                hidden.push(1.0 / (1.0 + (-z).exp()));
            }
            let outs: Vec<f64> = (0..=t.n)
                .map(|k| {
                    let z: f64 = (0..=t.m).map(|i| hidden[i] * m.w2.data[i * (t.n + 1) + k]).sum();
                    1.0 / (1.0 + (-z).exp())
                })
                .collect();
            for (a, b) in out.activations.iter().zip(&outs) {
                assert!((a - b).abs() < 1e-12);
                assert!(*a > 0.0 && *a < 1.0);
            }
            let argmax = if outs[1] > outs[0] { 1 } else { 0 };
            assert_eq!(out.predicted_class, argmax);
        }
    }

    #[test]
    fn arity_mismatch() {
        let t = Topology::new(3, 4, 2, 1).unwrap();
        let m = LogNNetModel::zeroed(t, ChaosParams::default(), ReservoirCoeffs::identity(4));
        assert!(matches!(
            m.forward(&[0.0; 4]),
            Err(Error::Arity { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn gradients_match_central_differences() {
        let t = Topology::new(4, 5, 3, 1).unwrap();
        let step = 1e-4;
        for seed in 0..10 {
            let mut m = random_model(seed, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 50);
            let rows: Vec<Vec<f64>> = (0..6)
                .map(|_| {
                    let mut r = vec![1.0];
                    r.extend((0..t.p).map(|_| rng.random_range(-0.5..0.5)));
                    r
                })
                .collect();
            let labels: Vec<u8> = (0..6).map(|i| (i % 2) as u8).collect();
            let (g1, g2) = m.gradients(&rows, &labels);
            for which in 0..2 {
                let len = if which == 0 { m.w1.data.len() } else { m.w2.data.len() };
                for idx in 0..len {
                    if which == 0 && idx % (t.m + 1) == 0 {
                        assert_eq!(g1.data[idx], 0.0);
                        continue;
                    }
                    let orig = *weight(&mut m, which, idx);
                    *weight(&mut m, which, idx) = orig + step;
                    let up = m.loss(&rows, &labels);
                    *weight(&mut m, which, idx) = orig - step;
                    let down = m.loss(&rows, &labels);
                    *weight(&mut m, which, idx) = orig;
                    let numeric = (up - down) / (2.0 * step);
                    let analytic = if which == 0 { g1.data[idx] } else { g2.data[idx] };
                    let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
                    assert!(
                        rel <= 1e-3,
                        "seed {seed} layer {which} idx {idx}: {numeric} vs {analytic}"
                    );
                }
            }
        }
    }

    fn weight(m: &mut LogNNetModel, layer: usize, idx: usize) -> &mut f64 {
        if layer == 0 {
            &mut m.w1.data[idx]
        } else {
            &mut m.w2.data[idx]
        }
    }

    #[test]
    fn training_is_deterministic() {
        let d = generate_synthetic(&AttractorSpec::separable(6), 40, 3).unwrap();
        let trainer = LogNNetTrainer::default();
        let a = trainer.train(&d, 5).unwrap();
        let b = trainer.train(&d, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let d = generate_synthetic(&AttractorSpec::separable(3), 10, 3).unwrap();
        let t = Topology::for_features(3);
        let bad = TrainParams {
            epochs: 0,
            ..Default::default()
        };
        assert!(train(&d, &t, &ChaosParams::default(), &bad).is_err());
        let bad = TrainParams {
            learning_rate: -0.1,
            ..Default::default()
        };
        assert!(train(&d, &t, &ChaosParams::default(), &bad).is_err());
    }

    #[test]
    fn separable_data_trains_well() {
        let d = generate_synthetic(&AttractorSpec::separable(10), 200, 11).unwrap();
        let model = LogNNetTrainer::default().train(&d, 1).unwrap();
        let acc = accuracy(&model, &d).unwrap();
        assert!(acc >= 0.95, "training accuracy {acc}");
    }
}
