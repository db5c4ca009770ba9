//! Congruent chaotic generator and the reservoir transform.
//!
//! The reservoir matrix is never stored on the device: each inference
//! restarts the generator at `C` and consumes `(S+1)·P` successive values,
//! row by row, as weights `x / L`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// Parameters of `x_{n+1} = (D - K·x_n) mod L`, `x_1 = C`, where `mod` is
/// the truncated remainder (sign of the dividend) of C's `%` operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChaosParams {
    pub k: i64,
    pub d: i64,
    pub l: i64,
    pub c: i64,
}

impl Default for ChaosParams {
    fn default() -> Self {
        Self {
            k: 93,
            d: 68,
            l: 9276,
            c: 73,
        }
    }
}

impl ChaosParams {
    pub fn validate(&self) -> Result<()> {
        if self.l <= 0 {
            return Err(Error::invalid(format!("modulus L = {} must be positive", self.l)));
        }
        if self.c.abs() >= self.l {
            return Err(Error::invalid(format!("seed C = {} must satisfy |C| < L", self.c)));
        }
        Ok(())
    }

    /// One step of the recurrence. Wide arithmetic keeps `K·x` exact.
    #[inline]
    pub fn step(&self, x: i64) -> i64 {
        ((self.d as i128 - self.k as i128 * x as i128) % self.l as i128) as i64
    }

    pub fn iter(&self) -> CongruentGenerator {
        CongruentGenerator {
            params: *self,
            state: self.c,
            started: false,
        }
    }
}

/// Infinite stream `x_1 = C, x_2, x_3, …`.
#[derive(Debug, Clone)]
pub struct CongruentGenerator {
    params: ChaosParams,
    state: i64,
    started: bool,
}

impl Iterator for CongruentGenerator {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        if self.started {
            self.state = self.params.step(self.state);
        }
        self.started = true;
        Some(self.state)
    }
}

/// The first `count` generator values, starting with `C`.
pub fn generator_stream(p: &ChaosParams, count: usize) -> Result<Vec<i64>> {
    if count == 0 {
        return Err(Error::invalid("generator stream length must be positive"));
    }
    p.validate()?;
    Ok(p.iter().take(count).collect())
}

/// Network shape `S:P:M:N`. The input array has `S+1` slots; feature values
/// occupy slots `0..S` and slot `S` stays 0. There are `N+1` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub s: usize,
    pub p: usize,
    pub m: usize,
    pub n: usize,
}

impl Topology {
    /// The deployed `51:50:20:2` network.
    pub const RBV: Topology = Topology {
        s: 51,
        p: 50,
        m: 20,
        n: 1,
    };

    pub fn new(s: usize, p: usize, m: usize, n: usize) -> Result<Self> {
        let t = Topology { s, p, m, n };
        t.validate()?;
        Ok(t)
    }

    /// The reference 50-node reservoir and 20-node hidden layer over `features` inputs.
    pub fn for_features(features: usize) -> Self {
        Topology {
            s: features,
            ..Self::RBV
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.p == 0 || self.m == 0 || self.n == 0 {
            return Err(Error::invalid(format!("topology {self} has a zero dimension")));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.s
    }

    pub fn input_len(&self) -> usize {
        self.s + 1
    }

    pub fn outputs(&self) -> usize {
        self.n + 1
    }

    /// Generator values consumed by one reservoir pass.
    pub fn reservoir_weight_count(&self) -> usize {
        (self.s + 1) * self.p
    }

    /// Builds the `S+1` input array from `S` feature values.
    pub fn input_array(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.s {
            return Err(Error::Arity {
                expected: self.s,
                got: features.len(),
            });
        }
        let mut y = Vec::with_capacity(self.s + 1);
        y.extend_from_slice(features);
        y.push(0.0);
        Ok(y)
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}:{}", self.s, self.p, self.m, self.n + 1)
    }
}

/// Per-neuron normalization of the reservoir sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirCoeffs {
    pub min_s: Vec<f64>,
    pub max_s: Vec<f64>,
    pub mean10: Vec<f64>,
}

impl ReservoirCoeffs {
    /// `min = 0, max = 1, mean10 = 0` for every neuron.
    pub fn identity(p: usize) -> Self {
        Self {
            min_s: vec![0.0; p],
            max_s: vec![1.0; p],
            mean10: vec![0.0; p],
        }
    }

    fn check(&self, t: &Topology) -> Result<()> {
        for len in [self.min_s.len(), self.max_s.len(), self.mean10.len()] {
            if len != t.p {
                return Err(Error::Arity {
                    expected: t.p,
                    got: len,
                });
            }
        }
        Ok(())
    }

    /// Normalizes one raw sum for reservoir neuron `j` (0-based).
    #[inline]
    pub fn normalize(&self, j: usize, raw: f64) -> f64 {
        let range = self.max_s[j] - self.min_s[j];
        if range == 0.0 {
            -0.5 - self.mean10[j]
        } else {
            (raw - self.min_s[j]) / range - 0.5 - self.mean10[j]
        }
    }
}

/// The reservoir weights `x/L` materialized row-major (`P` rows of `S+1`).
/// Equivalent to regenerating them per call, for bulk transforms.
#[derive(Debug, Clone)]
pub struct ReservoirMatrix {
    topology: Topology,
    weights: Vec<f64>,
}

impl ReservoirMatrix {
    pub fn new(p: &ChaosParams, t: &Topology) -> Result<Self> {
        p.validate()?;
        t.validate()?;
        let l = p.l as f64;
        // x_1 = C only seeds the state; the first weight is x_2.
        let weights = p
            .iter()
            .skip(1)
            .take(t.reservoir_weight_count())
            .map(|x| x as f64 / l)
            .collect();
        Ok(Self { topology: *t, weights })
    }

    /// Raw reservoir sums for an `S+1` input array (length `P`).
    pub fn raw_sums(&self, y: &[f64]) -> Result<Vec<f64>> {
        let width = self.topology.input_len();
        if y.len() != width {
            return Err(Error::Arity {
                expected: width,
                got: y.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(width)
            .map(|row| row.iter().zip(y).fold(0.0, |acc, (w, v)| acc + w * v))
            .collect())
    }

    /// Normalized reservoir layer `[1, Sh_1, …, Sh_P]`.
    pub fn transform(&self, y: &[f64], c: &ReservoirCoeffs) -> Result<Vec<f64>> {
        c.check(&self.topology)?;
        let raw = self.raw_sums(y)?;
        let mut sh = Vec::with_capacity(raw.len() + 1);
        sh.push(1.0);
        sh.extend(raw.iter().enumerate().map(|(j, &r)| c.normalize(j, r)));
        Ok(sh)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }
}

/// Reservoir layer for one `S+1` input array, regenerating the weights from
/// the generator exactly as the device does.
pub fn reservoir_transform(y: &[f64], p: &ChaosParams, c: &ReservoirCoeffs, t: &Topology) -> Result<Vec<f64>> {
    p.validate()?;
    if y.len() != t.input_len() {
        return Err(Error::Arity {
            expected: t.input_len(),
            got: y.len(),
        });
    }
    c.check(t)?;
    let l = p.l as f64;
    let mut w = p.c;
    let mut sh = Vec::with_capacity(t.p + 1);
    sh.push(1.0);
    for j in 0..t.p {
        let mut acc = 0.0;
        for &v in y {
            w = p.step(w);
            acc += (w as f64 / l) * v;
        }
        sh.push(c.normalize(j, acc));
    }
    Ok(sh)
}

/// Fits min/max of the raw sums and the mean of the centred normalized
/// value, so the fitted transform has zero mean per neuron on `d`.
pub fn fit_reservoir_coeffs(d: &Dataset, p: &ChaosParams, t: &Topology) -> Result<ReservoirCoeffs> {
    if d.is_empty() {
        return Err(Error::invalid("cannot fit reservoir coefficients on an empty dataset"));
    }
    let matrix = ReservoirMatrix::new(p, t)?;
    let raws = d
        .records()
        .iter()
        .map(|r| matrix.raw_sums(&t.input_array(&r.values)?))
        .collect::<Result<Vec<_>>>()?;
    let mut min_s = vec![f64::INFINITY; t.p];
    let mut max_s = vec![f64::NEG_INFINITY; t.p];
    for raw in &raws {
        for j in 0..t.p {
            min_s[j] = min_s[j].min(raw[j]);
            max_s[j] = max_s[j].max(raw[j]);
        }
    }
    let mut mean10 = vec![0.0; t.p];
    for raw in &raws {
        for j in 0..t.p {
            let range = max_s[j] - min_s[j];
            mean10[j] += if range == 0.0 {
                -0.5
            } else {
                (raw[j] - min_s[j]) / range - 0.5
            };
        }
    }
    let n = raws.len() as f64;
    mean10.iter_mut().for_each(|m| *m /= n);
    Ok(ReservoirCoeffs { min_s, max_s, mean10 })
}
