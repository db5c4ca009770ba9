//! Seeded synthetic cohorts whose informative feature pairs trace simple
//! two-dimensional attractors per class (lines, crosses, clouds,
//! quadrant patterns). Every other feature is label-independent noise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, RbvRecord, RBV_FEATURES, RBV_SCHEMA_ID};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Points `(t, slope*t + intercept)` with `t` uniform in `[t_min, t_max]`.
    Line {
        slope: f64,
        intercept: f64,
        t_min: f64,
        t_max: f64,
    },
    /// A horizontal and a vertical arm through `(cx, cy)`, picked with equal
    /// probability, each of half-length `half_len`.
    Cross { cx: f64, cy: f64, half_len: f64 },
    /// Bivariate normal with equal spread and correlation `corr`.
    Gaussian { cx: f64, cy: f64, sd: f64, corr: f64 },
    /// Uniform in `[-half_width, half_width]^2`, restricted to quadrants where
    /// the coordinates share a sign (`same_sign`) or have opposite signs.
    Quadrants { half_width: f64, same_sign: bool },
}

impl Shape {
    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match *self {
            Shape::Line {
                slope,
                intercept,
                t_min,
                t_max,
            } => {
                let t = t_min + (t_max - t_min) * rng.random::<f64>();
                (t, slope * t + intercept)
            }
            Shape::Cross { cx, cy, half_len } => {
                let s = half_len * (2.0 * rng.random::<f64>() - 1.0);
                if rng.random_bool(0.5) {
                    (cx + s, cy)
                } else {
                    (cx, cy + s)
                }
            }
            Shape::Gaussian { cx, cy, sd, corr } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                (cx + sd * z1, cy + sd * (corr * z1 + (1.0 - corr * corr).sqrt() * z2))
            }
            Shape::Quadrants { half_width, same_sign } => {
                let x = half_width * rng.random::<f64>();
                let y = half_width * rng.random::<f64>();
                let sx = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let sy = if same_sign { sx } else { -sx };
                (sx * x, sy * y)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Line { t_min, t_max, .. } => t_min <= t_max,
            Shape::Cross { half_len, .. } => half_len >= 0.0,
            Shape::Gaussian { sd, corr, .. } => sd >= 0.0 && (-1.0..=1.0).contains(&corr),
            Shape::Quadrants { half_width, .. } => half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid shape {self:?}")))
        }
    }
}

/// An informative feature pair: `x` and `y` are feature indices, with one
/// shape per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub x: usize,
    pub y: usize,
    pub negative: Shape,
    pub positive: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSpec {
    pub feature_count: usize,
    pub pairs: Vec<PairSpec>,
    /// Standard deviation of isotropic Gaussian noise added to pair points.
    pub noise: f64,
    /// Standard deviation of the nuisance features.
    pub nuisance_sd: f64,
}

impl AttractorSpec {
    /// Class 0 on `y = x`, class 1 on `y = x + 10`, no noise.
    pub fn separable(feature_count: usize) -> Self {
        Self {
            feature_count,
            pairs: vec![PairSpec {
                x: 0,
                y: 1,
                negative: Shape::Line {
                    slope: 1.0,
                    intercept: 0.0,
                    t_min: 0.0,
                    t_max: 10.0,
                },
                positive: Shape::Line {
                    slope: 1.0,
                    intercept: 10.0,
                    t_min: 0.0,
                    t_max: 10.0,
                },
            }],
            noise: 0.0,
            nuisance_sd: 1.0,
        }
    }

    /// Class 0 on a cross centred at the origin, class 1 on the same cross
    /// shifted by (6, 6).
    pub fn cruciform(feature_count: usize) -> Self {
        Self {
            feature_count,
            pairs: vec![PairSpec {
                x: 0,
                y: 1,
                negative: Shape::Cross {
                    cx: 0.0,
                    cy: 0.0,
                    half_len: 5.0,
                },
                positive: Shape::Cross {
                    cx: 6.0,
                    cy: 6.0,
                    half_len: 5.0,
                },
            }],
            noise: 0.25,
            nuisance_sd: 1.0,
        }
    }

    /// Label 1 exactly when features 0 and 1 share a sign.
    pub fn xor(feature_count: usize) -> Self {
        Self {
            feature_count,
            pairs: vec![PairSpec {
                x: 0,
                y: 1,
                negative: Shape::Quadrants {
                    half_width: 1.0,
                    same_sign: false,
                },
                positive: Shape::Quadrants {
                    half_width: 1.0,
                    same_sign: true,
                },
            }],
            noise: 0.0,
            nuisance_sd: 1.0,
        }
    }

    /// Features 0 and 1 correlate at `r` in class 0 and are independent in
    /// class 1; the class means coincide.
    pub fn class_correlation(feature_count: usize, r: f64) -> Self {
        Self {
            feature_count,
            pairs: vec![PairSpec {
                x: 0,
                y: 1,
                negative: Shape::Gaussian {
                    cx: 0.0,
                    cy: 0.0,
                    sd: 1.0,
                    corr: r,
                },
                positive: Shape::Gaussian {
                    cx: 0.0,
                    cy: 0.0,
                    sd: 1.0,
                    corr: 0.0,
                },
            }],
            noise: 0.0,
            nuisance_sd: 1.0,
        }
    }

    /// Moves the first informative pair to the given feature indices.
    pub fn at(mut self, x: usize, y: usize) -> Self {
        if let Some(p) = self.pairs.first_mut() {
            p.x = x;
            p.y = y;
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if self.noise < 0.0 || self.nuisance_sd < 0.0 {
            return Err(Error::invalid("noise levels must be non-negative"));
        }
        let mut used = vec![false; self.feature_count];
        for p in &self.pairs {
            for f in [p.x, p.y] {
                if f >= self.feature_count {
                    return Err(Error::invalid(format!("pair feature {f} out of range")));
                }
                if std::mem::replace(&mut used[f], true) {
                    return Err(Error::invalid(format!("feature {f} used by two pairs")));
                }
            }
            p.negative.validate()?;
            p.positive.validate()?;
        }
        Ok(())
    }

    fn feature_names(&self) -> Vec<String> {
        if self.feature_count == RBV_FEATURES.len() {
            super::rbv_schema()
        } else {
            (0..self.feature_count).map(|i| format!("f{i}")).collect()
        }
    }
}

/// Generates `n_per_class` records per label in a seeded random order.
pub fn generate_synthetic(spec: &AttractorSpec, n_per_class: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be positive"));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(2 * n_per_class);
    for label in [0u8, 1] {
        for _ in 0..n_per_class {
            let mut values = vec![0.0; spec.feature_count];
            for v in values.iter_mut() {
                if spec.nuisance_sd > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = spec.nuisance_sd * z;
                }
            }
            for p in &spec.pairs {
                let shape = if label == 0 { &p.negative } else { &p.positive };
                let (mut x, mut y) = shape.sample(&mut rng);
                if spec.noise > 0.0 {
                    let zx: f64 = rng.sample(StandardNormal);
                    let zy: f64 = rng.sample(StandardNormal);
                    x += spec.noise * zx;
                    y += spec.noise * zy;
                }
                values[p.x] = x;
                values[p.y] = y;
            }
            records.push(RbvRecord::new(values, Some(label)));
        }
    }
    records.shuffle(&mut rng);
    let schema_id = if spec.feature_count == RBV_FEATURES.len() {
        RBV_SCHEMA_ID.to_string()
    } else {
        format!("synthetic{}", spec.feature_count)
    };
    Dataset::new(spec.feature_names(), records, schema_id)
}
