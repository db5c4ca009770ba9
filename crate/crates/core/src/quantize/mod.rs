//! 16-bit model form for the microcontroller, its library file, an
//! emulator of the device inference loop, and the RAM budget model.

mod emulator;
mod file;
mod ram;

use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosParams, ReservoirCoeffs, Topology};
use crate::lognnet::{LogNNetModel, Matrix};
use crate::{Error, Result};

pub use emulator::emulate_edge_inference;
pub use file::{export_model, import_model, parse_model, render_model, MAGIC};
pub use ram::{ram_budget, RamBudget, RamOverheads, RamSizes};

pub const DEFAULT_SCALE_FACTOR: u32 = 1000;

/// Integer form of a [`LogNNetModel`]: every value is stored as
/// `round(value × scale_factor)` (mean terms use `10 × scale_factor`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub topology: Topology,
    pub chaos: ChaosParams,
    pub scale_factor: u32,
    pub min_s: Vec<i16>,
    pub max_s: Vec<i16>,
    pub mean_s: Vec<i16>,
    /// Row-major `(P+1)×(M+1)`.
    pub w1: Vec<i16>,
    /// Row-major `(M+1)×(N+1)`.
    pub w2: Vec<i16>,
}

/// Rounds half away from zero and checks the signed 16-bit range.
fn to_i16(tensor: &'static str, index: usize, value: f64, factor: f64) -> Result<i16> {
    let scaled = (value * factor).round();
    if !(scaled >= i16::MIN as f64 && scaled <= i16::MAX as f64) {
        return Err(Error::Overflow { tensor, index, value });
    }
    Ok(scaled as i16)
}

fn quantize_all(tensor: &'static str, values: &[f64], factor: f64) -> Result<Vec<i16>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| to_i16(tensor, i, v, factor))
        .collect()
}

/// Scales and rounds every coefficient of `m`.
pub fn quantize(m: &LogNNetModel, scale_factor: u32) -> Result<QuantizedModel> {
    if scale_factor == 0 {
        return Err(Error::invalid("scale factor must be positive"));
    }
    m.validate()?;
    let f = scale_factor as f64;
    Ok(QuantizedModel {
        topology: m.topology,
        chaos: m.chaos,
        scale_factor,
        min_s: quantize_all("minS", &m.coeffs.min_s, f)?,
        max_s: quantize_all("maxS", &m.coeffs.max_s, f)?,
        mean_s: quantize_all("meanS", &m.coeffs.mean10, 10.0 * f)?,
        w1: quantize_all("W1", &m.w1.data, f)?,
        w2: quantize_all("W2", &m.w2.data, f)?,
    })
}

impl QuantizedModel {
    /// All-zero weights and coefficients.
    pub fn zeroed(topology: Topology, chaos: ChaosParams, scale_factor: u32) -> Self {
        let t = topology;
        Self {
            topology,
            chaos,
            scale_factor,
            min_s: vec![0; t.p],
            max_s: vec![0; t.p],
            mean_s: vec![0; t.p],
            w1: vec![0; (t.p + 1) * (t.m + 1)],
            w2: vec![0; (t.m + 1) * (t.n + 1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        t.validate()?;
        self.chaos.validate()?;
        if self.scale_factor == 0 {
            return Err(Error::invalid("scale factor must be positive"));
        }
        let shapes = [
            (self.min_s.len(), t.p),
            (self.max_s.len(), t.p),
            (self.mean_s.len(), t.p),
            (self.w1.len(), (t.p + 1) * (t.m + 1)),
            (self.w2.len(), (t.m + 1) * (t.n + 1)),
        ];
        for (got, expected) in shapes {
            if got != expected {
                return Err(Error::Arity { expected, got });
            }
        }
        Ok(())
    }

    /// Float model recovered by dividing by the scale factors.
    pub fn dequantize(&self) -> LogNNetModel {
        let f = self.scale_factor as f64;
        let t = self.topology;
        let back = |v: &[i16], div: f64| v.iter().map(|&q| q as f64 / div).collect::<Vec<_>>();
        LogNNetModel {
            topology: t,
            chaos: self.chaos,
            coeffs: ReservoirCoeffs {
                min_s: back(&self.min_s, f),
                max_s: back(&self.max_s, f),
                mean10: back(&self.mean_s, 10.0 * f),
            },
            w1: Matrix {
                rows: t.p + 1,
                cols: t.m + 1,
                data: back(&self.w1, f),
            },
            w2: Matrix {
                rows: t.m + 1,
                cols: t.n + 1,
                data: back(&self.w2, f),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_model(w: f64) -> LogNNetModel {
        let t = Topology::new(2, 2, 1, 1).unwrap();
        let mut m = LogNNetModel::zeroed(t, ChaosParams::default(), ReservoirCoeffs::identity(2));
        m.w1.set(0, 1, w);
        m
    }

    #[test]
    fn rounding_examples() {
        // 0.1234 * 1000 = 123.4 exactly in rationals, so 123.
        assert_eq!(to_i16("W1", 0, 0.1234, 1000.0).unwrap(), 123);
        assert_eq!(to_i16("W1", 0, -0.0005, 1000.0).unwrap(), -1);
        assert_eq!(to_i16("W1", 0, 0.0005, 1000.0).unwrap(), 1);
        assert_eq!(to_i16("W1", 0, 32.767, 1000.0).unwrap(), 32767);
    }

    #[test]
    fn overflow_names_tensor_and_index() {
        let err = quantize(&tiny_model(40.0), 1000).unwrap_err();
        match err {
            Error::Overflow { tensor, index, .. } => assert_eq!((tensor, index), ("W1", 1)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mean_uses_tenfold_factor() {
        let mut m = tiny_model(0.0);
        m.coeffs.mean10 = vec![0.01234, -0.5];
        let q = quantize(&m, 1000).unwrap();
        assert_eq!(q.mean_s, vec![123, -5000]);
        assert_eq!(q.max_s, vec![1000, 1000]);
    }

    proptest! {
        #[test]
        fn dequantization_error_bound(w in prop::collection::vec(-30.0f64..30.0, 6), mean in -3.0f64..3.0) {
            let t = Topology::new(2, 2, 1, 1).unwrap();
            let mut m = LogNNetModel::zeroed(t, ChaosParams::default(), ReservoirCoeffs::identity(2));
            m.w1.data = w.clone();
            m.coeffs.mean10 = vec![mean, -mean];
            let q = quantize(&m, 1000).unwrap();
            let back = q.dequantize();
            for (a, b) in back.w1.data.iter().zip(&w) {
                prop_assert!((a - b).abs() <= 0.5 / 1000.0 + 1e-12);
            }
            prop_assert!((back.coeffs.mean10[0] - mean).abs() <= 0.05 / 1000.0 + 1e-12);
        }
    }
}
