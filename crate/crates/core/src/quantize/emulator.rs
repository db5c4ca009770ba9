//! Replays the device inference loop at 32-bit float precision.
//!
//! Arithmetic mirrors the C source statement by statement: weights are
//! `(float)W / L`, coefficients are `(float)q / scale_factor` at each use
//! site, and the reservoir normalization subtracts the double literal `0.5`,
//! so that one expression is evaluated in double and stored back to float.

use super::QuantizedModel;
use crate::lognnet::PredictionOutcome;
use crate::{Error, Result};

#[inline]
fn fun_activ(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Runs reservoir, hidden and output layers on `S` feature values
/// (slot `S` of the input array is 0) and returns the output activations
/// widened to `f64`.
pub fn emulate_edge_inference(q: &QuantizedModel, features: &[f32]) -> Result<PredictionOutcome> {
    q.validate()?;
    let t = q.topology;
    if features.len() != t.s {
        return Err(Error::Arity {
            expected: t.s,
            got: features.len(),
        });
    }
    let mut y = vec![0.0f32; t.s + 1];
    y[..t.s].copy_from_slice(features);

    let scale = q.scale_factor as f32;
    let scale10 = (q.scale_factor * 10) as f32;
    let (k, d, l) = (q.chaos.k, q.chaos.d, q.chaos.l);
    let l_f = l as f32;

    // Reservoir
    let mut sh = vec![0.0f32; t.p + 1];
    let mut w: i64 = q.chaos.c;
    sh[0] = 1.0;
    for j in 1..=t.p {
        let mut acc = 0.0f32;
        for &yi in &y {
            w = ((d as i128 - k as i128 * w as i128) % l as i128) as i64;
            acc += (w as f32 / l_f) * yi;
        }
        let min = q.min_s[j - 1] as f32 / scale;
        let range = (q.max_s[j - 1] as i32 - q.min_s[j - 1] as i32) as f32 / scale;
        let mean = q.mean_s[j - 1] as f32 / scale10;
        let centred = if range == 0.0 {
            -0.5 - mean as f64
        } else {
            ((acc - min) / range) as f64 - 0.5 - mean as f64
        };
        sh[j] = centred as f32;
    }

    // Hidden layer
    let mut sh2 = vec![0.0f32; t.m + 1];
    sh2[0] = 1.0;
    for j in 1..=t.m {
        let mut acc = 0.0f32;
        for (i, &s) in sh.iter().enumerate() {
            acc += s * (q.w1[i * (t.m + 1) + j] as f32 / scale);
        }
        sh2[j] = fun_activ(acc);
    }

    // Output layer
    let mut out = vec![0.0f32; t.n + 1];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0f32;
        for (i, &h) in sh2.iter().enumerate() {
            acc += h * (q.w2[i * (t.n + 1) + j] as f32 / scale);
        }
        *o = fun_activ(acc);
    }
    Ok(PredictionOutcome::from_activations(
        out.into_iter().map(f64::from).collect(),
    ))
}
