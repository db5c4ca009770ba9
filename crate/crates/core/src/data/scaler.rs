use serde::{Deserialize, Serialize};

use super::{Dataset, RbvRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    MinMax,
    Robust,
}

impl std::str::FromStr for ScalerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(ScalerKind::MinMax),
            "robust" => Ok(ScalerKind::Robust),
            other => Err(Error::invalid(format!("unknown scaler `{other}`"))),
        }
    }
}

/// Per-feature scaling statistics. Features whose range (or IQR) is zero
/// map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalerParams {
    MinMax { min: Vec<f64>, max: Vec<f64> },
    Robust { median: Vec<f64>, iqr: Vec<f64> },
}

pub fn fit_scaler(d: &Dataset, kind: ScalerKind) -> Result<ScalerParams> {
    if d.is_empty() {
        return Err(Error::invalid("cannot fit a scaler on an empty dataset"));
    }
    let columns: Vec<Vec<f64>> = (0..d.feature_count()).map(|f| d.column(f)).collect();
    Ok(match kind {
        ScalerKind::MinMax => {
            let min = columns
                .iter()
                .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                .collect();
            let max = columns
                .iter()
                .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            ScalerParams::MinMax { min, max }
        }
        ScalerKind::Robust => {
            let mut median = Vec::with_capacity(columns.len());
            let mut iqr = Vec::with_capacity(columns.len());
            for mut c in columns {
                c.sort_by(f64::total_cmp);
                median.push(quantile_sorted(&c, 0.5));
                iqr.push(quantile_sorted(&c, 0.75) - quantile_sorted(&c, 0.25));
            }
            ScalerParams::Robust { median, iqr }
        }
    })
}

/// Quantile with linear interpolation between the closest ranks.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

impl ScalerParams {
    pub fn kind(&self) -> ScalerKind {
        match self {
            ScalerParams::MinMax { .. } => ScalerKind::MinMax,
            ScalerParams::Robust { .. } => ScalerKind::Robust,
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            ScalerParams::MinMax { min, .. } => min.len(),
            ScalerParams::Robust { median, .. } => median.len(),
        }
    }

    pub fn apply_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.feature_count() {
            return Err(Error::Arity {
                expected: self.feature_count(),
                got: values.len(),
            });
        }
        let (offset, span) = match self {
            ScalerParams::MinMax { min, max } => (min, max.iter().zip(min).map(|(a, b)| a - b).collect()),
            ScalerParams::Robust { median, iqr } => (median, iqr.clone()),
        };
        Ok(values
            .iter()
            .zip(offset)
            .zip(&span)
            .map(|((&x, &o), &s): ((&f64, &f64), &f64)| if s > 0.0 { (x - o) / s } else { 0.0 })
            .collect())
    }

    pub fn apply(&self, r: &RbvRecord) -> Result<RbvRecord> {
        Ok(RbvRecord::new(self.apply_values(&r.values)?, r.label))
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        d.map_records(|r| self.apply(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_column(values: &[f64]) -> Dataset {
        Dataset::from_rows(values.iter().map(|&v| vec![v]).collect(), vec![0; values.len()]).unwrap()
    }

    #[test]
    fn minmax_maps_to_unit_interval() {
        let p = fit_scaler(&one_column(&[0.0, 5.0, 10.0]), ScalerKind::MinMax).unwrap();
        let out: Vec<f64> = [0.0, 5.0, 10.0]
            .iter()
            .map(|&x| p.apply_values(&[x]).unwrap()[0])
            .collect();
        assert_eq!(out, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn robust_uses_linear_quartiles() {
        let p = fit_scaler(&one_column(&[0.0, 1.0, 2.0, 3.0, 4.0]), ScalerKind::Robust).unwrap();
        assert_eq!(
            p,
            ScalerParams::Robust {
                median: vec![2.0],
                iqr: vec![2.0]
            }
        );
        assert_eq!(p.apply_values(&[4.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn constant_column_scales_to_zero() {
        for kind in [ScalerKind::MinMax, ScalerKind::Robust] {
            let d = one_column(&[7.0, 7.0, 7.0]);
            let p = fit_scaler(&d, kind).unwrap();
            let out = p.apply_dataset(&d).unwrap();
            assert_eq!(out.column(0), vec![0.0; 3]);
        }
    }

    #[test]
    fn arity_mismatch() {
        let p = fit_scaler(&one_column(&[1.0, 2.0]), ScalerKind::MinMax).unwrap();
        assert!(matches!(
            p.apply_values(&[1.0, 2.0]),
            Err(Error::Arity { expected: 1, got: 2 })
        ));
    }

    proptest! {
        #[test]
        fn minmax_fit_data_stays_in_unit_interval(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let d = one_column(&values);
            let p = fit_scaler(&d, ScalerKind::MinMax).unwrap();
            for v in p.apply_dataset(&d).unwrap().column(0) {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }

        #[test]
        fn robust_of_median_is_zero(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let d = one_column(&values);
            let p = fit_scaler(&d, ScalerKind::Robust).unwrap();
            let ScalerParams::Robust { median, .. } = &p else { unreachable!() };
            prop_assert_eq!(p.apply_values(&[median[0]]).unwrap()[0], 0.0);
        }
    }
}
