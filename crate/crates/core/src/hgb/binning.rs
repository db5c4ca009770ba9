use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// Per-feature ascending thresholds. The bin of `x` is the number of
/// thresholds strictly below `x`, so bin `b` holds `t[b-1] < x <= t[b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub max_bins: usize,
    pub thresholds: Vec<Vec<f64>>,
}

pub const MAX_SUPPORTED_BINS: usize = u16::MAX as usize + 1;

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

fn feature_thresholds(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    // midpoint-interpolated percentiles at b / max_bins, rank scale 0..n-1
    let last = values.len() - 1;
    let mut out: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for b in 1..max_bins {
        let lo = b * last / max_bins;
        let hi = (b * last).div_ceil(max_bins);
        let t = midpoint(values[lo], values[hi]);
        if out.last().is_none_or(|&prev| t > prev) {
            out.push(t);
        }
    }
    out
}

/// Quantile thresholds per feature; features with at most `max_bins`
/// distinct values get one threshold between each adjacent pair.
pub fn fit_bins(d: &Dataset, max_bins: usize) -> Result<BinMapper> {
    if !(2..=MAX_SUPPORTED_BINS).contains(&max_bins) {
        return Err(Error::invalid(format!(
            "max_bins = {max_bins}, must be in 2..={MAX_SUPPORTED_BINS}"
        )));
    }
    if d.is_empty() {
        return Err(Error::invalid("cannot bin an empty dataset"));
    }
    let thresholds = (0..d.feature_count())
        .map(|f| feature_thresholds(d.column(f), max_bins))
        .collect();
    Ok(BinMapper { max_bins, thresholds })
}

impl BinMapper {
    pub fn feature_count(&self) -> usize {
        self.thresholds.len()
    }

    pub fn bin_count(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    #[inline]
    pub fn bin(&self, feature: usize, x: f64) -> usize {
        self.thresholds[feature].partition_point(|&t| t < x)
    }

    /// Column-major bin indices for every record.
    pub(crate) fn bin_columns(&self, d: &Dataset) -> Vec<Vec<u16>> {
        (0..self.feature_count())
            .map(|f| d.records().iter().map(|r| self.bin(f, r.values[f]) as u16).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Dataset {
        Dataset::from_rows(values.iter().map(|&v| vec![v]).collect(), vec![0; values.len()]).unwrap()
    }

    #[test]
    fn two_distinct_values() {
        let m = fit_bins(&column(&[1.0, 1.0, 2.0, 2.0]), 255).unwrap();
        assert_eq!(m.thresholds[0].len(), 1);
        let t = m.thresholds[0][0];
        assert!(t > 1.0 && t < 2.0);
        let bins: Vec<usize> = [1.0, 1.0, 2.0, 2.0].iter().map(|&x| m.bin(0, x)).collect();
        assert_eq!(bins, vec![0, 0, 1, 1]);
    }

    #[test]
    fn constant_feature_has_one_bin() {
        let m = fit_bins(&column(&[3.0; 5]), 255).unwrap();
        assert!(m.thresholds[0].is_empty());
        assert_eq!(m.bin(0, 3.0), 0);
        assert_eq!(m.bin(0, 100.0), 0);
    }

    #[test]
    fn max_bins_below_two_rejected() {
        assert!(fit_bins(&column(&[1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn quartile_thresholds() {
        // scrambled 0..999 so sorting matters
        let values: Vec<f64> = (0..1000).map(|i| ((i * 379) % 1000) as f64).collect();
        let m = fit_bins(&column(&values), 4).unwrap();
        let t = &m.thresholds[0];
        assert_eq!(t.len(), 3);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for (q, &thr) in [0.25, 0.5, 0.75].iter().zip(t) {
            let rank = sorted.iter().filter(|&&v| v < thr).count() as f64;
            assert!((rank - q * 1000.0).abs() <= 1.0, "q {q}: rank {rank}");
        }
    }

    #[test]
    fn heavy_ties_keep_thresholds_increasing() {
        let mut values = vec![0.0; 900];
        values.extend((0..100).map(|i| i as f64 + 1.0));
        let m = fit_bins(&column(&values), 8).unwrap();
        let t = &m.thresholds[0];
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.len() <= 7);
        assert_eq!(m.bin(0, 0.0), 0);
    }
}
