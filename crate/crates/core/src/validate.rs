//! Trainer abstraction and k-fold evaluation.

use crate::data::{Dataset, FoldAssignment};
use crate::{Error, Result};

pub trait Classifier {
    /// Predicted class for one feature vector.
    fn predict_class(&self, values: &[f64]) -> Result<usize>;
}

/// Builds a classifier from a training set. `seed` drives every random
/// choice so a fixed seed gives a fixed model.
pub trait Trainer: Sync {
    type Model: Classifier;

    fn fit(&self, d: &Dataset, seed: u64) -> Result<Self::Model>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Fraction of labeled records classified correctly.
pub fn accuracy<C: Classifier + ?Sized>(model: &C, d: &Dataset) -> Result<f64> {
    let labels = d.labels()?;
    if labels.is_empty() {
        return Err(Error::invalid("cannot score an empty dataset"));
    }
    let mut correct = 0usize;
    for (r, &l) in d.records().iter().zip(&labels) {
        if model.predict_class(&r.values)? == l as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}

/// Trains on each fold's complement and scores on the fold.
pub fn cross_validate<T: Trainer + ?Sized>(
    trainer: &T,
    d: &Dataset,
    folds: &FoldAssignment,
    seed: u64,
) -> Result<CvReport> {
    if folds.len() != d.len() {
        return Err(Error::invalid(format!(
            "fold assignment covers {} records, dataset has {}",
            folds.len(),
            d.len()
        )));
    }
    let mut fold_accuracies = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let train = d.subset(&folds.train_indices(fold));
        let test = d.subset(&folds.test_indices(fold));
        let model = trainer.fit(&train, derive_seed(seed, &[fold as u64]))?;
        fold_accuracies.push(accuracy(&model, &test)?);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds.k as f64;
    Ok(CvReport {
        fold_accuracies,
        mean_accuracy,
    })
}

/// Mixes a base seed with a salt (fold index, feature tuple, …) via
/// SplitMix64 so derived seeds are independent of evaluation order.
pub fn derive_seed(base: u64, salt: &[u64]) -> u64 {
    let mut state = base;
    for &s in salt {
        state = splitmix64(state ^ splitmix64(s.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stratified_folds;

    struct Constant(usize);

    impl Classifier for Constant {
        fn predict_class(&self, _: &[f64]) -> Result<usize> {
            Ok(self.0)
        }
    }

    struct ConstantTrainer(usize);

    impl Trainer for ConstantTrainer {
        type Model = Constant;
        fn fit(&self, _: &Dataset, _: u64) -> Result<Constant> {
            Ok(Constant(self.0))
        }
    }

    // Predicts the label stored in feature 0.
    struct Oracle;

    impl Classifier for Oracle {
        fn predict_class(&self, v: &[f64]) -> Result<usize> {
            Ok(v[0] as usize)
        }
    }

    struct OracleTrainer;

    impl Trainer for OracleTrainer {
        type Model = Oracle;
        fn fit(&self, _: &Dataset, _: u64) -> Result<Oracle> {
            Ok(Oracle)
        }
    }

    fn balanced(n: usize) -> Dataset {
        let labels: Vec<u8> = (0..2 * n).map(|i| (i % 2) as u8).collect();
        let rows = labels.iter().map(|&l| vec![l as f64]).collect();
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn constant_classifier_scores_half() {
        let d = balanced(10);
        let folds = stratified_folds(&d, 5, 1).unwrap();
        let report = cross_validate(&ConstantTrainer(1), &d, &folds, 0).unwrap();
        assert_eq!(report.mean_accuracy, 0.5);
    }

    #[test]
    fn perfect_classifier_scores_one_per_fold() {
        let d = balanced(5);
        let folds = stratified_folds(&d, 5, 1).unwrap();
        let report = cross_validate(&OracleTrainer, &d, &folds, 0).unwrap();
        assert_eq!(report.fold_accuracies, vec![1.0; 5]);
        assert_eq!(folds.fold_sizes(), vec![2; 5]);
    }

    #[test]
    fn mismatched_folds_are_rejected() {
        let d = balanced(5);
        let folds = stratified_folds(&balanced(6), 2, 1).unwrap();
        assert!(cross_validate(&OracleTrainer, &d, &folds, 0).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_salt() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
    }
}
