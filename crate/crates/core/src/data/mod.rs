//! Records, datasets and everything that prepares them for training.

mod folds;
mod ingest;
mod scaler;
mod synthetic;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use folds::{stratified_folds, FoldAssignment};
pub use ingest::{csv_schema, load_csv, load_csv_with, write_csv, CsvOptions};
pub use scaler::{fit_scaler, ScalerKind, ScalerParams};
pub use synthetic::{generate_synthetic, AttractorSpec, PairSpec, Shape};

/// Feature names of the routine-blood-value schema, in column order.
pub const RBV_FEATURES: [&str; 51] = [
    "CRP",
    "D-Dimer",
    "Ferritin",
    "Fibrinogen",
    "INR",
    "PT",
    "PCT",
    "ESR",
    "Troponin",
    "aPTT",
    "LYM",
    "NEU",
    "PLT",
    "WBC",
    "BASO",
    "EOS",
    "HCT",
    "HGB",
    "MCH",
    "MCHC",
    "MCV",
    "MONO",
    "MPV",
    "PDW",
    "RBC",
    "RDW",
    "ALT",
    "AST",
    "Albumin",
    "ALP",
    "Amylase",
    "CK-MB",
    "D-Bil",
    "GGT",
    "Glucose",
    "HDL-C",
    "Calcium",
    "Chlorine",
    "Cholesterol",
    "Creatinine",
    "CK",
    "LDH",
    "LDL",
    "Potassium",
    "Sodium",
    "T-Bil",
    "TP",
    "Triglyceride",
    "eGFR",
    "Urea",
    "UA",
];

pub const RBV_SCHEMA_ID: &str = "rbv51";

/// The 51-name schema as owned strings.
pub fn rbv_schema() -> Vec<String> {
    RBV_FEATURES.iter().map(|s| s.to_string()).collect()
}

/// One patient: feature values plus an optional binary label
/// (1 = positive, 0 = negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbvRecord {
    pub values: Vec<f64>,
    pub label: Option<u8>,
}

impl RbvRecord {
    pub fn new(values: Vec<f64>, label: Option<u8>) -> Self {
        Self { values, label }
    }

    pub fn unlabeled(values: Vec<f64>) -> Self {
        Self { values, label: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    records: Vec<RbvRecord>,
    schema_id: String,
}

impl Dataset {
    /// Builds a dataset, checking that names are unique, every record has
    /// the schema arity, values are finite and labels are binary.
    pub fn new(feature_names: Vec<String>, records: Vec<RbvRecord>, schema_id: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name `{name}`")));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.values.len() != feature_names.len() {
                return Err(Error::Arity {
                    expected: feature_names.len(),
                    got: r.values.len(),
                });
            }
            if let Some(j) = r.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("record {i} feature {j} is not finite")));
            }
            if matches!(r.label, Some(l) if l > 1) {
                return Err(Error::invalid(format!("record {i} label is not binary")));
            }
        }
        Ok(Self {
            feature_names,
            records,
            schema_id: schema_id.into(),
        })
    }

    /// Convenience constructor with generated names `f0..fn`.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid("rows and labels differ in length"));
        }
        let width = rows.first().map_or(0, Vec::len);
        let names = (0..width).map(|i| format!("f{i}")).collect();
        let records = rows
            .into_iter()
            .zip(labels)
            .map(|(v, l)| RbvRecord::new(v, Some(l)))
            .collect();
        Self::new(names, records, "generic")
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn records(&self) -> &[RbvRecord] {
        &self.records
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.values[feature]).collect()
    }

    /// All labels, failing on the first unlabeled record.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.records
            .iter()
            .enumerate()
            .map(|(index, r)| r.label.ok_or(Error::Unlabeled { index }))
            .collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.records.iter().all(|r| r.label.is_some())
    }

    /// Number of records per class `[negatives, positives]`; unlabeled
    /// records are not counted.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for r in &self.records {
            if let Some(l) = r.label {
                counts[l as usize] += 1;
            }
        }
        counts
    }

    /// Records at the given positions, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            schema_id: self.schema_id.clone(),
        }
    }

    /// Restricts every record to the given feature columns.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = features.iter().find(|&&f| f >= self.feature_count()) {
            return Err(Error::invalid(format!(
                "feature index {bad} out of range for {} features",
                self.feature_count()
            )));
        }
        let names = features.iter().map(|&f| self.feature_names[f].clone()).collect();
        let records = self
            .records
            .iter()
            .map(|r| RbvRecord {
                values: features.iter().map(|&f| r.values[f]).collect(),
                label: r.label,
            })
            .collect();
        Dataset::new(names, records, format!("{}/subset", self.schema_id))
    }

    /// Records carrying the given label.
    pub fn filter_class(&self, label: u8) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            records: self
                .records
                .iter()
                .filter(|r| r.label == Some(label))
                .cloned()
                .collect(),
            schema_id: self.schema_id.clone(),
        }
    }

    pub fn map_records<F>(&self, mut f: F) -> Result<Dataset>
    where
        F: FnMut(&RbvRecord) -> Result<RbvRecord>,
    {
        let records = self.records.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Dataset::new(self.feature_names.clone(), records, self.schema_id.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names() {
        let err = Dataset::new(vec!["a".into(), "a".into()], vec![], "x").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn rejects_arity_mismatch() {
        let err = Dataset::new(vec!["a".into(), "b".into()], vec![RbvRecord::unlabeled(vec![1.0])], "x").unwrap_err();
        assert!(matches!(err, Error::Arity { expected: 2, got: 1 }));
    }

    #[test]
    fn select_features_keeps_labels() {
        let d = Dataset::from_rows(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], vec![0, 1]).unwrap();
        let s = d.select_features(&[2, 0]).unwrap();
        assert_eq!(s.feature_names(), &["f2".to_string(), "f0".to_string()]);
        assert_eq!(s.records()[1].values, vec![6.0, 4.0]);
        assert_eq!(s.records()[1].label, Some(1));
        assert!(d.select_features(&[3]).is_err());
    }

    #[test]
    fn schema_has_51_unique_names() {
        let set: HashSet<_> = RBV_FEATURES.iter().collect();
        assert_eq!(set.len(), 51);
        assert_eq!(RBV_FEATURES[18], "MCH");
        assert_eq!(RBV_FEATURES[42], "LDL");
    }
}
