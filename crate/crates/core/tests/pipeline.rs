//! Cross-module flows through the public API.

use rbv_core::data::{generate_synthetic, load_csv, rbv_schema, stratified_folds, write_csv, AttractorSpec};
use rbv_core::hgb::{export_hgb, import_hgb, train_hgb, HgbParams, HgbTrainer};
use rbv_core::lognnet::LogNNetTrainer;
use rbv_core::quantize::{emulate_edge_inference, export_model, import_model, quantize};
use rbv_core::validate::{accuracy, cross_validate};

#[test]
fn csv_round_trip_keeps_dataset() {
    let d = generate_synthetic(&AttractorSpec::cruciform(51), 40, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_csv(&d, &path).unwrap();
    let back = load_csv(&path, &rbv_schema()).unwrap();
    assert_eq!(back.len(), d.len());
    assert_eq!(back.labels().unwrap(), d.labels().unwrap());
    for (a, b) in back.records().iter().zip(d.records()) {
        assert_eq!(a.values, b.values);
    }
}

#[test]
fn hgb_file_preserves_predictions() {
    let d = generate_synthetic(&AttractorSpec::cruciform(51), 80, 4).unwrap();
    let params = HgbParams {
        trees: 25,
        ..Default::default()
    };
    let m = train_hgb(&d, &params).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.hgb");
    export_hgb(&m, &path).unwrap();
    let back = import_hgb(&path).unwrap();
    for r in d.records() {
        assert_eq!(m.predict(&r.values).unwrap(), back.predict(&r.values).unwrap());
    }
}

#[test]
fn edge_library_agrees_with_float_model() {
    let d = generate_synthetic(&AttractorSpec::separable(51), 100, 5).unwrap();
    let c = LogNNetTrainer::default().train(&d, 5).unwrap();
    let q = quantize(&c.model, 1000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.lib");
    export_model(&q, &path).unwrap();
    let q = import_model(&path).unwrap();
    let mut agree = 0;
    for r in d.records() {
        let float = c.predict(&r.values).unwrap();
        let x: Vec<f32> = c.prepare(&r.values).unwrap().iter().map(|&v| v as f32).collect();
        let edge = emulate_edge_inference(&q, &x).unwrap();
        agree += usize::from(float.predicted_class == edge.predicted_class);
    }
    assert!(agree as f64 / d.len() as f64 >= 0.99, "{agree}/{}", d.len());
}

#[test]
fn cross_validation_is_reproducible() {
    let d = generate_synthetic(&AttractorSpec::cruciform(6), 60, 9).unwrap();
    let folds = stratified_folds(&d, 5, 9).unwrap();
    let a = cross_validate(&HgbTrainer::default(), &d, &folds, 9).unwrap();
    let b = cross_validate(&HgbTrainer::default(), &d, &folds, 9).unwrap();
    assert_eq!(a.fold_accuracies, b.fold_accuracies);
    assert!(a.mean_accuracy > 0.9);
    let lognnet = LogNNetTrainer::default().train(&d, 9).unwrap();
    assert!(accuracy(&lognnet, &d).unwrap() > 0.5);
}
