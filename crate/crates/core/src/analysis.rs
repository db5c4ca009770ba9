//! Feature analysis: Pearson correlation, single-feature threshold cuts and
//! exhaustive small-subset search.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, FoldAssignment};
use crate::validate::{cross_validate, derive_seed, Trainer};
use crate::{Error, Result};

pub const DIAGNOSIS_LABEL: &str = "diagnosis";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationScope {
    All,
    Positive,
    Negative,
}

impl FromStr for CorrelationScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "positive" => Ok(Self::Positive),
            "negative" => Ok(Self::Negative),
            other => Err(Error::invalid(format!(
                "unknown scope `{other}`, expected all, positive or negative"
            ))),
        }
    }
}

/// Symmetric Pearson matrix. `None` marks an undefined entry, which happens
/// when either column is constant within the scope.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.r[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Header row of labels, then one row per label; undefined entries are
    /// left empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.r) {
            let mut out = vec![label.clone()];
            out.extend(row.iter().map(|v| v.map_or(String::new(), |x| x.to_string())));
            w.write_record(&out)?;
        }
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(format!("csv buffer: {e}")))
}

/// Pearson coefficient of two equal-length columns, `None` if either is
/// constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation over every feature, plus the diagnosis label as a final
/// column when the records in scope are labeled.
pub fn pearson_matrix(d: &Dataset, scope: CorrelationScope) -> Result<CorrelationMatrix> {
    let scoped = match scope {
        CorrelationScope::All => d.clone(),
        CorrelationScope::Positive => d.filter_class(1),
        CorrelationScope::Negative => d.filter_class(0),
    };
    if scoped.len() < 2 {
        return Err(Error::invalid(format!(
            "correlation needs at least 2 records in scope, found {}",
            scoped.len()
        )));
    }
    let mut labels: Vec<String> = scoped.feature_names().to_vec();
    let mut columns: Vec<Vec<f64>> = (0..scoped.feature_count()).map(|f| scoped.column(f)).collect();
    if scoped.is_labeled() {
        labels.push(DIAGNOSIS_LABEL.to_string());
        columns.push(scoped.labels()?.iter().map(|&l| l as f64).collect());
    }
    let n = columns.len();
    let mut r = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                pearson(&columns[i], &columns[i]).map(|_| 1.0)
            } else {
                pearson(&columns[i], &columns[j])
            };
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(CorrelationMatrix { labels, r })
}

/// Which side of the cut is predicted positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `x > threshold` predicts 1.
    Above,
    /// `x <= threshold` predicts 1.
    Below,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Above => "above",
            Direction::Below => "below",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCut {
    pub threshold: f64,
    pub direction: Direction,
    pub accuracy: f64,
}

impl ThresholdCut {
    pub fn predict(&self, x: f64) -> u8 {
        let above = x > self.threshold;
        u8::from(match self.direction {
            Direction::Above => above,
            Direction::Below => !above,
        })
    }
}

/// Best in-sample single-feature cut over midpoints of adjacent distinct
/// values, both directions. Ties go to the lower threshold, then `Above`.
/// When predicting one class for everything beats every midpoint, the cut
/// is at negative infinity.
pub fn threshold_classify(d: &Dataset, feature: usize) -> Result<ThresholdCut> {
    if feature >= d.feature_count() {
        return Err(Error::invalid(format!(
            "feature index {feature} out of range for {} features",
            d.feature_count()
        )));
    }
    let labels = d.labels()?;
    if labels.is_empty() {
        return Err(Error::invalid("cannot threshold an empty dataset"));
    }
    let mut pairs: Vec<(f64, u8)> = d.column(feature).into_iter().zip(labels).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len() as f64;
    let total_pos = pairs.iter().filter(|p| p.1 == 1).count();
    let total_neg = pairs.len() - total_pos;

    let mut best: Option<ThresholdCut> = None;
    let (mut pos_le, mut neg_le) = (0usize, 0usize);
    for i in 0..pairs.len() {
        if pairs[i].1 == 1 {
            pos_le += 1;
        } else {
            neg_le += 1;
        }
        let Some(next) = pairs.get(i + 1) else { break };
        if next.0 == pairs[i].0 {
            continue;
        }
        let threshold = pairs[i].0 + (next.0 - pairs[i].0) / 2.0;
        let above = (neg_le + total_pos - pos_le) as f64 / n;
        let below = (pos_le + total_neg - neg_le) as f64 / n;
        for (direction, accuracy) in [(Direction::Above, above), (Direction::Below, below)] {
            if best.is_none_or(|b| accuracy > b.accuracy) {
                best = Some(ThresholdCut {
                    threshold,
                    direction,
                    accuracy,
                });
            }
        }
    }
    let Some(best) = best else {
        return Err(Error::ConstantFeature { feature });
    };
    let prior = total_pos.max(total_neg) as f64 / n;
    if prior > best.accuracy {
        return Ok(ThresholdCut {
            threshold: f64::NEG_INFINITY,
            direction: if total_pos >= total_neg {
                Direction::Above
            } else {
                Direction::Below
            },
            accuracy: prior,
        });
    }
    Ok(best)
}

/// One row of the per-feature diagnostic report.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureReport {
    pub feature: String,
    pub r_diagnosis: Option<f64>,
    pub cut: Option<ThresholdCut>,
}

/// Correlation with the label and the best threshold cut for every
/// feature. Constant features get no cut.
pub fn feature_report(d: &Dataset) -> Result<Vec<FeatureReport>> {
    let m = pearson_matrix(d, CorrelationScope::All)?;
    let diag = m
        .index_of(DIAGNOSIS_LABEL)
        .ok_or_else(|| Error::invalid("feature report needs labeled data"))?;
    (0..d.feature_count())
        .map(|f| {
            let cut = match threshold_classify(d, f) {
                Ok(c) => Some(c),
                Err(Error::ConstantFeature { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(FeatureReport {
                feature: d.feature_names()[f].clone(),
                r_diagnosis: m.get(f, diag),
                cut,
            })
        })
        .collect()
}

pub fn feature_report_csv(rows: &[FeatureReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "r_diagnosis", "threshold", "direction", "accuracy"])?;
    for row in rows {
        let r = row.r_diagnosis.map_or(String::new(), |v| v.to_string());
        let (t, dir, acc) = match row.cut {
            Some(c) => (c.threshold.to_string(), c.direction.to_string(), c.accuracy.to_string()),
            None => Default::default(),
        };
        w.write_record([row.feature.as_str(), &r, &t, &dir, &acc])?;
    }
    csv_string(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetResult {
    /// Strictly increasing feature indices.
    pub features: Vec<usize>,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Base seed; each tuple trains with a seed derived from it and the
    /// tuple itself.
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Evaluate tuples in a seeded random order instead of lexicographic.
    pub shuffle: Option<u64>,
}

/// Every strictly increasing index tuple of `size` over `feature_count`
/// features, in lexicographic order.
pub fn subset_tuples(feature_count: usize, size: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for f in start..n {
            cur.push(f);
            extend(f + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, feature_count, size, &mut Vec::with_capacity(size), &mut out);
    out
}

pub fn subset_search<T: Trainer>(
    d: &Dataset,
    size: usize,
    trainer: &T,
    folds: &FoldAssignment,
    top_k: usize,
    opts: &SearchOptions,
) -> Result<Vec<SubsetResult>> {
    subset_search_with_progress(d, size, trainer, folds, top_k, opts, &|_, _| {})
}

/// Cross-validates every feature tuple of `size` and returns the `top_k`
/// best by mean accuracy, ties in lexicographic tuple order. `progress`
/// receives `(done, total)` after each tuple, from any worker thread.
pub fn subset_search_with_progress<T: Trainer>(
    d: &Dataset,
    size: usize,
    trainer: &T,
    folds: &FoldAssignment,
    top_k: usize,
    opts: &SearchOptions,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<SubsetResult>> {
    if !(1..=3).contains(&size) {
        return Err(Error::invalid(format!("subset size {size} outside 1..=3")));
    }
    if top_k == 0 {
        return Err(Error::invalid("top_k must be positive"));
    }
    if size > d.feature_count() {
        return Err(Error::invalid(format!(
            "subset size {size} exceeds {} features",
            d.feature_count()
        )));
    }
    let mut tuples = subset_tuples(d.feature_count(), size);
    if let Some(order_seed) = opts.shuffle {
        tuples.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));
    }
    let total = tuples.len();
    let done = AtomicUsize::new(0);
    let evaluate = |tuple: &Vec<usize>| -> Result<SubsetResult> {
        let restricted = d.select_features(tuple)?;
        let salt: Vec<u64> = tuple.iter().map(|&f| f as u64).collect();
        let report = cross_validate(trainer, &restricted, folds, derive_seed(opts.seed, &salt))?;
        progress(done.fetch_add(1, AtomicOrdering::Relaxed) + 1, total);
        Ok(SubsetResult {
            features: tuple.clone(),
            mean_accuracy: report.mean_accuracy,
            fold_accuracies: report.fold_accuracies,
        })
    };
    let run = || tuples.par_iter().map(evaluate).collect::<Result<Vec<_>>>();
    let mut results = if opts.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run)?
    };
    results.sort_by(rank_order);
    results.truncate(top_k);
    Ok(results)
}

fn rank_order(a: &SubsetResult, b: &SubsetResult) -> Ordering {
    b.mean_accuracy
        .total_cmp(&a.mean_accuracy)
        .then_with(|| a.features.cmp(&b.features))
}

/// Columns `features, mean_accuracy, fold_accuracies`; feature names are
/// joined with `+` and fold accuracies with `;`.
pub fn subset_csv(results: &[SubsetResult], names: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["features", "mean_accuracy", "fold_accuracies"])?;
    for r in results {
        let features: Vec<&str> = r.features.iter().map(|&f| names[f].as_str()).collect();
        let folds: Vec<String> = r.fold_accuracies.iter().map(f64::to_string).collect();
        w.write_record([features.join("+"), r.mean_accuracy.to_string(), folds.join(";")])?;
    }
    csv_string(w)
}

/// Co-occurrence of features among the leading pair results.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairGraph {
    /// feature → partner → number of top pairs they share.
    pub partners: BTreeMap<usize, BTreeMap<usize, usize>>,
    /// `(feature, degree)` by degree descending, then feature ascending.
    pub hubs: Vec<(usize, usize)>,
}

impl PairGraph {
    pub fn degree(&self, feature: usize) -> usize {
        self.partners.get(&feature).map_or(0, |p| p.values().sum())
    }
}

pub fn top_pairs_graph(results: &[SubsetResult], n: usize) -> Result<PairGraph> {
    let mut g = PairGraph::default();
    for r in results.iter().take(n) {
        let &[a, b] = r.features.as_slice() else {
            return Err(Error::invalid(format!(
                "pair graph needs size-2 tuples, found {:?}",
                r.features
            )));
        };
        *g.partners.entry(a).or_default().entry(b).or_default() += 1;
        *g.partners.entry(b).or_default().entry(a).or_default() += 1;
    }
    let mut hubs: Vec<(usize, usize)> = g.partners.keys().map(|&f| (f, g.degree(f))).collect();
    hubs.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    g.hubs = hubs;
    Ok(g)
}
