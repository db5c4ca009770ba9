//! Best-first growth of one regression tree on binned gradients.

use super::tree::{Node, Tree};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct BinStat {
    pub g: f64,
    pub h: f64,
    pub count: usize,
}

/// Gradient/hessian sums per (feature, bin), stored flat.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Histogram {
    pub stats: Vec<BinStat>,
}

pub(crate) struct GrowContext<'a> {
    pub bins: &'a [Vec<u16>],
    /// Offset of each feature's bins in a flat histogram; last entry is the total.
    pub offsets: Vec<usize>,
    pub thresholds: &'a [Vec<f64>],
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub max_leaves: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitInfo {
    pub feature: usize,
    pub bin: usize,
    pub gain: f64,
}

struct Candidate {
    node: usize,
    indices: Vec<usize>,
    hist: Histogram,
    g: f64,
    h: f64,
    depth: usize,
    split: Option<SplitInfo>,
}

pub(crate) fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, l2: f64) -> f64 {
    let g = gl + gr;
    let h = hl + hr;
    0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2) - g * g / (h + l2))
}

impl<'a> GrowContext<'a> {
    pub fn new(bins: &'a [Vec<u16>], thresholds: &'a [Vec<f64>], grad: &'a [f64], hess: &'a [f64]) -> Self {
        let mut offsets = Vec::with_capacity(thresholds.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for t in thresholds {
            acc += t.len() + 1;
            offsets.push(acc);
        }
        Self {
            bins,
            offsets,
            thresholds,
            grad,
            hess,
            max_leaves: 31,
            max_depth: None,
            min_samples_leaf: 20,
            l2: 1.0,
        }
    }

    pub fn build_histogram(&self, indices: &[usize]) -> Histogram {
        let mut stats = vec![BinStat::default(); *self.offsets.last().unwrap()];
        for (f, column) in self.bins.iter().enumerate() {
            let base = self.offsets[f];
            for &i in indices {
                let s = &mut stats[base + column[i] as usize];
                s.g += self.grad[i];
                s.h += self.hess[i];
                s.count += 1;
            }
        }
        Histogram { stats }
    }

    /// Best split by exact gain over bin boundaries. Ties keep the lowest
    /// feature, then the lowest bin; a split needs positive gain.
    pub fn best_split(&self, hist: &Histogram, g: f64, h: f64, count: usize) -> Option<SplitInfo> {
        let mut best: Option<SplitInfo> = None;
        if count < 2 * self.min_samples_leaf {
            return None;
        }
        for f in 0..self.thresholds.len() {
            let stats = &hist.stats[self.offsets[f]..self.offsets[f + 1]];
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for (b, s) in stats.iter().enumerate().take(stats.len() - 1) {
                gl += s.g;
                hl += s.h;
                cl += s.count;
                if cl < self.min_samples_leaf {
                    continue;
                }
                if count - cl < self.min_samples_leaf {
                    break;
                }
                let gain = split_gain(gl, hl, g - gl, h - hl, self.l2);
                if gain > best.map_or(0.0, |s| s.gain) {
                    best = Some(SplitInfo {
                        feature: f,
                        bin: b,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn candidate(&self, node: usize, indices: Vec<usize>, hist: Histogram, depth: usize) -> Candidate {
        let (g, h) = indices
            .iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        let can_split = self.max_depth.is_none_or(|d| depth < d);
        let split = if can_split {
            self.best_split(&hist, g, h, indices.len())
        } else {
            None
        };
        Candidate {
            node,
            indices,
            hist,
            g,
            h,
            depth,
            split,
        }
    }

    /// Grows one tree over `indices`. Returns the tree and, per sample, the
    /// leaf value it landed in (unshrunk), for updating training scores.
    pub fn grow(&self, indices: Vec<usize>) -> (Tree, Vec<(usize, f64)>) {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let hist = self.build_histogram(&indices);
        let mut open = vec![self.candidate(0, indices, hist, 0)];
        let mut leaves = 1;

        while leaves < self.max_leaves {
            // highest gain; earliest-created leaf on ties
            let mut pick: Option<usize> = None;
            for (k, c) in open.iter().enumerate() {
                if let Some(s) = c.split {
                    if pick.is_none_or(|p| s.gain > open[p].split.unwrap().gain) {
                        pick = Some(k);
                    }
                }
            }
            let Some(k) = pick else { break };
            let parent = open.remove(k);
            let split = parent.split.unwrap();
            let column = &self.bins[split.feature];
            let (left, right): (Vec<usize>, Vec<usize>) =
                parent.indices.iter().partition(|&&i| (column[i] as usize) <= split.bin);

            let (small, large_is_left) = if left.len() <= right.len() {
                (&left, false)
            } else {
                (&right, true)
            };
            let small_hist = self.build_histogram(small);
            let large_hist = subtract(&parent.hist, &small_hist);
            let (left_hist, right_hist) = if large_is_left {
                (large_hist, small_hist)
            } else {
                (small_hist, large_hist)
            };

            let left_id = nodes.len();
            let right_id = left_id + 1;
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[parent.node] = Node::Split {
                feature: split.feature,
                bin: split.bin,
                threshold: self.thresholds[split.feature][split.bin],
                left: left_id,
                right: right_id,
            };
            let depth = parent.depth + 1;
            open.push(self.candidate(left_id, left, left_hist, depth));
            open.push(self.candidate(right_id, right, right_hist, depth));
            leaves += 1;
        }

        let mut assignments = Vec::new();
        for c in &open {
            let value = -c.g / (c.h + self.l2);
            nodes[c.node] = Node::Leaf { value };
            assignments.extend(c.indices.iter().map(|&i| (i, value)));
        }
        (Tree::from_nodes(nodes), assignments)
    }
}

pub(crate) fn subtract(parent: &Histogram, child: &Histogram) -> Histogram {
    Histogram {
        stats: parent
            .stats
            .iter()
            .zip(&child.stats)
            .map(|(p, c)| BinStat {
                g: p.g - c.g,
                h: p.h - c.h,
                count: p.count - c.count,
            })
            .collect(),
    }
}
