//! The `HGB1` model file: UTF-8 text, LF line endings, floats in shortest
//! round-trip form.
//!
//! ```text
//! HGB1
//! params features=F trees=T learning_rate=.. base_score=.. max_leaves=.. min_samples_leaf=.. l2=.. max_bins=.. max_depth=<n|none> seed=..
//! bins <feature> <count> <t1> <t2> …
//! tree <index> <node count>
//! split <feature> <bin> <threshold>
//! leaf <value>
//! ```
//!
//! Tree nodes are listed in preorder; a split's left subtree follows it
//! directly and its right subtree follows the left one.

use std::fmt::Write as _;
use std::path::Path;

use super::{BinMapper, HgbModel, HgbParams, Node, Tree};
use crate::{Error, ModelFileError, Result};

pub const HGB_MAGIC: &str = "HGB1";
const MAGIC_FAMILY: &str = "HGB";

pub fn render_hgb(m: &HgbModel) -> String {
    let p = &m.params;
    let mut out = String::new();
    out.push_str(HGB_MAGIC);
    out.push('\n');
    let depth = p.max_depth.map_or("none".to_string(), |d| d.to_string());
    let _ = writeln!(
        out,
        "params features={} trees={} learning_rate={:?} base_score={:?} max_leaves={} min_samples_leaf={} l2={:?} max_bins={} max_depth={} seed={}",
        m.feature_count(),
        m.trees.len(),
        p.learning_rate,
        m.base_score,
        p.max_leaves,
        p.min_samples_leaf,
        p.l2,
        p.max_bins,
        depth,
        p.seed
    );
    for (f, t) in m.bins.thresholds.iter().enumerate() {
        let _ = write!(out, "bins {f} {}", t.len());
        for v in t {
            let _ = write!(out, " {v:?}");
        }
        out.push('\n');
    }
    for (i, tree) in m.trees.iter().enumerate() {
        let _ = writeln!(out, "tree {i} {}", tree.nodes().len());
        for node in tree.nodes() {
            match node {
                Node::Split {
                    feature,
                    bin,
                    threshold,
                    ..
                } => {
                    let _ = writeln!(out, "split {feature} {bin} {threshold:?}");
                }
                Node::Leaf { value } => {
                    let _ = writeln!(out, "leaf {value:?}");
                }
            }
        }
    }
    out
}

pub fn export_hgb(m: &HgbModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_hgb(m)).map_err(|e| Error::io(path, e))
}

pub fn import_hgb(path: impl AsRef<Path>) -> Result<HgbModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_hgb(&text)?)
}

fn syntax(line: usize, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Syntax {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(line: usize, token: &str) -> Result<T, ModelFileError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("`{token}` is not a valid number")))
}

fn finite(line: usize, token: &str) -> Result<f64, ModelFileError> {
    let v: f64 = number(line, token)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(syntax(line, format!("`{token}` is not finite")))
    }
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Next line split on single spaces, with its 1-based number.
    fn fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ModelFileError> {
        let line = self.pos + 1;
        let text = self
            .lines
            .get(self.pos)
            .copied()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| syntax(line, format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok((line, text.split(' ').collect()))
    }

    fn keyword(&mut self, keyword: &str, count: usize) -> Result<(usize, Vec<&'a str>), ModelFileError> {
        let (line, fields) = self.fields(keyword)?;
        if fields[0] != keyword {
            return Err(syntax(line, format!("expected `{keyword}`, found `{}`", fields[0])));
        }
        if fields.len() - 1 < count {
            return Err(ModelFileError::Count {
                line,
                section: keyword.to_string(),
                what: "fields",
                expected: count,
                found: fields.len() - 1,
            });
        }
        Ok((line, fields))
    }
}

fn parse_params(line: usize, fields: &[&str]) -> Result<(usize, usize, f64, HgbParams), ModelFileError> {
    const KEYS: [&str; 10] = [
        "features",
        "trees",
        "learning_rate",
        "base_score",
        "max_leaves",
        "min_samples_leaf",
        "l2",
        "max_bins",
        "max_depth",
        "seed",
    ];
    if fields.len() != KEYS.len() + 1 {
        return Err(ModelFileError::Count {
            line,
            section: "params".to_string(),
            what: "fields",
            expected: KEYS.len(),
            found: fields.len() - 1,
        });
    }
    let mut values = Vec::with_capacity(KEYS.len());
    for (key, field) in KEYS.iter().zip(&fields[1..]) {
        let value = field
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| syntax(line, format!("expected `{key}=…`, found `{field}`")))?;
        values.push(value);
    }
    let max_depth = match values[8] {
        "none" => None,
        v => Some(number(line, v)?),
    };
    let params = HgbParams {
        trees: number(line, values[1])?,
        learning_rate: finite(line, values[2])?,
        max_leaves: number(line, values[4])?,
        min_samples_leaf: number(line, values[5])?,
        l2: finite(line, values[6])?,
        max_bins: number(line, values[7])?,
        max_depth,
        seed: number(line, values[9])?,
    };
    params
        .validate()
        .map_err(|e| syntax(line, format!("invalid parameters: {e}")))?;
    Ok((number(line, values[0])?, params.trees, finite(line, values[3])?, params))
}

/// Reads one preorder subtree into `out`, returning its root slot.
fn read_subtree(
    cur: &mut Cursor<'_>,
    out: &mut Vec<Node>,
    remaining: &mut usize,
    section: &str,
    features: &[usize],
) -> Result<usize, ModelFileError> {
    let line = cur.pos + 1;
    if *remaining == 0 {
        return Err(syntax(line, format!("`{section}` subtree extends past its node count")));
    }
    let (line, fields) = cur.fields("tree node")?;
    *remaining -= 1;
    let slot = out.len();
    match fields[0] {
        "leaf" if fields.len() == 2 => {
            out.push(Node::Leaf {
                value: finite(line, fields[1])?,
            });
        }
        "split" if fields.len() == 4 => {
            let feature: usize = number(line, fields[1])?;
            let bin: usize = number(line, fields[2])?;
            let threshold = finite(line, fields[3])?;
            let Some(&bins) = features.get(feature) else {
                return Err(syntax(line, format!("split feature {feature} out of range")));
            };
            if bin + 1 >= bins {
                return Err(syntax(
                    line,
                    format!("split bin {bin} out of range for feature {feature}"),
                ));
            }
            out.push(Node::Leaf { value: 0.0 });
            let left = read_subtree(cur, out, remaining, section, features)?;
            let right = read_subtree(cur, out, remaining, section, features)?;
            out[slot] = Node::Split {
                feature,
                bin,
                threshold,
                left,
                right,
            };
        }
        other => return Err(syntax(line, format!("malformed tree node `{other}`"))),
    }
    Ok(slot)
}

pub fn parse_hgb(text: &str) -> Result<HgbModel, ModelFileError> {
    if !text.ends_with('\n') {
        return Err(syntax(text.lines().count().max(1), "missing final newline"));
    }
    let mut cur = Cursor {
        lines: text[..text.len() - 1].split('\n').collect(),
        pos: 0,
    };
    let (_, magic) = cur.fields("magic")?;
    if magic.len() != 1 || magic[0] != HGB_MAGIC {
        let found = magic.join(" ");
        if found.starts_with(MAGIC_FAMILY) {
            return Err(ModelFileError::Version {
                line: 1,
                expected: HGB_MAGIC,
                found,
            });
        }
        return Err(ModelFileError::BadMagic {
            line: 1,
            expected: HGB_MAGIC,
            found,
        });
    }
    let (line, fields) = cur.keyword("params", 1)?;
    let (feature_count, tree_count, base_score, params) = parse_params(line, &fields)?;

    let mut thresholds = Vec::with_capacity(feature_count);
    for f in 0..feature_count {
        let (line, fields) = cur.keyword("bins", 2)?;
        let index: usize = number(line, fields[1])?;
        if index != f {
            return Err(syntax(line, format!("expected bins for feature {f}, found {index}")));
        }
        let count: usize = number(line, fields[2])?;
        let values = fields[3..]
            .iter()
            .map(|t| finite(line, t))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != count {
            return Err(ModelFileError::Count {
                line,
                section: format!("bins {f}"),
                what: "values",
                expected: count,
                found: values.len(),
            });
        }
        if count >= params.max_bins {
            return Err(syntax(line, format!("{count} thresholds exceed max_bins - 1")));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(syntax(line, "thresholds must be strictly increasing"));
        }
        thresholds.push(values);
    }
    let bin_counts: Vec<usize> = thresholds.iter().map(|t| t.len() + 1).collect();

    let mut trees = Vec::with_capacity(tree_count);
    for i in 0..tree_count {
        let (line, fields) = cur.keyword("tree", 2)?;
        let index: usize = number(line, fields[1])?;
        if index != i {
            return Err(syntax(line, format!("expected tree {i}, found {index}")));
        }
        let count: usize = number(line, fields[2])?;
        let section = format!("tree {i}");
        let mut nodes = Vec::with_capacity(count);
        let mut remaining = count;
        read_subtree(&mut cur, &mut nodes, &mut remaining, &section, &bin_counts)?;
        if remaining != 0 {
            return Err(ModelFileError::Count {
                line,
                section,
                what: "nodes",
                expected: count,
                found: count - remaining,
            });
        }
        let tree = Tree::from_nodes(nodes);
        if let Some(limit) = params.max_depth {
            if tree.depth() > limit {
                return Err(syntax(line, format!("tree {i} deeper than max_depth {limit}")));
            }
        }
        trees.push(tree);
    }
    if cur.pos != cur.lines.len() {
        return Err(syntax(cur.pos + 1, "unexpected content after the last tree"));
    }
    Ok(HgbModel {
        bins: BinMapper {
            max_bins: params.max_bins,
            thresholds,
        },
        params,
        base_score,
        trees,
    })
}
