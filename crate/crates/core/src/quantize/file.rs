//! The `LOGNNET1` library file: UTF-8 text, LF line endings.
//!
//! ```text
//! LOGNNET1
//! topology S P M N
//! chaos K D L C
//! scale 1000
//! minS 1 P
//! <P integers>
//! maxS 1 P
//! …
//! meanS 1 P
//! …
//! W1 P+1 M+1
//! <one row per line>
//! W2 M+1 N+1
//! <one row per line>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::QuantizedModel;
use crate::chaos::{ChaosParams, Topology};
use crate::{Error, ModelFileError, Result};

pub const MAGIC: &str = "LOGNNET1";
const MAGIC_FAMILY: &str = "LOGNNET";

fn write_section(out: &mut String, name: &str, rows: usize, cols: usize, values: &[i16]) {
    let _ = writeln!(out, "{name} {rows} {cols}");
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(i16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn render_model(q: &QuantizedModel) -> String {
    let t = q.topology;
    let c = q.chaos;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "topology {} {} {} {}", t.s, t.p, t.m, t.n);
    let _ = writeln!(out, "chaos {} {} {} {}", c.k, c.d, c.l, c.c);
    let _ = writeln!(out, "scale {}", q.scale_factor);
    write_section(&mut out, "minS", 1, t.p, &q.min_s);
    write_section(&mut out, "maxS", 1, t.p, &q.max_s);
    write_section(&mut out, "meanS", 1, t.p, &q.mean_s);
    write_section(&mut out, "W1", t.p + 1, t.m + 1, &q.w1);
    write_section(&mut out, "W2", t.m + 1, t.n + 1, &q.w2);
    out
}

pub fn export_model(q: &QuantizedModel, path: impl AsRef<Path>) -> Result<()> {
    q.validate()?;
    let path = path.as_ref();
    std::fs::write(path, render_model(q)).map_err(|e| Error::io(path, e))
}

pub fn import_model(path: impl AsRef<Path>) -> Result<QuantizedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_model(&text)?)
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let line = self.lines.get(self.pos).copied()?;
        self.pos += 1;
        Some((self.pos, line))
    }

    fn line_no(&self) -> usize {
        self.pos + 1
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), ModelFileError> {
        let line = self.line_no();
        self.next().ok_or_else(|| ModelFileError::Syntax {
            line,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses `<keyword> v1 v2 …` with exactly `n` integer fields.
fn keyword_ints(lines: &mut Lines<'_>, keyword: &str, n: usize) -> Result<Vec<i64>, ModelFileError> {
    let (line, text) = lines.expect(keyword)?;
    let mut parts = text.split(' ');
    if parts.next() != Some(keyword) {
        return Err(syntax(line, format!("expected `{keyword}` line, found `{text}`")));
    }
    let values = parts
        .map(|p| {
            p.parse::<i64>()
                .map_err(|_| syntax(line, format!("`{p}` is not an integer")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(ModelFileError::Count {
            line,
            section: keyword.to_string(),
            what: "fields",
            expected: n,
            found: values.len(),
        });
    }
    Ok(values)
}

fn read_section(lines: &mut Lines<'_>, name: &str, rows: usize, cols: usize) -> Result<Vec<i16>, ModelFileError> {
    let header = keyword_ints(lines, name, 2)?;
    let header_line = lines.pos;
    for (found, expected, what) in [(header[0], rows, "rows"), (header[1], cols, "columns")] {
        if found != expected as i64 {
            return Err(ModelFileError::Count {
                line: header_line,
                section: name.to_string(),
                what,
                expected,
                found: found.max(0) as usize,
            });
        }
    }
    let mut values = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let line = lines.line_no();
        let text = match lines.lines.get(lines.pos) {
            Some(t) if t.starts_with(|c: char| c == '-' || c.is_ascii_digit()) => *t,
            _ => {
                return Err(ModelFileError::Count {
                    line,
                    section: name.to_string(),
                    what: "rows",
                    expected: rows,
                    found: row,
                })
            }
        };
        lines.pos += 1;
        let mut count = 0;
        for token in text.split(' ') {
            let v: i64 = token
                .parse()
                .map_err(|_| syntax(line, format!("`{token}` is not an integer")))?;
            if v < i16::MIN as i64 || v > i16::MAX as i64 {
                return Err(ModelFileError::OutOfRange {
                    line,
                    section: name.to_string(),
                    value: v,
                });
            }
            values.push(v as i16);
            count += 1;
        }
        if count != cols {
            return Err(ModelFileError::Count {
                line,
                section: name.to_string(),
                what: "values",
                expected: cols,
                found: count,
            });
        }
    }
    Ok(values)
}

fn positive(line: usize, v: i64, what: &str) -> Result<usize, ModelFileError> {
    usize::try_from(v)
        .ok()
        .filter(|&u| u > 0)
        .ok_or_else(|| syntax(line, format!("{what} must be a positive integer, found {v}")))
}

pub fn parse_model(text: &str) -> Result<QuantizedModel, ModelFileError> {
    let mut lines = Lines {
        lines: text.split('\n').collect(),
        pos: 0,
    };
    let (_, magic) = lines.expect("magic")?;
    if magic != MAGIC {
        if magic.starts_with(MAGIC_FAMILY) {
            return Err(ModelFileError::Version {
                line: 1,
                expected: MAGIC,
                found: magic.to_string(),
            });
        }
        return Err(ModelFileError::BadMagic {
            line: 1,
            expected: MAGIC,
            found: magic.to_string(),
        });
    }
    if !text.ends_with('\n') {
        return Err(syntax(text.lines().count(), "missing final newline"));
    }
    // drop the empty piece after the final newline
    lines.lines.pop();
    if let Some(i) = lines
        .lines
        .iter()
        .position(|l| l.ends_with(' ') || l.ends_with('\r') || l.ends_with('\t'))
    {
        return Err(syntax(i + 1, "trailing whitespace"));
    }

    let topo = keyword_ints(&mut lines, "topology", 4)?;
    let line = lines.pos;
    let topology = Topology {
        s: positive(line, topo[0], "S")?,
        p: positive(line, topo[1], "P")?,
        m: positive(line, topo[2], "M")?,
        n: positive(line, topo[3], "N")?,
    };
    let chaos = keyword_ints(&mut lines, "chaos", 4)?;
    let chaos = ChaosParams {
        k: chaos[0],
        d: chaos[1],
        l: chaos[2],
        c: chaos[3],
    };
    chaos.validate().map_err(|e| syntax(lines.pos, e.to_string()))?;
    let scale = keyword_ints(&mut lines, "scale", 1)?;
    let scale_factor = u32::try_from(scale[0])
        .ok()
        .filter(|&s| s > 0)
        .ok_or_else(|| syntax(lines.pos, "scale factor must be a positive 32-bit integer"))?;

    let t = topology;
    let min_s = read_section(&mut lines, "minS", 1, t.p)?;
    let max_s = read_section(&mut lines, "maxS", 1, t.p)?;
    let mean_s = read_section(&mut lines, "meanS", 1, t.p)?;
    let w1 = read_section(&mut lines, "W1", t.p + 1, t.m + 1)?;
    let w2 = read_section(&mut lines, "W2", t.m + 1, t.n + 1)?;
    if let Some((line, extra)) = lines.next() {
        return Err(syntax(line, format!("unexpected content after W2: `{extra}`")));
    }
    Ok(QuantizedModel {
        topology,
        chaos,
        scale_factor,
        min_s,
        max_s,
        mean_s,
        w1,
        w2,
    })
}
