//! Line protocol between edge nodes and the cloud service.
//!
//! ```text
//! > PREDICT v1 n=2
//! > 0.5,0.5
//! < DIAG 1 CONF 0.97 MODEL cloud-hgb
//! ```
//!
//! Every line ends in LF. Failures are answered with `ERR <CODE> <detail>`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const VERSION: &str = "v1";
pub const VERB_PREDICT: &str = "PREDICT";
pub const MAX_LINE_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    CloudHgb,
    EdgeLogNNet,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::CloudHgb => "cloud-hgb",
            ModelTag::EdgeLogNNet => "edge-lognnet",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTag {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, ProtocolError> {
        match s {
            "cloud-hgb" => Ok(ModelTag::CloudHgb),
            "edge-lognnet" => Ok(ModelTag::EdgeLogNNet),
            other => Err(ProtocolError::Malformed(format!("unknown model tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("unknown verb")]
    UnknownVerb,
    #[error("unsupported protocol version `{0}`")]
    Version(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("bad value `{0}`")]
    Value(String),
    #[error("line longer than {MAX_LINE_BYTES} bytes")]
    LineTooLong,
    #[error("remote error {code}: {detail}")]
    Remote { code: String, detail: String },
    #[error("malformed reply: {0}")]
    Malformed(String),
}

impl ProtocolError {
    /// The `ERR …` line a server sends for this error, LF included.
    pub fn to_line(&self) -> String {
        let (code, detail) = match self {
            ProtocolError::UnknownVerb => ("PROTO", "unknown-verb".to_string()),
            ProtocolError::Version(v) => ("PROTO", format!("unsupported-version={v}")),
            ProtocolError::Header(_) => ("PROTO", "bad-header".to_string()),
            ProtocolError::Arity { expected, got } => ("ARITY", format!("expected={expected} got={got}")),
            ProtocolError::Value(v) => ("VALUE", format!("bad-value={v}")),
            ProtocolError::LineTooLong => ("PROTO", "line-too-long".to_string()),
            ProtocolError::Remote { code, detail } => return format!("ERR {code} {detail}\n"),
            ProtocolError::Malformed(_) => ("PROTO", "malformed".to_string()),
        };
        format!("ERR {code} {detail}\n")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRequest {
    pub values: Vec<f64>,
}

impl ServiceRequest {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Header and value lines. Values use the shortest decimal that reads
    /// back to the same `f64`.
    pub fn encode(&self) -> String {
        let values: Vec<String> = self.values.iter().map(f64::to_string).collect();
        format!(
            "{VERB_PREDICT} {VERSION} n={}\n{}\n",
            self.values.len(),
            values.join(",")
        )
    }
}

/// Parses `PREDICT v1 n=<count>` and returns the count.
pub fn parse_header(line: &str) -> Result<usize, ProtocolError> {
    let mut parts = line.split(' ');
    if parts.next() != Some(VERB_PREDICT) {
        return Err(ProtocolError::UnknownVerb);
    }
    let version = parts.next().ok_or_else(|| ProtocolError::Header(line.to_string()))?;
    if version != VERSION {
        return Err(ProtocolError::Version(version.to_string()));
    }
    let count = parts
        .next()
        .and_then(|p| p.strip_prefix("n="))
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| ProtocolError::Header(line.to_string()))?;
    if parts.next().is_some() {
        return Err(ProtocolError::Header(line.to_string()));
    }
    Ok(count)
}

/// Parses the comma-separated value line announced by a header with
/// `expected` values.
pub fn parse_values(line: &str, expected: usize) -> Result<Vec<f64>, ProtocolError> {
    let values: Vec<&str> = if line.is_empty() {
        Vec::new()
    } else {
        line.split(',').collect()
    };
    if values.len() != expected {
        return Err(ProtocolError::Arity {
            expected,
            got: values.len(),
        });
    }
    values
        .into_iter()
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ProtocolError::Value(v.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceResponse {
    pub class: usize,
    /// Probability of the reported class, in `[0, 1]`.
    pub confidence: f64,
    pub tag: ModelTag,
}

impl ServiceResponse {
    pub fn encode(&self) -> String {
        format!("DIAG {} CONF {} MODEL {}\n", self.class, self.confidence, self.tag)
    }

    /// Parses one reply line (without its LF). `ERR` lines become
    /// [`ProtocolError::Remote`].
    pub fn parse(line: &str) -> Result<Self, ProtocolError> {
        let parts: Vec<&str> = line.split(' ').collect();
        match parts.as_slice() {
            ["ERR", code, detail @ ..] => Err(ProtocolError::Remote {
                code: code.to_string(),
                detail: detail.join(" "),
            }),
            ["DIAG", class, "CONF", conf, "MODEL", tag] => {
                let class = match *class {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(ProtocolError::Malformed(format!("class `{other}`"))),
                };
                let confidence = conf
                    .parse::<f64>()
                    .ok()
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| ProtocolError::Malformed(format!("confidence `{conf}`")))?;
                Ok(Self {
                    class,
                    confidence,
                    tag: tag.parse()?,
                })
            }
            _ => Err(ProtocolError::Malformed(line.to_string())),
        }
    }
}
