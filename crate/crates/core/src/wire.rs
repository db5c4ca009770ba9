//! Serial framing: every value is followed by `T`, and a frame ends with the
//! token `FN`, itself followed by `T`.
//!
//! ```text
//! 0.5T-1.25TFNT
//! ```

use crate::{Error, Result};

pub const DELIMITER: u8 = b'T';
pub const TERMINATOR: &str = "FN";
/// Significant digits written per value.
pub const SIGNIFICANT_DIGITS: usize = 7;

/// Plain decimal with at most [`SIGNIFICANT_DIGITS`] significant digits,
/// trailing zeros stripped, no exponent.
pub fn format_value(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("cannot encode non-finite value {v}")));
    }
    if v == 0.0 {
        return Ok("0".to_string());
    }
    // d.dddddde±x, rounded half to even on the exact binary value
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let point = exp + 1;
    let mut out = String::with_capacity(digits.len() + 8);
    if v < 0.0 {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(digits);
    } else if point as usize >= digits.len() {
        out.push_str(digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        let (int, frac) = digits.split_at(point as usize);
        out.push_str(int);
        out.push('.');
        out.push_str(frac);
    }
    Ok(out)
}

pub fn encode_frame(values: &[f64]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(values.len() * 10 + 3);
    for &v in values {
        out.extend_from_slice(format_value(v)?.as_bytes());
        out.push(DELIMITER);
    }
    out.extend_from_slice(TERMINATOR.as_bytes());
    out.push(DELIMITER);
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WireFrame {
    pub values: Vec<f64>,
    /// Positions of tokens that did not parse and were read as 0.0.
    pub malformed: Vec<usize>,
}

impl WireFrame {
    pub fn is_malformed(&self) -> bool {
        !self.malformed.is_empty()
    }
}

/// Plain decimal token: optional sign, digits, optional fraction.
fn parse_token(token: &str) -> Option<f64> {
    let body = token.strip_prefix(['-', '+']).unwrap_or(token);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !all_digits(int) || !all_digits(frac) {
        return None;
    }
    token.parse().ok()
}

/// Incremental decoder. Partial tokens and values carry over between
/// [`FrameParser::feed`] calls, so any chunking of the same bytes yields the
/// same frames.
#[derive(Debug, Clone, Default)]
pub struct FrameParser {
    partial: Vec<u8>,
    current: WireFrame,
}

impl FrameParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// True while an incomplete frame is buffered.
    pub fn pending(&self) -> bool {
        !self.partial.is_empty() || !self.current.values.is_empty()
    }

    pub fn feed(&mut self, bytes: &[u8]) -> Vec<WireFrame> {
        let mut frames = Vec::new();
        for &b in bytes {
            if b != DELIMITER {
                self.partial.push(b);
                continue;
            }
            let raw = std::mem::take(&mut self.partial);
            let token = String::from_utf8_lossy(&raw);
            let token = token.trim_matches(|c: char| c.is_ascii_whitespace());
            if token == TERMINATOR {
                frames.push(std::mem::take(&mut self.current));
                continue;
            }
            match parse_token(token) {
                Some(v) => self.current.values.push(v),
                None => {
                    self.current.malformed.push(self.current.values.len());
                    self.current.values.push(0.0);
                }
            }
        }
        frames
    }
}

/// Decodes a complete buffer; trailing bytes without a terminator are
/// dropped.
pub fn decode_frames(bytes: &[u8]) -> Vec<WireFrame> {
    FrameParser::new().feed(bytes)
}

/// The single-character reply carrying a predicted class.
pub fn encode_reply(class: usize) -> Result<u8> {
    u8::try_from(class)
        .ok()
        .filter(|&c| c < 10)
        .map(|c| b'0' + c)
        .ok_or_else(|| Error::invalid(format!("class {class} does not fit one digit")))
}

pub fn decode_reply(byte: u8) -> Option<usize> {
    byte.is_ascii_digit().then(|| (byte - b'0') as usize)
}
