//! The edge node: asks the cloud service first and falls back to the
//! on-device quantized LogNNet when the network path fails.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use rbv_core::data::{RbvRecord, ScalerParams};
use rbv_core::quantize::{emulate_edge_inference, QuantizedModel};
use thiserror::Error;

use crate::protocol::{ModelTag, ProtocolError, ServiceRequest, ServiceResponse, MAX_LINE_BYTES};

pub const DEFAULT_ENDPOINT: &str = "127.0.0.1:7878";
/// Overrides [`DEFAULT_ENDPOINT`] in [`RoutePolicy::from_env`].
pub const ENDPOINT_ENV: &str = "SENSOR_CLOUD_ADDR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutePolicy {
    pub endpoint: String,
    /// Upper bound on establishing the connection.
    pub connect_timeout_ms: u64,
    /// Deadline for a whole attempt, connect included.
    pub response_timeout_ms: u64,
    /// Extra attempts after a transport failure.
    pub retries: u32,
}

impl Default for RoutePolicy {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            connect_timeout_ms: 500,
            response_timeout_ms: 1000,
            retries: 1,
        }
    }
}

impl RoutePolicy {
    /// Defaults, with the endpoint taken from `SENSOR_CLOUD_ADDR` when set.
    pub fn from_env() -> Self {
        let mut p = Self::default();
        if let Ok(addr) = std::env::var(ENDPOINT_ENV) {
            if !addr.trim().is_empty() {
                p.endpoint = addr.trim().to_string();
            }
        }
        p
    }

    pub fn validate(&self) -> Result<(), RouteError> {
        if self.connect_timeout_ms == 0 || self.response_timeout_ms == 0 {
            return Err(RouteError::Policy("timeouts must be positive".into()));
        }
        Ok(())
    }

    /// Longest time spent on the network before falling back.
    pub fn worst_case(&self) -> Duration {
        Duration::from_millis(self.response_timeout_ms * (self.retries as u64 + 1))
    }
}

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("invalid route policy: {0}")]
    Policy(String),
    #[error("local inference failed: {0}")]
    Local(#[from] rbv_core::Error),
}

/// Why a cloud attempt did not produce an answer.
#[derive(Debug, Error)]
pub enum CloudError {
    #[error("cannot resolve endpoint `{0}`")]
    Resolve(String),
    #[error("transport: {0}")]
    Transport(#[from] io::Error),
    #[error("timed out")]
    Timeout,
    #[error("connection closed before a full reply")]
    Disconnected,
    #[error("{0}")]
    Protocol(#[from] ProtocolError),
}

impl CloudError {
    /// Transport failures may succeed on retry; protocol failures will not.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            CloudError::Transport(_) | CloudError::Timeout | CloudError::Disconnected
        )
    }
}

fn remaining(deadline: Instant) -> Result<Duration, CloudError> {
    deadline
        .checked_duration_since(Instant::now())
        .filter(|d| !d.is_zero())
        .ok_or(CloudError::Timeout)
}

fn timed_out(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock)
}

fn resolve(endpoint: &str) -> Result<Vec<SocketAddr>, CloudError> {
    let addrs: Vec<SocketAddr> = endpoint
        .to_socket_addrs()
        .map_err(|_| CloudError::Resolve(endpoint.to_string()))?
        .collect();
    if addrs.is_empty() {
        return Err(CloudError::Resolve(endpoint.to_string()));
    }
    Ok(addrs)
}

/// One request/response exchange bounded by the policy's attempt deadline.
pub fn cloud_request(values: &[f64], policy: &RoutePolicy) -> Result<ServiceResponse, CloudError> {
    let deadline = Instant::now() + Duration::from_millis(policy.response_timeout_ms);
    let addrs = resolve(&policy.endpoint)?;
    let mut last = CloudError::Timeout;
    let mut stream = None;
    for addr in addrs {
        let budget = remaining(deadline)?.min(Duration::from_millis(policy.connect_timeout_ms));
        match TcpStream::connect_timeout(&addr, budget) {
            Ok(s) => {
                stream = Some(s);
                break;
            }
            Err(e) if timed_out(&e) => last = CloudError::Timeout,
            Err(e) => last = CloudError::Transport(e),
        }
    }
    let mut stream = stream.ok_or(last)?;
    stream.set_nodelay(true)?;
    stream.set_write_timeout(Some(remaining(deadline)?))?;
    stream
        .write_all(ServiceRequest::new(values.to_vec()).encode().as_bytes())
        .map_err(|e| {
            if timed_out(&e) {
                CloudError::Timeout
            } else {
                CloudError::Transport(e)
            }
        })?;

    let mut reply = Vec::new();
    let mut chunk = [0u8; 256];
    loop {
        stream.set_read_timeout(Some(remaining(deadline)?))?;
        let n = match stream.read(&mut chunk) {
            Ok(0) => return Err(CloudError::Disconnected),
            Ok(n) => n,
            Err(e) if timed_out(&e) => return Err(CloudError::Timeout),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(CloudError::Transport(e)),
        };
        reply.extend_from_slice(&chunk[..n]);
        if let Some(end) = reply.iter().position(|&b| b == b'\n') {
            let line = String::from_utf8_lossy(&reply[..end]);
            let line = line.strip_suffix('\r').unwrap_or(&line);
            let response = ServiceResponse::parse(line)?;
            if response.tag != ModelTag::CloudHgb {
                return Err(ProtocolError::Malformed(format!("unexpected tag {}", response.tag)).into());
            }
            return Ok(response);
        }
        if reply.len() > MAX_LINE_BYTES {
            return Err(ProtocolError::LineTooLong.into());
        }
    }
}

/// A routed answer and how it was obtained.
#[derive(Debug)]
pub struct RouteOutcome {
    pub response: ServiceResponse,
    pub attempts: u32,
    /// Last cloud failure when the answer came from the edge model.
    pub fallback_reason: Option<CloudError>,
}

/// Quantized LogNNet plus the scaler its inputs were trained with. The
/// cloud receives raw values; the local model receives scaled ones.
#[derive(Debug, Clone)]
pub struct EdgeNode {
    pub model: QuantizedModel,
    pub scaler: Option<ScalerParams>,
    pub policy: RoutePolicy,
}

impl EdgeNode {
    pub fn new(model: QuantizedModel, scaler: Option<ScalerParams>, policy: RoutePolicy) -> Self {
        Self { model, scaler, policy }
    }

    pub fn predict_local(&self, values: &[f64]) -> Result<ServiceResponse, RouteError> {
        let prepared = match &self.scaler {
            Some(s) => s.apply_values(values)?,
            None => values.to_vec(),
        };
        let input: Vec<f32> = prepared.iter().map(|&v| v as f32).collect();
        let outcome = emulate_edge_inference(&self.model, &input)?;
        Ok(ServiceResponse {
            class: outcome.predicted_class,
            confidence: outcome.confidence().clamp(0.0, 1.0),
            tag: ModelTag::EdgeLogNNet,
        })
    }

    pub fn route(&self, values: &[f64]) -> Result<RouteOutcome, RouteError> {
        self.policy.validate()?;
        // arity is checked up front so a failure is never masked by the cloud
        if values.len() != self.model.topology.s {
            return Err(RouteError::Local(rbv_core::Error::Arity {
                expected: self.model.topology.s,
                got: values.len(),
            }));
        }
        let mut attempts = 0;
        let mut reason = None;
        while attempts <= self.policy.retries {
            attempts += 1;
            match cloud_request(values, &self.policy) {
                Ok(response) => {
                    return Ok(RouteOutcome {
                        response,
                        attempts,
                        fallback_reason: None,
                    })
                }
                Err(e) => {
                    let retry = e.is_retryable();
                    reason = Some(e);
                    if !retry {
                        break;
                    }
                }
            }
        }
        Ok(RouteOutcome {
            response: self.predict_local(values)?,
            attempts,
            fallback_reason: reason,
        })
    }

    /// Local inference only.
    pub fn offline(&self, values: &[f64]) -> Result<RouteOutcome, RouteError> {
        Ok(RouteOutcome {
            response: self.predict_local(values)?,
            attempts: 0,
            fallback_reason: None,
        })
    }
}

/// Cloud first, quantized LogNNet on failure. Values go to both models
/// unscaled.
pub fn edge_predict(q: &QuantizedModel, r: &RbvRecord, policy: &RoutePolicy) -> Result<ServiceResponse, RouteError> {
    let node = EdgeNode::new(q.clone(), None, policy.clone());
    Ok(node.route(&r.values)?.response)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_defaults_and_validation() {
        let p = RoutePolicy::default();
        assert_eq!((p.connect_timeout_ms, p.response_timeout_ms, p.retries), (500, 1000, 1));
        assert_eq!(p.worst_case(), Duration::from_millis(2000));
        let bad = RoutePolicy {
            response_timeout_ms: 0,
            ..p
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn retry_classification() {
        assert!(CloudError::Timeout.is_retryable());
        assert!(CloudError::Disconnected.is_retryable());
        assert!(!CloudError::Protocol(ProtocolError::UnknownVerb).is_retryable());
    }
}
