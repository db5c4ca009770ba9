//! The cloud inference service: one thread per connection, each running a
//! [`Session`] over the shared immutable model.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use rbv_core::hgb::HgbModel;

use crate::protocol::{parse_header, parse_values, ModelTag, ProtocolError, ServiceResponse, MAX_LINE_BYTES};

/// Idle connections are closed after this long without a complete line.
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30);

pub fn predict_response(model: &HgbModel, values: &[f64]) -> Result<ServiceResponse, ProtocolError> {
    if values.len() != model.feature_count() {
        return Err(ProtocolError::Arity {
            expected: model.feature_count(),
            got: values.len(),
        });
    }
    let p = model
        .predict(values)
        .map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let confidence = if p.class == 1 {
        p.probability
    } else {
        1.0 - p.probability
    };
    Ok(ServiceResponse {
        class: p.class as usize,
        confidence,
        tag: ModelTag::CloudHgb,
    })
}

enum Pending {
    Header,
    Values(usize),
    /// A malformed `PREDICT` header was answered; its value line is
    /// skipped.
    Discard,
}

/// Per-connection protocol state. Feeding lines (without LF) yields the
/// reply lines to send.
pub struct Session<'a> {
    model: &'a HgbModel,
    pending: Pending,
}

impl<'a> Session<'a> {
    pub fn new(model: &'a HgbModel) -> Self {
        Self {
            model,
            pending: Pending::Header,
        }
    }

    pub fn line(&mut self, line: &str) -> Option<String> {
        let line = line.strip_suffix('\r').unwrap_or(line);
        match std::mem::replace(&mut self.pending, Pending::Header) {
            Pending::Header => {
                if line.is_empty() {
                    return None;
                }
                match parse_header(line) {
                    Ok(n) => {
                        self.pending = Pending::Values(n);
                        None
                    }
                    Err(ProtocolError::UnknownVerb) => Some(ProtocolError::UnknownVerb.to_line()),
                    Err(e) => {
                        self.pending = Pending::Discard;
                        Some(e.to_line())
                    }
                }
            }
            Pending::Values(n) => {
                let reply = parse_values(line, n).and_then(|v| predict_response(self.model, &v));
                Some(match reply {
                    Ok(r) => r.encode(),
                    Err(e) => e.to_line(),
                })
            }
            Pending::Discard => None,
        }
    }
}

fn serve_connection(model: &HgbModel, stream: TcpStream) -> io::Result<()> {
    stream.set_read_timeout(Some(IDLE_TIMEOUT))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut session = Session::new(model);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = (&mut reader)
            .take(MAX_LINE_BYTES as u64 + 1)
            .read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        if buf.last() != Some(&b'\n') {
            if n > MAX_LINE_BYTES {
                writer.write_all(ProtocolError::LineTooLong.to_line().as_bytes())?;
            }
            // oversized line or EOF mid-line
            return Ok(());
        }
        buf.pop();
        let line = String::from_utf8_lossy(&buf);
        if let Some(reply) = session.line(&line) {
            writer.write_all(reply.as_bytes())?;
        }
    }
}

/// A running service. Dropping it does not stop it; call
/// [`CloudService::shutdown`].
pub struct CloudService {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    acceptor: JoinHandle<()>,
}

impl CloudService {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops accepting connections. Open connections finish on their own.
    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.local_addr, Duration::from_millis(200));
        let _ = self.acceptor.join();
    }

    /// Blocks until the accept loop ends.
    pub fn wait(self) {
        let _ = self.acceptor.join();
    }
}

pub fn serve_cloud(model: HgbModel, addr: impl ToSocketAddrs) -> io::Result<CloudService> {
    let listener = TcpListener::bind(addr)?;
    let local_addr = listener.local_addr()?;
    let model = Arc::new(model);
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let acceptor = thread::Builder::new().name("cloud-accept".into()).spawn(move || {
        for stream in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let model = Arc::clone(&model);
            let _ = thread::Builder::new().name("cloud-conn".into()).spawn(move || {
                let _ = serve_connection(&model, stream);
            });
        }
    })?;
    Ok(CloudService {
        local_addr,
        stop,
        acceptor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbv_core::data::Dataset;
    use rbv_core::hgb::{train_hgb, HgbParams};

    fn pair_model() -> HgbModel {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64 / 40.0, ((i * 7) % 40) as f64 / 40.0])
            .collect();
        let labels = rows.iter().map(|r| u8::from(r[0] > 0.5)).collect();
        let d = Dataset::from_rows(rows, labels).unwrap();
        let params = HgbParams {
            trees: 10,
            min_samples_leaf: 5,
            ..Default::default()
        };
        train_hgb(&d, &params).unwrap()
    }

    #[test]
    fn session_contract() {
        let m = pair_model();
        let mut s = Session::new(&m);
        assert_eq!(s.line("PREDICT v1 n=2"), None);
        let reply = s.line("0.9,0.5").unwrap();
        let r = crate::protocol::ServiceResponse::parse(reply.trim_end()).unwrap();
        assert_eq!((r.class, r.tag), (1, ModelTag::CloudHgb));
        assert!((0.5..=1.0).contains(&r.confidence));

        assert_eq!(s.line("PREDICT v1 n=3"), None);
        assert_eq!(s.line("0.5,0.5").unwrap(), "ERR ARITY expected=3 got=2\n");
        assert_eq!(s.line("HELLO").unwrap(), "ERR PROTO unknown-verb\n");
        // declared count matches, model arity does not
        s.line("PREDICT v1 n=1");
        assert_eq!(s.line("0.5").unwrap(), "ERR ARITY expected=2 got=1\n");
        // a bad header swallows its value line, then the session recovers
        assert!(s.line("PREDICT v9 n=2").unwrap().starts_with("ERR PROTO"));
        assert_eq!(s.line("0.5,0.5"), None);
        s.line("PREDICT v1 n=2\r");
        assert!(s.line("0.1,0.5\r").unwrap().starts_with("DIAG 0 "));
    }
}
