//! Two-tier diagnosis: a cloud service hosting the gradient-boosting model,
//! an edge node hosting the quantized LogNNet, and a router that prefers the
//! cloud and falls back to the edge when the network path fails.

pub mod cli;
pub mod protocol;
pub mod router;
pub mod service;

pub use protocol::{ModelTag, ProtocolError, ServiceRequest, ServiceResponse};
pub use router::{edge_predict, EdgeNode, RouteOutcome, RoutePolicy};
pub use service::{serve_cloud, CloudService};
