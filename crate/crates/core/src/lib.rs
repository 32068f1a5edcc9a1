//! Street model generation from a network of attributed road axes: corner
//! arcs, section and intersection surfaces, city blocks, lanes,
//! interconnections, roundabout candidates and street objects, with
//! incremental regeneration.

pub mod engine;
pub mod geom;
pub mod junction;
pub mod kinematics;
pub mod network;
pub mod objects;
pub mod settings;
pub mod surface;
pub mod synth;
pub mod traffic;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use network::{AxisId, Direction, EdgeId, FaceId, Importance, NodeId, RoadAxis, Topology};
pub use settings::Settings;

/// A non-fatal problem tied to one input feature or model item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Id of the offending feature (axis, edge, node, face or object).
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { subject: subject.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}
