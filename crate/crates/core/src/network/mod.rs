//! Road axes and their snapped planar topology.

mod topology;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Polyline;

pub use topology::{build_topology, one_neighborhood, Edge, Face, IncidentEdge, JunctionNode, Node, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(AxisId);
string_id!(EdgeId);
string_id!(NodeId);
string_id!(FaceId);

impl FaceId {
    pub fn universal() -> FaceId {
        FaceId("universal".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Importance {
    Major,
    Medium,
    Residential,
}

impl FromStr for Importance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "major" => Ok(Importance::Major),
            "medium" => Ok(Importance::Medium),
            "residential" => Ok(Importance::Residential),
            other => Err(format!("unknown importance `{other}` (major|medium|residential)")),
        }
    }
}

impl fmt::Display for Importance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Importance::Major => "major",
            Importance::Medium => "medium",
            Importance::Residential => "residential",
        })
    }
}

/// Traffic direction relative to the digitization order of the axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Direct,
    Reverse,
    Both,
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Direction::Direct),
            "reverse" => Ok(Direction::Reverse),
            "both" => Ok(Direction::Both),
            other => Err(format!("unknown direction `{other}` (direct|reverse|both)")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Direct => "direct",
            Direction::Reverse => "reverse",
            Direction::Both => "both",
        })
    }
}

/// An attributed road centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadAxis {
    pub id: AxisId,
    pub geometry: Polyline,
    pub half_width: f64,
    pub importance: Importance,
    /// km/h
    pub avg_speed: f64,
    pub lane_count: u32,
    pub direction: Direction,
    pub name: String,
}

impl RoadAxis {
    /// Axis with residential defaults: 30 km/h, two lanes in both directions.
    pub fn new(id: impl Into<AxisId>, geometry: Polyline, half_width: f64) -> Self {
        RoadAxis {
            id: id.into(),
            geometry,
            half_width,
            importance: Importance::Residential,
            avg_speed: 30.0,
            lane_count: 2,
            direction: Direction::Both,
            name: String::new(),
        }
    }

    pub fn with_importance(mut self, importance: Importance) -> Self {
        self.importance = importance;
        self
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.avg_speed = speed;
        self
    }

    pub fn with_lanes(mut self, lanes: u32, direction: Direction) -> Self {
        self.lane_count = lanes;
        self.direction = direction;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Check the attribute ranges; the message names the offending field.
    pub fn validate(&self, snap_tol: f64) -> Result<(), String> {
        if !(self.half_width > 0.0 && self.half_width <= 50.0) {
            return Err(format!("half width {} outside (0, 50]", self.half_width));
        }
        if !(1..=12).contains(&self.lane_count) {
            return Err(format!("lane count {} outside [1, 12]", self.lane_count));
        }
        if !(self.avg_speed > 0.0 && self.avg_speed.is_finite()) {
            return Err(format!("speed {} must be positive", self.avg_speed));
        }
        let len = self.geometry.length();
        if len <= snap_tol {
            return Err(format!("length {len:.4} m not above snap tolerance {snap_tol}"));
        }
        Ok(())
    }
}
