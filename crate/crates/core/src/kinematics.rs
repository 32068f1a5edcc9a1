//! Turning radius estimates from road attributes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::Importance;
use crate::settings::{RadiusMethod, Settings};
use crate::RoadAxis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusSource {
    Guess,
    Setra,
    ClampedMin,
    ClampedMaxFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub source: RadiusSource,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("speed {speed} km/h is singular for roadway width {width} m")]
    SingularSpeed { speed: f64, width: f64 },
    #[error("speed {speed} km/h is above the validity limit {limit} km/h for roadway width {width} m")]
    SpeedOutOfRange { speed: f64, width: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub fn guess_radius(importance: Importance, settings: &Settings) -> RadiusEstimate {
    RadiusEstimate { radius: settings.guess_radius_for(importance), source: RadiusSource::Guess }
}

/// Speed based radius: `18.6 * sqrt(speed / |10 * width + 65 - speed|)` with
/// speed in km/h and `width` the full roadway width in meters, clamped to
/// the configured radius range.
pub fn setra_radius(speed: f64, width: f64, settings: &Settings) -> Result<RadiusEstimate, KinematicsError> {
    if !(speed > 0.0) || !speed.is_finite() || !(width > 0.0) || !width.is_finite() {
        return Err(KinematicsError::InvalidParameter(format!("speed {speed} and width {width} must be positive")));
    }
    let limit = 10.0 * width + 65.0;
    let den = limit - speed;
    if den.abs() < 1e-9 {
        return Err(KinematicsError::SingularSpeed { speed, width });
    }
    if den < 0.0 {
        return Err(KinematicsError::SpeedOutOfRange { speed, width, limit });
    }
    let r = 18.6 * (speed / den).sqrt();
    if r < settings.radius_min {
        return Ok(RadiusEstimate { radius: settings.radius_min, source: RadiusSource::ClampedMin });
    }
    Ok(RadiusEstimate { radius: r.min(settings.radius_max), source: RadiusSource::Setra })
}

/// Radius of one axis under the configured method. Speeds outside the
/// validity range of the speed formula fall back to the importance guess.
pub fn axis_radius(axis: &RoadAxis, settings: &Settings) -> RadiusEstimate {
    match settings.radius_method {
        RadiusMethod::Guess => guess_radius(axis.importance, settings),
        RadiusMethod::Setra => setra_radius(axis.avg_speed, 2.0 * axis.half_width, settings)
            .unwrap_or_else(|_| guess_radius(axis.importance, settings)),
    }
}

/// Result of probing one radius against the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
    /// No corner exists at all for this pair; the radius is left alone.
    NoCorner,
}

/// Shrink `est` to the largest radius (to 0.01 m) for which `probe`
/// reports a feasible corner; `min_radius` when even that fails.
pub fn clamp_radius_to_network(
    est: RadiusEstimate,
    min_radius: f64,
    probe: impl Fn(f64) -> Feasibility,
) -> RadiusEstimate {
    match probe(est.radius) {
        Feasibility::Feasible | Feasibility::NoCorner => return est,
        Feasibility::Infeasible => {}
    }
    if est.radius <= min_radius || probe(min_radius) != Feasibility::Feasible {
        return RadiusEstimate { radius: min_radius, source: RadiusSource::ClampedMin };
    }
    let (mut lo, mut hi) = (min_radius, est.radius);
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) == Feasibility::Feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    RadiusEstimate { radius: lo, source: RadiusSource::ClampedMaxFeasible }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guesses() {
        let s = Settings::default();
        assert_eq!(guess_radius(Importance::Major, &s).radius, 7.6);
        assert_eq!(guess_radius(Importance::Medium, &s).radius, 4.9);
        assert_eq!(guess_radius(Importance::Residential, &s).radius, 3.0);
    }

    #[test]
    fn setra_values() {
        let s = Settings::default();
        let r = setra_radius(50.0, 3.5, &s).unwrap();
        assert!((r.radius - 18.6).abs() < 1e-9);
        assert_eq!(r.source, RadiusSource::Setra);
        let expected = 18.6 * (30.0f64 / 85.0).sqrt();
        assert!((setra_radius(30.0, 5.0, &s).unwrap().radius - expected).abs() < 1e-12);
        assert!((expected - 11.05).abs() < 0.01);
        assert!(matches!(setra_radius(100.0, 3.5, &s), Err(KinematicsError::SingularSpeed { .. })));
        assert!(matches!(setra_radius(120.0, 3.5, &s), Err(KinematicsError::SpeedOutOfRange { .. })));
    }

    #[test]
    fn setra_is_floored_and_capped() {
        let s = Settings::default();
        assert_eq!(setra_radius(1e-6, 3.0, &s).unwrap().radius, 0.15);
        assert_eq!(setra_radius(94.9, 3.0, &s).unwrap().radius, 30.0);
    }

    #[test]
    fn clamp_cases() {
        let est = RadiusEstimate { radius: 7.6, source: RadiusSource::Guess };
        assert_eq!(clamp_radius_to_network(est, 0.15, |_| Feasibility::Feasible), est);
        let c = clamp_radius_to_network(est, 0.15, |r| if r <= 2.5 { Feasibility::Feasible } else { Feasibility::Infeasible });
        assert_eq!(c.source, RadiusSource::ClampedMaxFeasible);
        assert!(c.radius <= 2.5 && c.radius > 2.49 - 0.01);
        let m = clamp_radius_to_network(est, 0.15, |_| Feasibility::Infeasible);
        assert_eq!(m, RadiusEstimate { radius: 0.15, source: RadiusSource::ClampedMin });
    }
}
