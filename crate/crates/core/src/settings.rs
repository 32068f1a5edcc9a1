//! Global settings: a flat `key = value` table with typed, range-checked values.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Precision;
use crate::network::{Direction, Importance};

pub const SETTINGS_ENV: &str = "STREETGEN_SETTINGS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SettingsError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue { line: usize, key: String, reason: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("cannot read settings file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusMethod {
    Guess,
    Setra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionMode {
    Symmetric,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub precision: Precision,
    pub snap_tol: f64,
    pub radius_method: RadiusMethod,
    /// Guessed radii for residential, medium and major roads.
    pub radius_by_importance: [f64; 3],
    pub radius_min: f64,
    pub radius_max: f64,
    pub misplaced_factor: f64,
    pub local_window: f64,
    pub overcut_factor: f64,
    pub transition_mode: TransitionMode,
    pub transition_length_factor: f64,
    /// Lanes whose offset geometry is shorter than this are dropped.
    pub lane_min_length: f64,
    pub interconnection_samples: usize,
    pub parallel_angle_deg: f64,
    pub hough_tol: f64,
    pub roundabout_r_min: f64,
    pub roundabout_r_max: f64,
    pub roundabout_eps: f64,
    pub roundabout_min_pts: usize,
    pub name_sim: f64,
    /// Geometric, same-name and keyword evidence weights.
    pub roundabout_weights: [f64; 3],
    pub roundabout_score_threshold: f64,
    pub partition_seed: u64,
    pub partition_max_iter: usize,
    pub default_width: f64,
    pub default_importance: Importance,
    pub default_speed: f64,
    pub default_lanes: u32,
    pub default_direction: Direction,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            precision: Precision::default(),
            snap_tol: 0.05,
            radius_method: RadiusMethod::Guess,
            radius_by_importance: [3.0, 4.9, 7.6],
            radius_min: 0.15,
            radius_max: 30.0,
            misplaced_factor: 1.5,
            local_window: 2.0,
            overcut_factor: 0.1,
            transition_mode: TransitionMode::Symmetric,
            transition_length_factor: 4.0,
            lane_min_length: 0.1,
            interconnection_samples: 16,
            parallel_angle_deg: 5.0,
            hough_tol: 0.3,
            roundabout_r_min: 2.0,
            roundabout_r_max: 30.0,
            roundabout_eps: 3.0,
            roundabout_min_pts: 3,
            name_sim: 0.6,
            roundabout_weights: [0.5, 0.3, 0.2],
            roundabout_score_threshold: 0.5,
            partition_seed: 42,
            partition_max_iter: 50,
            default_width: 7.0,
            default_importance: Importance::Residential,
            default_speed: 30.0,
            default_lanes: 2,
            default_direction: Direction::Both,
        }
    }
}

pub const KEYS: &[&str] = &[
    "defaults.direction",
    "defaults.importance",
    "defaults.lanes",
    "defaults.speed",
    "defaults.width",
    "geom.arc_tolerance",
    "geom.snap_grid",
    "interconnection.parallel_angle_deg",
    "interconnection.samples",
    "junction.misplaced_factor",
    "junction.tie_break",
    "lanes.min_length",
    "network.snap_tol",
    "partition.max_iter",
    "partition.seed",
    "radius.by_importance",
    "radius.max",
    "radius.method",
    "radius.min",
    "roundabout.eps",
    "roundabout.hough_tol",
    "roundabout.min_pts",
    "roundabout.name_sim",
    "roundabout.r_max",
    "roundabout.r_min",
    "roundabout.score_threshold",
    "roundabout.weights",
    "surface.local_window",
    "surface.overcut_factor",
    "transition.default_mode",
    "transition.length_factor",
];

fn positive(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{x} must be positive")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{x} must be non-negative")),
        Err(e) => Err(e.to_string()),
    }
}

fn unit(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
        Ok(x) => Err(format!("{x} must lie in [0, 1]")),
        Err(e) => Err(e.to_string()),
    }
}

fn count(v: &str, min: usize) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(x) if x >= min => Ok(x),
        Ok(x) => Err(format!("{x} must be at least {min}")),
        Err(e) => Err(e.to_string()),
    }
}

fn triple(v: &str, check: fn(&str) -> Result<f64, String>) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected 3 comma-separated numbers, got {}", parts.len()));
    }
    Ok([check(parts[0])?, check(parts[1])?, check(parts[2])?])
}

fn fmt_triple(t: [f64; 3]) -> String {
    format!("{}, {}, {}", t[0], t[1], t[2])
}

impl Settings {
    /// Assign one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "defaults.direction" => self.default_direction = v.parse()?,
            "defaults.importance" => self.default_importance = v.parse()?,
            "defaults.lanes" => {
                let n = count(v, 1)?;
                if n > 12 {
                    return Err(format!("{n} exceeds 12 lanes"));
                }
                self.default_lanes = n as u32;
            }
            "defaults.speed" => self.default_speed = positive(v)?,
            "defaults.width" => {
                let w = positive(v)?;
                if w > 100.0 {
                    return Err(format!("{w} exceeds 100 m"));
                }
                self.default_width = w;
            }
            "geom.arc_tolerance" => self.precision.arc_tolerance = positive(v)?,
            "geom.snap_grid" => self.precision.snap_grid = positive(v)?,
            "interconnection.parallel_angle_deg" => {
                let a = non_negative(v)?;
                if a >= 90.0 {
                    return Err(format!("{a} must be below 90 degrees"));
                }
                self.parallel_angle_deg = a;
            }
            "interconnection.samples" => self.interconnection_samples = count(v, 2)?,
            "junction.misplaced_factor" => self.misplaced_factor = positive(v)?,
            "junction.tie_break" => {
                if v != "lexicographic" {
                    return Err(format!("unsupported tie-break `{v}` (only `lexicographic`)"));
                }
            }
            "lanes.min_length" => self.lane_min_length = non_negative(v)?,
            "network.snap_tol" => self.snap_tol = positive(v)?,
            "partition.max_iter" => self.partition_max_iter = count(v, 1)?,
            "partition.seed" => self.partition_seed = v.parse::<u64>().map_err(|e| e.to_string())?,
            "radius.by_importance" => self.radius_by_importance = triple(v, positive)?,
            "radius.max" => self.radius_max = positive(v)?,
            "radius.method" => {
                self.radius_method = match v {
                    "guess" => RadiusMethod::Guess,
                    "setra" => RadiusMethod::Setra,
                    _ => return Err(format!("unknown method `{v}` (guess|setra)")),
                }
            }
            "radius.min" => self.radius_min = positive(v)?,
            "roundabout.eps" => self.roundabout_eps = positive(v)?,
            "roundabout.hough_tol" => self.hough_tol = positive(v)?,
            "roundabout.min_pts" => self.roundabout_min_pts = count(v, 1)?,
            "roundabout.name_sim" => self.name_sim = unit(v)?,
            "roundabout.r_max" => self.roundabout_r_max = positive(v)?,
            "roundabout.r_min" => self.roundabout_r_min = positive(v)?,
            "roundabout.score_threshold" => self.roundabout_score_threshold = unit(v)?,
            "roundabout.weights" => {
                let w = triple(v, non_negative)?;
                if w.iter().sum::<f64>() <= 0.0 {
                    return Err("weights must not all be zero".into());
                }
                self.roundabout_weights = w;
            }
            "surface.local_window" => self.local_window = positive(v)?,
            "surface.overcut_factor" => self.overcut_factor = non_negative(v)?,
            "transition.default_mode" => {
                self.transition_mode = match v {
                    "symmetric" => TransitionMode::Symmetric,
                    "left" => TransitionMode::Left,
                    "right" => TransitionMode::Right,
                    _ => return Err(format!("unknown mode `{v}` (symmetric|left|right)")),
                }
            }
            "transition.length_factor" => self.transition_length_factor = positive(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "defaults.direction" => self.default_direction.to_string(),
            "defaults.importance" => self.default_importance.to_string(),
            "defaults.lanes" => self.default_lanes.to_string(),
            "defaults.speed" => self.default_speed.to_string(),
            "defaults.width" => self.default_width.to_string(),
            "geom.arc_tolerance" => self.precision.arc_tolerance.to_string(),
            "geom.snap_grid" => self.precision.snap_grid.to_string(),
            "interconnection.parallel_angle_deg" => self.parallel_angle_deg.to_string(),
            "interconnection.samples" => self.interconnection_samples.to_string(),
            "junction.misplaced_factor" => self.misplaced_factor.to_string(),
            "junction.tie_break" => "lexicographic".to_string(),
            "lanes.min_length" => self.lane_min_length.to_string(),
            "network.snap_tol" => self.snap_tol.to_string(),
            "partition.max_iter" => self.partition_max_iter.to_string(),
            "partition.seed" => self.partition_seed.to_string(),
            "radius.by_importance" => fmt_triple(self.radius_by_importance),
            "radius.max" => self.radius_max.to_string(),
            "radius.method" => match self.radius_method {
                RadiusMethod::Guess => "guess".into(),
                RadiusMethod::Setra => "setra".into(),
            },
            "radius.min" => self.radius_min.to_string(),
            "roundabout.eps" => self.roundabout_eps.to_string(),
            "roundabout.hough_tol" => self.hough_tol.to_string(),
            "roundabout.min_pts" => self.roundabout_min_pts.to_string(),
            "roundabout.name_sim" => self.name_sim.to_string(),
            "roundabout.r_max" => self.roundabout_r_max.to_string(),
            "roundabout.r_min" => self.roundabout_r_min.to_string(),
            "roundabout.score_threshold" => self.roundabout_score_threshold.to_string(),
            "roundabout.weights" => fmt_triple(self.roundabout_weights),
            "surface.local_window" => self.local_window.to_string(),
            "surface.overcut_factor" => self.overcut_factor.to_string(),
            "transition.default_mode" => match self.transition_mode {
                TransitionMode::Symmetric => "symmetric".into(),
                TransitionMode::Left => "left".into(),
                TransitionMode::Right => "right".into(),
            },
            "transition.length_factor" => self.transition_length_factor.to_string(),
            _ => return None,
        })
    }

    /// Parse settings text over the defaults. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Settings, SettingsError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or(SettingsError::Syntax { line })?;
            let key = k.trim();
            if !KEYS.contains(&key) {
                return Err(SettingsError::UnknownKey { line, key: key.to_string() });
            }
            s.set(key, v).map_err(|reason| SettingsError::InvalidValue { line, key: key.to_string(), reason })?;
        }
        if s.radius_max < s.radius_min {
            return Err(SettingsError::InvalidValue {
                line: 0,
                key: "radius.max".into(),
                reason: format!("{} is below radius.min {}", s.radius_max, s.radius_min),
            });
        }
        if s.roundabout_r_max < s.roundabout_r_min {
            return Err(SettingsError::InvalidValue {
                line: 0,
                key: "roundabout.r_max".into(),
                reason: format!("{} is below roundabout.r_min {}", s.roundabout_r_max, s.roundabout_r_min),
            });
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Settings, SettingsError> {
        let text = std::fs::read_to_string(path).map_err(|e| SettingsError::Io(format!("{}: {e}", path.display())))?;
        Settings::parse(&text)
    }

    /// Load from `path`, else from the file named by `STREETGEN_SETTINGS`, else defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Settings, SettingsError> {
        match path {
            Some(p) => Settings::load(p),
            None => match std::env::var_os(SETTINGS_ENV) {
                Some(p) if !p.is_empty() => Settings::load(Path::new(&p)),
                _ => Ok(Settings::default()),
            },
        }
    }

    /// Every key in sorted order, one `key = value` per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).expect("listed key"));
        }
        out
    }

    pub fn guess_radius_for(&self, importance: Importance) -> f64 {
        match importance {
            Importance::Residential => self.radius_by_importance[0],
            Importance::Medium => self.radius_by_importance[1],
            Importance::Major => self.radius_by_importance[2],
        }
    }
}
