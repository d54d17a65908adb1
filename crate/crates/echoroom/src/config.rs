//! Experiment configuration, loaded from TOML.
//!
//! Every field has a default, so an empty file is a valid fixed-room
//! experiment. `snr_db = inf` selects noiseless synthesis.

use std::path::Path;

use echoroom_core::{PeakPickConfig, PlannerConfig, Point2, Polygon2, Room, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The configured room in every trial.
    #[serde(alias = "fixed_room")]
    Fixed,
    /// A fresh axis-aligned rectangle per trial.
    #[serde(alias = "random_room")]
    Random,
}

/// How observations are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Sampled RIRs with noise, then peak picking.
    Rir,
    /// Analytic arrival times, no sampling and no noise.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSpec {
    /// Fixed-room size in meters, used when `polygon` is absent.
    pub width: f64,
    pub height: f64,
    /// Explicit fixed room, counter-clockwise `[x, y]` vertices.
    pub polygon: Option<Vec<[f64; 2]>>,
    /// Side-length range for random rectangles.
    pub side_min: f64,
    pub side_max: f64,
    /// Wall reflection coefficient.
    pub beta: f64,
}

impl Default for RoomSpec {
    fn default() -> Self {
        Self {
            width: 6.0,
            height: 5.0,
            polygon: None,
            side_min: 3.0,
            side_max: 10.0,
            beta: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Acoustics {
    pub speed_of_sound: f64,
    pub sample_rate: f64,
    pub rt60: f64,
    pub max_order: usize,
}

impl Default for Acoustics {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            speed_of_sound: s.speed_of_sound,
            sample_rate: s.sample_rate,
            rt60: s.rt60,
            max_order: s.max_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub trials: usize,
    pub master_seed: u64,
    pub snr_db: f64,
    pub oracle: OracleKind,
    /// Worker threads for batches; 0 uses every available core.
    pub workers: usize,
    /// Minimum distance between the random start and the walls, meters.
    pub start_clearance: f64,
    /// Write one trace file per trial in batch mode.
    pub traces: bool,
    pub room: RoomSpec,
    pub acoustics: Acoustics,
    pub peaks: PeakPickConfig,
    pub planner: PlannerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Fixed,
            trials: 100,
            master_seed: 0,
            snr_db: 30.0,
            oracle: OracleKind::Rir,
            workers: 0,
            start_clearance: 0.3,
            traces: false,
            room: RoomSpec::default(),
            acoustics: Acoustics::default(),
            peaks: PeakPickConfig::default(),
            planner: PlannerConfig::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if self.snr_db.is_nan() {
            return Err(config_err("snr_db must be a number or inf"));
        }
        if !(self.start_clearance > 0.0) {
            return Err(config_err("start_clearance must be positive"));
        }
        let r = &self.room;
        if !(r.beta > 0.0 && r.beta <= 1.0) {
            return Err(config_err("room.beta must lie in (0, 1]"));
        }
        match self.scenario {
            Scenario::Fixed => {
                self.fixed_polygon()?;
            }
            Scenario::Random => {
                if !(r.side_min > 2.0 * self.start_clearance && r.side_min <= r.side_max && r.side_max.is_finite()) {
                    return Err(config_err("room side range must satisfy 2·start_clearance < side_min ≤ side_max"));
                }
            }
        }
        self.sim_config(0).validate().map_err(config_err)?;
        self.peaks.validate().map_err(config_err)?;
        self.planner_config().validate().map_err(config_err)?;
        Ok(())
    }

    /// The fixed room outline.
    pub fn fixed_polygon(&self) -> Result<Polygon2> {
        let poly = match &self.room.polygon {
            Some(v) => Polygon2::new(v.iter().map(|p| Point2::new(p[0], p[1])).collect()),
            None => Polygon2::rectangle(self.room.width, self.room.height),
        }
        .map_err(config_err)?;
        if poly.boundary_distance(poly.centroid()) < self.start_clearance {
            return Err(config_err("room leaves no room for the robot"));
        }
        Ok(poly)
    }

    pub fn room_from(&self, polygon: Polygon2) -> Result<Room> {
        Ok(Room::uniform(polygon, self.room.beta)?)
    }

    pub fn sim_config(&self, rng_seed: u64) -> SimConfig {
        SimConfig {
            speed_of_sound: self.acoustics.speed_of_sound,
            sample_rate: self.acoustics.sample_rate,
            rt60: self.acoustics.rt60,
            max_order: self.acoustics.max_order,
            noise_snr_db: self.snr_db,
            rng_seed,
        }
    }

    /// Planner settings with the speed of sound taken from the acoustics.
    pub fn planner_config(&self) -> PlannerConfig {
        let mut p = self.planner.clone();
        p.islocate.speed_of_sound = self.acoustics.speed_of_sound;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let e = ExperimentConfig::from_toml_str("trials = 0").unwrap_err();
        assert!(matches!(e, HarnessError::Config(_)));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn parses_overrides() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            scenario = "random"
            snr_db = inf
            trials = 3
            [room]
            side_min = 4.0
            [planner]
            step_dist = 0.4
            [planner.islocate]
            match_radius = 0.04
            "#,
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::Random);
        assert!(cfg.snr_db.is_infinite());
        assert_eq!(cfg.room.side_min, 4.0);
        assert_eq!(cfg.planner.step_dist, 0.4);
        assert_eq!(cfg.planner.islocate.match_radius, 0.04);
        assert_eq!(cfg.planner.max_steps, PlannerConfig::default().max_steps);
    }

    #[test]
    fn rejects_unknown_and_invalid_fields() {
        assert!(ExperimentConfig::from_toml_str("trails = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[room]\nbeta = 1.5").is_err());
        assert!(ExperimentConfig::from_toml_str("[planner]\nstep_dist = 2.0").is_err());
        assert!(ExperimentConfig::from_toml_str("scenario = \"random\"\n[room]\nside_min = 11.0").is_err());
        assert!(ExperimentConfig::from_toml_str("[room]\npolygon = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]").is_err());
    }

    #[test]
    fn explicit_polygon() {
        let cfg = ExperimentConfig::from_toml_str("[room]\npolygon = [[0.0, 0.0], [5.0, 0.0], [5.0, 4.0], [0.0, 4.0]]")
            .unwrap();
        assert_eq!(cfg.fixed_polygon().unwrap().len(), 4);
    }
}
