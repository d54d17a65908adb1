//! One exploration run from a random start, scored against the true room.

use std::f64::consts::{PI, TAU};

use echoroom_core::planner::advance;
use echoroom_core::seed;
use echoroom_core::{
    Error as CoreError, ExactOracle, Line2, PlannerState, Point2, Polygon2, RigidTransform, RirOracle, Room, Segment2, SimOracle,
    StopRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, OracleKind, Scenario};
use crate::error::Result;

/// Estimated walls further than this from the truth count as failures, meters.
pub const GROSS_ERROR: f64 = 0.1;
/// Largest direction mismatch for a wall match, radians.
pub const MATCH_ANGLE: f64 = 5.0 * PI / 180.0;

const TAG_ROOM: u64 = 1;
const TAG_START: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_PLANNER: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub room_complete: bool,
    /// Planner stops, the start included.
    pub steps: usize,
    /// Per true wall, in polygon edge order; `None` when unmatched.
    pub wall_errors: Vec<Option<f64>>,
    pub true_room: Polygon2,
    /// Robot frame to room frame.
    pub start: RigidTransform,
    /// Room-frame estimate, present when the room closed.
    pub recovered_polygon: Option<Polygon2>,
    /// Room-frame wall estimates: the polygon edges when the room closed,
    /// the confirmed walls otherwise.
    pub estimated_walls: Vec<Line2>,
    /// Every confirmed wall, room frame.
    pub confirmed_walls: Vec<Line2>,
    /// Why the run stopped without closing the room.
    pub failure: Option<String>,
    /// Robot-frame stop records.
    pub trace: Vec<StopRecord>,
}

/// The room of trial `index`.
pub fn trial_room(cfg: &ExperimentConfig, trial_seed: u64) -> Result<Room> {
    let poly = match cfg.scenario {
        Scenario::Fixed => cfg.fixed_polygon()?,
        Scenario::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(trial_seed, TAG_ROOM));
            let (lo, hi) = (cfg.room.side_min, cfg.room.side_max);
            let w = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let h = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            Polygon2::rectangle(w, h)?
        }
    };
    cfg.room_from(poly)
}

/// Uniform start position at least `clearance` from every wall, with a
/// uniform heading.
pub fn random_start(room: &Room, clearance: f64, seed: u64) -> RigidTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poly = room.polygon();
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for v in poly.vertices() {
        lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    let heading = rng.random_range(0.0..TAU);
    loop {
        let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if echoroom_core::geometry::polygon_contains(poly, p) && poly.boundary_distance(p) >= clearance {
            return RigidTransform::new(heading, p);
        }
    }
}

fn angle_between(a: &Line2, b: &Line2) -> f64 {
    let d = (a.direction_angle() - b.direction_angle()).abs();
    d.min(PI - d)
}

/// Greedy wall matching and scoring.
///
/// Pairs are taken in order of (direction within [`MATCH_ANGLE`], foot
/// point distance, direction difference); each wall and each estimate is
/// used once. The error of a matched wall is the distance from its midpoint
/// to the estimated line. Only relative geometry enters, so the result is
/// unchanged when both inputs are moved by the same rigid transform.
pub fn score_walls(walls: &[Segment2], estimated: &[Line2]) -> Vec<Option<f64>> {
    if walls.is_empty() {
        return Vec::new();
    }
    let reference = walls.iter().fold(Point2::ORIGIN, |a, w| a + w.midpoint()) * (1.0 / walls.len() as f64);
    let mut pairs = Vec::new();
    for (i, w) in walls.iter().enumerate() {
        let truth = w.line();
        let foot_t = reference + truth.foot_vector(reference);
        for (j, e) in estimated.iter().enumerate() {
            let ang = angle_between(&truth, e);
            let foot_e = reference + e.foot_vector(reference);
            pairs.push((ang > MATCH_ANGLE, foot_t.distance(foot_e), ang, i, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
            .then(a.4.cmp(&b.4))
    });
    let mut out = vec![None; walls.len()];
    let mut used = vec![false; estimated.len()];
    for (far, _, _, i, j) in pairs {
        if far || out[i].is_some() || used[j] {
            continue;
        }
        out[i] = Some(estimated[j].distance_to(walls[i].midpoint()));
        used[j] = true;
    }
    out
}

struct Outcome {
    polygon: Option<Polygon2>,
    lines: Vec<Line2>,
    trace: Vec<StopRecord>,
    steps: usize,
    failure: Option<String>,
}

/// Steps the planner to completion, keeping the partial state when it runs
/// out of stops.
fn explore_with<O: SimOracle>(oracle: &mut O, cfg: &ExperimentConfig, planner_seed: u64) -> Result<Outcome> {
    let pcfg = cfg.planner_config();
    let mut state = PlannerState::new(&pcfg, planner_seed)?;
    let mut trace = Vec::new();
    loop {
        match advance(&state, oracle, &pcfg) {
            Ok(out) => {
                trace.push(out.record);
                state = out.new_state;
                if let Some(room) = out.room {
                    return Ok(Outcome {
                        polygon: Some(room),
                        lines: state.confirmed_lines(),
                        trace,
                        steps: state.stop_count,
                        failure: None,
                    });
                }
            }
            Err(CoreError::MaxStepsExceeded(n)) => {
                return Ok(Outcome {
                    polygon: None,
                    lines: state.confirmed_lines(),
                    steps: trace.last().map_or(0, |r: &StopRecord| r.stop_index),
                    trace,
                    failure: Some(format!("no closed room within {n} stops")),
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Runs trial `index` of the experiment.
pub fn run_trial(cfg: &ExperimentConfig, index: usize) -> Result<TrialReport> {
    cfg.validate()?;
    let trial_seed = seed::derive(cfg.master_seed, index as u64);
    let room = trial_room(cfg, trial_seed)?;
    let start = random_start(&room, cfg.start_clearance, seed::derive(trial_seed, TAG_START));
    let sim = cfg.sim_config(seed::derive(trial_seed, TAG_NOISE));
    let planner_seed = seed::derive(trial_seed, TAG_PLANNER);

    let Outcome {
        polygon: poly,
        lines,
        trace,
        steps,
        failure,
    } = match cfg.oracle {
        OracleKind::Rir => {
            let mut o = RirOracle::new(room.clone(), start, sim, cfg.peaks)?;
            explore_with(&mut o, cfg, planner_seed)?
        }
        OracleKind::Exact => {
            let mut o = ExactOracle::new(room.clone(), start, sim)?;
            explore_with(&mut o, cfg, planner_seed)?
        }
    };

    let confirmed_walls: Vec<Line2> = lines.iter().map(|l| start.apply_line(l)).collect();
    let recovered_polygon = match poly {
        Some(p) => Some(Polygon2::new(p.vertices().iter().map(|v| start.apply(*v)).collect())?),
        None => None,
    };
    // the closed polygon is the estimate; confirmed lines that do not bound
    // it play no part in the room shape
    let estimated_walls: Vec<Line2> = match &recovered_polygon {
        Some(p) => p.edges().map(|e| e.line()).collect(),
        None => confirmed_walls.clone(),
    };
    let truth: Vec<Segment2> = room.polygon().edges().collect();
    let wall_errors = score_walls(&truth, &estimated_walls);
    let room_complete = recovered_polygon.is_some();
    let success = room_complete
        && estimated_walls.len() == truth.len()
        && wall_errors.iter().all(|e| matches!(e, Some(x) if *x <= GROSS_ERROR));

    Ok(TrialReport {
        trial: index,
        seed: trial_seed,
        success,
        room_complete,
        steps,
        wall_errors,
        true_room: room.polygon().clone(),
        start,
        recovered_polygon,
        estimated_walls,
        confirmed_walls,
        failure,
        trace,
    })
}
