//! Exploration strategy.
//!
//! A wall is only accepted after three stops report mutually approximate
//! wall lines. Between stops the robot drives parallel to the current
//! hypothesis, towards whichever side is farther from the walls it already
//! knows about. When a stop cannot reproduce the hypothesis the arms are
//! shortened and swept again; when that fails too the robot moves to a
//! random nearby location and starts over. After a confirmation the next
//! hypothesis is seeded from the remaining clusters of the same stop. The
//! run ends once the confirmed walls close a polygon around the start.
//!
//! All positions are in the robot frame: the first stop is the origin.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{line_intersection, point_side, tol, wall_line_from_source_and_is, Line2, Point2, Polygon2};
use crate::islocate::{reflective_point_within_walls, IsLocateConfig};
use crate::math;
use crate::rig::{
    cluster_candidates, corner_mitigation_sweep, default_min_support, mic_positions, rank_clusters, rotation_sweep,
    sweep_orientations, RigPose, SimOracle, MAX_ARM_EXTENSION, MITIGATION_EXTENSIONS,
};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlannerConfig {
    /// Arm rotation step in degrees; must divide 360.
    pub sweep_delta_deg: f64,
    /// Arm extension of the regular sweep, meters.
    pub arm_extension: f64,
    /// Extensions tried when a stop needs a retry, meters.
    pub mitigation_extensions: Vec<f64>,
    pub cluster_radius: f64,
    /// Wall lines use the mean of cluster members within this distance of
    /// the cluster's coordinate-wise median, meters.
    pub center_trim: f64,
    /// `None` means `max(3, orientations / 4)`.
    pub min_support: Option<usize>,
    /// Length of a parallel move, meters.
    pub step_dist: f64,
    /// Radians.
    pub angle_tol: f64,
    /// Relative tolerance on foot-vector magnitudes.
    pub mag_tol: f64,
    /// Radius of the random-restart disc, meters.
    pub restart_radius: f64,
    pub max_steps: usize,
    /// Slack for the reflective-point check against confirmed walls, meters.
    pub wall_check_tolerance: f64,
    pub islocate: IsLocateConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            sweep_delta_deg: 10.0,
            arm_extension: MAX_ARM_EXTENSION,
            mitigation_extensions: MITIGATION_EXTENSIONS.to_vec(),
            cluster_radius: 0.1,
            center_trim: 0.025,
            min_support: None,
            step_dist: 0.5,
            angle_tol: 3.0 * PI / 180.0,
            mag_tol: 0.05,
            restart_radius: 1.0,
            max_steps: 300,
            wall_check_tolerance: 0.02,
            islocate: IsLocateConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        sweep_orientations(self.sweep_delta_deg)?;
        let ext_ok = |e: f64| e > 0.0 && e <= MAX_ARM_EXTENSION;
        if !ext_ok(self.arm_extension) || !self.mitigation_extensions.iter().all(|&e| ext_ok(e)) {
            return Err(Error::InvalidConfig("arm extensions must lie in (0, 0.5] m"));
        }
        if !(self.cluster_radius > 0.0) {
            return Err(Error::InvalidConfig("cluster_radius must be positive"));
        }
        if !(self.center_trim > 0.0) {
            return Err(Error::InvalidConfig("center_trim must be positive"));
        }
        if !(self.step_dist > 0.0 && self.step_dist <= 0.5) {
            return Err(Error::InvalidConfig("step_dist must lie in (0, 0.5] m"));
        }
        if !(self.angle_tol > 0.0 && self.mag_tol > 0.0) {
            return Err(Error::InvalidConfig("approximation tolerances must be positive"));
        }
        if !(self.restart_radius > 0.0) {
            return Err(Error::InvalidConfig("restart_radius must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive"));
        }
        self.islocate.validate()
    }

    pub fn effective_min_support(&self) -> usize {
        self.min_support
            .unwrap_or_else(|| default_min_support(sweep_orientations(self.sweep_delta_deg).unwrap_or(36)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WallStatus {
    Tentative1,
    Tentative2,
    Confirmed,
}

/// One wall line reported at one stop.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupportLine {
    pub line: Line2,
    /// Size of the cluster the line came from.
    pub weight: f64,
    pub stop: usize,
    /// Where the robot stood.
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WallHypothesis {
    pub line: Line2,
    pub support_stops: Vec<usize>,
    pub status: WallStatus,
    pub support: Vec<SupportLine>,
}

impl WallHypothesis {
    fn seed(s: SupportLine) -> Self {
        Self {
            line: s.line,
            support_stops: alloc::vec![s.stop],
            status: WallStatus::Tentative1,
            support: alloc::vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlannerState {
    pub current_pose: RigPose,
    /// Number of stops made so far, the starting position included.
    pub stop_count: usize,
    pub confirmed_walls: Vec<WallHypothesis>,
    pub active_hypothesis: Option<WallHypothesis>,
    pub rng_seed: u64,
    pub origin: Point2,
    pub restarts: u64,
}

impl PlannerState {
    pub fn new(cfg: &PlannerConfig, rng_seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            current_pose: RigPose::new(Point2::ORIGIN, 0.0, cfg.arm_extension)?,
            stop_count: 1,
            confirmed_walls: Vec::new(),
            active_hypothesis: None,
            rng_seed,
            origin: Point2::ORIGIN,
            restarts: 0,
        })
    }

    pub fn confirmed_lines(&self) -> Vec<Line2> {
        self.confirmed_walls.iter().map(|w| w.line).collect()
    }

    /// Confirmed walls plus the active hypothesis.
    fn examined_lines(&self) -> Vec<Line2> {
        let mut v = self.confirmed_lines();
        if let Some(h) = &self.active_hypothesis {
            v.push(h.line);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Action {
    ParallelMove,
    ExtensionRetry,
    RandomRestart,
    WallConfirmed,
    RoomComplete,
}

/// Trace entry for one stop.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StopRecord {
    pub stop_index: usize,
    pub center: Point2,
    pub arm_extension: f64,
    pub action: Action,
    /// Hypothesis carried out of this stop, if any.
    pub hypothesis: Option<Line2>,
    pub status: Option<WallStatus>,
    /// Sizes of the qualifying clusters, biggest first.
    pub cluster_sizes: Vec<usize>,
    pub confirmed_walls: usize,
    /// Stops spent travelling to the next pose.
    pub legs: usize,
    pub next_center: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub new_state: PlannerState,
    pub action: Action,
    /// Present iff `action` is [`Action::RoomComplete`].
    pub room: Option<Polygon2>,
    pub record: StopRecord,
}

/// A wall line proposed by one cluster at the current stop.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Observed {
    line: Line2,
    size: usize,
}

/// Angle-and-foot-vector similarity of two wall lines seen from `origin`.
/// Symmetric and reflexive, but not transitive.
pub fn walls_approximate(w1: &Line2, w2: &Line2, origin: Point2, angle_tol: f64, mag_tol: f64) -> bool {
    let d = math::abs(w1.direction_angle() - w2.direction_angle());
    let d = d.min(PI - d);
    if d > angle_tol {
        return false;
    }
    let v1 = w1.foot_vector(origin);
    let v2 = w2.foot_vector(origin);
    if !(v1.dot(v2) > 0.0) {
        return false;
    }
    let (m1, m2) = (v1.norm(), v2.norm());
    math::abs(m1 - m2) <= mag_tol * m1.max(m2)
}

fn approx(cfg: &PlannerConfig, origin: Point2, a: &Line2, b: &Line2) -> bool {
    walls_approximate(a, b, origin, cfg.angle_tol, cfg.mag_tol)
}

/// Clusters the candidates of one or more sweeps and turns every qualifying
/// cluster into a wall line, best first. Lines that repeat a confirmed wall,
/// whose reflections would happen beyond a confirmed wall, or that lie behind
/// a nearer parallel line seen from the same stop are dropped.
fn hypotheses_from(
    state: &PlannerState,
    cfg: &PlannerConfig,
    candidates: &[crate::islocate::CandidateIs],
) -> (Vec<Observed>, Vec<usize>) {
    let center = state.current_pose.center;
    let clusters = cluster_candidates(candidates, cfg.cluster_radius);
    let ranked = rank_clusters(&clusters, center, cfg.effective_min_support());
    let sizes = ranked.iter().map(|c| c.size).collect();
    let confirmed = state.confirmed_lines();
    let mics = mic_positions(&state.current_pose);
    let out = ranked
        .iter()
        .filter_map(|c| {
            let image = c.trimmed_center(cfg.center_trim);
            let line = wall_line_from_source_and_is(center, image).ok()?;
            if confirmed.iter().any(|w| approx(cfg, state.origin, &line, w)) {
                return None;
            }
            let behind_known_wall = mics
                .iter()
                .any(|&m| !reflective_point_within_walls(image, center, m, &confirmed, cfg.wall_check_tolerance));
            if behind_known_wall {
                return None;
            }
            Some(Observed { line, size: c.size })
        })
        .collect::<Vec<Observed>>();
    let shadowed = |o: &Observed| {
        let v = o.line.foot_vector(center);
        out.iter().any(|n| {
            let w = n.line.foot_vector(center);
            let d = math::abs(o.line.direction_angle() - n.line.direction_angle());
            d.min(PI - d) <= cfg.angle_tol && v.dot(w) > 0.0 && w.norm() < v.norm() * (1.0 - cfg.mag_tol)
        })
    };
    let out = out.iter().filter(|o| !shadowed(o)).copied().collect();
    (out, sizes)
}

fn sweep_hypotheses<O: SimOracle + ?Sized>(
    state: &PlannerState,
    oracle: &mut O,
    cfg: &PlannerConfig,
) -> Result<(Vec<Observed>, Vec<usize>)> {
    let cands = rotation_sweep(oracle, &state.current_pose, cfg.sweep_delta_deg, &cfg.islocate)?;
    Ok(hypotheses_from(state, cfg, &cands))
}

fn mitigation_hypotheses<O: SimOracle + ?Sized>(
    state: &PlannerState,
    oracle: &mut O,
    cfg: &PlannerConfig,
) -> Result<(Vec<Observed>, Vec<usize>)> {
    let cands = corner_mitigation_sweep(
        oracle,
        &state.current_pose,
        &cfg.mitigation_extensions,
        cfg.sweep_delta_deg,
        &cfg.islocate,
    )?;
    Ok(hypotheses_from(state, cfg, &cands))
}

/// Wall line from the best cluster at the current stop, falling back to a
/// corner-mitigation sweep when the regular sweep yields nothing.
pub fn observe_and_hypothesize<O: SimOracle + ?Sized>(
    state: &PlannerState,
    oracle: &mut O,
    cfg: &PlannerConfig,
) -> Result<Option<Line2>> {
    let (mut hyps, _) = sweep_hypotheses(state, oracle, cfg)?;
    if hyps.is_empty() {
        hyps = mitigation_hypotheses(state, oracle, cfg)?.0;
    }
    Ok(hyps.first().map(|h| h.line))
}

/// The two stops `step_dist` away along `hypothesis`, preferred first.
///
/// Candidates are compared by their sorted distances to the examined walls
/// (confirmed walls and the active hypothesis), largest smallest distance
/// winning; a tie goes to the positive tangent direction.
fn parallel_candidates(state: &PlannerState, hypothesis: &Line2, step_dist: f64) -> [Point2; 2] {
    let c = state.current_pose.center;
    let t = hypothesis.tangent();
    let plus = c + t * step_dist;
    let minus = c - t * step_dist;
    let mut examined = state.examined_lines();
    examined.push(*hypothesis);
    let profile = |p: Point2| {
        let mut d: Vec<f64> = examined.iter().map(|l| math::abs(point_side(p, l))).collect();
        d.sort_by(f64::total_cmp);
        d
    };
    let (dp, dm) = (profile(plus), profile(minus));
    for (a, b) in dp.iter().zip(&dm) {
        if math::abs(a - b) > tol::GEOMETRIC {
            return if b > a { [minus, plus] } else { [plus, minus] };
        }
    }
    [plus, minus]
}

/// Next stop for a move parallel to `hypothesis`.
pub fn propose_next_stop(state: &PlannerState, hypothesis: &Line2, step_dist: f64) -> RigPose {
    let [best, _] = parallel_candidates(state, hypothesis, step_dist);
    state.current_pose.with_center(best)
}

/// Closure test: every line must meet at least two others and the
/// half-planes containing `origin` must bound a polygon around it. Lines
/// within `parallel_tol` radians of each other count as parallel, so noisy
/// estimates of opposite walls do not close a room far away. Returns the
/// polygon, counter-clockwise, with vertices at adjacent-wall intersections.
pub fn room_closure(walls: &[Line2], origin: Point2, parallel_tol: f64) -> Option<Polygon2> {
    if walls.len() < 3 {
        return None;
    }
    let sides: Vec<f64> = walls.iter().map(|w| point_side(origin, w)).collect();
    if sides.iter().any(|s| math::abs(*s) <= tol::GEOMETRIC) {
        return None;
    }
    let sin_tol = math::sin(parallel_tol.max(0.0)).max(tol::PARALLEL_SIN);
    let crosses = |a: &Line2, b: &Line2| math::abs(a.normal().cross(b.normal())) > sin_tol;
    for (i, w) in walls.iter().enumerate() {
        let crossings = walls.iter().enumerate().filter(|(j, o)| *j != i && crosses(w, o)).count();
        if crossings < 2 {
            return None;
        }
    }
    // bounded iff the outward normals leave no angular gap of π or more
    let mut angles: Vec<f64> = walls
        .iter()
        .zip(&sides)
        .map(|(w, s)| math::wrap((w.normal() * -s.signum()).angle(), TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    let mut max_gap = TAU - (angles[angles.len() - 1] - angles[0]);
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    if max_gap >= PI - parallel_tol.max(1e-9) {
        return None;
    }

    let inside = |p: Point2| {
        walls
            .iter()
            .zip(&sides)
            .all(|(w, s)| point_side(p, w) * s.signum() >= -1e-7)
    };
    let mut verts: Vec<Point2> = Vec::new();
    for i in 0..walls.len() {
        for j in (i + 1)..walls.len() {
            if !crosses(&walls[i], &walls[j]) {
                continue;
            }
            if let Some(p) = line_intersection(&walls[i], &walls[j]) {
                if inside(p) && verts.iter().all(|v| v.distance(p) > 1e-7) {
                    verts.push(p);
                }
            }
        }
    }
    if verts.len() < 3 {
        return None;
    }
    verts.sort_by(|a, b| (*a - origin).angle().total_cmp(&(*b - origin).angle()));
    Polygon2::new(verts).ok()
}

/// Support-weighted mean of the supporting lines in (normal angle, foot
/// distance) parameters about `origin`.
fn fuse(support: &[SupportLine], origin: Point2) -> Line2 {
    let base = support[0].line.foot_vector(origin).angle();
    let (mut wsum, mut asum, mut rsum) = (0.0, 0.0, 0.0);
    for s in support {
        let v = s.line.foot_vector(origin);
        let mut a = v.angle() - base;
        a -= TAU * math::round(a / TAU);
        wsum += s.weight;
        asum += s.weight * a;
        rsum += s.weight * v.norm();
    }
    let angle = base + asum / wsum;
    let r = rsum / wsum;
    let n = Point2::from_angle(angle);
    Line2::through(origin + n * r, n).unwrap_or(support[0].line)
}

fn restart_target<O: SimOracle + ?Sized>(state: &PlannerState, oracle: &O, cfg: &PlannerConfig) -> Point2 {
    let c = state.current_pose.center;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(state.rng_seed, state.restarts));
    for _ in 0..256 {
        let r = cfg.restart_radius * math::sqrt(rng.random::<f64>());
        let a = rng.random::<f64>() * TAU;
        let p = c + Point2::from_angle(a) * r;
        if r > tol::DEGENERATE && oracle.admissible(p) {
            return p;
        }
    }
    c
}

/// Number of stops needed to travel from `a` to `b` with steps of at most
/// `step_dist`.
fn legs_between(a: Point2, b: Point2, step_dist: f64) -> usize {
    (math::ceil(a.distance(b) / step_dist - 1e-12) as usize).max(1)
}

/// Next stop along a hypothesis chain. A fresh chain takes the exploration
/// preference; a continuing chain keeps its direction of travel. Positions
/// the chain has already observed from are skipped, so its three supporting
/// stops are distinct.
fn chain_move<O: SimOracle + ?Sized>(
    state: &PlannerState,
    h: &WallHypothesis,
    oracle: &O,
    cfg: &PlannerConfig,
) -> Option<Point2> {
    let here = state.current_pose.center;
    let [pref, alt] = parallel_candidates(state, &h.line, cfg.step_dist);
    let order = match h.support.len() {
        0 | 1 => [pref, alt],
        n => {
            let travel = here - h.support[n - 2].position;
            if travel.dot(pref - here) >= 0.0 {
                [pref, alt]
            } else {
                [alt, pref]
            }
        }
    };
    let visited = |p: Point2| h.support.iter().any(|s| s.position.distance(p) < 0.5 * cfg.step_dist);
    for cand in order {
        let dir = cand - here;
        for k in 1..=3 {
            let p = here + dir * k as f64;
            if visited(p) {
                continue;
            }
            if oracle.admissible(p) {
                return Some(p);
            }
            break;
        }
    }
    None
}

/// One stop of the strategy: observe, update the hypothesis chain and move.
pub fn advance<O: SimOracle + ?Sized>(state: &PlannerState, oracle: &mut O, cfg: &PlannerConfig) -> Result<StepOutcome> {
    if state.stop_count > cfg.max_steps {
        return Err(Error::MaxStepsExceeded(cfg.max_steps));
    }
    let mut st = state.clone();
    let stop = st.stop_count;
    let here = st.current_pose.center;
    let (mut hyps, mut sizes) = sweep_hypotheses(&st, oracle, cfg)?;
    let active = st.active_hypothesis.take();

    let matches = |h: &Observed| match &active {
        None => true,
        Some(a) => a.support.iter().all(|s| approx(cfg, st.origin, &h.line, &s.line)),
    };
    let mut retried = false;
    let mut found = hyps.iter().position(matches);
    if found.is_none() {
        (hyps, sizes) = mitigation_hypotheses(&st, oracle, cfg)?;
        retried = true;
        found = hyps.iter().position(matches);
    }

    let mut action = if retried { Action::ExtensionRetry } else { Action::ParallelMove };
    let mut room = None;
    match found {
        None => {
            action = Action::RandomRestart;
        }
        Some(i) => {
            let obs = hyps[i];
            let support = SupportLine {
                line: obs.line,
                weight: obs.size as f64,
                stop,
                position: here,
            };
            match active {
                None => st.active_hypothesis = Some(WallHypothesis::seed(support)),
                Some(mut h) if h.status == WallStatus::Tentative1 => {
                    h.support.push(support);
                    h.support_stops.push(stop);
                    h.status = WallStatus::Tentative2;
                    h.line = obs.line;
                    st.active_hypothesis = Some(h);
                }
                Some(mut h) => {
                    h.support.push(support);
                    h.support_stops.push(stop);
                    h.status = WallStatus::Confirmed;
                    h.line = fuse(&h.support, st.origin);
                    st.confirmed_walls.push(h);
                    action = Action::WallConfirmed;
                    let confirmed = st.confirmed_lines();
                    room = room_closure(&confirmed, st.origin, cfg.angle_tol);
                    if room.is_none() {
                        // seed the next wall from the remaining clusters of this stop
                        let next = hyps.iter().enumerate().find(|(j, o)| {
                            *j != i && !confirmed.iter().any(|w| approx(cfg, st.origin, &o.line, w))
                        });
                        st.active_hypothesis = next.map(|(_, o)| {
                            WallHypothesis::seed(SupportLine {
                                line: o.line,
                                weight: o.size as f64,
                                stop,
                                position: here,
                            })
                        });
                    }
                }
            }
        }
    }

    if room.is_some() {
        action = Action::RoomComplete;
        let record = StopRecord {
            stop_index: stop,
            center: here,
            arm_extension: st.current_pose.arm_extension,
            action,
            hypothesis: None,
            status: None,
            cluster_sizes: sizes,
            confirmed_walls: st.confirmed_walls.len(),
            legs: 0,
            next_center: here,
        };
        return Ok(StepOutcome {
            new_state: st,
            action,
            room,
            record,
        });
    }

    // move: parallel to the active hypothesis when possible, otherwise restart
    let next = st.active_hypothesis.as_ref().and_then(|h| chain_move(&st, h, oracle, cfg));
    let target = match next {
        Some(p) => p,
        None => {
            if action != Action::WallConfirmed {
                action = Action::RandomRestart;
            }
            st.active_hypothesis = None;
            let p = restart_target(&st, oracle, cfg);
            st.restarts += 1;
            p
        }
    };
    let legs = legs_between(here, target, cfg.step_dist);
    st.current_pose = st.current_pose.with_center(target);
    st.stop_count += legs;
    let record = StopRecord {
        stop_index: stop,
        center: here,
        arm_extension: st.current_pose.arm_extension,
        action,
        hypothesis: st.active_hypothesis.as_ref().map(|h| h.line),
        status: st.active_hypothesis.as_ref().map(|h| h.status),
        cluster_sizes: sizes,
        confirmed_walls: st.confirmed_walls.len(),
        legs,
        next_center: target,
    };
    Ok(StepOutcome {
        new_state: st,
        action,
        room: None,
        record,
    })
}

/// Result of a complete exploration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub room: Polygon2,
    pub state: PlannerState,
    pub trace: Vec<StopRecord>,
}

/// Calls [`advance`] until the room closes. `MaxStepsExceeded` reports the
/// partial trace alongside the error.
pub fn explore<O: SimOracle + ?Sized>(
    oracle: &mut O,
    cfg: &PlannerConfig,
    rng_seed: u64,
) -> core::result::Result<Exploration, (Error, Vec<StopRecord>)> {
    let mut state = PlannerState::new(cfg, rng_seed).map_err(|e| (e, Vec::new()))?;
    let mut trace = Vec::new();
    loop {
        match advance(&state, oracle, cfg) {
            Ok(out) => {
                trace.push(out.record);
                state = out.new_state;
                if let Some(room) = out.room {
                    return Ok(Exploration { room, state, trace });
                }
            }
            Err(e) => return Err((e, trace)),
        }
    }
}
