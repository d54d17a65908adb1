use echoroom_core::geometry::mirror_point;
use echoroom_core::oracle::Guard;
use echoroom_core::planner::{explore, observe_and_hypothesize};
use echoroom_core::rig::{cluster_candidates, extension_sweeps, pick_best_cluster, rotation_sweep, RigPose};
use echoroom_core::{
    ExactOracle, IsLocateConfig, Line2, PeakPickConfig, PlannerConfig, PlannerState, Point2, Polygon2,
    RigidTransform, RirOracle, Room, SimConfig,
};

fn rect_room(x0: f64, y0: f64, x1: f64, y1: f64) -> Room {
    let poly = Polygon2::new(vec![
        Point2::new(x0, y0),
        Point2::new(x1, y0),
        Point2::new(x1, y1),
        Point2::new(x0, y1),
    ])
    .unwrap();
    Room::uniform(poly, 0.9).unwrap()
}

fn noisy(seed: u64) -> SimConfig {
    SimConfig {
        noise_snr_db: 30.0,
        rng_seed: seed,
        ..SimConfig::default()
    }
}

/// Distance from each true wall midpoint to the closest estimated line of
/// similar direction.
fn wall_errors(room: &Room, estimated: &[Line2]) -> Vec<f64> {
    room.polygon()
        .edges()
        .map(|e| {
            let truth = e.line();
            estimated
                .iter()
                .filter(|l| {
                    let d = (l.direction_angle() - truth.direction_angle()).abs();
                    d.min(std::f64::consts::PI - d) < 0.1
                })
                .map(|l| l.distance_to(e.midpoint()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[test]
fn noiseless_exploration_recovers_the_rectangle() {
    let room = rect_room(0.0, 0.0, 6.0, 5.0);
    for (heading, start) in [(0.0, (3.0, 2.5)), (0.3, (2.2, 1.9)), (-1.2, (4.1, 3.3))] {
        let frame = RigidTransform::new(heading, Point2::new(start.0, start.1));
        let mut o = ExactOracle::new(room.clone(), frame, SimConfig::default()).unwrap();
        let run = explore(&mut o, &PlannerConfig::default(), 11).map_err(|(e, _)| e).unwrap();
        assert_eq!(run.room.len(), 4);
        let world: Vec<Line2> = run.state.confirmed_lines().iter().map(|l| frame.apply_line(l)).collect();
        for err in wall_errors(&room, &world) {
            assert!(err < 1e-6, "start {start:?}: error {err}");
        }
    }
}

#[test]
fn noiseless_interior_stop_returns_a_true_wall() {
    let room = rect_room(0.0, 0.0, 6.0, 5.0);
    let mut o = ExactOracle::new(room.clone(), RigidTransform::new(0.0, Point2::new(2.0, 1.0)), SimConfig::default())
        .unwrap();
    let cfg = PlannerConfig::default();
    let st = PlannerState::new(&cfg, 0).unwrap();
    let line = observe_and_hypothesize(&st, &mut o, &cfg).unwrap().unwrap();
    let shifted: Vec<Line2> = room
        .wall_lines()
        .iter()
        .map(|w| RigidTransform::new(0.0, Point2::new(-2.0, -1.0)).apply_line(w))
        .collect();
    assert!(shifted.iter().any(|w| w.approx_eq(&line, 1e-6)), "{line:?}");
}

#[test]
fn rotation_sweep_accumulates_on_the_near_wall_image() {
    let room = rect_room(-2.0, -2.5, 4.0, 2.5);
    let mut o = RirOracle::new(room, RigidTransform::new(0.0, Point2::ORIGIN), noisy(4), PeakPickConfig::default())
        .unwrap();
    let pose = RigPose::new(Point2::ORIGIN, 0.0, 0.4).unwrap();
    let cands = rotation_sweep(&mut o, &pose, 10.0, &IsLocateConfig::default()).unwrap();
    let clusters = cluster_candidates(&cands, 0.1);
    let near = clusters
        .iter()
        .filter(|c| c.centroid.distance(Point2::new(-4.0, 0.0)) < 0.05)
        .map(|c| c.size)
        .max()
        .unwrap_or(0);
    assert!(near >= 25, "{near}");
    let best = pick_best_cluster(&clusters, Point2::ORIGIN, 9).unwrap();
    assert!(best.size >= 25);
}

#[test]
fn shorter_arms_resolve_a_corner() {
    let d = 0.3;
    let room = rect_room(-d, -d, 5.0, 4.0);
    let truths = [Point2::new(-2.0 * d, 0.0), Point2::new(0.0, -2.0 * d)];
    let corner = Point2::new(-2.0 * d, -2.0 * d);
    let mut o = RirOracle::new(room, RigidTransform::new(0.0, Point2::ORIGIN), noisy(9), PeakPickConfig::default())
        .unwrap()
        .with_guard(Guard {
            min_clearance: 0.0,
            mic_margin: 0.05,
        });
    let pose = RigPose::new(Point2::ORIGIN, 0.0, 0.5).unwrap();
    let sweeps = extension_sweeps(&mut o, &pose, &[0.5, 0.35, 0.2, 0.1], 10.0, &IsLocateConfig::default()).unwrap();
    let best: Vec<Point2> = sweeps
        .iter()
        .map(|(_, c)| pick_best_cluster(&cluster_candidates(c, 0.1), Point2::ORIGIN, 9).unwrap().centroid)
        .collect();
    assert!(best[0].distance(corner) < 0.05, "full arms: {:?}", best[0]);
    assert!(
        best.iter().any(|b| truths.iter().any(|t| t.distance(*b) < 0.05)),
        "{best:?}"
    );
}

#[test]
fn noiseless_open_space_extension_invariance() {
    let room = rect_room(-3.0, -2.0, 4.0, 3.0);
    let mut o = ExactOracle::new(room.clone(), RigidTransform::new(0.0, Point2::ORIGIN), SimConfig::default()).unwrap();
    let pose = RigPose::new(Point2::ORIGIN, 0.0, 0.5).unwrap();
    let sweeps = extension_sweeps(&mut o, &pose, &[0.1, 0.3, 0.5], 10.0, &IsLocateConfig::default()).unwrap();
    for w in room.wall_lines() {
        let truth = mirror_point(Point2::ORIGIN, w);
        for (ext, c) in &sweeps {
            let size = cluster_candidates(c, 0.1)
                .iter()
                .filter(|k| k.centroid.distance(truth) < 1e-6)
                .map(|k| k.size)
                .sum::<usize>();
            assert_eq!(size, 36, "ext {ext} image {truth:?}");
        }
    }
}

#[test]
fn noisy_exploration_recovers_the_rectangle() {
    let room = rect_room(0.0, 0.0, 6.0, 5.0);
    let frame = RigidTransform::new(0.3, Point2::new(2.2, 1.9));
    let mut o = RirOracle::new(room.clone(), frame, noisy(7), PeakPickConfig::default()).unwrap();
    let run = explore(&mut o, &PlannerConfig::default(), 7).map_err(|(e, _)| e).unwrap();
    let world: Vec<Line2> = run.state.confirmed_lines().iter().map(|l| frame.apply_line(l)).collect();
    for err in wall_errors(&room, &world) {
        assert!(err < 0.01, "{err}");
    }
}
