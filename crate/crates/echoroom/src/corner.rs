//! Source near a room corner: full-length arms confuse the corner image
//! with the adjacent walls' images, shorter arms tell them apart.

use echoroom_core::acoustic_sim::{enumerate_image_sources, toa};
use echoroom_core::geometry::mirror_point;
use echoroom_core::oracle::Guard;
use echoroom_core::rig::{cluster_candidates, default_min_support, pick_best_cluster, rotation_sweep, sweep_orientations, RigPose};
use echoroom_core::seed;
use echoroom_core::{IsLocateConfig, PeakPickConfig, Point2, Polygon2, RigidTransform, RirOracle, Room, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerConfig {
    /// Distance from the source to each of the two corner walls, meters.
    pub distance: f64,
    /// Requested extensions, full length first.
    pub extensions: Vec<f64>,
    pub snr_db: f64,
    pub sweep_delta_deg: f64,
    pub cluster_radius: f64,
    /// How close a cluster must be to an image to count as that image.
    pub hit_radius: f64,
    pub side_min: f64,
    pub side_max: f64,
    pub beta: f64,
    /// Microphones stay this far from the walls.
    pub mic_margin: f64,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self {
            distance: 0.3,
            extensions: vec![0.5, 0.35, 0.2, 0.1],
            snr_db: 30.0,
            sweep_delta_deg: 10.0,
            cluster_radius: 0.1,
            hit_radius: 0.05,
            side_min: 3.0,
            side_max: 10.0,
            beta: 0.9,
            mic_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// A true first-order image of one of the corner walls.
    FirstOrder,
    /// The second-order image through the corner.
    Corner,
    Other,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionResult {
    pub requested: f64,
    /// After clipping to the wall clearance.
    pub effective: f64,
    pub best: Option<Point2>,
    pub best_size: usize,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerTrial {
    pub seed: u64,
    pub room: Polygon2,
    pub source: Point2,
    pub first_images: [Point2; 2],
    pub corner_image: Point2,
    pub extensions: Vec<ExtensionResult>,
    /// The full-length sweep alone found a true first-order image.
    pub full_ok: bool,
    /// Some extension found one.
    pub recovered: bool,
}

/// A rectangle with random sides and the source `distance` from both walls
/// of a random corner; returns the room, the source and the two walls.
pub fn corner_room(cfg: &CornerConfig, seed: u64) -> Result<(Room, Point2, [usize; 2])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.random_range(cfg.side_min..=cfg.side_max);
    let h = rng.random_range(cfg.side_min..=cfg.side_max);
    let poly = Polygon2::rectangle(w, h)?;
    let k = rng.random_range(0..4usize);
    let corner = poly.vertices()[k];
    let inward = poly.centroid() - corner;
    let source = corner + Point2::new(cfg.distance * inward.x.signum(), cfg.distance * inward.y.signum());
    let n = poly.len();
    // vertex k joins edges k-1 and k
    let walls = [(k + n - 1) % n, k];
    Ok((Room::uniform(poly, cfg.beta)?, source, walls))
}

/// Runs one sweep per extension from the corner position of trial `seed`.
pub fn corner_trial(cfg: &CornerConfig, seed: u64, sim_seed: u64) -> Result<CornerTrial> {
    let (room, source, walls) = corner_room(cfg, seed::derive(seed, 1))?;
    let first_images = walls.map(|w| mirror_point(source, room.wall_line(w)));
    let corner_image = mirror_point(first_images[0], room.wall_line(walls[1]));
    let sim = SimConfig {
        noise_snr_db: cfg.snr_db,
        rng_seed: sim_seed,
        ..SimConfig::default()
    };
    let mut oracle = RirOracle::new(room.clone(), RigidTransform::new(0.0, Point2::ORIGIN), sim, PeakPickConfig::default())?
        .with_guard(Guard {
            min_clearance: 0.0,
            mic_margin: cfg.mic_margin,
        });
    let clearance = room.polygon().boundary_distance(source) - cfg.mic_margin;
    let start_angle = ChaCha8Rng::seed_from_u64(seed::derive(seed, 2)).random_range(0.0..std::f64::consts::FRAC_PI_2);
    let min_support = default_min_support(sweep_orientations(cfg.sweep_delta_deg)?);
    let islocate = IsLocateConfig::default();

    let mut extensions = Vec::new();
    for &requested in &cfg.extensions {
        let pose = RigPose::new(source, start_angle, requested)?;
        let cands = rotation_sweep(&mut oracle, &pose, cfg.sweep_delta_deg, &islocate)?;
        let best = pick_best_cluster(&cluster_candidates(&cands, cfg.cluster_radius), source, min_support);
        let label = match &best {
            None => Label::None,
            Some(b) if first_images.iter().any(|t| t.distance(b.centroid) < cfg.hit_radius) => Label::FirstOrder,
            Some(b) if corner_image.distance(b.centroid) < cfg.hit_radius => Label::Corner,
            Some(_) => Label::Other,
        };
        extensions.push(ExtensionResult {
            requested,
            effective: requested.min(clearance),
            best: best.as_ref().map(|b| b.centroid),
            best_size: best.as_ref().map_or(0, |b| b.size),
            label,
        });
    }
    let full_ok = extensions.first().is_some_and(|e| e.label == Label::FirstOrder);
    let recovered = extensions.iter().any(|e| e.label == Label::FirstOrder);
    Ok(CornerTrial {
        seed,
        room: room.polygon().clone(),
        source,
        first_images,
        corner_image,
        extensions,
        full_ok,
        recovered,
    })
}

/// Arrival pair at one microphone where a second-order image arrives before
/// a first-order one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarlyArrival {
    pub mic: Point2,
    pub second_order_toa: f64,
    pub first_order_toa: f64,
}

/// Searches microphone positions on circles around `source` for an order-2
/// arrival that precedes an order-1 arrival.
pub fn early_second_order(room: &Room, source: Point2, speed_of_sound: f64) -> Result<Option<EarlyArrival>> {
    let images = enumerate_image_sources(room, source, 2)?;
    for r in [0.1, 0.2, 0.25] {
        for k in 0..72 {
            let mic = source + Point2::from_angle(k as f64 * std::f64::consts::TAU / 72.0) * r;
            if room.polygon().boundary_distance(mic) < 0.01 {
                continue;
            }
            let latest_first = images
                .iter()
                .filter(|i| i.order == 1)
                .map(|i| toa(i, mic, speed_of_sound))
                .fold(f64::NEG_INFINITY, f64::max);
            let earliest_second = images
                .iter()
                .filter(|i| i.order == 2)
                .map(|i| toa(i, mic, speed_of_sound))
                .fold(f64::INFINITY, f64::min);
            if earliest_second < latest_first {
                return Ok(Some(EarlyArrival {
                    mic,
                    second_order_toa: earliest_second,
                    first_order_toa: latest_first,
                }));
            }
        }
    }
    Ok(None)
}
