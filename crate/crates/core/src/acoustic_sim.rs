//! Ground-truth forward model: image-source enumeration and sampled room
//! impulse responses with additive white noise.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{mirror_point, polygon_contains, Line2, Point2, Polygon2, Segment2};
use crate::math;

/// Distances below this are clamped when applying spherical spreading.
pub const DISTANCE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wall {
    pub segment: Segment2,
    /// Reflection factor in `(0, 1]`.
    pub beta: f64,
}

/// Hidden ground truth: a simple polygon whose edges are reflective walls.
#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    polygon: Polygon2,
    walls: Vec<Wall>,
    lines: Vec<Line2>,
}

impl Room {
    pub fn new(polygon: Polygon2, betas: &[f64]) -> Result<Self> {
        if betas.len() != polygon.len() {
            return Err(Error::InvalidConfig("one reflection factor per wall is required"));
        }
        if betas.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
            return Err(Error::InvalidConfig("reflection factors must lie in (0, 1]"));
        }
        let walls: Vec<Wall> = polygon
            .edges()
            .zip(betas)
            .map(|(segment, &beta)| Wall { segment, beta })
            .collect();
        let lines = walls.iter().map(|w| w.segment.line()).collect();
        Ok(Room { polygon, walls, lines })
    }

    pub fn uniform(polygon: Polygon2, beta: f64) -> Result<Self> {
        let betas = vec![beta; polygon.len()];
        Self::new(polygon, &betas)
    }

    pub fn polygon(&self) -> &Polygon2 {
        &self.polygon
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    /// Infinite line of wall `i`.
    pub fn wall_line(&self, i: usize) -> &Line2 {
        &self.lines[i]
    }

    pub fn wall_lines(&self) -> &[Line2] {
        &self.lines
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageSource {
    pub position: Point2,
    pub order: usize,
    /// Wall indices in the order the mirrors were applied.
    pub wall_path: Vec<usize>,
    /// Product of the reflection factors along `wall_path`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    /// m/s
    pub speed_of_sound: f64,
    /// Hz
    pub sample_rate: f64,
    /// Seconds; sets the signal length.
    pub rt60: f64,
    pub max_order: usize,
    /// `f64::INFINITY` disables noise.
    pub noise_snr_db: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            speed_of_sound: 343.0,
            sample_rate: 96_000.0,
            rt60: 0.8,
            max_order: 3,
            noise_snr_db: 30.0,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_of_sound > 0.0 && self.speed_of_sound.is_finite()) {
            return Err(Error::InvalidConfig("speed_of_sound must be positive"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidConfig("sample_rate must be positive"));
        }
        if !(self.rt60 > 0.0 && self.rt60.is_finite()) {
            return Err(Error::InvalidConfig("rt60 must be positive"));
        }
        if self.max_order < 1 {
            return Err(Error::InvalidConfig("max_order must be at least 1"));
        }
        if self.noise_snr_db.is_nan() {
            return Err(Error::InvalidConfig("noise_snr_db must not be NaN"));
        }
        Ok(())
    }

    pub fn signal_len(&self) -> usize {
        math::ceil(self.rt60 * self.sample_rate) as usize
    }

    /// Range covered by one sample period, in meters.
    pub fn sample_distance(&self) -> f64 {
        self.speed_of_sound / self.sample_rate
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rir {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// 1-based microphone index.
    pub mic_index: usize,
}

/// All image sources up to `max_order`, breadth first. Order 0 is the
/// source itself. Positions produced by different wall paths are kept as
/// separate entries.
pub fn enumerate_image_sources(room: &Room, source: Point2, max_order: usize) -> Result<Vec<ImageSource>> {
    if !polygon_contains(room.polygon(), source) {
        return Err(Error::SourceOutsideRoom);
    }
    if max_order < 1 {
        return Err(Error::InvalidConfig("max_order must be at least 1"));
    }
    let mut out = vec![ImageSource {
        position: source,
        order: 0,
        wall_path: Vec::new(),
        amplitude: 1.0,
    }];
    let mut frontier_start = 0;
    for order in 1..=max_order {
        let frontier_end = out.len();
        for parent in frontier_start..frontier_end {
            for (w, wall) in room.walls().iter().enumerate() {
                let p = &out[parent];
                if p.wall_path.last() == Some(&w) {
                    continue;
                }
                let mut wall_path = p.wall_path.clone();
                wall_path.push(w);
                let child = ImageSource {
                    position: mirror_point(p.position, room.wall_line(w)),
                    order,
                    wall_path,
                    amplitude: p.amplitude * wall.beta,
                };
                out.push(child);
            }
        }
        frontier_start = frontier_end;
    }
    Ok(out)
}

/// Time of arrival from an image source to a microphone.
#[inline]
pub fn toa(image: &ImageSource, mic: Point2, speed_of_sound: f64) -> f64 {
    image.position.distance(mic) / speed_of_sound
}

/// Peak amplitude of an image source observed at `distance`.
#[inline]
pub fn attenuated_amplitude(reflection: f64, distance: f64) -> f64 {
    reflection / distance.max(DISTANCE_FLOOR)
}

/// Sampled impulse-train RIR for one microphone. Noise uses an RNG stream
/// derived only from `cfg.rng_seed` and `mic_index`.
pub fn synthesize_rir(room: &Room, source: Point2, mic: Point2, mic_index: usize, cfg: &SimConfig) -> Result<Rir> {
    cfg.validate()?;
    if !polygon_contains(room.polygon(), source) {
        return Err(Error::SourceOutsideRoom);
    }
    if !polygon_contains(room.polygon(), mic) {
        return Err(Error::MicOutsideRoom(mic_index));
    }
    if source.distance(mic) <= crate::geometry::tol::DEGENERATE {
        return Err(Error::CoincidentSourceMic);
    }
    let images = enumerate_image_sources(room, source, cfg.max_order)?;
    let mut samples = vec![0.0; cfg.signal_len()];
    for image in &images {
        let t = toa(image, mic, cfg.speed_of_sound);
        if t >= cfg.rt60 {
            continue;
        }
        let idx = math::round(t * cfg.sample_rate) as usize;
        if let Some(s) = samples.get_mut(idx) {
            *s += attenuated_amplitude(image.amplitude, image.position.distance(mic));
        }
    }
    add_noise(&mut samples, cfg.noise_snr_db, cfg.rng_seed, mic_index);
    Ok(Rir {
        samples,
        sample_rate: cfg.sample_rate,
        mic_index,
    })
}

/// Adds white Gaussian noise at `snr_db` relative to the mean signal power.
pub fn add_noise(samples: &mut [f64], snr_db: f64, seed: u64, stream: usize) {
    if !snr_db.is_finite() || samples.is_empty() {
        return;
    }
    let power = samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64;
    let sigma = math::sqrt(power / math::powf(10.0, snr_db / 10.0));
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    for s in samples.iter_mut() {
        let n: f64 = StandardNormal.sample(&mut rng);
        *s += sigma * n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn room65() -> Room {
        Room::uniform(Polygon2::rectangle(6.0, 5.0).unwrap(), 0.9).unwrap()
    }

    fn noiseless() -> SimConfig {
        SimConfig {
            noise_snr_db: f64::INFINITY,
            ..SimConfig::default()
        }
    }

    #[test]
    fn first_order_images_of_rectangle() {
        let ims = enumerate_image_sources(&room65(), Point2::new(2.0, 1.0), 1).unwrap();
        assert_eq!(ims.len(), 5);
        assert_eq!(ims[0].order, 0);
        let mut got: Vec<_> = ims[1..].iter().map(|i| (i.position.x, i.position.y)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [(-2.0, 1.0), (2.0, -1.0), (2.0, 9.0), (10.0, 1.0)];
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12, "{g:?} vs {w:?}");
        }
    }

    #[test]
    fn image_invariants() {
        let ims = enumerate_image_sources(&room65(), Point2::new(2.0, 1.0), 3).unwrap();
        assert_eq!(ims.len(), 1 + 4 + 12 + 36);
        for im in &ims {
            assert_eq!(im.order, im.wall_path.len());
            assert!(im.wall_path.windows(2).all(|w| w[0] != w[1]));
            assert!((im.amplitude - 0.9f64.powi(im.order as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn source_outside_is_rejected() {
        assert_eq!(
            enumerate_image_sources(&room65(), Point2::new(7.0, 1.0), 1).unwrap_err(),
            Error::SourceOutsideRoom
        );
    }

    #[test]
    fn toa_examples() {
        let im = |x, y| ImageSource {
            position: Point2::new(x, y),
            order: 1,
            wall_path: vec![0],
            amplitude: 1.0,
        };
        assert!((toa(&im(0.0, -2.0), Point2::new(0.0, 1.0), 343.0) - 3.0 / 343.0).abs() < 1e-15);
        assert!((toa(&im(0.0, -2.0), Point2::new(0.0, 1.0), 343.0) - 8.746e-3).abs() < 1e-6);
        assert_eq!(toa(&im(1.0, 1.0), Point2::new(1.0, 1.0), 343.0), 0.0);
        assert!((toa(&im(-4.0, 0.0), Point2::new(0.4, 0.0), 343.0) - 4.4 / 343.0).abs() < 1e-15);
    }

    #[test]
    fn direct_path_lands_on_expected_sample() {
        // 1.715 m -> 1.715 / 343 * 96000 = 480 samples
        let cfg = SimConfig { max_order: 1, ..noiseless() };
        let src = Point2::new(3.0, 2.5);
        let mic = Point2::new(3.0 + 1.715, 2.5);
        let rir = synthesize_rir(&room65(), src, mic, 1, &cfg).unwrap();
        assert_eq!(rir.samples.len(), 76_800);
        assert!(rir.samples[480] > 0.0);
        assert!((rir.samples[480] - 1.0 / 1.715).abs() < 1e-12);
        assert_eq!(rir.samples[479], 0.0);
        assert_eq!(rir.samples[481], 0.0);
    }

    #[test]
    fn noiseless_support_matches_enumeration() {
        let cfg = noiseless();
        let room = room65();
        let src = Point2::new(2.0, 1.0);
        let mic = Point2::new(2.4, 1.0);
        let rir = synthesize_rir(&room, src, mic, 1, &cfg).unwrap();
        // oracle: enumerate, then place each arrival at its rounded sample, summing collisions
        let mut expect: BTreeMap<usize, f64> = BTreeMap::new();
        for im in enumerate_image_sources(&room, src, cfg.max_order).unwrap() {
            let d = im.position.distance(mic);
            let idx = (d / cfg.speed_of_sound * cfg.sample_rate).round() as usize;
            *expect.entry(idx).or_default() += im.amplitude / d.max(0.01);
        }
        let nonzero: BTreeMap<usize, f64> = rir
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0.0)
            .map(|(i, s)| (i, *s))
            .collect();
        assert_eq!(nonzero.keys().collect::<Vec<_>>(), expect.keys().collect::<Vec<_>>());
        for (k, v) in &expect {
            assert!((nonzero[k] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_on_bad_placement() {
        let cfg = noiseless();
        let room = room65();
        let src = Point2::new(2.0, 1.0);
        assert_eq!(
            synthesize_rir(&room, src, Point2::new(-1.0, 1.0), 3, &cfg).unwrap_err(),
            Error::MicOutsideRoom(3)
        );
        assert_eq!(
            synthesize_rir(&room, src, src, 1, &cfg).unwrap_err(),
            Error::CoincidentSourceMic
        );
        assert_eq!(
            synthesize_rir(&room, Point2::new(0.0, 1.0), src, 1, &cfg).unwrap_err(),
            Error::SourceOutsideRoom
        );
    }

    #[test]
    fn near_corner_second_order_precedes_first_order() {
        // mic hugging the floor near the lower-left corner: the floor/left
        // double bounce arrives before the single bounce off the far walls
        let room = room65();
        let src = Point2::new(0.3, 0.3);
        let mic = Point2::new(0.3, 0.05);
        let ims = enumerate_image_sources(&room, src, 2).unwrap();
        let t = |o: usize| -> Vec<f64> {
            ims.iter().filter(|i| i.order == o).map(|i| toa(i, mic, 343.0)).collect()
        };
        let latest_first = t(1).into_iter().fold(0.0, f64::max);
        let earliest_second = t(2).into_iter().fold(f64::INFINITY, f64::min);
        assert!(earliest_second < latest_first);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let room = room65();
        let cfg = SimConfig::default();
        let src = Point2::new(2.0, 1.0);
        let mic = Point2::new(2.4, 1.0);
        let a = synthesize_rir(&room, src, mic, 1, &cfg).unwrap();
        let b = synthesize_rir(&room, src, mic, 1, &cfg).unwrap();
        assert_eq!(a, b);
        let c = synthesize_rir(&room, src, mic, 1, &SimConfig { rng_seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn snr_matches_configuration() {
        let room = room65();
        let cfg = SimConfig { noise_snr_db: 20.0, ..SimConfig::default() };
        let src = Point2::new(2.0, 1.0);
        let mic = Point2::new(2.4, 1.0);
        let clean = synthesize_rir(&room, src, mic, 1, &noiseless()).unwrap();
        let noisy = synthesize_rir(&room, src, mic, 1, &cfg).unwrap();
        let ps: f64 = clean.samples.iter().map(|s| s * s).sum();
        let pn: f64 = clean.samples.iter().zip(&noisy.samples).map(|(c, n)| (n - c).powi(2)).sum();
        let snr = 10.0 * (ps / pn).log10();
        assert!((snr - 20.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn noise_is_independent_across_mics() {
        let n = 100_000;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = 1.0;
        b[0] = 1.0;
        add_noise(&mut a, 0.0, 42, 1);
        add_noise(&mut b, 0.0, 42, 2);
        let (ra, rb) = (&a[1..], &b[1..]);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(ra), mean(rb));
        let cov: f64 = ra.iter().zip(rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 0.1, "{rho}");
    }
}
