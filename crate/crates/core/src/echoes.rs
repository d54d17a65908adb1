//! Echo arrival times from an RIR by peak picking.

use alloc::vec::Vec;

use crate::acoustic_sim::Rir;
use crate::error::{Error, Result};
use crate::math;

/// Signals whose peak magnitude is below this floor are treated as empty.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EchoEvent {
    /// Seconds.
    pub toa: f64,
    pub amplitude: f64,
    /// 1-based microphone index.
    pub mic_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PeakPickConfig {
    /// Fraction of the global peak magnitude.
    pub rel_threshold: f64,
    /// Samples.
    pub min_separation: usize,
    pub max_peaks: usize,
}

impl Default for PeakPickConfig {
    fn default() -> Self {
        Self {
            rel_threshold: 0.02,
            min_separation: 8,
            max_peaks: 40,
        }
    }
}

impl PeakPickConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) {
            return Err(Error::InvalidConfig("rel_threshold must lie in (0, 1)"));
        }
        if self.min_separation < 1 {
            return Err(Error::InvalidConfig("min_separation must be at least 1"));
        }
        if self.max_peaks < 4 {
            return Err(Error::InvalidConfig("max_peaks must be at least 4"));
        }
        Ok(())
    }
}

/// Local maxima of `|samples|` above the relative threshold, thinned so no
/// two survivors are closer than `min_separation` samples (larger peaks
/// win), capped at the `max_peaks` largest and returned in time order.
pub fn extract_toas(rir: &Rir, cfg: &PeakPickConfig) -> Result<Vec<EchoEvent>> {
    cfg.validate()?;
    let s = &rir.samples;
    let global = s.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
    if !(global >= ABSOLUTE_FLOOR) {
        return Err(Error::EmptySignal);
    }
    let threshold = cfg.rel_threshold * global;
    let n = s.len();
    let mag = |i: usize| math::abs(s[i]);

    let mut peaks: Vec<(usize, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        let m = mag(i);
        if m < threshold {
            i += 1;
            continue;
        }
        // extend over a plateau and report its first index
        let mut j = i;
        while j + 1 < n && mag(j + 1) == m {
            j += 1;
        }
        let left_ok = i == 0 || mag(i - 1) < m;
        let right_ok = j + 1 == n || mag(j + 1) < m;
        if left_ok && right_ok {
            peaks.push((i, m));
        }
        i = j + 1;
    }

    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::with_capacity(cfg.max_peaks);
    for (idx, m) in peaks {
        if kept.len() == cfg.max_peaks {
            break;
        }
        if kept.iter().all(|(k, _)| k.abs_diff(idx) >= cfg.min_separation) {
            kept.push((idx, m));
        }
    }
    kept.sort_by_key(|(idx, _)| *idx);
    Ok(kept
        .into_iter()
        .map(|(idx, m)| EchoEvent {
            toa: idx as f64 / rir.sample_rate,
            amplitude: m,
            mic_index: rir.mic_index,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic_sim::{enumerate_image_sources, synthesize_rir, Room, SimConfig};
    use crate::geometry::{Point2, Polygon2};
    use std::vec;

    fn train(len: usize, spikes: &[(usize, f64)]) -> Rir {
        let mut samples = vec![0.0; len];
        for &(i, a) in spikes {
            samples[i] = a;
        }
        Rir {
            samples,
            sample_rate: 96_000.0,
            mic_index: 2,
        }
    }

    #[test]
    fn recovers_constructed_train() {
        let rir = train(2000, &[(480, 1.0), (700, 0.5), (1200, 0.3)]);
        let ev = extract_toas(&rir, &PeakPickConfig::default()).unwrap();
        let idx: Vec<usize> = ev.iter().map(|e| (e.toa * 96_000.0).round() as usize).collect();
        assert_eq!(idx, vec![480, 700, 1200]);
        assert!(ev.iter().all(|e| e.mic_index == 2 && e.amplitude > 0.0));
    }

    #[test]
    fn all_zero_is_empty_signal() {
        let rir = train(100, &[]);
        assert_eq!(extract_toas(&rir, &PeakPickConfig::default()).unwrap_err(), Error::EmptySignal);
    }

    #[test]
    fn close_peaks_keep_the_larger() {
        let rir = train(2000, &[(500, 0.4), (505, 1.0), (520, 0.5)]);
        let ev = extract_toas(&rir, &PeakPickConfig::default()).unwrap();
        let idx: Vec<usize> = ev.iter().map(|e| (e.toa * 96_000.0).round() as usize).collect();
        assert_eq!(idx, vec![505, 520]);
    }

    #[test]
    fn negative_polarity_and_cap() {
        let spikes: Vec<(usize, f64)> = (0..50).map(|k| (100 + 20 * k, -1.0 + 0.01 * k as f64)).collect();
        let rir = train(2000, &spikes);
        let ev = extract_toas(&rir, &PeakPickConfig::default()).unwrap();
        assert_eq!(ev.len(), 40);
        // the 40 largest magnitudes are the first 40 spikes
        assert!((ev[39].toa * 96_000.0 - 880.0).abs() < 1e-9);
        assert!(ev.windows(2).all(|w| w[0].toa < w[1].toa));
    }

    #[test]
    fn rejects_bad_config() {
        let rir = train(10, &[(3, 1.0)]);
        let cfg = PeakPickConfig { max_peaks: 3, ..PeakPickConfig::default() };
        assert!(matches!(extract_toas(&rir, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn first_order_toas_recovered_from_noiseless_rir() {
        let room = Room::uniform(Polygon2::rectangle(6.0, 5.0).unwrap(), 0.9).unwrap();
        let cfg = SimConfig { noise_snr_db: f64::INFINITY, ..SimConfig::default() };
        let src = Point2::new(2.0, 1.0);
        let mic = Point2::new(2.0, 1.4);
        let rir = synthesize_rir(&room, src, mic, 1, &cfg).unwrap();
        let ev = extract_toas(&rir, &PeakPickConfig::default()).unwrap();
        for im in enumerate_image_sources(&room, src, 1).unwrap().iter().filter(|i| i.order == 1) {
            let want = im.position.distance(mic) / 343.0 * 96_000.0;
            assert!(
                ev.iter().any(|e| (e.toa * 96_000.0 - want).abs() <= 1.0),
                "missing image {:?}",
                im.position
            );
        }
    }

    #[test]
    fn recall_at_30db_over_random_placements() {
        use rand::{Rng, SeedableRng};
        let room = Room::uniform(Polygon2::rectangle(6.0, 5.0).unwrap(), 0.9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (mut hit, mut total) = (0usize, 0usize);
        for trial in 0..100u64 {
            let src = Point2::new(rng.random_range(0.8..5.2), rng.random_range(0.8..4.2));
            let mic = src + Point2::from_angle(rng.random_range(0.0..6.283)) * 0.4;
            let cfg = SimConfig { rng_seed: trial, ..SimConfig::default() };
            let rir = synthesize_rir(&room, src, mic, 1, &cfg).unwrap();
            let ev = extract_toas(&rir, &PeakPickConfig::default()).unwrap();
            for im in enumerate_image_sources(&room, src, 1).unwrap().iter().filter(|i| i.order == 1) {
                let want = im.position.distance(mic) / 343.0 * 96_000.0;
                total += 1;
                if ev.iter().any(|e| (e.toa * 96_000.0 - want).abs() <= 1.0) {
                    hit += 1;
                }
            }
        }
        assert!(hit as f64 >= 0.95 * total as f64, "{hit}/{total}");
    }
}
