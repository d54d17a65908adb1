//! Simulated sensing: turn a rig pose in the robot frame into a
//! four-microphone observation of a hidden room.

use alloc::vec::Vec;

use crate::acoustic_sim::{attenuated_amplitude, enumerate_image_sources, synthesize_rir, Room, SimConfig};
use crate::echoes::{extract_toas, EchoEvent, PeakPickConfig};
use crate::error::{Error, Result};
use crate::geometry::{polygon_contains, Point2, RigidTransform};
use crate::islocate::MicArrayObservation;
use crate::rig::{mic_positions, RigPose, SimOracle};
use crate::seed;

/// Placement limits the simulator enforces on the robot.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Guard {
    /// Minimum distance from the robot centre to any wall, meters.
    pub min_clearance: f64,
    /// Microphones are kept at least this far from the walls, meters.
    pub mic_margin: f64,
}

impl Default for Guard {
    fn default() -> Self {
        Self {
            min_clearance: 0.3,
            mic_margin: 0.05,
        }
    }
}

/// Shared pose handling for both oracles.
#[derive(Debug, Clone)]
struct Placement {
    room: Room,
    /// Robot frame → room frame.
    frame: RigidTransform,
    guard: Guard,
}

impl Placement {
    /// Mic positions in the robot frame and in the room frame, with the arm
    /// extension shortened when the walls are closer than the arms reach.
    fn resolve(&self, pose: &RigPose) -> Result<(Point2, [Point2; 4], Point2, [Point2; 4])> {
        let center_w = self.frame.apply(pose.center);
        if !polygon_contains(self.room.polygon(), center_w) {
            return Err(Error::SourceOutsideRoom);
        }
        let clearance = self.room.polygon().boundary_distance(center_w) - self.guard.mic_margin;
        let ext = pose.arm_extension.min(clearance);
        if !(ext > 0.01) {
            return Err(Error::MicOutsideRoom(1));
        }
        let local = mic_positions(&RigPose { arm_extension: ext, ..*pose });
        let world = local.map(|m| self.frame.apply(m));
        Ok((pose.center, local, center_w, world))
    }

    fn admissible(&self, center: Point2) -> bool {
        let w = self.frame.apply(center);
        polygon_contains(self.room.polygon(), w) && self.room.polygon().boundary_distance(w) >= self.guard.min_clearance
    }
}

/// Full forward model: RIR synthesis with noise followed by peak picking.
/// Every call draws fresh noise from a stream derived from the base seed
/// and a call counter.
#[derive(Debug, Clone)]
pub struct RirOracle {
    placement: Placement,
    sim: SimConfig,
    peaks: PeakPickConfig,
    calls: u64,
}

impl RirOracle {
    pub fn new(room: Room, frame: RigidTransform, sim: SimConfig, peaks: PeakPickConfig) -> Result<Self> {
        sim.validate()?;
        peaks.validate()?;
        Ok(Self {
            placement: Placement { room, frame, guard: Guard::default() },
            sim,
            peaks,
            calls: 0,
        })
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.placement.guard = guard;
        self
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn room(&self) -> &Room {
        &self.placement.room
    }
}

impl SimOracle for RirOracle {
    fn observe(&mut self, pose: &RigPose) -> Result<MicArrayObservation> {
        let (src_l, mics_l, src_w, mics_w) = self.placement.resolve(pose)?;
        let cfg = SimConfig {
            rng_seed: seed::derive(self.sim.rng_seed, self.calls),
            ..self.sim
        };
        self.calls += 1;
        let mut lists: [Vec<EchoEvent>; 4] = Default::default();
        for (k, list) in lists.iter_mut().enumerate() {
            let rir = synthesize_rir(&self.placement.room, src_w, mics_w[k], k + 1, &cfg)?;
            *list = extract_toas(&rir, &self.peaks)?;
        }
        Ok(MicArrayObservation {
            mic_positions: mics_l,
            echo_lists: lists,
            source_position: src_l,
        })
    }

    fn admissible(&self, center: Point2) -> bool {
        self.placement.admissible(center)
    }
}

/// Noiseless, unquantized observations: analytic arrival times of every
/// image source up to `max_order` (coincident arrivals merged).
#[derive(Debug, Clone)]
pub struct ExactOracle {
    placement: Placement,
    sim: SimConfig,
}

impl ExactOracle {
    pub fn new(room: Room, frame: RigidTransform, sim: SimConfig) -> Result<Self> {
        sim.validate()?;
        Ok(Self {
            placement: Placement { room, frame, guard: Guard::default() },
            sim,
        })
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.placement.guard = guard;
        self
    }
}

impl SimOracle for ExactOracle {
    fn observe(&mut self, pose: &RigPose) -> Result<MicArrayObservation> {
        let (src_l, mics_l, src_w, mics_w) = self.placement.resolve(pose)?;
        let images = enumerate_image_sources(&self.placement.room, src_w, self.sim.max_order)?;
        let lists = core::array::from_fn(|k| {
            let mut ev: Vec<EchoEvent> = images
                .iter()
                .map(|im| {
                    let d = im.position.distance(mics_w[k]);
                    EchoEvent {
                        toa: d / self.sim.speed_of_sound,
                        amplitude: attenuated_amplitude(im.amplitude, d),
                        mic_index: k + 1,
                    }
                })
                .filter(|e| e.toa < self.sim.rt60)
                .collect();
            ev.sort_by(|a, b| a.toa.total_cmp(&b.toa));
            ev.dedup_by(|b, a| {
                if (b.toa - a.toa).abs() < 1e-12 {
                    a.amplitude += b.amplitude;
                    true
                } else {
                    false
                }
            });
            ev
        });
        Ok(MicArrayObservation {
            mic_positions: mics_l,
            echo_lists: lists,
            source_position: src_l,
        })
    }

    fn admissible(&self, center: Point2) -> bool {
        self.placement.admissible(center)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mirror_point, Polygon2};
    use crate::islocate::{find_common_is, IsLocateConfig};

    fn room() -> Room {
        Room::uniform(Polygon2::rectangle(6.0, 5.0).unwrap(), 0.9).unwrap()
    }

    #[test]
    fn observations_live_in_the_robot_frame() {
        let frame = RigidTransform::new(0.6, Point2::new(2.0, 1.5));
        let mut o = ExactOracle::new(room(), frame, SimConfig::default()).unwrap();
        let pose = RigPose::new(Point2::ORIGIN, 0.0, 0.4).unwrap();
        let obs = o.observe(&pose).unwrap();
        assert_eq!(obs.source_position, Point2::ORIGIN);
        let cands = find_common_is(&obs, &IsLocateConfig::default());
        let inv = frame.inverse();
        for w in 0..4 {
            let truth = inv.apply(mirror_point(Point2::new(2.0, 1.5), room().wall_line(w)));
            assert!(cands.iter().any(|c| c.position.distance(truth) < 1e-6), "wall {w}");
        }
    }

    #[test]
    fn arms_shrink_near_walls() {
        let frame = RigidTransform::new(0.0, Point2::new(0.35, 2.5));
        let mut o = RirOracle::new(room(), frame, SimConfig::default(), PeakPickConfig::default()).unwrap();
        let obs = o.observe(&RigPose::new(Point2::ORIGIN, 0.0, 0.5).unwrap()).unwrap();
        let r = obs.mic_positions[0].distance(obs.source_position);
        assert!((r - 0.30).abs() < 1e-9, "{r}");
        assert!(o.admissible(Point2::ORIGIN));
        assert!(!o.admissible(Point2::new(-0.1, 0.0)));
        assert_eq!(o.calls(), 1);
    }

    #[test]
    fn rir_oracle_noise_changes_between_calls() {
        let frame = RigidTransform::new(0.0, Point2::new(3.0, 2.5));
        let mut o = RirOracle::new(room(), frame, SimConfig::default(), PeakPickConfig::default()).unwrap();
        let pose = RigPose::new(Point2::ORIGIN, 0.0, 0.4).unwrap();
        let a = o.observe(&pose).unwrap();
        let b = o.observe(&pose).unwrap();
        // strong early arrivals are noise-robust at 30 dB; weak ones near
        // the threshold may come and go
        for k in 0..4 {
            let ta: std::vec::Vec<f64> = a.echo_lists[k].iter().take(6).map(|e| e.toa).collect();
            let tb: std::vec::Vec<f64> = b.echo_lists[k].iter().take(6).map(|e| e.toa).collect();
            assert_eq!(ta, tb);
        }
        assert_ne!(a.echo_lists[0][0].amplitude, b.echo_lists[0][0].amplitude);
    }
}
