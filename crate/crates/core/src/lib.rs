//! Acoustic room-geometry estimation by a mobile robot.
//!
//! The robot carries one omnidirectional source and four microphones on
//! rotatable, extendable arms. At each stop it synthesizes (or measures)
//! room impulse responses, picks echo arrival times, trilaterates common
//! image sources, clusters them over a rotation sweep and turns the best
//! first-order image source into a wall hypothesis. A three-stop
//! confirmation strategy accumulates walls until they close a polygon.
//!
//! The crate is `no_std` and only needs `alloc`. All IO, configuration
//! files and the command line live in the `echoroom` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod acoustic_sim;
pub mod echoes;
pub mod error;
pub mod geometry;
pub mod islocate;
pub(crate) mod math;
pub mod oracle;
pub mod planner;
pub mod rig;
pub mod seed;

pub use acoustic_sim::{ImageSource, Rir, Room, SimConfig, Wall};
pub use echoes::{EchoEvent, PeakPickConfig};
pub use error::{Error, Result};
pub use geometry::{Line2, Point2, Polygon2, RigidTransform, Segment2};
pub use islocate::{CandidateIs, IsLocateConfig, MicArrayObservation};
pub use oracle::{ExactOracle, RirOracle};
pub use planner::{Action, PlannerConfig, PlannerState, StepOutcome, StopRecord, WallHypothesis, WallStatus};
pub use rig::{IsCluster, RigPose, SimOracle};
