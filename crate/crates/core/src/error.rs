use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("source is not strictly inside the room")]
    SourceOutsideRoom,
    #[error("microphone {0} is not strictly inside the room")]
    MicOutsideRoom(usize),
    #[error("source and microphone coincide")]
    CoincidentSourceMic,
    #[error("signal has no sample above the absolute floor")]
    EmptySignal,
    #[error("microphone triple is (nearly) collinear, |det| = {0:e}")]
    SingularGeometry(f64),
    #[error("planner exceeded {0} stops without closing the room")]
    MaxStepsExceeded(usize),
}
