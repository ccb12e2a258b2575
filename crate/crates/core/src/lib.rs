//! Event-camera analysis of badminton smashes.
//!
//! A trial is a pair of synchronized event streams: a lateral view of the
//! shuttlecock flight and a rear view of the racket face. The pipeline
//! detects the swing interval from event-rate statistics, times the impact
//! from the inflection of the shuttlecock's horizontal track, locates the
//! impact on the racket face, and measures the outbound shuttlecock speed.
//! [`agreement`] compares these estimates with reference measurements.

pub mod agreement;
pub mod calibration;
pub mod cluster;
pub mod error;
pub mod events;
pub mod impact_time;
pub mod io;
pub mod locate;
pub mod pipeline;
pub mod speed;
pub mod swing;
pub mod synth;

pub use calibration::Calibration;
pub use error::{Error, Result};
pub use events::{Event, EventPacket, EventStream, PolarityImage, View};
