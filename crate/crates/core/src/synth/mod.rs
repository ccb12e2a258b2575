//! Synthetic dual-view event streams with known answers.
//!
//! Silhouettes are rasterized every micro-step; pixels that become covered
//! emit a positive event and pixels that become uncovered a negative one.

mod batch;
mod raster;
mod scene;

pub use batch::{
    apply_failure, generate_failure_spec, FailureMode, FailureShare, PlannedTrial, SynthPlan,
};
pub use raster::{coverage, diff, taper, thick_segment, Shape};
pub use scene::{
    generate_quiescent_stream, generate_trial, GroundTruth, LateralScene, NoiseModel, RearScene,
    SceneSpec, ShuttleGeometry, Trial,
};

/// Renders the failure variant of `spec`.
pub fn generate_failure_trial(spec: &SceneSpec, mode: FailureMode) -> crate::Result<Trial> {
    generate_trial(&generate_failure_spec(spec, mode))
}
