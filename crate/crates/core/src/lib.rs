//! Numerics for state-constrained optimal control with Grushin-type
//! degenerate dynamics `y1' = a1`, `y2' = |y1|^nu a2`, and for the
//! associated Lagrangian mean field game.
//!
//! Everything is generic over the floating-point type through [`Scalar`];
//! the `*F64` aliases below fix the usual choice.

mod error;
mod scalar;

pub mod dynamics;
pub mod geometry;
pub mod mfg;
pub mod ocp;
pub mod presets;
pub mod reachability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PointF64 = geometry::Point<f64>;
pub type ConstraintSetF64 = geometry::ConstraintSet<f64>;
pub type ConstraintSetF32 = geometry::ConstraintSet<f32>;
pub type ControlSignalF64 = dynamics::ControlSignal<f64>;
pub type TrajectoryF64 = dynamics::Trajectory<f64>;
pub type TrajectoryF32 = dynamics::Trajectory<f32>;
pub type ValueGridF64 = ocp::ValueGrid<f64>;
pub type AtomicMeasureF64 = mfg::AtomicMeasure<f64>;
pub type TrajectoryMeasureF64 = mfg::TrajectoryMeasure<f64>;
pub type PresetF64 = presets::Preset<f64>;
