//! Flight simulation and guidance library for orographic soaring studies.
//!
//! The crate models a fixed-wing MAV wind-hovering in the updraft field of a
//! ramp, with an incremental (INDI-style) outer-loop position controller whose
//! weighted-least-squares control allocation can switch from 3-axis to 2-axis
//! control when the throttle saturates at zero. A Monte-Carlo harness evaluates
//! controller variants over batches of randomized reference positions.
//!
//! All numerics are generic over the scalar type via [`Real`]; `f64` aliases
//! for the main entry types live at the crate root.

pub mod aero;
pub mod allocation;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod math;
pub mod montecarlo;
pub mod windfield;

use core::fmt::{Debug, Display};
use num_traits::{Float, FloatConst, NumAssign, NumCast};

/// Floating-point scalar the library is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + NumCast + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant or config value.
    fn of(v: f64) -> Self {
        NumCast::from(v).expect("finite scalar constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Standard gravity, m/s².
pub fn standard_gravity<T: Real>() -> T {
    T::of(9.80665)
}

pub type Vec3of64 = math::Vec3<f64>;
pub type WindField64 = windfield::WindField<f64>;
pub type AeroModel64 = aero::AeroModel<f64>;
pub type SimState64 = dynamics::SimState<f64>;
pub type InnerLoopModel64 = dynamics::InnerLoopModel<f64>;
pub type ControllerConfig64 = controller::ControllerConfig<f64>;
pub type BatchSpec64 = montecarlo::BatchSpec<f64>;
pub type BatchSummary64 = montecarlo::BatchSummary<f64>;
