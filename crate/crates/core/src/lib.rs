//! Composite adaptive disturbance-rejection control for Euler-Lagrange
//! systems, with an instrumental-variable DREM estimator supplying the
//! prediction-error term of the adaptation law.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: plant model, regressor blocks, reference and disturbance
//!   signals, and the weight function `mu(t)`.
//! * [`observer`]: high-gain unknown-input observer and the regressor `Pi`.
//! * [`drem`]: filtered regression, instrumental variable, sliding-window
//!   extension, averaging and determinant/adjugate mixing.
//! * [`control`]: tracking errors, control torque and the two adaptation laws.
//! * [`sim`]: fixed-step RK4 integration of the closed loop with delay lines,
//!   traces, run metrics and condition diagnostics.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod drem;
pub mod dynamics;
mod error;
pub mod observer;
pub mod sim;

pub use error::{Error, Result};

pub use control::{AdaptationLaw, ControllerGains, EstimatorState};
pub use drem::{DelayLine, DremState, MixedRegression};
pub use dynamics::{
    DisturbanceProfile, EulerLagrange, JointState, ManipulatorParams, ReferenceTrajectory,
    RegressorSet, Sinusoid, TwoLinkArm, WeightFunction,
};
pub use observer::ObserverState;
pub use sim::{run, ConditionReport, RunMetrics, RunOutput, Scenario, SimConfig, TraceRecord};
