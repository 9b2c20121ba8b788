//! Stochastic-quantizer privacy mechanisms for discrete-time LTI tracking
//! control.
//!
//! The fusion center only sees outputs `y = C x` after a stochastic quantizer.
//! Step sizes are chosen so that the quantized output sequence is
//! differentially private with respect to the plant's initial state, and the
//! price in tracking performance is bounded through a discrete Lyapunov
//! equation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod plant;
pub mod privacy;
pub mod quantizers;
pub mod scenario;
pub mod simulate;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use plant::{AssumptionReport, ExoSystem, FusionCenterGains, LtiPlant, RegulatorSolution};
pub use privacy::{ContractionEstimate, PrivacyBudget, UnstableDesign};
pub use quantizers::{StepSchedule, TwoPointPmf};
pub use simulate::{NoisePolicy, QuantizerKind, SimulationConfig, Trajectory};
