//! Built-in reference scenarios.

use crate::linalg::{from_rows, Matrix, Vector};
use crate::plant::{ExoSystem, FusionCenterGains, LtiPlant};

/// Sampling period of the planar double-integrator (car) scenario.
pub const TAU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: LtiPlant,
    pub exo: ExoSystem,
    pub gains: FusionCenterGains,
    pub x0: Vector,
    pub x_hat0: Vector,
    pub x_r0: Vector,
}

/// Planar double integrator tracking the constant reference (10, 10).
///
/// State is (p1, p2, v1, v2); the fusion center uses `K_x = -[I I]` and the
/// observer gain `L = [-0.7238 I; -0.0020 I]`.
pub fn tracking_scenario() -> Scenario {
    let a = from_rows(&[
        &[1.0, 0.0, TAU, 0.0],
        &[0.0, 1.0, 0.0, TAU],
        &[0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0],
    ]);
    let b = from_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
    let c = from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
    let plant = LtiPlant::new(a, b, c.clone(), c).expect("static scenario data");
    let exo = ExoSystem::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).expect("static scenario data");
    let k_x = from_rows(&[&[-1.0, 0.0, -1.0, 0.0], &[0.0, -1.0, 0.0, -1.0]]);
    let l = from_rows(&[&[-0.7238, 0.0], &[0.0, -0.7238], &[-0.0020, 0.0], &[0.0, -0.0020]]);
    let gains = FusionCenterGains::new(&plant, &exo, l, k_x, Matrix::identity(2, 2)).expect("static scenario data");
    Scenario {
        plant,
        exo,
        gains,
        x0: Vector::zeros(4),
        x_hat0: Vector::zeros(4),
        x_r0: Vector::from_vec(vec![10.0, 10.0]),
    }
}

/// Scalar loop `A = -1, B = 0.2` regulated to zero, started at `x0 = -0.8`.
///
/// With a deterministic quantizer of step 2 the measurement never leaves the
/// zero cell, so the loop never acts.
pub fn motivating_scenario() -> Scenario {
    let s = |v: f64| from_rows(&[&[v]]);
    let plant = LtiPlant::new(s(-1.0), s(0.2), s(1.0), s(1.0)).expect("static scenario data");
    let exo = ExoSystem::new(s(0.0), s(1.0)).expect("static scenario data");
    let gains = FusionCenterGains::new(&plant, &exo, s(-1.0), s(1.0), s(0.0)).expect("static scenario data");
    Scenario {
        plant,
        exo,
        gains,
        x0: Vector::from_vec(vec![-0.8]),
        x_hat0: Vector::zeros(1),
        x_r0: Vector::zeros(1),
    }
}
