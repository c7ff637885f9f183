//! Euler-Lagrange plant `M(q) q'' + C(q, q') q' + F(q') + G(q) = tau + tau_d`,
//! its linear-in-parameters regressor blocks, and the time signals that drive
//! a scenario (reference, disturbance, weight function).

mod signals;
mod two_link;
mod weight;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub use signals::{
    DisturbanceProfile, ReferencePoint, ReferencePointRef, ReferenceTrajectory, Sinusoid,
};
pub use two_link::TwoLinkArm;
pub use weight::WeightFunction;

/// Generalized positions and velocities of the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, dq: DVector<f64>) -> Self {
        Self { q, dq }
    }

    pub fn at_rest(q: DVector<f64>) -> Self {
        let dq = DVector::zeros(q.len());
        Self { q, dq }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.dq.iter()).all(|x| x.is_finite())
    }
}

/// True (or estimated) dynamic parameters together with the gravitational constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorParams {
    pub theta: DVector<f64>,
    pub g: f64,
}

impl ManipulatorParams {
    pub const DEFAULT_GRAVITY: f64 = 9.81;

    pub fn new(theta: DVector<f64>, g: f64) -> Self {
        Self { theta, g }
    }
}

/// The four regressor blocks, each stored `n x n_theta`.
///
/// For the vectors `(q, dq, v, dv)` used to build the set:
/// `(phi_m + phi_c + phi_fg) theta = M dv + C v + F + G` and
/// `phi_dm theta = M' dv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSet {
    pub phi_m: DMatrix<f64>,
    pub phi_c: DMatrix<f64>,
    pub phi_fg: DMatrix<f64>,
    pub phi_dm: DMatrix<f64>,
}

impl RegressorSet {
    /// `Phi^T(q, dq, v, dv) = Phi_M + Phi_C + Phi_F + Phi_G`.
    pub fn full(&self) -> DMatrix<f64> {
        &self.phi_m + &self.phi_c + &self.phi_fg
    }
}

/// A plant whose left-hand side is linear in an unknown parameter vector.
///
/// Implementors provide the closed-form matrices and, independently, the
/// regressor blocks; the two are cross-checked by tests. Every regressor is
/// returned in the `n x n_theta` orientation.
pub trait EulerLagrange: Send + Sync + std::fmt::Debug {
    fn dof(&self) -> usize;

    fn n_params(&self) -> usize;

    fn inertia_matrix(&self, params: &ManipulatorParams, q: &DVector<f64>) -> DMatrix<f64>;

    fn coriolis_matrix(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
    ) -> DMatrix<f64>;

    /// `F(dq) + G(q)`.
    fn gravity_friction(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
    ) -> DVector<f64>;

    /// `Phi_M(q, w)` with `Phi_M theta = M(q) w`.
    fn phi_inertia(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64>;

    /// `Phi_C(q, dq, v)` with `Phi_C theta = C(q, dq) v`.
    fn phi_coriolis(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DMatrix<f64>;

    /// `Phi_F(dq) + Phi_G(q)`.
    fn phi_gravity_friction(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
    ) -> DMatrix<f64>;

    /// `Phi_dM(q, dq, w)` with `Phi_dM theta = M'(q) w`.
    fn phi_inertia_rate(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64>;

    fn regressor_blocks(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        v: &DVector<f64>,
        dv: &DVector<f64>,
    ) -> RegressorSet {
        RegressorSet {
            phi_m: self.phi_inertia(params, q, dv),
            phi_c: self.phi_coriolis(params, q, dq, v),
            phi_fg: self.phi_gravity_friction(params, q, dq),
            phi_dm: self.phi_inertia_rate(params, q, dq, dv),
        }
    }

    /// Full regressor `Phi^T(q, dq, v, dv)`.
    fn regressor(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        v: &DVector<f64>,
        dv: &DVector<f64>,
    ) -> DMatrix<f64> {
        self.phi_inertia(params, q, dv)
            + self.phi_coriolis(params, q, dq, v)
            + self.phi_gravity_friction(params, q, dq)
    }

    /// `M'(q)` assembled column by column from `Phi_dM`.
    fn inertia_rate(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
    ) -> DMatrix<f64> {
        let n = self.dof();
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut unit = DVector::zeros(n);
            unit[j] = 1.0;
            let col = self.phi_inertia_rate(params, q, dq, &unit) * &params.theta;
            out.set_column(j, &col);
        }
        out
    }

    /// Checks that the parameter vector has the length this model expects.
    fn check_params(&self, params: &ManipulatorParams) -> Result<()> {
        if params.theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: self.n_params(),
                actual: params.theta.len(),
            });
        }
        Ok(())
    }
}

/// Solves `M(q) q'' = tau + tau_d - C q' - F - G` for the acceleration.
pub fn forward_dynamics(
    model: &dyn EulerLagrange,
    params: &ManipulatorParams,
    q: &DVector<f64>,
    dq: &DVector<f64>,
    tau: &DVector<f64>,
    tau_d: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = model.inertia_matrix(params, q);
    let rhs = tau + tau_d
        - model.coriolis_matrix(params, q, dq) * dq
        - model.gravity_friction(params, q, dq);
    match m.clone().cholesky() {
        Some(chol) => Ok(chol.solve(&rhs)),
        None => m.lu().solve(&rhs).ok_or(Error::SingularInertia),
    }
}

/// Inverse dynamics `M a + C dq + F + G - tau_d`.
pub fn inverse_dynamics(
    model: &dyn EulerLagrange,
    params: &ManipulatorParams,
    q: &DVector<f64>,
    dq: &DVector<f64>,
    ddq: &DVector<f64>,
    tau_d: &DVector<f64>,
) -> DVector<f64> {
    model.inertia_matrix(params, q) * ddq
        + model.coriolis_matrix(params, q, dq) * dq
        + model.gravity_friction(params, q, dq)
        - tau_d
}

/// Kinetic energy `0.5 dq^T M(q) dq`.
pub fn kinetic_energy(
    model: &dyn EulerLagrange,
    params: &ManipulatorParams,
    q: &DVector<f64>,
    dq: &DVector<f64>,
) -> f64 {
    0.5 * dq.dot(&(model.inertia_matrix(params, q) * dq))
}

/// Smallest and largest eigenvalue of `M(q)` over a uniform grid on
/// `[-pi, pi]^n` (n = 2 only; higher dimensions are sampled along the diagonal).
pub fn inertia_bounds(
    model: &dyn EulerLagrange,
    params: &ManipulatorParams,
    per_axis: usize,
) -> (f64, f64) {
    use std::f64::consts::PI;
    let n = model.dof();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let step = 2.0 * PI / (per_axis.max(2) - 1) as f64;
    let mut visit = |q: DVector<f64>| {
        let eig = model.inertia_matrix(params, &q).symmetric_eigenvalues();
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    };
    if n == 2 {
        for i in 0..per_axis {
            for j in 0..per_axis {
                visit(DVector::from_vec(vec![
                    -PI + i as f64 * step,
                    -PI + j as f64 * step,
                ]));
            }
        }
    } else {
        for i in 0..per_axis {
            visit(DVector::from_element(n, -PI + i as f64 * step));
        }
    }
    (lo, hi)
}
