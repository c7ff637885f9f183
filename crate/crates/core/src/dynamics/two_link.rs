use nalgebra::{DMatrix, DVector};

use super::{EulerLagrange, ManipulatorParams};

/// Planar two-link arm with five lumped parameters
/// `theta = (theta1, ..., theta5)`:
///
/// ```text
/// M = [[th1 + 2 th2 c2, th3 + th2 c2], [th3 + th2 c2, th3]]
/// C = [[-th2 s2 dq2, -th2 s2 (dq1 + dq2)], [th2 s2 dq1, 0]]
/// F + G = [th4 g c12 + th5 g c1, th4 g c12]
/// ```
///
/// Friction is folded into the gravity block; there is no velocity term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TwoLinkArm;

impl TwoLinkArm {
    pub const DOF: usize = 2;
    pub const N_PARAMS: usize = 5;

    /// Parameter values of the reference experiment.
    pub fn reference_theta() -> DVector<f64> {
        DVector::from_vec(vec![1.3, 0.28, 0.32, 0.4, 1.4])
    }

    pub fn reference_params() -> ManipulatorParams {
        ManipulatorParams::new(Self::reference_theta(), ManipulatorParams::DEFAULT_GRAVITY)
    }
}

impl EulerLagrange for TwoLinkArm {
    fn dof(&self) -> usize {
        Self::DOF
    }

    fn n_params(&self) -> usize {
        Self::N_PARAMS
    }

    fn inertia_matrix(&self, params: &ManipulatorParams, q: &DVector<f64>) -> DMatrix<f64> {
        let th = &params.theta;
        let c2 = q[1].cos();
        let m12 = th[2] + th[1] * c2;
        DMatrix::from_row_slice(2, 2, &[th[0] + 2.0 * th[1] * c2, m12, m12, th[2]])
    }

    fn coriolis_matrix(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
    ) -> DMatrix<f64> {
        let k = params.theta[1] * q[1].sin();
        DMatrix::from_row_slice(2, 2, &[-k * dq[1], -k * (dq[0] + dq[1]), k * dq[0], 0.0])
    }

    fn gravity_friction(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        _dq: &DVector<f64>,
    ) -> DVector<f64> {
        let th = &params.theta;
        let g = params.g;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        DVector::from_vec(vec![th[3] * g * c12 + th[4] * g * c1, th[3] * g * c12])
    }

    fn phi_inertia(
        &self,
        _params: &ManipulatorParams,
        q: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64> {
        let c2 = q[1].cos();
        #[rustfmt::skip]
        let out = DMatrix::from_row_slice(2, 5, &[
            w[0], c2 * (2.0 * w[0] + w[1]), w[1],        0.0, 0.0,
            0.0,  c2 * w[0],                w[0] + w[1], 0.0, 0.0,
        ]);
        out
    }

    fn phi_coriolis(
        &self,
        _params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DMatrix<f64> {
        let s2 = q[1].sin();
        let mut out = DMatrix::zeros(2, 5);
        out[(0, 1)] = -s2 * (dq[1] * v[0] + (dq[0] + dq[1]) * v[1]);
        out[(1, 1)] = s2 * dq[0] * v[0];
        out
    }

    fn phi_gravity_friction(
        &self,
        params: &ManipulatorParams,
        q: &DVector<f64>,
        _dq: &DVector<f64>,
    ) -> DMatrix<f64> {
        let g = params.g;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        let mut out = DMatrix::zeros(2, 5);
        out[(0, 3)] = g * c12;
        out[(0, 4)] = g * c1;
        out[(1, 3)] = g * c12;
        out
    }

    fn phi_inertia_rate(
        &self,
        _params: &ManipulatorParams,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64> {
        let k = -q[1].sin() * dq[1];
        let mut out = DMatrix::zeros(2, 5);
        out[(0, 1)] = k * (2.0 * w[0] + w[1]);
        out[(1, 1)] = k * w[0];
        out
    }
}
