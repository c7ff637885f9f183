//! High-gain unknown-input observer.
//!
//! With `x = M(q) r`, `u = -tau` and `f = -tau_d` the filtered-error dynamics
//! read `x' = (Phi - Phi_C(q, dq, r) + Phi_dM(q, dq, r)) theta + f + u`. The
//! observer runs four first-order filters with bandwidth `mu(t)` on the
//! measurable pieces of that equation. Only the regressor `Pi^T` and `u_f`
//! enter the control law; the reconstructed torque is for reporting.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{EulerLagrange, ManipulatorParams};

/// Filter states, all zero at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub xf: DVector<f64>,
    /// `n x n_theta`
    pub phi_f: DMatrix<f64>,
    /// `n x n_theta`
    pub phi_mf: DMatrix<f64>,
    /// filtered `u = -tau`
    pub uf: DVector<f64>,
}

impl ObserverState {
    pub fn zeros(n: usize, n_theta: usize) -> Self {
        Self {
            xf: DVector::zeros(n),
            phi_f: DMatrix::zeros(n, n_theta),
            phi_mf: DMatrix::zeros(n, n_theta),
            uf: DVector::zeros(n),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xf
            .iter()
            .chain(self.phi_f.iter())
            .chain(self.phi_mf.iter())
            .chain(self.uf.iter())
            .all(|x| x.is_finite())
    }
}

/// Measured signals the observer filters at one instant.
#[derive(Debug, Clone)]
pub struct ObserverInputs<'a> {
    /// `x = M(q) r`
    pub x: &'a DVector<f64>,
    /// `Phi^T(q, dq, v, dv)`
    pub phi: &'a DMatrix<f64>,
    /// `Phi_C^T(q, dq, r)`
    pub phi_c_r: &'a DMatrix<f64>,
    /// `Phi_dM^T(q, dq, r)`
    pub phi_dm_r: &'a DMatrix<f64>,
    /// `Phi_M^T(q, r)`
    pub phi_m_r: &'a DMatrix<f64>,
    pub tau: &'a DVector<f64>,
}

/// `x = M(q) r`.
pub fn auxiliary_state(
    model: &dyn EulerLagrange,
    params: &ManipulatorParams,
    q: &DVector<f64>,
    r: &DVector<f64>,
) -> DVector<f64> {
    model.inertia_matrix(params, q) * r
}

/// Time derivative of every observer filter.
pub fn observer_derivatives(
    state: &ObserverState,
    mu: f64,
    dmu: f64,
    inputs: &ObserverInputs<'_>,
) -> ObserverState {
    let x_gain = mu + dmu / mu;
    ObserverState {
        xf: (inputs.x - &state.xf) * x_gain,
        phi_f: (inputs.phi - inputs.phi_c_r + inputs.phi_dm_r - &state.phi_f) * mu,
        phi_mf: (inputs.phi_m_r - &state.phi_mf) * mu,
        uf: (-inputs.tau - &state.uf) * mu,
    }
}

/// `Pi^T = mu (Phi_M^T(q, r) - Phi_Mf) + Phi^T(q, dq, v, dv) - Phi_f`, `n x n_theta`.
pub fn pi_regressor(
    state: &ObserverState,
    mu: f64,
    phi: &DMatrix<f64>,
    phi_m_r: &DMatrix<f64>,
) -> DMatrix<f64> {
    (phi_m_r - &state.phi_mf) * mu + phi - &state.phi_f
}

/// Disturbance torque recovered from the control signal:
/// `tau_d_hat = -mu [Phi_M(q, r) - Phi_Mf - Phi_f / mu] theta_hat + u_f`.
pub fn disturbance_estimate(
    state: &ObserverState,
    mu: f64,
    phi_m_r: &DMatrix<f64>,
    theta_hat: &DVector<f64>,
) -> DVector<f64> {
    let bracket = (phi_m_r - &state.phi_mf) * mu - &state.phi_f;
    -(bracket * theta_hat) + &state.uf
}

/// `chi = mu (x - x_f)`.
pub fn chi(state: &ObserverState, mu: f64, x: &DVector<f64>) -> DVector<f64> {
    (x - &state.xf) * mu
}

/// Reconstruction `f_hat = chi - Phi_f theta - u_f` of `f = -tau_d`, evaluated
/// with the true parameters. Simulation diagnostic only.
pub fn unknown_input_estimate(
    state: &ObserverState,
    mu: f64,
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> DVector<f64> {
    chi(state, mu, x) - &state.phi_f * theta - &state.uf
}

/// Normalized reconstruction error `(f - f_hat) / mu` with `f = -tau_d`.
pub fn normalized_error(
    state: &ObserverState,
    mu: f64,
    x: &DVector<f64>,
    theta: &DVector<f64>,
    tau_d: &DVector<f64>,
) -> DVector<f64> {
    (-tau_d - unknown_input_estimate(state, mu, x, theta)) / mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TwoLinkArm;

    fn v2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn auxiliary_state_is_linear_in_r() {
        let p = TwoLinkArm::reference_params();
        let q = v2(0.0, 0.0);
        assert_eq!(
            auxiliary_state(&TwoLinkArm, &p, &q, &v2(0.0, 0.0)),
            v2(0.0, 0.0)
        );
        let x = auxiliary_state(&TwoLinkArm, &p, &q, &v2(1.0, 0.0));
        assert!((x - v2(1.86, 0.60)).norm() < 1e-12);
        let q = v2(0.4, -1.2);
        let r = v2(0.3, 0.8);
        let x1 = auxiliary_state(&TwoLinkArm, &p, &q, &r);
        let x2 = auxiliary_state(&TwoLinkArm, &p, &q, &(2.0 * &r));
        assert!((x2 - 2.0 * x1).norm() < 1e-12);
    }

    #[test]
    fn zero_inputs_are_an_equilibrium() {
        let s = ObserverState::zeros(2, 5);
        let z = DVector::zeros(2);
        let m = DMatrix::zeros(2, 5);
        let inputs = ObserverInputs {
            x: &z,
            phi: &m,
            phi_c_r: &m,
            phi_dm_r: &m,
            phi_m_r: &m,
            tau: &z,
        };
        for mu in [0.5, 15.0, 200.0] {
            assert_eq!(observer_derivatives(&s, mu, 1.0, &inputs), s);
        }
    }

    #[test]
    fn filtered_input_rate() {
        let s = ObserverState::zeros(2, 5);
        let z = DVector::zeros(2);
        let m = DMatrix::zeros(2, 5);
        let tau = v2(1.0, 1.0);
        let inputs = ObserverInputs {
            x: &z,
            phi: &m,
            phi_c_r: &m,
            phi_dm_r: &m,
            phi_m_r: &m,
            tau: &tau,
        };
        assert_eq!(
            observer_derivatives(&s, 15.0, 0.0, &inputs).uf,
            v2(-15.0, -15.0)
        );
    }

    #[test]
    fn state_filter_matches_closed_form_exponential() {
        // x_f' = mu (c - x_f) integrated with RK4 for three and five time constants
        let (mu, c) = (15.0, 2.5);
        let xc = DVector::from_element(2, c);
        let m = DMatrix::zeros(2, 5);
        let z = DVector::zeros(2);
        let inputs = ObserverInputs {
            x: &xc,
            phi: &m,
            phi_c_r: &m,
            phi_dm_r: &m,
            phi_m_r: &m,
            tau: &z,
        };
        let h = 1e-4;
        let mut s = ObserverState::zeros(2, 5);
        let mut t = 0.0;
        for k in [3.0, 5.0] {
            while t < k / mu - 1e-12 {
                let f = |s: &ObserverState| observer_derivatives(s, mu, 0.0, &inputs).xf;
                let k1 = f(&s);
                let mut s2 = s.clone();
                s2.xf = &s.xf + &k1 * (h / 2.0);
                let k2 = f(&s2);
                s2.xf = &s.xf + &k2 * (h / 2.0);
                let k3 = f(&s2);
                s2.xf = &s.xf + &k3 * h;
                let k4 = f(&s2);
                s.xf += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                t += h;
            }
            let exact = c * (1.0 - (-mu * t).exp());
            assert!((s.xf[0] - exact).abs() < 1e-9);
            assert!((c - s.xf[0]).abs() <= (-k).exp() * c + 1e-9);
        }
    }

    #[test]
    fn pi_reduces_to_regressor_at_start() {
        let s = ObserverState::zeros(2, 5);
        let p = TwoLinkArm::reference_params();
        let (q, dq, v, dv) = (v2(0.1, 0.5), v2(1.0, -1.0), v2(0.3, 0.2), v2(-0.4, 0.9));
        let phi = TwoLinkArm.regressor(&p, &q, &dq, &v, &dv);
        let phi_m_r = TwoLinkArm.phi_inertia(&p, &q, &v2(0.0, 0.0));
        assert_eq!(pi_regressor(&s, 15.0, &phi, &phi_m_r), phi);

        let mut s2 = s.clone();
        s2.phi_mf = phi.clone();
        s2.phi_f = phi.clone() * 0.25;
        let pi = pi_regressor(&s2, 3.0, &phi, &phi);
        assert!((pi - &phi * 0.75).norm() < 1e-12);
    }

    #[test]
    fn disturbance_estimate_is_affine_in_theta_hat() {
        let mut s = ObserverState::zeros(2, 5);
        let th = TwoLinkArm::reference_theta();
        let zero_r = DMatrix::zeros(2, 5);
        assert_eq!(
            disturbance_estimate(&s, 15.0, &zero_r, &th),
            DVector::zeros(2)
        );

        s.phi_f = DMatrix::from_fn(2, 5, |i, j| (i + 2 * j) as f64 * 0.1);
        s.phi_mf = DMatrix::from_fn(2, 5, |i, j| (i as f64 - j as f64) * 0.05);
        s.uf = v2(0.3, -0.7);
        let phi_m_r = DMatrix::from_fn(2, 5, |i, j| ((i * j) as f64).sin());
        let a = disturbance_estimate(&s, 17.0, &phi_m_r, &th) - &s.uf;
        let b = disturbance_estimate(&s, 17.0, &phi_m_r, &(2.0 * &th)) - &s.uf;
        assert!((b - 2.0 * a).norm() < 1e-12);
    }
}
