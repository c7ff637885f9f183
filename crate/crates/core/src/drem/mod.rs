//! Instrumental-variable dynamic regressor extension and mixing.
//!
//! Pipeline, all filters with zero initial state:
//!
//! 1. Filtered regression `z = phi^T theta + w` with `z' = l (tau - z)`. The
//!    regressor `phi` is realized without joint acceleration through
//!    `M q'' = d/dt (M q') - M' q'`.
//! 2. Instrumental variable `zeta' = l (Phi(q_d, dq_d, ddq_d) - zeta)` built
//!    from the reference trajectory only.
//! 3. Sliding-window extension `y = int_{t-T}^t zeta z`,
//!    `psi = int_{t-T}^t zeta phi^T`.
//! 4. Averaging `Y' = -(F'/F)(Y - y)`, `Psi' = -(F'/F)(Psi - psi)` with the
//!    analytic `F(t) = F0 + t^p - t0^p`.
//! 5. Mixing by `adj(Psi / (1 + |Psi|))` into scalar regressions.
//!
//! `w`, `eps`, `W` and `Wcal` need the true disturbance and exist only as
//! simulation diagnostics.

mod delay;
mod mixing;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

pub use delay::{DelayLine, StagePoint};
pub use mixing::{adjugate, determinant, mix, MixedRegression};

/// Filter-chain states. Regressor-shaped states use the `n x n_theta`
/// orientation; `zeta` therefore holds the transpose of the instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct DremState {
    pub z: DVector<f64>,
    /// filter of `Phi_M(q, dq)`
    pub phi_m_int: DMatrix<f64>,
    /// filter of `-Phi_dM(q, dq, dq) + Phi_C(q, dq, dq) + Phi_F + Phi_G`
    pub phi_rest: DMatrix<f64>,
    pub zeta: DMatrix<f64>,
    pub y: DVector<f64>,
    pub psi: DMatrix<f64>,
    pub yav: DVector<f64>,
    pub psiav: DMatrix<f64>,
    pub eps: DVector<f64>,
    pub wav: DVector<f64>,
    pub w: DVector<f64>,
}

impl DremState {
    pub fn zeros(n: usize, n_theta: usize) -> Self {
        Self {
            z: DVector::zeros(n),
            phi_m_int: DMatrix::zeros(n, n_theta),
            phi_rest: DMatrix::zeros(n, n_theta),
            zeta: DMatrix::zeros(n, n_theta),
            y: DVector::zeros(n_theta),
            psi: DMatrix::zeros(n_theta, n_theta),
            yav: DVector::zeros(n_theta),
            psiav: DMatrix::zeros(n_theta, n_theta),
            eps: DVector::zeros(n_theta),
            wav: DVector::zeros(n_theta),
            w: DVector::zeros(n),
        }
    }

    /// Filtered regressor `phi^T` (`n x n_theta`) given the current `Phi_M(q, dq)`.
    pub fn phi(&self, l: f64, phi_m_qdq: &DMatrix<f64>) -> DMatrix<f64> {
        regressor_from_filters(l, phi_m_qdq, &self.phi_m_int, &self.phi_rest)
    }
}

/// `phi^T = l (Phi_M(q, dq) - phi_m_int) + phi_rest`.
pub fn regressor_from_filters(
    l: f64,
    phi_m_qdq: &DMatrix<f64>,
    phi_m_int: &DMatrix<f64>,
    phi_rest: &DMatrix<f64>,
) -> DMatrix<f64> {
    (phi_m_qdq - phi_m_int) * l + phi_rest
}

/// Rates of the filtered-regression states.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRates {
    pub z: DVector<f64>,
    pub phi_m_int: DMatrix<f64>,
    pub phi_rest: DMatrix<f64>,
    pub w: Option<DVector<f64>>,
}

/// `z' = l (tau - z)`, the two acceleration-free regressor filters, and
/// `w' = l (-tau_d - w)` when the disturbance is known.
pub fn filtered_regression_derivatives(
    state: &DremState,
    l: f64,
    tau: &DVector<f64>,
    phi_m_qdq: &DMatrix<f64>,
    phi_rest_input: &DMatrix<f64>,
    tau_d: Option<&DVector<f64>>,
) -> RegressionRates {
    RegressionRates {
        z: (tau - &state.z) * l,
        phi_m_int: (phi_m_qdq - &state.phi_m_int) * l,
        phi_rest: (phi_rest_input - &state.phi_rest) * l,
        w: tau_d.map(|d| (-d - &state.w) * l),
    }
}

/// `zeta' = l (Phi(q_d, dq_d, ddq_d) - zeta)`.
pub fn instrumental_variable_derivative(
    zeta: &DMatrix<f64>,
    l: f64,
    phi_ref: &DMatrix<f64>,
) -> DMatrix<f64> {
    (phi_ref - zeta) * l
}

/// Window integrands at one instant, all in the stored orientation.
#[derive(Debug, Clone, Copy)]
pub struct WindowSignals<'a> {
    pub zeta: &'a DMatrix<f64>,
    pub z: &'a DVector<f64>,
    pub phi: &'a DMatrix<f64>,
    pub w: Option<&'a DVector<f64>>,
}

/// Rates of the sliding-window integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionRates {
    pub y: DVector<f64>,
    pub psi: DMatrix<f64>,
    pub eps: Option<DVector<f64>>,
}

/// `y' = zeta z - zeta_T z_T`, `psi' = zeta phi^T - zeta_T phi_T^T`,
/// `eps' = zeta w - zeta_T w_T`, where the `_T` signals are delayed by the
/// window width.
pub fn extension_derivatives(
    now: &WindowSignals<'_>,
    delayed: &WindowSignals<'_>,
) -> ExtensionRates {
    let y = now.zeta.tr_mul(now.z) - delayed.zeta.tr_mul(delayed.z);
    let psi = now.zeta.tr_mul(now.phi) - delayed.zeta.tr_mul(delayed.phi);
    let eps = match (now.w, delayed.w) {
        (Some(w), Some(wd)) => Some(now.zeta.tr_mul(w) - delayed.zeta.tr_mul(wd)),
        _ => None,
    };
    ExtensionRates { y, psi, eps }
}

/// Averaging filter with the analytic normalizer `F(t) = F0 + t^p - t0^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averaging {
    pub p: f64,
    pub f0: f64,
    pub t0: f64,
}

impl Averaging {
    pub fn new(p: f64, f0: f64, t0: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid("p", "p must be at least 1"));
        }
        if !(f0 > 0.0) || !f0.is_finite() {
            return Err(invalid("F0", "F0 must be positive"));
        }
        if !(t0 >= 0.0) || !t0.is_finite() {
            return Err(invalid("t0", "t0 must be non-negative"));
        }
        Ok(Self { p, f0, t0 })
    }

    pub fn f(&self, t: f64) -> f64 {
        self.f0 + t.powf(self.p) - self.t0.powf(self.p)
    }

    pub fn df(&self, t: f64) -> f64 {
        if self.p == 1.0 {
            1.0
        } else {
            self.p * t.powf(self.p - 1.0)
        }
    }

    /// `F'(t) / F(t)`.
    pub fn gain(&self, t: f64) -> f64 {
        self.df(t) / self.f(t)
    }
}

/// Rates of the averaged quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingRates {
    pub yav: DVector<f64>,
    pub psiav: DMatrix<f64>,
    pub wav: DVector<f64>,
}

pub fn averaging_derivatives(state: &DremState, gain: f64) -> AveragingRates {
    AveragingRates {
        yav: (&state.yav - &state.y) * -gain,
        psiav: (&state.psiav - &state.psi) * -gain,
        wav: (&state.wav - &state.eps) * -gain,
    }
}
