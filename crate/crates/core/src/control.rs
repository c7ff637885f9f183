//! Tracking errors, the disturbance-rejecting control torque, and the two
//! composite adaptation laws (IV-DREM and the frozen-snapshot baseline).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::drem::MixedRegression;
use crate::dynamics::ReferencePointRef;
use crate::error::{invalid, Result};

/// Which prediction-error term drives the parameter update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaptationLaw {
    /// `gamma Delta (Ycal - Delta theta_hat)` from the mixed IV regression
    Proposed,
    /// `gamma (Y(t_e) - Psi(t_e) theta_hat)` from the best-conditioned window
    Baseline,
    /// parameter estimate frozen at its initial value
    None,
}

impl std::fmt::Display for AdaptationLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Proposed => "proposed",
            Self::Baseline => "baseline",
            Self::None => "none",
        })
    }
}

impl std::str::FromStr for AdaptationLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "baseline" => Ok(Self::Baseline),
            "none" => Ok(Self::None),
            other => Err(format!(
                "unknown law `{other}` (expected proposed, baseline or none)"
            )),
        }
    }
}

/// Controller, filter and adaptation gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    /// filtered-error slope, `r = e' + alpha e`
    pub alpha: f64,
    /// diagonal of `K`
    pub k: DVector<f64>,
    pub delta_mu: f64,
    /// learning-rate matrix `Gamma`
    pub gamma_matrix: DMatrix<f64>,
    pub gamma_proposed: f64,
    pub gamma_baseline: f64,
    /// filter bandwidth
    pub l: f64,
    /// sliding-window width in seconds
    pub window: f64,
    pub p: f64,
    pub f0: f64,
}

impl ControllerGains {
    pub fn validate(&self, n: usize, n_theta: usize) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(invalid("alpha", "alpha must be positive"));
        }
        if self.k.len() != n {
            return Err(invalid("k", format!("k must have {n} diagonal entries")));
        }
        if !self.k.iter().all(|&x| x > 0.0) {
            return Err(invalid("k", "k entries must be positive"));
        }
        if !(self.delta_mu > 0.0 && self.delta_mu < 1.0) {
            return Err(invalid("delta_mu", "delta_mu must lie in (0,1)"));
        }
        let g = &self.gamma_matrix;
        if g.nrows() != n_theta || g.ncols() != n_theta {
            return Err(invalid(
                "gamma_matrix",
                format!("gamma_matrix must be {n_theta}x{n_theta}"),
            ));
        }
        if (g - g.transpose()).norm() > 1e-12 * (1.0 + g.norm()) || g.clone().cholesky().is_none() {
            return Err(invalid(
                "gamma_matrix",
                "gamma_matrix must be symmetric positive definite",
            ));
        }
        if !(self.gamma_proposed > 0.0) {
            return Err(invalid("gamma_proposed", "gamma_proposed must be positive"));
        }
        if !(self.gamma_baseline > 0.0) {
            return Err(invalid("gamma_baseline", "gamma_baseline must be positive"));
        }
        if !(self.l > 0.0) {
            return Err(invalid("l", "l must be positive"));
        }
        if !(self.window > 0.0) {
            return Err(invalid("T", "T must be positive"));
        }
        if !(self.p >= 1.0) {
            return Err(invalid("p", "p must be at least 1"));
        }
        if !(self.f0 > 0.0) {
            return Err(invalid("F0", "F0 must be positive"));
        }
        Ok(())
    }

    /// `K + delta_mu mu` applied to `r`.
    pub fn feedback(&self, mu: f64, r: &DVector<f64>) -> DVector<f64> {
        r.component_mul(&self.k) + r * (self.delta_mu * mu)
    }
}

/// Tracking error signals at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingErrors {
    pub e: DVector<f64>,
    pub de: DVector<f64>,
    pub r: DVector<f64>,
    pub v: DVector<f64>,
    pub dv: DVector<f64>,
}

/// `e = q_d - q`, `r = e' + alpha e`, `v = dq_d + alpha e`, `dv = ddq_d + alpha e'`.
pub fn tracking_errors(
    reference: ReferencePointRef<'_>,
    q: &DVector<f64>,
    dq: &DVector<f64>,
    alpha: f64,
) -> TrackingErrors {
    let e = reference.q - q;
    let de = reference.dq - dq;
    TrackingErrors {
        r: &de + &e * alpha,
        v: reference.dq + &e * alpha,
        dv: reference.ddq + &de * alpha,
        e,
        de,
    }
}

/// `tau = (K + delta_mu mu) r + Pi^T theta_hat - u_f`.
pub fn control_torque(
    gains: &ControllerGains,
    mu: f64,
    r: &DVector<f64>,
    pi_t: &DMatrix<f64>,
    theta_hat: &DVector<f64>,
    uf: &DVector<f64>,
) -> DVector<f64> {
    gains.feedback(mu, r) + pi_t * theta_hat - uf
}

/// Parameter estimate plus the baseline law's frozen window snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub theta_hat: DVector<f64>,
    pub best_lambda_min: f64,
    pub y_snapshot: DVector<f64>,
    pub psi_snapshot: DMatrix<f64>,
    /// time of the current snapshot, if any
    pub snapshot_time: Option<f64>,
}

impl EstimatorState {
    pub fn new(theta_hat: DVector<f64>) -> Self {
        let m = theta_hat.len();
        Self {
            theta_hat,
            best_lambda_min: 0.0,
            y_snapshot: DVector::zeros(m),
            psi_snapshot: DMatrix::zeros(m, m),
            snapshot_time: None,
        }
    }
}

/// `Gamma (Pi r + gamma Delta (Ycal - Delta theta_hat))`.
///
/// `Pi r` is the `n_theta` vector `(Pi^T)^T r`.
pub fn adaptation_derivative_proposed(
    gains: &ControllerGains,
    pi_t: &DMatrix<f64>,
    r: &DVector<f64>,
    mixed: &MixedRegression,
    theta_hat: &DVector<f64>,
) -> DVector<f64> {
    let prediction = (&mixed.ycal - theta_hat * mixed.delta) * (gains.gamma_proposed * mixed.delta);
    &gains.gamma_matrix * (pi_t.tr_mul(r) + prediction)
}

/// `Gamma (Pi r + gamma (Y(t_e) - Psi(t_e) theta_hat))`.
pub fn adaptation_derivative_baseline(
    gains: &ControllerGains,
    pi_t: &DMatrix<f64>,
    r: &DVector<f64>,
    est: &EstimatorState,
) -> DVector<f64> {
    let prediction = (&est.y_snapshot - &est.psi_snapshot * &est.theta_hat) * gains.gamma_baseline;
    &gains.gamma_matrix * (pi_t.tr_mul(r) + prediction)
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Replaces the snapshot when the window's smallest eigenvalue beats the best
/// seen so far; ties keep the earlier snapshot.
pub fn update_te_snapshot(
    est: &mut EstimatorState,
    t: f64,
    psi_window: &DMatrix<f64>,
    y_window: &DVector<f64>,
) -> bool {
    let lmin = lambda_min(psi_window);
    if lmin > est.best_lambda_min {
        est.best_lambda_min = lmin;
        est.psi_snapshot = (psi_window + psi_window.transpose()) * 0.5;
        est.y_snapshot = y_window.clone();
        est.snapshot_time = Some(t);
        true
    } else {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains() -> ControllerGains {
        ControllerGains {
            alpha: 1.0,
            k: DVector::from_element(2, 2.0),
            delta_mu: 0.8,
            gamma_matrix: DMatrix::identity(5, 5) * 0.01,
            gamma_proposed: 1e10,
            gamma_baseline: 1.0,
            l: 50.0,
            window: 20.0,
            p: 2.0,
            f0: 1.0,
        }
    }

    fn v2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn perfect_tracking_has_zero_error() {
        let (q, dq, ddq) = (v2(0.3, 0.1), v2(-1.0, 2.0), v2(0.5, 0.4));
        let te = tracking_errors(
            ReferencePointRef {
                q: &q,
                dq: &dq,
                ddq: &ddq,
            },
            &q,
            &dq,
            1.7,
        );
        assert_eq!(te.e, v2(0.0, 0.0));
        assert_eq!(te.r, v2(0.0, 0.0));
        assert_eq!(te.v, dq);
        assert_eq!(te.dv, ddq);
    }

    #[test]
    fn filtered_error_arithmetic() {
        let z = v2(0.0, 0.0);
        let qd = v2(1.0, 2.0);
        let te = tracking_errors(
            ReferencePointRef {
                q: &qd,
                dq: &z,
                ddq: &z,
            },
            &z,
            &z,
            1.0,
        );
        assert_eq!(te.r, v2(1.0, 2.0));
        let (q, dq) = (v2(0.3, -0.2), v2(0.9, 0.1));
        let te = tracking_errors(
            ReferencePointRef {
                q: &qd,
                dq: &v2(0.4, 0.4),
                ddq: &z,
            },
            &q,
            &dq,
            2.5,
        );
        assert!((&te.r - &te.e * 2.5 - &te.de).amax() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn torque_values() {
        let g = gains();
        let pi = DMatrix::zeros(2, 5);
        let th = DVector::zeros(5);
        let z = v2(0.0, 0.0);
        assert_eq!(control_torque(&g, 15.0, &z, &pi, &th, &z), z);
        let tau = control_torque(&g, 15.0, &v2(1.0, 0.0), &pi, &th, &z);
        assert!((tau - v2(14.0, 0.0)).norm() < 1e-12);

        let pi = DMatrix::from_fn(2, 5, |i, j| (i + j) as f64 * 0.3);
        let th = DVector::from_element(5, 0.7);
        let uf = v2(0.2, -0.4);
        let r = v2(0.5, 1.5);
        let base = &pi * &th - &uf;
        let t1 = control_torque(&g, 15.0, &r, &pi, &th, &uf) - &base;
        let t2 = control_torque(&g, 15.0, &(2.0 * &r), &pi, &th, &uf) - &base;
        assert!((t2 - 2.0 * t1).norm() < 1e-12);
    }

    #[test]
    fn proposed_law_equilibria_and_scalar_case() {
        let g = gains();
        let pi = DMatrix::from_fn(2, 5, |i, j| (i * j) as f64);
        let z = v2(0.0, 0.0);
        let th = DVector::from_element(5, 1.0);
        let mixed = MixedRegression {
            delta: 0.0,
            ycal: DVector::from_element(5, 3.0),
            wcal: None,
        };
        assert_eq!(
            adaptation_derivative_proposed(&g, &pi, &z, &mixed, &th),
            DVector::zeros(5)
        );

        let delta = 1e-4;
        let mixed = MixedRegression {
            delta,
            ycal: &th * delta,
            wcal: None,
        };
        assert_eq!(
            adaptation_derivative_proposed(&g, &pi, &z, &mixed, &th),
            DVector::zeros(5)
        );

        let scalar = ControllerGains {
            k: DVector::from_element(1, 1.0),
            gamma_matrix: DMatrix::identity(1, 1),
            gamma_proposed: 1.0,
            ..g
        };
        let mixed = MixedRegression {
            delta: 0.5,
            ycal: DVector::from_element(1, 1.0),
            wcal: None,
        };
        let rate = adaptation_derivative_proposed(
            &scalar,
            &DMatrix::zeros(1, 1),
            &DVector::zeros(1),
            &mixed,
            &DVector::zeros(1),
        );
        assert!((rate[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn baseline_law_rest_and_consistent_snapshot() {
        let g = gains();
        let pi = DMatrix::from_fn(2, 5, |i, j| (i + j) as f64);
        let z = v2(0.0, 0.0);
        let mut est = EstimatorState::new(DVector::from_element(5, 0.3));
        assert_eq!(
            adaptation_derivative_baseline(&g, &pi, &z, &est),
            DVector::zeros(5)
        );

        let psi = DMatrix::from_fn(5, 5, |i, j| if i == j { 2.0 + i as f64 } else { 0.1 });
        est.psi_snapshot = psi.clone();
        est.y_snapshot = &psi * &est.theta_hat;
        assert!(adaptation_derivative_baseline(&g, &pi, &z, &est).norm() < 1e-12);
    }

    #[test]
    fn snapshot_tracks_running_argmax() {
        let mut est = EstimatorState::new(DVector::zeros(5));
        let y = DVector::from_element(5, 1.0);
        for (k, lmin) in [0.1, 0.3, 0.2].into_iter().enumerate() {
            update_te_snapshot(
                &mut est,
                k as f64,
                &(DMatrix::identity(5, 5) * lmin),
                &(&y * lmin),
            );
        }
        assert_eq!(est.snapshot_time, Some(1.0));
        assert!((est.best_lambda_min - 0.3).abs() < 1e-12);

        let mut est = EstimatorState::new(DVector::zeros(5));
        update_te_snapshot(&mut est, 0.0, &DMatrix::identity(5, 5), &y);
        update_te_snapshot(&mut est, 1.0, &(DMatrix::identity(5, 5) * 2.0), &y);
        assert_eq!(est.psi_snapshot, DMatrix::identity(5, 5) * 2.0);
        assert!((est.best_lambda_min - 2.0).abs() < 1e-12);
        assert!(!update_te_snapshot(
            &mut est,
            2.0,
            &(DMatrix::identity(5, 5) * 2.0),
            &y
        ));
        assert_eq!(est.snapshot_time, Some(1.0));
    }

    #[test]
    fn gain_validation() {
        let g = gains();
        assert!(g.validate(2, 5).is_ok());
        let bad = ControllerGains {
            delta_mu: 1.5,
            ..g.clone()
        };
        assert_eq!(
            bad.validate(2, 5).unwrap_err().to_string(),
            "invalid delta_mu: delta_mu must lie in (0,1)"
        );
        let bad = ControllerGains {
            gamma_matrix: -DMatrix::identity(5, 5),
            ..g.clone()
        };
        assert!(bad.validate(2, 5).is_err());
        assert!(g.validate(3, 5).is_err());
    }
}
