//! Run-level metrics and convergence-condition diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{window_determinant, Sample, Scenario, SimConfig};
use crate::drem::Averaging;

/// Length of the final averaging window, seconds.
pub const FINAL_WINDOW: f64 = 10.0;
/// The `|Wcal| F / F'` proxy is evaluated from this many seconds after `t0`.
pub const WCAL_SCALED_FROM: f64 = 10.0;
/// Window length for the Lyapunov time-averages, seconds.
pub const LYAPUNOV_WINDOW: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowDeterminant {
    /// window start `t`; the window is `[t, t + T]`
    pub start: f64,
    pub abs_det: f64,
}

/// Run metrics, all computed on the full-resolution grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub law: String,
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub steps: usize,
    pub final_window: f64,

    pub theta_err_initial: f64,
    pub theta_err_final: f64,
    pub theta_hat_final: Vec<f64>,

    pub final_e_mean: f64,
    pub final_e_sup: f64,
    pub final_theta_err_mean: f64,
    pub final_theta_err_sup: f64,
    pub final_tau_d_err_mean: f64,
    pub final_tau_d_err_sup: f64,

    pub sup_e: f64,
    pub sup_theta_err: f64,
    pub sup_tau_d: f64,
    /// `max_{t,i} |Ycal_i - Delta theta_i - Wcal_i| / (1 + |Delta|)`
    pub max_mixing_identity_residual: f64,
    /// `max_{t,i} |Ycal_i - Delta theta_i| / (1 + |Delta|)`
    pub max_mixing_residual: f64,

    pub delta_final: f64,
    pub delta_l2_total: f64,
    pub delta_l2_quarters: [f64; 4],
    /// `min |Delta(t)|` for `t >= t0 + T`
    pub delta_abs_min_after_window: f64,

    pub lambda_l2_total: f64,
    pub lambda_l2_quarters: [f64; 4],

    /// `sup |Wcal_i| F / F'` over `t >= t0 + 10`
    pub wcal_scaled_sup: f64,
    pub wcal_scaled_quarter_sups: [f64; 4],
    pub wcal_l2_quarters: [f64; 4],

    /// `sup_t max_ij |int zeta_ij w_i|` over the first half of the run
    pub iv_sup_first_half: f64,
    pub iv_sup_total: f64,
    /// final running integrals, `[i][j]` with `i` the joint and `j` the parameter
    pub iv_integrals_final: Vec<Vec<f64>>,

    /// `|det int_t^{t+T} zeta phi^T|` on a 1 s grid
    pub window_determinants: Vec<WindowDeterminant>,

    pub lyapunov_initial: f64,
    pub lyapunov_sup: f64,
    pub lyapunov_window_means: Vec<f64>,

    /// extreme eigenvalues of `M(q(t))` seen along the run
    pub inertia_eig_min: f64,
    pub inertia_eig_max: f64,

    pub baseline_snapshot_time: Option<f64>,
}

pub(super) struct Accumulator {
    cfg: SimConfig,
    window: f64,
    theta: nalgebra::DVector<f64>,
    averaging: Averaging,
    m: RunMetrics,
    final_count: usize,
    final_sums: [f64; 3],
    prev: Option<Prev>,
    iv_integrals: DMatrix<f64>,
    lyap_sum: f64,
    lyap_count: usize,
    lyap_window: usize,
}

struct Prev {
    t: f64,
    delta_sq: f64,
    lambda_sq: f64,
    wcal_sq: f64,
    zeta_w: DMatrix<f64>,
}

fn quarter(t: f64, t0: f64, t_end: f64) -> usize {
    ((4.0 * (t - t0) / (t_end - t0)).floor() as isize).clamp(0, 3) as usize
}

impl Accumulator {
    pub(super) fn new(scenario: &Scenario, cfg: &SimConfig, averaging: Averaging) -> Self {
        let (n, m) = (scenario.dof(), scenario.n_params());
        Self {
            cfg: cfg.clone(),
            window: scenario.gains.window,
            theta: scenario.params.theta.clone(),
            averaging,
            m: RunMetrics {
                law: cfg.law.to_string(),
                t0: cfg.t0,
                t_end: cfg.t_end,
                h: cfg.h,
                steps: cfg.total_steps(),
                final_window: FINAL_WINDOW,
                theta_err_initial: (&scenario.params.theta - &scenario.theta_hat0).norm(),
                theta_err_final: f64::NAN,
                theta_hat_final: Vec::new(),
                final_e_mean: 0.0,
                final_e_sup: 0.0,
                final_theta_err_mean: 0.0,
                final_theta_err_sup: 0.0,
                final_tau_d_err_mean: 0.0,
                final_tau_d_err_sup: 0.0,
                sup_e: 0.0,
                sup_theta_err: 0.0,
                sup_tau_d: 0.0,
                max_mixing_identity_residual: 0.0,
                max_mixing_residual: 0.0,
                delta_final: 0.0,
                delta_l2_total: 0.0,
                delta_l2_quarters: [0.0; 4],
                delta_abs_min_after_window: f64::INFINITY,
                lambda_l2_total: 0.0,
                lambda_l2_quarters: [0.0; 4],
                wcal_scaled_sup: 0.0,
                wcal_scaled_quarter_sups: [0.0; 4],
                wcal_l2_quarters: [0.0; 4],
                iv_sup_first_half: 0.0,
                iv_sup_total: 0.0,
                iv_integrals_final: Vec::new(),
                window_determinants: Vec::new(),
                lyapunov_initial: f64::NAN,
                lyapunov_sup: 0.0,
                lyapunov_window_means: Vec::new(),
                inertia_eig_min: f64::INFINITY,
                inertia_eig_max: f64::NEG_INFINITY,
                baseline_snapshot_time: None,
            },
            final_count: 0,
            final_sums: [0.0; 3],
            prev: None,
            iv_integrals: DMatrix::zeros(n, m),
            lyap_sum: 0.0,
            lyap_count: 0,
            lyap_window: 0,
        }
    }

    pub(super) fn int_delta_sq(&self) -> f64 {
        self.m.delta_l2_total
    }

    pub(super) fn int_lambda_sq(&self) -> f64 {
        self.m.lambda_l2_total
    }

    pub(super) fn observe(&mut self, s: &Sample) {
        let t = s.t;
        let (t0, t_end) = (self.cfg.t0, self.cfg.t_end);
        let m = &mut self.m;
        let sig = &s.signals;
        let e_norm = sig.errors.e.norm();
        let th_norm = s.theta_err.norm();
        let td_norm = s.tau_d_err.norm();

        m.sup_e = m.sup_e.max(e_norm);
        m.sup_theta_err = m.sup_theta_err.max(th_norm);
        m.sup_tau_d = m.sup_tau_d.max(sig.tau_d.norm());
        if t >= t_end - FINAL_WINDOW - 1e-9 {
            self.final_count += 1;
            self.final_sums[0] += e_norm;
            self.final_sums[1] += th_norm;
            self.final_sums[2] += td_norm;
            m.final_e_sup = m.final_e_sup.max(e_norm);
            m.final_theta_err_sup = m.final_theta_err_sup.max(th_norm);
            m.final_tau_d_err_sup = m.final_tau_d_err_sup.max(td_norm);
        }

        let mixed = &s.mixed;
        let delta = mixed.delta;
        let wcal = mixed
            .wcal
            .as_ref()
            .expect("simulation always mixes the disturbance channel");
        for i in 0..self.theta.len() {
            let resid = mixed.ycal[i] - delta * self.theta[i];
            let scale = 1.0 + delta.abs();
            m.max_mixing_residual = m.max_mixing_residual.max(resid.abs() / scale);
            m.max_mixing_identity_residual = m
                .max_mixing_identity_residual
                .max((resid - wcal[i]).abs() / scale);
        }
        m.delta_final = delta;
        if t >= t0 + self.window - 1e-9 {
            m.delta_abs_min_after_window = m.delta_abs_min_after_window.min(delta.abs());
        }

        if t >= t0 + WCAL_SCALED_FROM - 1e-9 {
            let scale = self.averaging.f(t) / self.averaging.df(t);
            let scaled = wcal.amax() * scale;
            m.wcal_scaled_sup = m.wcal_scaled_sup.max(scaled);
            let q = quarter(t, t0, t_end);
            m.wcal_scaled_quarter_sups[q] = m.wcal_scaled_quarter_sups[q].max(scaled);
        }

        // int zeta_ij w_i with zeta stored n x n_theta
        let zeta_w = DMatrix::from_fn(
            self.iv_integrals.nrows(),
            self.iv_integrals.ncols(),
            |i, j| s.state.drem.zeta[(i, j)] * s.state.drem.w[i],
        );
        let delta_sq = delta * delta;
        let lambda_sq = s.lambda.norm_squared();
        let wcal_sq = wcal.norm_squared();
        if let Some(p) = &self.prev {
            let dt = t - p.t;
            let q = quarter(0.5 * (t + p.t), t0, t_end);
            let dd = 0.5 * dt * (delta_sq + p.delta_sq);
            let dl = 0.5 * dt * (lambda_sq + p.lambda_sq);
            m.delta_l2_total += dd;
            m.delta_l2_quarters[q] += dd;
            m.lambda_l2_total += dl;
            m.lambda_l2_quarters[q] += dl;
            m.wcal_l2_quarters[q] += 0.5 * dt * (wcal_sq + p.wcal_sq);
            self.iv_integrals += (&zeta_w + &p.zeta_w) * (0.5 * dt);
        }
        let iv_sup = self.iv_integrals.amax();
        m.iv_sup_total = m.iv_sup_total.max(iv_sup);
        if t <= t0 + 0.5 * (t_end - t0) + 1e-9 {
            m.iv_sup_first_half = m.iv_sup_first_half.max(iv_sup);
        }

        // psi(t) integrates zeta phi^T over [t - T, t]; sample once per second
        let since = t - t0;
        if since >= self.window - 1e-9 && (since - since.round()).abs() < 0.5 * self.cfg.h {
            m.window_determinants.push(WindowDeterminant {
                start: t - self.window,
                abs_det: window_determinant(&s.state),
            });
        }

        if m.lyapunov_initial.is_nan() {
            m.lyapunov_initial = s.lyapunov;
        }
        m.lyapunov_sup = m.lyapunov_sup.max(s.lyapunov);
        let lw = (since / LYAPUNOV_WINDOW).floor() as usize;
        if lw != self.lyap_window && self.lyap_count > 0 {
            m.lyapunov_window_means
                .push(self.lyap_sum / self.lyap_count as f64);
            self.lyap_sum = 0.0;
            self.lyap_count = 0;
        }
        self.lyap_window = lw;
        self.lyap_sum += s.lyapunov;
        self.lyap_count += 1;

        let eig = s.inertia.clone().symmetric_eigenvalues();
        m.inertia_eig_min = m.inertia_eig_min.min(eig.min());
        m.inertia_eig_max = m.inertia_eig_max.max(eig.max());

        m.theta_err_final = th_norm;
        m.theta_hat_final = sig.theta_hat.as_slice().to_vec();

        self.prev = Some(Prev {
            t,
            delta_sq,
            lambda_sq,
            wcal_sq,
            zeta_w,
        });
    }

    pub(super) fn finish(mut self) -> RunMetrics {
        let c = self.final_count.max(1) as f64;
        self.m.final_e_mean = self.final_sums[0] / c;
        self.m.final_theta_err_mean = self.final_sums[1] / c;
        self.m.final_tau_d_err_mean = self.final_sums[2] / c;
        // a trailing partial window is reported only if it spans at least half a window
        let partial = self.lyap_count as f64 * self.cfg.h;
        if self.lyap_count > 0 && partial >= 0.5 * LYAPUNOV_WINDOW {
            self.m
                .lyapunov_window_means
                .push(self.lyap_sum / self.lyap_count as f64);
        }
        self.m.iv_integrals_final = self
            .iv_integrals
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        self.m
    }
}

/// Growth of `int Delta^2` per quarter of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrowth {
    pub total: f64,
    pub quarter_increments: [f64; 4],
    pub final_quarter_positive: bool,
    /// `int Wcal^2` per quarter, for comparison with `Delta`
    pub wcal_quarter_increments: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvIntegralReport {
    pub sup_first_half: f64,
    pub sup_total: f64,
    /// `sup_total / sup_first_half`
    pub growth: f64,
    pub bounded: bool,
    pub final_integrals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcalBoundReport {
    pub sup: f64,
    pub quarter_sups: [f64; 4],
    /// fourth-quarter sup over third-quarter sup
    pub growth_q3_to_q4: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationReport {
    pub grid: Vec<WindowDeterminant>,
    pub min_abs_det: f64,
    /// empirical lower bound of `|Delta|` after the first window
    pub delta_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub total: f64,
    pub quarter_increments: [f64; 4],
    /// final-quarter increment at most 10 % of the first
    pub converging: bool,
}

/// Numerical proxies for the convergence conditions of the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `Delta` not square integrable
    pub delta_not_l2: DeltaGrowth,
    /// instrument and disturbance uncorrelated in the integral sense
    pub iv_disturbance_integrals: IvIntegralReport,
    /// `|Wcal_i| <= c F' / F`
    pub wcal_rate_bound: WcalBoundReport,
    /// window determinant grid
    pub window_excitation: ExcitationReport,
    /// weighted disturbance rate square integrable
    pub lambda_l2: LambdaReport,
    pub all_finite: bool,
}

/// Summarizes the condition proxies of a completed run.
pub fn condition_checks(metrics: &RunMetrics) -> ConditionReport {
    let dq = metrics.delta_l2_quarters;
    let iv_growth = if metrics.iv_sup_first_half > 0.0 {
        metrics.iv_sup_total / metrics.iv_sup_first_half
    } else if metrics.iv_sup_total == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let ws = metrics.wcal_scaled_quarter_sups;
    let wcal_growth = if ws[2] > 0.0 {
        ws[3] / ws[2]
    } else if ws[3] == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let min_abs_det = metrics
        .window_determinants
        .iter()
        .map(|w| w.abs_det)
        .fold(f64::INFINITY, f64::min);
    let lq = metrics.lambda_l2_quarters;
    let report = ConditionReport {
        delta_not_l2: DeltaGrowth {
            total: metrics.delta_l2_total,
            quarter_increments: dq,
            final_quarter_positive: dq[3] > 0.0,
            wcal_quarter_increments: metrics.wcal_l2_quarters,
        },
        iv_disturbance_integrals: IvIntegralReport {
            sup_first_half: metrics.iv_sup_first_half,
            sup_total: metrics.iv_sup_total,
            growth: iv_growth,
            bounded: iv_growth <= 2.0,
            final_integrals: metrics.iv_integrals_final.clone(),
        },
        wcal_rate_bound: WcalBoundReport {
            sup: metrics.wcal_scaled_sup,
            quarter_sups: ws,
            growth_q3_to_q4: wcal_growth,
            bounded: wcal_growth <= 10.0,
        },
        window_excitation: ExcitationReport {
            grid: metrics.window_determinants.clone(),
            min_abs_det,
            delta_lower_bound: metrics.delta_abs_min_after_window,
        },
        lambda_l2: LambdaReport {
            total: metrics.lambda_l2_total,
            quarter_increments: lq,
            converging: lq[3] <= 0.1 * lq[0],
        },
        all_finite: false,
    };
    let all_finite = report.delta_not_l2.total.is_finite()
        && dq.iter().all(|x| x.is_finite())
        && report.iv_disturbance_integrals.sup_total.is_finite()
        && report.wcal_rate_bound.sup.is_finite()
        && report
            .window_excitation
            .grid
            .iter()
            .all(|w| w.abs_det.is_finite())
        && report.lambda_l2.total.is_finite();
    ConditionReport {
        all_finite,
        ..report
    }
}
