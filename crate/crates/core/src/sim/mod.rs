//! Closed-loop simulation: plant, observer, IV-DREM filters and adaptation
//! integrated together with fixed-step RK4 on a uniform grid.

mod integrator;
mod layout;
mod metrics;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::{
    self, adaptation_derivative_baseline, adaptation_derivative_proposed, control_torque,
    tracking_errors, update_te_snapshot, AdaptationLaw, ControllerGains, EstimatorState,
    TrackingErrors,
};
use crate::drem::{
    self, averaging_derivatives, extension_derivatives, filtered_regression_derivatives,
    instrumental_variable_derivative, mix, Averaging, DelayLine, DremState, MixedRegression,
    StagePoint, WindowSignals,
};
use crate::dynamics::{
    forward_dynamics, DisturbanceProfile, EulerLagrange, JointState, ManipulatorParams,
    ReferencePoint, ReferenceTrajectory, Sinusoid, TwoLinkArm, WeightFunction,
};
use crate::error::{invalid, Error, Result};
use crate::observer::{
    disturbance_estimate, normalized_error, observer_derivatives, pi_regressor, ObserverInputs,
    ObserverState,
};

pub use integrator::rk4_step;
pub use layout::{BaselineWindow, ClosedLoopState, StateLayout};
pub use metrics::{
    condition_checks, ConditionReport, DeltaGrowth, ExcitationReport, IvIntegralReport,
    LambdaReport, RunMetrics, WcalBoundReport, WindowDeterminant,
};

/// States with magnitude above this abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Everything that defines an experiment apart from the numerics.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Arc<dyn EulerLagrange>,
    /// true plant parameters
    pub params: ManipulatorParams,
    pub initial: JointState,
    pub theta_hat0: DVector<f64>,
    pub reference: ReferenceTrajectory,
    pub disturbance: DisturbanceProfile,
    pub weight: WeightFunction,
    pub gains: ControllerGains,
}

impl Scenario {
    /// Two-link arm experiment: parameters, trajectory, disturbance and gains
    /// of the reference study. The initial estimate is zero.
    pub fn reference_two_link() -> Self {
        use std::f64::consts::PI;
        Self {
            model: Arc::new(TwoLinkArm),
            params: TwoLinkArm::reference_params(),
            initial: JointState::at_rest(DVector::from_vec(vec![0.0, 0.3 * PI])),
            theta_hat0: DVector::zeros(TwoLinkArm::N_PARAMS),
            reference: ReferenceTrajectory::new(vec![
                Sinusoid::new(0.4 * PI, 2.0, 0.0, 0.2 * PI),
                Sinusoid::new(0.3 * PI, 0.3, PI / 2.0, 0.3 * PI),
            ]),
            disturbance: DisturbanceProfile::new(vec![
                Sinusoid::new(7.5, 0.5 * PI, 0.0, 0.0),
                Sinusoid::new(1.5, 0.05 * PI, 0.0, 0.0),
            ]),
            weight: WeightFunction::Affine {
                mu0: 1.0,
                mu1: 15.0,
            },
            gains: ControllerGains {
                alpha: 1.0,
                k: DVector::from_element(2, 2.0),
                delta_mu: 0.8,
                gamma_matrix: DMatrix::identity(5, 5) * 0.01,
                gamma_proposed: 100.0e8,
                gamma_baseline: 100.0e-2,
                l: 50.0,
                window: 20.0,
                p: 2.0,
                f0: 1.0,
            },
        }
    }

    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.dof(), self.n_params());
        self.model.check_params(&self.params)?;
        let dims = [
            ("initial.q", n, self.initial.q.len()),
            ("initial.dq", n, self.initial.dq.len()),
            ("theta_hat0", m, self.theta_hat0.len()),
            ("reference", n, self.reference.dof()),
            ("disturbance", n, self.disturbance.dof()),
        ];
        for (what, expected, actual) in dims {
            if expected != actual {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    actual,
                });
            }
        }
        if !self.initial.is_finite() {
            return Err(invalid("initial", "initial state must be finite"));
        }
        self.weight.validated()?;
        self.gains.validate(n, m)
    }
}

/// Integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    /// trace output stride in steps
    pub decimation: usize,
    pub law: AdaptationLaw,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 100.0,
            h: 1e-3,
            decimation: 10,
            law: AdaptationLaw::Proposed,
        }
    }
}

impl SimConfig {
    /// Number of steps spanning the sliding window, if `T` is a multiple of `h`.
    pub fn window_steps(&self, window: f64) -> Result<usize> {
        let ratio = window / self.h;
        let steps = ratio.round();
        if !(steps >= 1.0) || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid("T", "T must be an integer multiple of h"));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self, window: f64) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(invalid("h", "h must be positive"));
        }
        if !(self.t_end > self.t0) {
            return Err(invalid("t_end", "t_end must exceed t0"));
        }
        if !(self.t0 >= 0.0) {
            return Err(invalid("t0", "t0 must be non-negative"));
        }
        if self.decimation == 0 {
            return Err(invalid("decimation", "decimation must be at least 1"));
        }
        self.window_steps(window).map(|_| ())
    }

    pub fn total_steps(&self) -> usize {
        ((self.t_end - self.t0) / self.h).round() as usize
    }
}

/// Per-sample trace output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub q: Vec<f64>,
    pub q_d: Vec<f64>,
    pub e: Vec<f64>,
    pub e_norm: f64,
    pub r: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub theta_err: Vec<f64>,
    pub theta_err_norm: f64,
    pub tau: Vec<f64>,
    pub tau_d: Vec<f64>,
    pub tau_d_hat: Vec<f64>,
    pub tau_d_err: Vec<f64>,
    pub tau_d_err_norm: f64,
    pub delta: f64,
    pub ycal: Vec<f64>,
    pub wcal: Vec<f64>,
    /// `0.5 r^T M r + 0.5 theta_err^T Gamma^-1 theta_err + 0.5 |f_n|^2`
    pub lyapunov: f64,
    /// normalized unknown-input reconstruction error
    pub f_n: Vec<f64>,
    /// weighted disturbance rate `tau_d' / mu`
    pub lambda: Vec<f64>,
    pub int_delta_sq: f64,
    pub int_lambda_sq: f64,
}

/// Trace plus run-level metrics.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub metrics: RunMetrics,
}

/// Measured and derived signals at one instant, shared by the derivative
/// evaluation and the trace.
#[derive(Debug, Clone)]
pub struct Signals {
    pub t: f64,
    pub mu: f64,
    pub dmu: f64,
    pub reference: ReferencePoint,
    pub tau_d: DVector<f64>,
    pub errors: TrackingErrors,
    pub theta_hat: DVector<f64>,
    /// `Phi^T(q, dq, v, dv)`
    pub phi_vdv: DMatrix<f64>,
    pub phi_m_r: DMatrix<f64>,
    pub phi_c_r: DMatrix<f64>,
    pub phi_dm_r: DMatrix<f64>,
    /// `x = M(q) r`
    pub x: DVector<f64>,
    pub pi_t: DMatrix<f64>,
    pub tau: DVector<f64>,
    /// `Phi_M(q, dq)`
    pub phi_m_qdq: DMatrix<f64>,
    /// filtered regressor `phi^T`
    pub phi: DMatrix<f64>,
}

struct DelayLines {
    z: DelayLine,
    phi: DelayLine,
    zeta: DelayLine,
    w: DelayLine,
}

struct Delayed {
    z: DVector<f64>,
    phi: DMatrix<f64>,
    zeta: DMatrix<f64>,
    w: DVector<f64>,
}

/// A running closed-loop simulation. Owns its state and delay histories.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    config: SimConfig,
    layout: StateLayout,
    averaging: Averaging,
    gamma_inv: DMatrix<f64>,
    delays: DelayLines,
    estimator: EstimatorState,
    state: DVector<f64>,
    step: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, config: SimConfig) -> Result<Self> {
        scenario.validate()?;
        config.validate(scenario.gains.window)?;
        let (n, m) = (scenario.dof(), scenario.n_params());
        let layout = StateLayout::new(n, m, config.law);
        let g = &scenario.gains;
        let averaging = Averaging::new(g.p, g.f0, config.t0)?;
        let gamma_inv = g
            .gamma_matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid("gamma_matrix", "gamma_matrix must be invertible"))?;
        let steps = config.window_steps(g.window)?;
        let delays = DelayLines {
            z: DelayLine::new("z", n, steps),
            phi: DelayLine::new("phi", n * m, steps),
            zeta: DelayLine::new("zeta", n * m, steps),
            w: DelayLine::new("w", n, steps),
        };
        // phi(t0) = 0 requires the Phi_M(q, dq) filter to start at its input,
        // otherwise a moving initial state leaves a transient in z - phi^T theta
        let mut drem = DremState::zeros(n, m);
        drem.phi_m_int =
            scenario
                .model
                .phi_inertia(&scenario.params, &scenario.initial.q, &scenario.initial.dq);
        let initial = ClosedLoopState {
            joint: scenario.initial.clone(),
            observer: ObserverState::zeros(n, m),
            drem,
            baseline: (config.law == AdaptationLaw::Baseline).then(|| BaselineWindow::zeros(m)),
            theta_hat: (config.law != AdaptationLaw::None).then(|| scenario.theta_hat0.clone()),
        };
        let state = layout.pack(&initial)?;
        let mut sim = Self {
            scenario,
            config,
            layout,
            averaging,
            gamma_inv,
            delays,
            estimator: EstimatorState::new(scenario.theta_hat0.clone()),
            state,
            step: 0,
        };
        sim.record_history(&initial);
        Ok(sim)
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn averaging(&self) -> &Averaging {
        &self.averaging
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.config.t0 + self.step as f64 * self.config.h
    }

    pub fn flat_state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn state(&self) -> ClosedLoopState {
        self.layout
            .unpack(&self.state)
            .expect("state vector always matches its layout")
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    /// Delay line of `z`, `phi`, `zeta` or `w`.
    pub fn history(&self, signal: &str) -> Option<&DelayLine> {
        match signal {
            "z" => Some(&self.delays.z),
            "phi" => Some(&self.delays.phi),
            "zeta" => Some(&self.delays.zeta),
            "w" => Some(&self.delays.w),
            _ => None,
        }
    }

    fn record_history(&mut self, s: &ClosedLoopState) {
        let m = self.scenario.model.as_ref();
        let p = &self.scenario.params;
        let phi_m_qdq = m.phi_inertia(p, &s.joint.q, &s.joint.dq);
        let phi = s.drem.phi(self.scenario.gains.l, &phi_m_qdq);
        self.delays.z.push(s.drem.z.as_slice());
        self.delays.phi.push(phi.as_slice());
        self.delays.zeta.push(s.drem.zeta.as_slice());
        self.delays.w.push(s.drem.w.as_slice());
    }

    fn delayed(&self, at: StagePoint) -> Result<Delayed> {
        let (n, m) = (self.layout.n, self.layout.n_theta);
        let mut z = vec![0.0; n];
        let mut phi = vec![0.0; n * m];
        let mut zeta = vec![0.0; n * m];
        let mut w = vec![0.0; n];
        self.delays.z.delayed(self.step, at, &mut z)?;
        self.delays.phi.delayed(self.step, at, &mut phi)?;
        self.delays.zeta.delayed(self.step, at, &mut zeta)?;
        self.delays.w.delayed(self.step, at, &mut w)?;
        Ok(Delayed {
            z: DVector::from_vec(z),
            phi: DMatrix::from_vec(n, m, phi),
            zeta: DMatrix::from_vec(n, m, zeta),
            w: DVector::from_vec(w),
        })
    }

    /// Controller and measurement signals for a given state.
    pub fn signals(&self, t: f64, s: &ClosedLoopState) -> Signals {
        let sc = self.scenario;
        let model = sc.model.as_ref();
        let p = &sc.params;
        let g = &sc.gains;
        let (q, dq) = (&s.joint.q, &s.joint.dq);
        let (mu, dmu) = sc.weight.eval(t);
        let reference = sc.reference.eval(t);
        let tau_d = sc.disturbance.value(t);
        let errors = tracking_errors(reference.as_ref(), q, dq, g.alpha);
        let theta_hat = s.theta_hat.clone().unwrap_or_else(|| sc.theta_hat0.clone());
        let r = &errors.r;
        let phi_vdv = model.regressor(p, q, dq, &errors.v, &errors.dv);
        let phi_m_r = model.phi_inertia(p, q, r);
        let phi_c_r = model.phi_coriolis(p, q, dq, r);
        let phi_dm_r = model.phi_inertia_rate(p, q, dq, r);
        let x = model.inertia_matrix(p, q) * r;
        let pi_t = pi_regressor(&s.observer, mu, &phi_vdv, &phi_m_r);
        let tau = control_torque(g, mu, r, &pi_t, &theta_hat, &s.observer.uf);
        let phi_m_qdq = model.phi_inertia(p, q, dq);
        let phi = s.drem.phi(g.l, &phi_m_qdq);
        Signals {
            t,
            mu,
            dmu,
            reference,
            tau_d,
            errors,
            theta_hat,
            phi_vdv,
            phi_m_r,
            phi_c_r,
            phi_dm_r,
            x,
            pi_t,
            tau,
            phi_m_qdq,
            phi,
        }
    }

    /// Closed-loop right-hand side at stage position `at` of the current step.
    pub fn derivative(&self, t: f64, flat: &DVector<f64>, at: StagePoint) -> Result<DVector<f64>> {
        let sc = self.scenario;
        let model = sc.model.as_ref();
        let p = &sc.params;
        let g = &sc.gains;
        let s = self.layout.unpack(flat)?;
        let sig = self.signals(t, &s);
        let (q, dq) = (&s.joint.q, &s.joint.dq);

        let ddq = forward_dynamics(model, p, q, dq, &sig.tau, &sig.tau_d)?;

        let observer = observer_derivatives(
            &s.observer,
            sig.mu,
            sig.dmu,
            &ObserverInputs {
                x: &sig.x,
                phi: &sig.phi_vdv,
                phi_c_r: &sig.phi_c_r,
                phi_dm_r: &sig.phi_dm_r,
                phi_m_r: &sig.phi_m_r,
                tau: &sig.tau,
            },
        );

        let phi_rest_input = model.phi_coriolis(p, q, dq, dq)
            + model.phi_gravity_friction(p, q, dq)
            - model.phi_inertia_rate(p, q, dq, dq);
        let reg = filtered_regression_derivatives(
            &s.drem,
            g.l,
            &sig.tau,
            &sig.phi_m_qdq,
            &phi_rest_input,
            Some(&sig.tau_d),
        );
        let rf = sig.reference.as_ref();
        let phi_ref = model.regressor(p, rf.q, rf.dq, rf.dq, rf.ddq);
        let zeta_rate = instrumental_variable_derivative(&s.drem.zeta, g.l, &phi_ref);

        let past = self.delayed(at)?;
        let ext = extension_derivatives(
            &WindowSignals {
                zeta: &s.drem.zeta,
                z: &s.drem.z,
                phi: &sig.phi,
                w: Some(&s.drem.w),
            },
            &WindowSignals {
                zeta: &past.zeta,
                z: &past.z,
                phi: &past.phi,
                w: Some(&past.w),
            },
        );
        let avg = averaging_derivatives(&s.drem, self.averaging.gain(t));

        let baseline = s.baseline.as_ref().map(|_| BaselineWindow {
            y: sig.phi.tr_mul(&s.drem.z) - past.phi.tr_mul(&past.z),
            psi: sig.phi.tr_mul(&sig.phi) - past.phi.tr_mul(&past.phi),
        });

        let theta_rate = match self.config.law {
            AdaptationLaw::Proposed => {
                let mixed = mix(&s.drem.yav, &s.drem.psiav, None);
                Some(adaptation_derivative_proposed(
                    g,
                    &sig.pi_t,
                    &sig.errors.r,
                    &mixed,
                    &sig.theta_hat,
                ))
            }
            AdaptationLaw::Baseline => {
                let est = EstimatorState {
                    theta_hat: sig.theta_hat.clone(),
                    ..self.estimator.clone()
                };
                Some(adaptation_derivative_baseline(
                    g,
                    &sig.pi_t,
                    &sig.errors.r,
                    &est,
                ))
            }
            AdaptationLaw::None => None,
        };

        let rates = ClosedLoopState {
            joint: JointState::new(dq.clone(), ddq),
            observer,
            drem: DremState {
                z: reg.z,
                phi_m_int: reg.phi_m_int,
                phi_rest: reg.phi_rest,
                zeta: zeta_rate,
                y: ext.y,
                psi: ext.psi,
                yav: avg.yav,
                psiav: avg.psiav,
                eps: ext
                    .eps
                    .unwrap_or_else(|| DVector::zeros(self.layout.n_theta)),
                wav: avg.wav,
                w: reg.w.unwrap_or_else(|| DVector::zeros(self.layout.n)),
            },
            baseline,
            theta_hat: theta_rate,
        };
        self.layout.pack(&rates)
    }

    /// Advances one step of size `h`, updates the delay histories and the
    /// baseline snapshot, and applies the divergence guard.
    pub fn advance(&mut self) -> Result<()> {
        let t = self.time();
        let next = rk4_step(t, &self.state, self.config.h, |ts, y, at| {
            self.derivative(ts, y, at)
        })?;
        let t_next = self.config.t0 + (self.step + 1) as f64 * self.config.h;
        if let Some((index, value)) = next
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Diverged {
                t: t_next,
                index,
                value: *value,
            });
        }
        self.state = next;
        self.step += 1;
        let s = self.state();
        if let Some(b) = &s.baseline {
            update_te_snapshot(&mut self.estimator, t_next, &b.psi, &b.y);
        }
        if let Some(th) = &s.theta_hat {
            self.estimator.theta_hat = th.clone();
        }
        self.record_history(&s);
        Ok(())
    }

    /// Mixed regression with the disturbance channel at the current state.
    pub fn mixed(&self, s: &ClosedLoopState) -> MixedRegression {
        mix(&s.drem.yav, &s.drem.psiav, Some(&s.drem.wav))
    }

    /// Full set of reported quantities at the current grid point.
    pub fn sample(&self) -> Sample {
        let t = self.time();
        let s = self.state();
        let sc = self.scenario;
        let sig = self.signals(t, &s);
        let theta = &sc.params.theta;
        let theta_err = theta - &sig.theta_hat;
        let tau_d_hat = disturbance_estimate(&s.observer, sig.mu, &sig.phi_m_r, &sig.theta_hat);
        let tau_d_err = &sig.tau_d - &tau_d_hat;
        let mixed = self.mixed(&s);
        let f_n = normalized_error(&s.observer, sig.mu, &sig.x, theta, &sig.tau_d);
        let m_q = sc.model.inertia_matrix(&sc.params, &s.joint.q);
        let lyapunov = 0.5 * sig.errors.r.dot(&(&m_q * &sig.errors.r))
            + 0.5 * theta_err.dot(&(&self.gamma_inv * &theta_err))
            + 0.5 * f_n.norm_squared();
        let lambda = sc.disturbance.rate(t) / sig.mu;
        Sample {
            t,
            state: s,
            inertia: m_q,
            theta_err,
            tau_d_hat,
            tau_d_err,
            mixed,
            f_n,
            lyapunov,
            lambda,
            signals: sig,
        }
    }
}

/// Reported quantities at one grid point (full resolution, before decimation).
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub state: ClosedLoopState,
    pub signals: Signals,
    pub inertia: DMatrix<f64>,
    pub theta_err: DVector<f64>,
    pub tau_d_hat: DVector<f64>,
    pub tau_d_err: DVector<f64>,
    pub mixed: MixedRegression,
    pub f_n: DVector<f64>,
    pub lyapunov: f64,
    pub lambda: DVector<f64>,
}

impl Sample {
    fn record(&self, int_delta_sq: f64, int_lambda_sq: f64) -> TraceRecord {
        let sig = &self.signals;
        let v = |x: &DVector<f64>| x.as_slice().to_vec();
        TraceRecord {
            t: self.t,
            q: v(&self.state.joint.q),
            q_d: v(&sig.reference.q),
            e: v(&sig.errors.e),
            e_norm: sig.errors.e.norm(),
            r: v(&sig.errors.r),
            theta_hat: v(&sig.theta_hat),
            theta_err: v(&self.theta_err),
            theta_err_norm: self.theta_err.norm(),
            tau: v(&sig.tau),
            tau_d: v(&sig.tau_d),
            tau_d_hat: v(&self.tau_d_hat),
            tau_d_err: v(&self.tau_d_err),
            tau_d_err_norm: self.tau_d_err.norm(),
            delta: self.mixed.delta,
            ycal: v(&self.mixed.ycal),
            wcal: self.mixed.wcal.as_ref().map(v).unwrap_or_default(),
            lyapunov: self.lyapunov,
            f_n: v(&self.f_n),
            lambda: v(&self.lambda),
            int_delta_sq,
            int_lambda_sq,
        }
    }
}

/// Runs a scenario to `t_end`, returning the decimated trace and metrics
/// computed over every grid point.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(scenario, config.clone())?;
    let total = config.total_steps();
    let mut acc = metrics::Accumulator::new(scenario, config, sim.averaging);
    let mut trace = Vec::with_capacity(total / config.decimation + 2);
    loop {
        let sample = sim.sample();
        acc.observe(&sample);
        let k = sim.step_index();
        if k % config.decimation == 0 || k == total {
            trace.push(sample.record(acc.int_delta_sq(), acc.int_lambda_sq()));
        }
        if k == total {
            break;
        }
        sim.advance()?;
    }
    let mut metrics = acc.finish();
    metrics.baseline_snapshot_time = sim.estimator().snapshot_time;
    Ok(RunOutput { trace, metrics })
}

/// `|det psi|` at the current state, the window determinant over `[t - T, t]`.
pub fn window_determinant(s: &ClosedLoopState) -> f64 {
    drem::determinant(&s.drem.psi).abs()
}

/// Smallest eigenvalue helper re-exported for diagnostics.
pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    control::lambda_min(a)
}
