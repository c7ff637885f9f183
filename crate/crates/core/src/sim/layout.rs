//! Flat state vector layout for the closed loop.
//!
//! Blocks in order (matrices column-major, `n x n_theta` unless noted):
//!
//! | block      | members                                                         |
//! |------------|-----------------------------------------------------------------|
//! | joint      | `q`, `dq`                                                        |
//! | observer   | `x_f`, `Phi_f`, `Phi_Mf`, `u_f`                                  |
//! | drem       | `z`, `phi_m_int`, `phi_rest`, `zeta`, `y`, `psi` (`n_theta^2`), `Y`, `Psi` (`n_theta^2`), `eps`, `W`, `w` |
//! | baseline   | `y_b`, `psi_b` (`n_theta^2`); baseline law only                 |
//! | estimator  | `theta_hat`; absent when adaptation is off                       |

use nalgebra::{DMatrix, DVector};

use crate::control::AdaptationLaw;
use crate::drem::DremState;
use crate::dynamics::JointState;
use crate::error::{Error, Result};
use crate::observer::ObserverState;

/// Sliding-window regression built from `phi` itself, used by the baseline law.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineWindow {
    pub y: DVector<f64>,
    pub psi: DMatrix<f64>,
}

impl BaselineWindow {
    pub fn zeros(n_theta: usize) -> Self {
        Self {
            y: DVector::zeros(n_theta),
            psi: DMatrix::zeros(n_theta, n_theta),
        }
    }
}

/// Every integrated state of one closed-loop simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopState {
    pub joint: JointState,
    pub observer: ObserverState,
    pub drem: DremState,
    pub baseline: Option<BaselineWindow>,
    pub theta_hat: Option<DVector<f64>>,
}

/// Offsets of each member inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n: usize,
    pub n_theta: usize,
    pub law: AdaptationLaw,
}

struct Cursor<'a> {
    data: &'a [f64],
    pos: usize,
}

impl Cursor<'_> {
    fn vector(&mut self, len: usize) -> DVector<f64> {
        let v = DVector::from_column_slice(&self.data[self.pos..self.pos + len]);
        self.pos += len;
        v
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let m =
            DMatrix::from_column_slice(rows, cols, &self.data[self.pos..self.pos + rows * cols]);
        self.pos += rows * cols;
        m
    }
}

impl StateLayout {
    pub fn new(n: usize, n_theta: usize, law: AdaptationLaw) -> Self {
        Self { n, n_theta, law }
    }

    pub fn joint_len(&self) -> usize {
        2 * self.n
    }

    pub fn observer_len(&self) -> usize {
        2 * self.n + 2 * self.n * self.n_theta
    }

    pub fn drem_len(&self) -> usize {
        let (n, m) = (self.n, self.n_theta);
        n + 3 * n * m + m + m * m + m + m * m + m + m + n
    }

    pub fn baseline_len(&self) -> usize {
        match self.law {
            AdaptationLaw::Baseline => self.n_theta + self.n_theta * self.n_theta,
            _ => 0,
        }
    }

    pub fn estimator_len(&self) -> usize {
        match self.law {
            AdaptationLaw::None => 0,
            _ => self.n_theta,
        }
    }

    pub fn len(&self) -> usize {
        self.joint_len()
            + self.observer_len()
            + self.drem_len()
            + self.baseline_len()
            + self.estimator_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, what: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected != actual {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                actual,
            });
        }
        Ok(())
    }

    pub fn pack(&self, s: &ClosedLoopState) -> Result<DVector<f64>> {
        let (n, m) = (self.n, self.n_theta);
        self.check("q", n, s.joint.q.len())?;
        self.check("dq", n, s.joint.dq.len())?;
        self.check("Phi_f", n * m, s.observer.phi_f.len())?;
        self.check("psi", m * m, s.drem.psi.len())?;
        self.check(
            "baseline block",
            self.baseline_len(),
            s.baseline.as_ref().map_or(0, |b| b.y.len() + b.psi.len()),
        )?;
        self.check(
            "theta_hat",
            self.estimator_len(),
            s.theta_hat.as_ref().map_or(0, |t| t.len()),
        )?;

        let mut out = Vec::with_capacity(self.len());
        let o = &s.observer;
        let d = &s.drem;
        let parts: [&[f64]; 17] = [
            s.joint.q.as_slice(),
            s.joint.dq.as_slice(),
            o.xf.as_slice(),
            o.phi_f.as_slice(),
            o.phi_mf.as_slice(),
            o.uf.as_slice(),
            d.z.as_slice(),
            d.phi_m_int.as_slice(),
            d.phi_rest.as_slice(),
            d.zeta.as_slice(),
            d.y.as_slice(),
            d.psi.as_slice(),
            d.yav.as_slice(),
            d.psiav.as_slice(),
            d.eps.as_slice(),
            d.wav.as_slice(),
            d.w.as_slice(),
        ];
        for p in parts {
            out.extend_from_slice(p);
        }
        if let Some(b) = &s.baseline {
            out.extend_from_slice(b.y.as_slice());
            out.extend_from_slice(b.psi.as_slice());
        }
        if let Some(t) = &s.theta_hat {
            out.extend_from_slice(t.as_slice());
        }
        self.check("flat state", self.len(), out.len())?;
        Ok(DVector::from_vec(out))
    }

    pub fn unpack(&self, x: &DVector<f64>) -> Result<ClosedLoopState> {
        self.check("flat state", self.len(), x.len())?;
        let (n, m) = (self.n, self.n_theta);
        let mut c = Cursor {
            data: x.as_slice(),
            pos: 0,
        };
        let joint = JointState::new(c.vector(n), c.vector(n));
        let observer = ObserverState {
            xf: c.vector(n),
            phi_f: c.matrix(n, m),
            phi_mf: c.matrix(n, m),
            uf: c.vector(n),
        };
        let drem = DremState {
            z: c.vector(n),
            phi_m_int: c.matrix(n, m),
            phi_rest: c.matrix(n, m),
            zeta: c.matrix(n, m),
            y: c.vector(m),
            psi: c.matrix(m, m),
            yav: c.vector(m),
            psiav: c.matrix(m, m),
            eps: c.vector(m),
            wav: c.vector(m),
            w: c.vector(n),
        };
        let baseline = (self.law == AdaptationLaw::Baseline).then(|| BaselineWindow {
            y: c.vector(m),
            psi: c.matrix(m, m),
        });
        let theta_hat = (self.law != AdaptationLaw::None).then(|| c.vector(m));
        Ok(ClosedLoopState {
            joint,
            observer,
            drem,
            baseline,
            theta_hat,
        })
    }
}
