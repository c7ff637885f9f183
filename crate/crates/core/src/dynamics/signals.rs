use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// `amplitude * sin(frequency * t + phase) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub offset: f64,
}

impl Sinusoid {
    pub fn new(amplitude: f64, frequency: f64, phase: f64, offset: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
            offset,
        }
    }

    pub fn constant(offset: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, offset)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin() + self.offset
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.amplitude * self.frequency * (self.frequency * t + self.phase).cos()
    }

    pub fn accel(&self, t: f64) -> f64 {
        -self.amplitude * self.frequency.powi(2) * (self.frequency * t + self.phase).sin()
    }

    fn bound(&self) -> f64 {
        self.amplitude.abs() + self.offset.abs()
    }
}

/// Desired joint trajectory, one sinusoid per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceTrajectory {
    pub joints: Vec<Sinusoid>,
}

/// Desired position, velocity and acceleration at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
    pub ddq: DVector<f64>,
}

impl ReferencePoint {
    pub fn as_ref(&self) -> ReferencePointRef<'_> {
        ReferencePointRef {
            q: &self.q,
            dq: &self.dq,
            ddq: &self.ddq,
        }
    }
}

/// Borrowed view of a [`ReferencePoint`].
#[derive(Debug, Clone, Copy)]
pub struct ReferencePointRef<'a> {
    pub q: &'a DVector<f64>,
    pub dq: &'a DVector<f64>,
    pub ddq: &'a DVector<f64>,
}

impl ReferenceTrajectory {
    pub fn new(joints: Vec<Sinusoid>) -> Self {
        Self { joints }
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn eval(&self, t: f64) -> ReferencePoint {
        ReferencePoint {
            q: DVector::from_iterator(self.dof(), self.joints.iter().map(|s| s.value(t))),
            dq: DVector::from_iterator(self.dof(), self.joints.iter().map(|s| s.rate(t))),
            ddq: DVector::from_iterator(self.dof(), self.joints.iter().map(|s| s.accel(t))),
        }
    }
}

/// External torque acting on each joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisturbanceProfile {
    pub joints: Vec<Sinusoid>,
}

impl DisturbanceProfile {
    pub fn new(joints: Vec<Sinusoid>) -> Self {
        Self { joints }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![Sinusoid::constant(0.0); n])
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|s| s.value(t)))
    }

    pub fn rate(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|s| s.rate(t)))
    }

    /// Upper bound on `|tau_d(t)|` over all t.
    pub fn bound(&self) -> f64 {
        self.joints
            .iter()
            .map(|s| s.bound().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.joints.iter().all(|s| s.bound() == 0.0)
    }
}
