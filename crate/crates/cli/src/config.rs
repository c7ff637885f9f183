//! JSON run configuration: a preset plus optional overrides.
//!
//! Every key is optional; omitted keys keep the preset value. Unknown keys
//! are rejected so that typos do not silently fall back to defaults.
//!
//! ```json
//! {
//!   "preset": "paper2dof",
//!   "theta": [1.3, 0.28, 0.32, 0.4, 1.4],
//!   "g": 9.81,
//!   "q0": [0.0, 0.9424777960769379],
//!   "dq0": [0.0, 0.0],
//!   "theta_hat0": [0, 0, 0, 0, 0],
//!   "reference": [{"amplitude": 1.2566, "frequency": 2.0, "phase": 0.0, "offset": 0.6283}, ...],
//!   "disturbance": [{"amplitude": 7.5, "frequency": 1.5708}, ...],
//!   "weight": {"kind": "affine", "mu0": 1.0, "mu1": 15.0},
//!   "alpha": 1.0, "k": [2.0, 2.0], "delta_mu": 0.8,
//!   "gamma": 0.01,
//!   "gamma_proposed": 1e10, "gamma_baseline": 1.0,
//!   "l": 50.0, "T": 20.0, "p": 2.0, "f0": 1.0,
//!   "t0": 0.0, "t_end": 100.0, "h": 0.001, "decimation": 10,
//!   "law": "proposed"
//! }
//! ```
//!
//! `gamma` is either a scalar (multiple of the identity) or the diagonal.

use std::path::Path;

use ivdrem_core::{
    AdaptationLaw, DisturbanceProfile, JointState, ReferenceTrajectory, Scenario, SimConfig,
    WeightFunction,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the compiled-in two-link study.
pub const PAPER2DOF: &str = "paper2dof";

/// Compiled-in presets with a one-line description each.
pub const PRESETS: &[(&str, &str)] = &[(
    PAPER2DOF,
    "two-link arm, sinusoidal reference and disturbance, 100 s at h = 1 ms",
)];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("unknown preset \"{0}\" (available: {})", preset_names())]
    UnknownPreset(String),
    #[error("validation error: {0}")]
    Invalid(#[from] ivdrem_core::Error),
}

fn preset_names() -> String {
    PRESETS
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Learning-rate matrix given as a scalar gain or a diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

/// File contents; `None` keeps the preset value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub theta: Option<Vec<f64>>,
    pub g: Option<f64>,
    pub q0: Option<Vec<f64>>,
    pub dq0: Option<Vec<f64>>,
    pub theta_hat0: Option<Vec<f64>>,
    pub reference: Option<ReferenceTrajectory>,
    pub disturbance: Option<DisturbanceProfile>,
    pub weight: Option<WeightFunction>,
    pub alpha: Option<f64>,
    pub k: Option<Vec<f64>>,
    pub delta_mu: Option<f64>,
    pub gamma: Option<Gamma>,
    pub gamma_proposed: Option<f64>,
    pub gamma_baseline: Option<f64>,
    pub l: Option<f64>,
    #[serde(rename = "T")]
    pub window: Option<f64>,
    pub p: Option<f64>,
    pub f0: Option<f64>,
    pub t0: Option<f64>,
    pub t_end: Option<f64>,
    pub h: Option<f64>,
    pub decimation: Option<usize>,
    pub law: Option<AdaptationLaw>,
}

impl ConfigFile {
    /// Reads a config file; an empty (or whitespace-only) file means `{}`.
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: display.clone(),
            source,
        })?;
        Self::parse(&text).map_err(|source| ConfigError::Parse {
            path: display,
            source,
        })
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text)
    }
}

/// Resolves a preset name into its scenario and integration settings.
pub fn preset(name: &str) -> Result<(Scenario, SimConfig), ConfigError> {
    match name {
        PAPER2DOF => Ok((Scenario::reference_two_link(), SimConfig::default())),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}

/// Expresses a preset as a fully populated config file.
pub fn preset_file(name: &str) -> Result<ConfigFile, ConfigError> {
    let (s, c) = preset(name)?;
    let v = |x: &DVector<f64>| Some(x.as_slice().to_vec());
    Ok(ConfigFile {
        preset: Some(name.to_string()),
        theta: v(&s.params.theta),
        g: Some(s.params.g),
        q0: v(&s.initial.q),
        dq0: v(&s.initial.dq),
        theta_hat0: v(&s.theta_hat0),
        reference: Some(s.reference.clone()),
        disturbance: Some(s.disturbance.clone()),
        weight: Some(s.weight),
        alpha: Some(s.gains.alpha),
        k: v(&s.gains.k),
        delta_mu: Some(s.gains.delta_mu),
        gamma: Some(Gamma::Diagonal(
            s.gains.gamma_matrix.diagonal().as_slice().to_vec(),
        )),
        gamma_proposed: Some(s.gains.gamma_proposed),
        gamma_baseline: Some(s.gains.gamma_baseline),
        l: Some(s.gains.l),
        window: Some(s.gains.window),
        p: Some(s.gains.p),
        f0: Some(s.gains.f0),
        t0: Some(c.t0),
        t_end: Some(c.t_end),
        h: Some(c.h),
        decimation: Some(c.decimation),
        law: Some(c.law),
    })
}

impl ConfigFile {
    /// Applies the overrides to the named preset (the file's own `preset`
    /// key wins over `default_preset`). Validation happens in [`load`].
    pub fn resolve(&self, default_preset: &str) -> Result<(Scenario, SimConfig), ConfigError> {
        let name = self.preset.as_deref().unwrap_or(default_preset);
        let (mut s, mut c) = preset(name)?;
        let dv = |x: &Vec<f64>| DVector::from_column_slice(x);
        if let Some(x) = &self.theta {
            s.params.theta = dv(x);
        }
        if let Some(x) = self.g {
            s.params.g = x;
        }
        if let Some(x) = &self.q0 {
            let dq = self
                .dq0
                .as_ref()
                .map(dv)
                .unwrap_or_else(|| DVector::zeros(x.len()));
            s.initial = JointState::new(dv(x), dq);
        } else if let Some(x) = &self.dq0 {
            s.initial.dq = dv(x);
        }
        if let Some(x) = &self.theta_hat0 {
            s.theta_hat0 = dv(x);
        }
        if let Some(x) = &self.reference {
            s.reference = x.clone();
        }
        if let Some(x) = &self.disturbance {
            s.disturbance = x.clone();
        }
        if let Some(x) = self.weight {
            s.weight = x;
        }
        let gains = &mut s.gains;
        if let Some(x) = self.alpha {
            gains.alpha = x;
        }
        if let Some(x) = &self.k {
            gains.k = dv(x);
        }
        if let Some(x) = self.delta_mu {
            gains.delta_mu = x;
        }
        match &self.gamma {
            Some(Gamma::Scalar(x)) => {
                let m = gains.gamma_matrix.nrows();
                gains.gamma_matrix = DMatrix::identity(m, m) * *x;
            }
            Some(Gamma::Diagonal(d)) => gains.gamma_matrix = DMatrix::from_diagonal(&dv(d)),
            None => {}
        }
        let scalars = [
            (&mut gains.gamma_proposed, self.gamma_proposed),
            (&mut gains.gamma_baseline, self.gamma_baseline),
            (&mut gains.l, self.l),
            (&mut gains.window, self.window),
            (&mut gains.p, self.p),
            (&mut gains.f0, self.f0),
            (&mut c.t0, self.t0),
            (&mut c.t_end, self.t_end),
            (&mut c.h, self.h),
        ];
        for (slot, value) in scalars {
            if let Some(x) = value {
                *slot = x;
            }
        }
        if let Some(x) = self.decimation {
            c.decimation = x;
        }
        if let Some(x) = self.law {
            c.law = x;
        }
        Ok((s, c))
    }
}

/// Command-line overrides applied after the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub law: Option<AdaptationLaw>,
    pub t_end: Option<f64>,
    pub h: Option<f64>,
    pub decimation: Option<usize>,
    pub disturbance: Option<bool>,
}

/// Builds the validated scenario and settings for a run.
pub fn load(
    preset_name: &str,
    config: Option<&Path>,
    overrides: &Overrides,
) -> Result<(Scenario, SimConfig), ConfigError> {
    let file = match config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::default(),
    };
    let (mut s, mut c) = file.resolve(preset_name)?;
    if let Some(law) = overrides.law {
        c.law = law;
    }
    if let Some(x) = overrides.t_end {
        c.t_end = x;
    }
    if let Some(x) = overrides.h {
        c.h = x;
    }
    if let Some(x) = overrides.decimation {
        c.decimation = x;
    }
    if overrides.disturbance == Some(false) {
        s.disturbance = DisturbanceProfile::zero(s.dof());
    }
    s.validate()?;
    c.validate(s.gains.window)?;
    Ok((s, c))
}
