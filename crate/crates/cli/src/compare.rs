//! Side-by-side comparison of the final-window metrics of two runs.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::output::METRICS_FILE;

/// Compared metrics; lower is better for all of them.
pub const COMPARED: &[(&str, &str)] = &[
    ("final_e_mean", "mean |e| (final window)"),
    ("final_e_sup", "sup |e| (final window)"),
    ("final_theta_err_mean", "mean |theta_err| (final window)"),
    ("final_theta_err_sup", "sup |theta_err| (final window)"),
    ("final_tau_d_err_mean", "mean |tau_d_err| (final window)"),
    ("final_tau_d_err_sup", "sup |tau_d_err| (final window)"),
];

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path} lacks metric \"{key}\"")]
    Missing { path: String, key: String },
    #[error("incompatible runs: {key} is {a} in the first and {b} in the second")]
    Incompatible {
        key: &'static str,
        a: Value,
        b: Value,
    },
}

/// Which run is better on one metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
    Tie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub key: &'static str,
    pub label: &'static str,
    pub a: f64,
    pub b: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub law_a: String,
    pub law_b: String,
    pub rows: Vec<Row>,
}

fn load(dir: &Path) -> Result<Value, CompareError> {
    let path = dir.join(METRICS_FILE);
    let display = path.display().to_string();
    let text = std::fs::read_to_string(&path).map_err(|source| CompareError::Read {
        path: display.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CompareError::Parse {
        path: display,
        source,
    })
}

fn metric(v: &Value, key: &str, dir: &Path) -> Result<f64, CompareError> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| CompareError::Missing {
            path: dir.join(METRICS_FILE).display().to_string(),
            key: key.to_string(),
        })
}

/// Reads the metrics of both runs; they must share the time grid.
pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<Comparison, CompareError> {
    let (a, b) = (load(dir_a)?, load(dir_b)?);
    for key in ["t0", "t_end", "h", "final_window"] {
        let (x, y) = (a.get(key).cloned(), b.get(key).cloned());
        if x != y {
            return Err(CompareError::Incompatible {
                key,
                a: x.unwrap_or(Value::Null),
                b: y.unwrap_or(Value::Null),
            });
        }
    }
    let law = |v: &Value| {
        v.get("law")
            .and_then(Value::as_str)
            .unwrap_or("?")
            .to_string()
    };
    let mut rows = Vec::new();
    for &(key, label) in COMPARED {
        let (x, y) = (metric(&a, key, dir_a)?, metric(&b, key, dir_b)?);
        let winner = if x < y {
            Winner::First
        } else if y < x {
            Winner::Second
        } else {
            Winner::Tie
        };
        rows.push(Row {
            key,
            label,
            a: x,
            b: y,
            winner,
        });
    }
    Ok(Comparison {
        law_a: law(&a),
        law_b: law(&b),
        rows,
    })
}

impl Comparison {
    /// Fixed-width table with one line per metric.
    pub fn table(&self) -> String {
        let head_a = format!("A ({})", self.law_a);
        let head_b = format!("B ({})", self.law_b);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<34} {:>14} {:>14} {:>12}  winner",
            "metric", head_a, head_b, "B - A"
        );
        for r in &self.rows {
            let winner = match r.winner {
                Winner::First => head_a.as_str(),
                Winner::Second => head_b.as_str(),
                Winner::Tie => "tie",
            };
            let _ = writeln!(
                s,
                "{:<34} {:>14.6e} {:>14.6e} {:>12.3e}  {}",
                r.label,
                r.a,
                r.b,
                r.b - r.a,
                winner
            );
        }
        s
    }
}
