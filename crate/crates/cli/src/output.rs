//! Run artifacts: `trace.csv`, `metrics.json`, `conditions.json`.
//!
//! `trace.csv` has one row per trace sample and the fixed column order
//!
//! ```text
//! t, q_i, q_d_i, e_i, e_norm, r_i, theta_hat_j, theta_err_j, theta_err_norm,
//! tau_i, tau_d_i, tau_d_hat_i, tau_d_err_i, tau_d_err_norm, delta, ycal_j,
//! wcal_j, lyapunov, f_n_i, lambda_i, int_delta_sq, int_lambda_sq
//! ```
//!
//! with joint indices `i = 1..n` and parameter indices `j = 1..m`. Values use
//! the shortest representation that parses back to the same `f64`; absent
//! values are left empty.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ivdrem_core::sim::condition_checks;
use ivdrem_core::{ConditionReport, RunOutput, TraceRecord};
use serde::Serialize;

pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONDITIONS_FILE: &str = "conditions.json";

enum Column {
    Scalar(&'static str),
    Joint(&'static str),
    Param(&'static str),
}

const COLUMNS: &[Column] = &[
    Column::Scalar("t"),
    Column::Joint("q"),
    Column::Joint("q_d"),
    Column::Joint("e"),
    Column::Scalar("e_norm"),
    Column::Joint("r"),
    Column::Param("theta_hat"),
    Column::Param("theta_err"),
    Column::Scalar("theta_err_norm"),
    Column::Joint("tau"),
    Column::Joint("tau_d"),
    Column::Joint("tau_d_hat"),
    Column::Joint("tau_d_err"),
    Column::Scalar("tau_d_err_norm"),
    Column::Scalar("delta"),
    Column::Param("ycal"),
    Column::Param("wcal"),
    Column::Scalar("lyapunov"),
    Column::Joint("f_n"),
    Column::Joint("lambda"),
    Column::Scalar("int_delta_sq"),
    Column::Scalar("int_lambda_sq"),
];

/// Column names for `n` joints and `m` parameters.
pub fn trace_header(n: usize, m: usize) -> Vec<String> {
    let mut out = Vec::new();
    for c in COLUMNS {
        match c {
            Column::Scalar(name) => out.push(name.to_string()),
            Column::Joint(name) => out.extend((1..=n).map(|i| format!("{name}_{i}"))),
            Column::Param(name) => out.extend((1..=m).map(|j| format!("{name}_{j}"))),
        }
    }
    out
}

fn row(r: &TraceRecord, n: usize, m: usize) -> Vec<Option<f64>> {
    let scalar = |x: f64| vec![Some(x)];
    let vector = |x: &[f64], len: usize| (0..len).map(|k| x.get(k).copied()).collect::<Vec<_>>();
    [
        scalar(r.t),
        vector(&r.q, n),
        vector(&r.q_d, n),
        vector(&r.e, n),
        scalar(r.e_norm),
        vector(&r.r, n),
        vector(&r.theta_hat, m),
        vector(&r.theta_err, m),
        scalar(r.theta_err_norm),
        vector(&r.tau, n),
        vector(&r.tau_d, n),
        vector(&r.tau_d_hat, n),
        vector(&r.tau_d_err, n),
        scalar(r.tau_d_err_norm),
        scalar(r.delta),
        vector(&r.ycal, m),
        vector(&r.wcal, m),
        scalar(r.lyapunov),
        vector(&r.f_n, n),
        vector(&r.lambda, n),
        scalar(r.int_delta_sq),
        scalar(r.int_lambda_sq),
    ]
    .concat()
}

pub fn write_trace(w: impl Write, trace: &[TraceRecord], n: usize, m: usize) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{}", trace_header(n, m).join(","))?;
    for r in trace {
        let fields = row(r, n, m)
            .into_iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect::<Vec<_>>();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// Writes all artifacts of a run into `dir`, creating it if needed.
pub fn write_run(dir: &Path, out: &RunOutput, n: usize, m: usize) -> io::Result<ConditionReport> {
    std::fs::create_dir_all(dir)?;
    write_trace(File::create(dir.join(TRACE_FILE))?, &out.trace, n, m)?;
    write_json(&dir.join(METRICS_FILE), &out.metrics)?;
    let conditions = condition_checks(&out.metrics);
    write_json(&dir.join(CONDITIONS_FILE), &conditions)?;
    Ok(conditions)
}
