#![allow(clippy::needless_range_loop)] // index loops mirror the textbook algorithms

//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's own model or linear-algebra code.
#![allow(dead_code)]

use std::f64::consts::PI;

use ivdrem_core::{DisturbanceProfile, JointState, Scenario, TwoLinkArm};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const THETA: [f64; 5] = [1.3, 0.28, 0.32, 0.4, 1.4];
pub const G: f64 = 9.81;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

pub fn uniform_mat(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(lo..hi))
}

/// Two-link inertia matrix written out by hand.
pub fn inertia(th: &[f64], q: &DVector<f64>) -> DMatrix<f64> {
    let c2 = q[1].cos();
    let m11 = th[0] + 2.0 * th[1] * c2;
    let m12 = th[2] + th[1] * c2;
    DMatrix::from_row_slice(2, 2, &[m11, m12, m12, th[2]])
}

pub fn coriolis(th: &[f64], q: &DVector<f64>, dq: &DVector<f64>) -> DMatrix<f64> {
    let s2 = q[1].sin();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            -th[1] * s2 * dq[1],
            -th[1] * s2 * (dq[0] + dq[1]),
            th[1] * s2 * dq[0],
            0.0,
        ],
    )
}

pub fn gravity(th: &[f64], g: f64, q: &DVector<f64>) -> DVector<f64> {
    let c1 = q[0].cos();
    let c12 = (q[0] + q[1]).cos();
    DVector::from_vec(vec![th[3] * g * c12 + th[4] * g * c1, th[3] * g * c12])
}

/// Time derivative of the inertia matrix along `dq`.
pub fn inertia_rate(th: &[f64], q: &DVector<f64>, dq: &DVector<f64>) -> DMatrix<f64> {
    let s2 = q[1].sin();
    let a = -th[1] * s2 * dq[1];
    DMatrix::from_row_slice(2, 2, &[2.0 * a, a, a, 0.0])
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn lu_det(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).collect())
        .collect();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    det
}

/// Number of eigenvalues of the symmetric matrix `a` below `x`, counted from
/// the signs of the LDL^T pivots of `a - x I`.
fn count_below(a: &DMatrix<f64>, x: f64) -> usize {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[(i, j)] - if i == j { x } else { 0.0 })
                .collect()
        })
        .collect();
    let mut negatives = 0;
    for k in 0..n {
        let mut d = m[k][k];
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / d;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// Smallest eigenvalue of a symmetric matrix by bisection on the inertia count.
pub fn lambda_min_bisection(a: &DMatrix<f64>) -> f64 {
    let bound = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(a, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reference experiment with the disturbance switched off.
pub fn disturbance_free() -> Scenario {
    let mut sc = Scenario::reference_two_link();
    sc.disturbance = DisturbanceProfile::zero(2);
    sc
}

/// Disturbance-free scenario starting exactly on the reference with the true
/// parameters as the initial estimate.
pub fn equilibrium() -> Scenario {
    let mut sc = disturbance_free();
    let r = sc.reference.eval(0.0);
    sc.initial = JointState::new(r.q.clone(), r.dq.clone());
    sc.theta_hat0 = TwoLinkArm::reference_theta();
    sc
}

/// Reference joint values at `t`, written out by hand.
pub fn reference_q(t: f64) -> [f64; 2] {
    [
        0.4 * PI * (2.0 * t).sin() + 0.2 * PI,
        0.3 * PI * (0.3 * t + PI / 2.0).sin() + 0.3 * PI,
    ]
}

pub fn disturbance(t: f64) -> [f64; 2] {
    [7.5 * (0.5 * PI * t).sin(), 1.5 * (0.05 * PI * t).sin()]
}

pub fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}
