use nalgebra::{DMatrix, DVector};

/// Above this size cofactors come from LU determinants of the minors.
const LAPLACE_MAX: usize = 6;

/// Scalar regressions produced by mixing `Y = Psi theta + W`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRegression {
    /// `det(A)` with `A = Psi / (1 + |Psi|_F)`
    pub delta: f64,
    /// `adj(A) Y / (1 + |Psi|_F)`
    pub ycal: DVector<f64>,
    /// `adj(A) W / (1 + |Psi|_F)`, present only when `W` is known (simulation diagnostics)
    pub wcal: Option<DVector<f64>>,
}

/// Determinant of the rows/columns selected by `rows` and `cols`, by cofactor
/// expansion along the first selected row.
fn laplace_det(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => a[(rows[0], cols[0])],
        2 => {
            a[(rows[0], cols[0])] * a[(rows[1], cols[1])]
                - a[(rows[0], cols[1])] * a[(rows[1], cols[0])]
        }
        m => {
            let mut rest = [0usize; LAPLACE_MAX];
            let mut acc = 0.0;
            for k in 0..m {
                let entry = a[(rows[0], cols[k])];
                if entry == 0.0 {
                    continue;
                }
                let mut len = 0;
                for (j, &c) in cols.iter().enumerate() {
                    if j != k {
                        rest[len] = c;
                        len += 1;
                    }
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * entry * laplace_det(a, &rows[1..], &rest[..len]);
            }
            acc
        }
    }
}

fn complement(skip: usize, m: usize) -> ([usize; LAPLACE_MAX], usize) {
    let mut out = [0usize; LAPLACE_MAX];
    let mut len = 0;
    for i in (0..m).filter(|&i| i != skip) {
        out[len] = i;
        len += 1;
    }
    (out, len)
}

fn minor(a: &DMatrix<f64>, row: usize, col: usize) -> DMatrix<f64> {
    a.clone().remove_row(row).remove_column(col)
}

/// Determinant of a square matrix.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let m = a.nrows();
    if m <= LAPLACE_MAX {
        let idx: Vec<usize> = (0..m).collect();
        laplace_det(a, &idx, &idx)
    } else {
        a.clone().lu().determinant()
    }
}

/// Adjugate (transposed cofactor matrix), defined for singular inputs as well:
/// `adj(A) A = A adj(A) = det(A) I`. For a 1x1 matrix this is `[[1]]`.
pub fn adjugate(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "adjugate of a non-square matrix");
    let m = a.nrows();
    if m == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let mut adj = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let cof = if m <= LAPLACE_MAX {
                let (rows, rl) = complement(i, m);
                let (cols, cl) = complement(j, m);
                laplace_det(a, &rows[..rl], &cols[..cl])
            } else {
                minor(a, i, j).lu().determinant()
            };
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * cof;
        }
    }
    adj
}

/// Normalizes the whole regression `Y = Psi theta + W` by `1 + |Psi|_F` and
/// multiplies it by `adj(A)`, giving `ycal_i = delta theta_i + wcal_i` for every
/// parameter. `Y` and `W` share the normalization of `Psi`; otherwise the
/// scalar regressions would carry an extra factor `1 + |Psi|_F`.
pub fn mix(
    yav: &DVector<f64>,
    psiav: &DMatrix<f64>,
    wav: Option<&DVector<f64>>,
) -> MixedRegression {
    let scale = 1.0 + psiav.norm();
    let a = psiav / scale;
    let adj = adjugate(&a) / scale;
    let delta = determinant(&a);
    MixedRegression {
        delta,
        ycal: &adj * yav,
        wcal: wav.map(|w| &adj * w),
    }
}
