//! Small dense helpers for the verification and detection paths. Matrices are
//! `nalgebra` containers; every SVD goes through `faer`, whose complex SVD
//! stays accurate on exactly rank-deficient input. Diagonal matrices stay as
//! slices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// `diag(d) · m` without forming `diag(d)`.
pub fn diag_mul(d: &[Complex64], m: &CMatrix) -> CMatrix {
    assert_eq!(d.len(), m.nrows(), "diagonal length must match rows");
    let mut out = m.clone();
    for (q, mut row) in out.row_iter_mut().enumerate() {
        row.iter_mut().for_each(|z| *z *= d[q]);
    }
    out
}

/// `diag(num / den) · m`.
pub fn diag_ratio_mul(num: &[Complex64], den: &[Complex64], m: &CMatrix) -> CMatrix {
    let d: Vec<_> = num.iter().zip(den).map(|(a, b)| a / b).collect();
    diag_mul(&d, m)
}

pub fn hstack(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "blocks must share rows");
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

struct Decomposition {
    u: CMatrix,
    /// Descending.
    s: Vec<f64>,
    v: CMatrix,
}

/// Thin SVD. A non-converging input comes back with no singular values, so
/// rank checks on it fail closed.
fn thin_svd(m: &CMatrix) -> Decomposition {
    let (rows, cols) = m.shape();
    let empty = || Decomposition {
        u: CMatrix::zeros(rows, 0),
        s: Vec::new(),
        v: CMatrix::zeros(cols, 0),
    };
    if m.is_empty() {
        return empty();
    }
    let f = faer::Mat::from_fn(rows, cols, |i, j| m[(i, j)]);
    let Ok(svd) = f.thin_svd() else {
        return empty();
    };
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    Decomposition {
        u: CMatrix::from_fn(rows, k, |i, c| u[(i, order[c])]),
        s: order.iter().map(|&c| s[c].re).collect(),
        v: CMatrix::from_fn(cols, k, |i, c| v[(i, order[c])]),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    thin_svd(m).s
}

/// SVD cutoff `max(rows, cols) · ε · σ_max`.
pub fn rank_threshold(m: &CMatrix, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub threshold: f64,
}

impl RankInfo {
    /// `σ_min / σ_max`; zero for an all-zero matrix.
    pub fn margin(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

pub fn numerical_rank(m: &CMatrix) -> RankInfo {
    let s = singular_values(m);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let sigma_min = s.last().copied().unwrap_or(0.0);
    let threshold = rank_threshold(m, sigma_max);
    RankInfo {
        rank: s.iter().filter(|&&v| v > threshold).count(),
        sigma_max,
        sigma_min,
        threshold,
    }
}

/// Orthonormal basis of the numerical column space.
pub fn column_basis(m: &CMatrix) -> CMatrix {
    let d = thin_svd(m);
    let threshold = rank_threshold(m, d.s.first().copied().unwrap_or(0.0));
    let keep = d.s.iter().filter(|&&v| v > threshold).count();
    d.u.columns(0, keep).into_owned()
}

/// Moore-Penrose pseudo-inverse with the same cutoff as [`numerical_rank`].
pub fn pinv(m: &CMatrix) -> CMatrix {
    let d = thin_svd(m);
    let threshold = rank_threshold(m, d.s.first().copied().unwrap_or(0.0));
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (k, &sigma) in d.s.iter().enumerate().filter(|(_, &v)| v > threshold) {
        out += (d.v.column(k) / Complex64::from(sigma)) * d.u.column(k).adjoint();
    }
    out
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
