//! Numerical certification of an alignment construction: subspace residuals
//! for the alignment conditions, receiver-side rank checks, the
//! receiver-1 `S` transform and a distinctness audit of the cascade spectra.
//!
//! Every check is subspace-level, so rescaling any precoder column leaves the
//! results unchanged.

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::error::{param, Result};
use crate::linalg::{column_basis, diag_mul, diag_ratio_mul, hstack, numerical_rank, CMatrix};
use crate::precoder::{CascadeSet, PrecoderSet};

pub const ALIGNMENT_TOLERANCE: f64 = 1e-8;
pub const DISTINCTNESS_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `H_1i V_i = H_13 V_3` at receiver 1.
    Equal { i: usize },
    /// `H_jk V_k ⊂ span(H_j1 V_1)` at receiver `j`.
    Contained { j: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub condition: Condition,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankResult {
    pub receiver: usize,
    pub rank: usize,
    pub required: usize,
    /// `σ_min / σ_max` of the composite matrix.
    pub margin: f64,
    pub threshold: f64,
}

impl RankResult {
    pub fn full(&self) -> bool {
        self.rank == self.required
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub residuals: Vec<Residual>,
    pub ranks: Vec<RankResult>,
    pub alignment_tolerance: f64,
    pub pass: bool,
}

impl AlignmentReport {
    pub fn max_equality(&self) -> f64 {
        self.max_of(|c| matches!(c, Condition::Equal { .. }))
    }

    pub fn max_containment(&self) -> f64 {
        self.max_of(|c| matches!(c, Condition::Contained { .. }))
    }

    pub fn max_residual(&self) -> f64 {
        self.max_of(|_| true)
    }

    fn max_of(&self, pick: impl Fn(&Condition) -> bool) -> f64 {
        self.residuals
            .iter()
            .filter(|r| pick(&r.condition))
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    pub fn min_rank(&self) -> usize {
        self.ranks.iter().map(|r| r.rank).min().unwrap_or(0)
    }

    pub fn min_margin(&self) -> f64 {
        self.ranks.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

fn check_shapes(eff: &EffectiveChannel, pre: &PrecoderSet) -> Result<()> {
    if pre.users() != eff.users() {
        return Err(param(format!(
            "{} precoders for {} users",
            pre.users(),
            eff.users()
        )));
    }
    if pre.dim() != eff.dim() {
        return Err(param(format!(
            "precoders have {} rows, effective dimension is {}",
            pre.dim(),
            eff.dim()
        )));
    }
    Ok(())
}

/// `H_rx,tx · V_tx` with one-based labels.
pub fn received(eff: &EffectiveChannel, pre: &PrecoderSet, rx: usize, tx: usize) -> CMatrix {
    diag_mul(eff.diag(rx - 1, tx - 1), pre.v(tx))
}

fn column_norm(col: impl Iterator<Item = Complex64>) -> f64 {
    col.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// RMS over columns of the sine of the angle between paired columns.
fn columnwise_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return projector_residual(a, b);
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (ca, cb) in a.column_iter().zip(b.column_iter()) {
        let na = column_norm(ca.iter().copied());
        let nb = column_norm(cb.iter().copied());
        if na == 0.0 || nb == 0.0 {
            acc += if na == nb { 0.0 } else { 1.0 };
            continue;
        }
        let inner: Complex64 = cb.iter().zip(ca.iter()).map(|(x, y)| x.conj() * y).sum();
        let coef = inner / (nb * nb);
        let off = column_norm(ca.iter().zip(cb.iter()).map(|(y, x)| y - coef * x));
        acc += (off / na).powi(2);
    }
    (acc / a.ncols() as f64).sqrt()
}

/// RMS over columns of `‖(I − P) x‖ / ‖x‖`, `P` projecting onto `span(basis_of)`.
fn projector_residual(x: &CMatrix, basis_of: &CMatrix) -> f64 {
    if x.ncols() == 0 {
        return 0.0;
    }
    let u = column_basis(basis_of);
    let proj = &u * (u.adjoint() * x);
    let outside = x - proj;
    let mut acc = 0.0;
    for (c, o) in x.column_iter().zip(outside.column_iter()) {
        let nx = column_norm(c.iter().copied());
        if nx > 0.0 {
            acc += (column_norm(o.iter().copied()) / nx).powi(2);
        }
    }
    (acc / x.ncols() as f64).sqrt()
}

/// Residuals of every equality and containment alignment condition.
pub fn check_alignment(eff: &EffectiveChannel, pre: &PrecoderSet) -> Result<Vec<Residual>> {
    check_shapes(eff, pre)?;
    let users = eff.users();
    let mut out = Vec::new();
    let anchor = received(eff, pre, 1, 3);
    for i in (2..=users).filter(|&i| i != 3) {
        out.push(Residual {
            condition: Condition::Equal { i },
            value: columnwise_residual(&received(eff, pre, 1, i), &anchor),
        });
    }
    for j in 2..=users {
        let span = received(eff, pre, j, 1);
        for k in (2..=users).filter(|&k| k != j) {
            out.push(Residual {
                condition: Condition::Contained { j, k },
                value: projector_residual(&received(eff, pre, j, k), &span),
            });
        }
    }
    Ok(out)
}

/// Receiver's `[desired | interference basis]` matrix: `[H_11 V_1, H_12 V_2]`
/// at receiver 1 and `[H_jj V_j, H_j1 V_1]` elsewhere.
pub fn composite_matrix(eff: &EffectiveChannel, pre: &PrecoderSet, receiver: usize) -> Result<CMatrix> {
    check_shapes(eff, pre)?;
    if receiver == 0 || receiver > eff.users() {
        return Err(param(format!("receiver {receiver} out of range")));
    }
    let desired = received(eff, pre, receiver, receiver);
    let interference = if receiver == 1 {
        received(eff, pre, 1, 2)
    } else {
        received(eff, pre, receiver, 1)
    };
    Ok(hstack(&[&desired, &interference]))
}

/// Numerical rank of the receiver's composite matrix against the required `D`.
pub fn signal_space_rank(eff: &EffectiveChannel, pre: &PrecoderSet, receiver: usize) -> Result<RankResult> {
    let m = composite_matrix(eff, pre, receiver)?;
    let info = numerical_rank(&m);
    Ok(RankResult {
        receiver,
        rank: info.rank,
        required: eff.dim(),
        margin: info.margin(),
        threshold: info.threshold,
    })
}

/// `S = [V_1, H_11^{-1} H_12 V_2]`, the receiver-1 composite with `H_11`
/// divided out.
pub fn build_s_matrix(eff: &EffectiveChannel, pre: &PrecoderSet) -> Result<CMatrix> {
    check_shapes(eff, pre)?;
    let rotated = diag_ratio_mul(eff.diag(0, 1), eff.diag(0, 0), pre.v(2));
    Ok(hstack(&[pre.v(1), &rotated]))
}

/// Full certificate: residuals, all receiver ranks and the fail-closed verdict.
pub fn certify(eff: &EffectiveChannel, pre: &PrecoderSet) -> Result<AlignmentReport> {
    let residuals = check_alignment(eff, pre)?;
    let ranks = (1..=eff.users())
        .map(|r| signal_space_rank(eff, pre, r))
        .collect::<Result<Vec<_>>>()?;
    let pass = residuals.iter().all(|r| r.value <= ALIGNMENT_TOLERANCE)
        && ranks.iter().all(RankResult::full);
    Ok(AlignmentReport {
        residuals,
        ranks,
        alignment_tolerance: ALIGNMENT_TOLERANCE,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesGap {
    /// `lambda_<k>_<l>` or `kappa`.
    pub label: String,
    /// Smallest `|a − b| / max(|a|, |b|)` over entry pairs; infinite for a
    /// single entry.
    pub min_gap: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub series: Vec<SeriesGap>,
}

impl AuditReport {
    pub fn any_flagged(&self) -> bool {
        self.series.iter().any(|s| s.flagged)
    }

    pub fn get(&self, label: &str) -> Option<&SeriesGap> {
        self.series.iter().find(|s| s.label == label)
    }
}

pub fn min_relative_gap(values: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &x) in values.iter().enumerate() {
        for &y in &values[a + 1..] {
            let scale = x.norm().max(y.norm());
            let gap = if scale > 0.0 { (x - y).norm() / scale } else { 0.0 };
            best = best.min(gap);
        }
    }
    best
}

/// Minimum pairwise relative gap across slots for every cascade spectrum
/// and for `κ`.
pub fn distinctness_audit(cascades: &CascadeSet) -> AuditReport {
    let gap = |label: String, values: &[Complex64]| {
        let min_gap = min_relative_gap(values);
        SeriesGap {
            label,
            min_gap,
            flagged: min_gap < DISTINCTNESS_FLOOR,
        }
    };
    let mut series: Vec<_> = cascades
        .lambdas()
        .map(|((k, l), v)| gap(format!("lambda_{k}_{l}"), v))
        .collect();
    series.push(gap("kappa".to_string(), cascades.kappa()));
    AuditReport { series }
}
