//! Independent reference computations used by the integration tests. These
//! work from the raw channel and gain values only and never call the
//! effective-channel or cascade builders.

#![allow(dead_code)]

use ia_core::{ChannelSet, GainPlan};
use num_complex::Complex64;

/// One raw slot's contribution `β_k h_kj α_j` (one-based users).
fn slot_term(ch: &ChannelSet, g: &GainPlan, k: usize, j: usize, slot: usize) -> Complex64 {
    g.beta(k - 1, slot) * ch.h(k - 1, j - 1, slot) * g.alpha(j - 1, slot)
}

/// Paired-slot effective coefficient for slots `s` and `t`.
fn paired(ch: &ChannelSet, g: &GainPlan, k: usize, j: usize, s: usize, t: usize) -> Complex64 {
    slot_term(ch, g, k, j, s) + slot_term(ch, g, k, j, t)
}

/// `λ_kl` at effective slot `q` of a double-layered extension, written out
/// as the ratio of three paired numerator factors over three paired
/// denominator factors.
pub fn lambda_double(ch: &ChannelSet, g: &GainPlan, k: usize, l: usize, q: usize) -> Complex64 {
    let half = ch.slots() / 2;
    let (s, t) = (q, half + q);
    let n1 = paired(ch, g, 2, 1, s, t);
    let n2 = paired(ch, g, 1, 3, s, t);
    let n3 = paired(ch, g, k, l, s, t);
    let d1 = paired(ch, g, 2, 3, s, t);
    let d2 = paired(ch, g, k, 1, s, t);
    let d3 = paired(ch, g, 1, l, s, t);
    (n1 * n2 * n3) / (d1 * d2 * d3)
}

/// `κ` at effective slot `q` of a double-layered extension.
pub fn kappa_double(ch: &ChannelSet, g: &GainPlan, q: usize) -> Complex64 {
    let half = ch.slots() / 2;
    paired(ch, g, 1, 2, q, half + q) / paired(ch, g, 1, 1, q, half + q)
}

/// Brute-force cascade pair set: all ordered `(k, l)` over `1..=K`, filtered.
pub fn pairs_brute(users: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (1..=users)
        .flat_map(|k| (1..=users).map(move |l| (k, l)))
        .filter(|&(k, l)| k != 1 && l != 1 && k != l && !(k == 2 && l == 3))
        .collect();
    all.sort();
    all
}

/// Brute-force exponent tuples: base-`(cap+1)` digits of `0..(cap+1)^N`,
/// most significant digit first.
pub fn tuples_brute(pairs: usize, cap: u32) -> Vec<Vec<u32>> {
    let base = cap as usize + 1;
    let total = base.pow(pairs as u32);
    (0..total)
        .map(|mut idx| {
            let mut digits = vec![0u32; pairs];
            for d in digits.iter_mut().rev() {
                *d = (idx % base) as u32;
                idx /= base;
            }
            digits
        })
        .collect()
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
