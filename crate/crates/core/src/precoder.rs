//! Asymptotic alignment precoders built from cascade products of the
//! effective channels.
//!
//! User labels here are one-based (`1..=K`), matching the usual naming of
//! the cascade pairs `(k, l)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;

use crate::channel::EffectiveChannel;
use crate::error::{param, Error, Result};

/// Largest tuple list `enumerate_tuples` will materialize.
pub const MAX_TUPLES: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Single,
    Double,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Single => "single",
            Layer::Double => "double",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Layer::Single),
            "double" => Ok(Layer::Double),
            other => Err(param(format!("unknown layer `{other}`"))),
        }
    }
}

fn checked_pow(base: i128, exp: u32, what: &str) -> Result<i128> {
    base.checked_pow(exp)
        .ok_or_else(|| Error::Capacity(format!("{what}: {base}^{exp} overflows 128 bits")))
}

fn overflow(what: &str) -> Error {
    Error::Capacity(format!("{what} overflows 128 bits"))
}

/// Cascade order `N = (K-1)(K-2) - 1`.
pub fn cascade_order(users: usize) -> usize {
    (users - 1) * (users - 2) - 1
}

/// Derived sizes of one alignment construction. All counts are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecoderConfig {
    pub users: usize,
    pub exponent_cap: u32,
    pub cascade_order: u32,
    pub layer: Layer,
    /// `(n+1)^N` streams for user 1.
    pub leading_streams: i128,
    /// `n^N` streams for every other user.
    pub other_streams: i128,
    /// Raw slots `T`.
    pub extension_length: i128,
    /// Working dimension `D = (n+1)^N + n^N`.
    pub effective_dim: i128,
}

pub fn make_config(users: usize, n: u32, layer: Layer) -> Result<PrecoderConfig> {
    if users < 3 {
        return Err(param(format!("need at least 3 users, got {users}")));
    }
    if n < 1 {
        return Err(param("exponent cap n must be at least 1"));
    }
    let order = u32::try_from(cascade_order(users)).map_err(|_| overflow("cascade order"))?;
    let lead = checked_pow(i128::from(n) + 1, order, "(n+1)^N")?;
    let other = checked_pow(i128::from(n), order, "n^N")?;
    let dim = lead.checked_add(other).ok_or_else(|| overflow("(n+1)^N + n^N"))?;
    let length = match layer {
        Layer::Single => dim,
        Layer::Double => dim.checked_mul(2).ok_or_else(|| overflow("2[(n+1)^N + n^N]"))?,
    };
    Ok(PrecoderConfig {
        users,
        exponent_cap: n,
        cascade_order: order,
        layer,
        leading_streams: lead,
        other_streams: other,
        extension_length: length,
        effective_dim: dim,
    })
}

impl PrecoderConfig {
    fn to_usize(v: i128, what: &str) -> Result<usize> {
        usize::try_from(v).map_err(|_| Error::Capacity(format!("{what} = {v} does not fit in memory")))
    }

    pub fn effective_dim_usize(&self) -> Result<usize> {
        Self::to_usize(self.effective_dim, "effective dimension")
    }

    pub fn extension_length_usize(&self) -> Result<usize> {
        Self::to_usize(self.extension_length, "extension length")
    }
}

/// Exact network DoF as a reduced fraction plus its float value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dof {
    pub num: i128,
    pub den: i128,
}

impl Dof {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self > p/q`, exactly.
    pub fn exceeds(&self, p: i128, q: i128) -> Result<bool> {
        let lhs = self.num.checked_mul(q).ok_or_else(|| overflow("DoF comparison"))?;
        let rhs = p.checked_mul(self.den).ok_or_else(|| overflow("DoF comparison"))?;
        Ok(lhs > rhs)
    }
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Total network DoF `[(n+1)^N + (K-1) n^N] / [(n+1)^N + n^N]`, halved for
/// the double layer.
pub fn closed_form_dof(users: usize, n: u32, layer: Layer) -> Result<Dof> {
    let cfg = make_config(users, n, layer)?;
    let others = i128::try_from(users - 1).map_err(|_| overflow("K-1"))?;
    let num = cfg
        .other_streams
        .checked_mul(others)
        .and_then(|v| v.checked_add(cfg.leading_streams))
        .ok_or_else(|| overflow("DoF numerator"))?;
    let den = cfg.extension_length;
    let g = num.gcd(&den);
    Ok(Dof {
        num: num / g,
        den: den / g,
    })
}

/// Cascade index pairs `(k, l)` with `k, l ∈ {2..K}`, `k ≠ l`, excluding
/// `(2, 3)`, sorted ascending.
pub fn cascade_pairs(users: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for k in 2..=users {
        for l in 2..=users {
            if k != l && (k, l) != (2, 3) {
                pairs.push((k, l));
            }
        }
    }
    pairs
}

/// One assignment of exponents `n_kl` to the cascade pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentTuple {
    pub entries: BTreeMap<(usize, usize), u32>,
}

impl ExponentTuple {
    pub fn get(&self, k: usize, l: usize) -> Option<u32> {
        self.entries.get(&(k, l)).copied()
    }
}

fn tuple_count(pairs: usize, cap: u32) -> Result<u128> {
    let exp = u32::try_from(pairs).map_err(|_| overflow("tuple count"))?;
    (u128::from(cap) + 1)
        .checked_pow(exp)
        .ok_or_else(|| overflow("tuple count"))
}

/// Exponent vectors over `pairs` slots in lexicographic order, the first
/// slot most significant.
fn exponent_vectors(pairs: usize, cap: u32) -> Result<Vec<Vec<u32>>> {
    let count = tuple_count(pairs, cap)?;
    if count > MAX_TUPLES {
        return Err(Error::Capacity(format!(
            "{count} exponent tuples exceed the materialization limit of {MAX_TUPLES}; \
             use the closed-form DoF instead"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0u32; pairs];
    loop {
        out.push(cur.clone());
        let mut i = pairs;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < cap {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
        }
    }
}

/// All `(cap+1)^N` exponent tuples with every `n_kl ≤ cap`.
pub fn enumerate_tuples(config: &PrecoderConfig, cap: u32) -> Result<Vec<ExponentTuple>> {
    if cap > config.exponent_cap {
        return Err(param(format!(
            "tuple cap {cap} exceeds exponent cap {}",
            config.exponent_cap
        )));
    }
    let pairs = cascade_pairs(config.users);
    Ok(exponent_vectors(pairs.len(), cap)?
        .into_iter()
        .map(|v| ExponentTuple {
            entries: pairs.iter().copied().zip(v).collect(),
        })
        .collect())
}

/// Diagonals of every cascade `T_kl` plus `κ = diag(H_11^{-1} H_12)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSet {
    pairs: Vec<(usize, usize)>,
    lambdas: Vec<Vec<Complex64>>,
    kappa: Vec<Complex64>,
}

impl CascadeSet {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn lambda(&self, k: usize, l: usize) -> Option<&[Complex64]> {
        self.pairs
            .iter()
            .position(|&p| p == (k, l))
            .map(|i| self.lambdas[i].as_slice())
    }

    pub fn lambdas(&self) -> impl Iterator<Item = ((usize, usize), &[Complex64])> {
        self.pairs
            .iter()
            .copied()
            .zip(self.lambdas.iter().map(Vec::as_slice))
    }

    pub fn kappa(&self) -> &[Complex64] {
        &self.kappa
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }
}

fn checked_ratio(num: Complex64, den: Complex64, what: impl Fn() -> String) -> Result<Complex64> {
    let z = num / den;
    if !z.re.is_finite() || !z.im.is_finite() || z.norm() == 0.0 {
        return Err(Error::Degenerate(format!("{} is not a usable ratio", what())));
    }
    Ok(z)
}

/// Entrywise cascades
/// `T_kl = H_21 H_23^{-1} H_13 H_k1^{-1} H_kl H_1l^{-1}` and `κ = H_12 / H_11`.
pub fn build_cascades(eff: &EffectiveChannel) -> Result<CascadeSet> {
    let users = eff.users();
    if users < 3 {
        return Err(param("cascades need at least 3 users"));
    }
    let dim = eff.dim();
    let h = |k: usize, j: usize, q: usize| eff.entry(k - 1, j - 1, q);
    let pairs = cascade_pairs(users);
    let mut lambdas = Vec::with_capacity(pairs.len());
    for &(k, l) in &pairs {
        let mut diag = Vec::with_capacity(dim);
        for q in 0..dim {
            let num = h(2, 1, q) * h(1, 3, q) * h(k, l, q);
            let den = h(2, 3, q) * h(k, 1, q) * h(1, l, q);
            diag.push(checked_ratio(num, den, || format!("T_{k}{l}[{q}]"))?);
        }
        lambdas.push(diag);
    }
    let kappa = (0..dim)
        .map(|q| checked_ratio(h(1, 2, q), h(1, 1, q), || format!("kappa[{q}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CascadeSet {
        pairs,
        lambdas,
        kappa,
    })
}

/// Per-user precoder matrices `V_k` (`D × d_k`, unit-norm columns).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    matrices: Vec<DMatrix<Complex64>>,
    pairs: Vec<(usize, usize)>,
    leading_order: Vec<Vec<u32>>,
    other_order: Vec<Vec<u32>>,
    multiply_count: u64,
}

impl PrecoderSet {
    /// Wraps arbitrary precoders (one per user, user 1 first). Column order
    /// metadata is left empty.
    pub fn from_matrices(matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if matrices.len() < 3 {
            return Err(param("need precoders for at least 3 users"));
        }
        let rows = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != rows) {
            return Err(param("all precoders must share the row dimension"));
        }
        Ok(PrecoderSet {
            matrices,
            pairs: Vec::new(),
            leading_order: Vec::new(),
            other_order: Vec::new(),
            multiply_count: 0,
        })
    }

    pub fn users(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    /// `V_user` for a one-based user label.
    pub fn v(&self, user: usize) -> &DMatrix<Complex64> {
        &self.matrices[user - 1]
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<DMatrix<Complex64>> {
        self.matrices
    }

    pub fn stream_counts(&self) -> Vec<usize> {
        self.matrices.iter().map(DMatrix::ncols).collect()
    }

    pub fn total_streams(&self) -> usize {
        self.matrices.iter().map(DMatrix::ncols).sum()
    }

    /// Cascade pairs indexing the exponent vectors of the column order.
    pub fn column_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Exponent vector behind each column of `V_1`.
    pub fn leading_order(&self) -> &[Vec<u32>] {
        &self.leading_order
    }

    /// Exponent vector behind each column of `V_k`, `k ≠ 1`.
    pub fn other_order(&self) -> &[Vec<u32>] {
        &self.other_order
    }

    /// Complex multiplies (and divisions) spent building the set.
    pub fn multiply_count(&self) -> u64 {
        self.multiply_count
    }
}

/// Builds `V_1`, `V_3` and `V_i = H_1i^{-1} H_13 V_3` from the cascade
/// diagonals. Only entrywise diagonal arithmetic is used.
pub fn build_precoders(eff: &EffectiveChannel, config: &PrecoderConfig) -> Result<PrecoderSet> {
    let dim = eff.dim();
    if eff.users() != config.users {
        return Err(param(format!(
            "channel has {} users, config has {}",
            eff.users(),
            config.users
        )));
    }
    if i128::try_from(dim).ok() != Some(config.effective_dim) {
        return Err(param(format!(
            "effective dimension {dim} does not match configured {}",
            config.effective_dim
        )));
    }
    let n = config.exponent_cap;
    let users = config.users;
    let cascades = build_cascades(eff)?;
    let pairs = cascades.pairs().to_vec();
    let leading_order = exponent_vectors(pairs.len(), n)?;
    let other_order = exponent_vectors(pairs.len(), n - 1)?;
    let mut muls: u64 = 0;

    // powers[p][e] = λ_p^e, e = 0..=n
    let one = Complex64::new(1.0, 0.0);
    let powers: Vec<Vec<Vec<Complex64>>> = cascades
        .lambdas
        .iter()
        .map(|lam| {
            let mut table = vec![vec![one; dim], lam.clone()];
            for e in 2..=n as usize {
                let next: Vec<_> = table[e - 1].iter().zip(lam).map(|(a, b)| a * b).collect();
                muls += dim as u64;
                table.push(next);
            }
            table
        })
        .collect();

    let mut v1 = DMatrix::from_element(dim, leading_order.len(), one);
    for (c, exps) in leading_order.iter().enumerate() {
        for q in 0..dim {
            let (z, m) = monomial(&powers, exps, q);
            v1[(q, c)] = z;
            muls += m;
        }
    }

    let h = |k: usize, j: usize, q: usize| eff.entry(k - 1, j - 1, q);
    let mut v3 = DMatrix::from_element(dim, other_order.len(), one);
    for q in 0..dim {
        let pre = h(2, 1, q) / h(2, 3, q);
        muls += 1;
        for (c, exps) in other_order.iter().enumerate() {
            let (z, m) = monomial(&powers, exps, q);
            v3[(q, c)] = pre * z;
            muls += m + 1;
        }
    }

    muls += normalize_columns(&mut v1);
    muls += normalize_columns(&mut v3);

    let mut matrices = Vec::with_capacity(users);
    for user in 1..=users {
        let m = match user {
            1 => v1.clone(),
            3 => v3.clone(),
            i => {
                let mut vi = v3.clone();
                for q in 0..dim {
                    let g = h(1, 3, q) / h(1, i, q);
                    muls += 1;
                    for c in 0..vi.ncols() {
                        vi[(q, c)] *= g;
                        muls += 1;
                    }
                }
                muls += normalize_columns(&mut vi);
                vi
            }
        };
        matrices.push(m);
    }

    Ok(PrecoderSet {
        matrices,
        pairs,
        leading_order,
        other_order,
        multiply_count: muls,
    })
}

fn monomial(powers: &[Vec<Vec<Complex64>>], exps: &[u32], q: usize) -> (Complex64, u64) {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut muls = 0;
    for (table, &e) in powers.iter().zip(exps) {
        if e > 0 {
            acc *= table[e as usize][q];
            muls += 1;
        }
    }
    (acc, muls)
}

fn normalize_columns(m: &mut DMatrix<Complex64>) -> u64 {
    let mut muls = 0;
    for mut col in m.column_iter_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col.iter_mut().for_each(|z| *z /= norm);
        muls += 2 * col.len() as u64;
    }
    muls
}
