//! Channel realizations, artificial gain plans and the symbol-extended
//! effective channels built from them.
//!
//! Indices at this level are zero-based: `rx` is the destination, `tx` the
//! source and `slot` the raw time slot. Every effective matrix is diagonal
//! and is only ever stored as its diagonal.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};

/// Raw draws below this magnitude are redrawn.
pub const MIN_DRAW_MAGNITUDE: f64 = 1e-6;

/// Effective entries below this fraction of their matrix's mean magnitude are
/// treated as a degenerate realization.
pub const DEGENERATE_RELATIVE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelModel {
    /// One coefficient per link for all slots.
    Constant,
    /// Two coherence blocks, slots `0..T/2` and `T/2..T`.
    SlowChanging,
    /// Independent coefficient per slot.
    Iid,
}

impl ChannelModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelModel::Constant => "constant",
            ChannelModel::SlowChanging => "slow_changing",
            ChannelModel::Iid => "iid",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ChannelModel::Constant),
            "slow_changing" | "slow-changing" | "slow" => Ok(ChannelModel::SlowChanging),
            "iid" => Ok(ChannelModel::Iid),
            other => Err(param(format!("unknown channel model `{other}`"))),
        }
    }
}

/// How an effective channel is formed from raw slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coding {
    /// Raw coefficients, `D = T`.
    Plain,
    /// Per-slot random transmit and receive gains, `D = T`.
    Naive,
    /// Slot `q` paired with slot `T/2 + q` under random gains, `D = T/2`.
    Double,
}

impl Coding {
    pub fn as_str(self) -> &'static str {
        match self {
            Coding::Plain => "plain",
            Coding::Naive => "naive",
            Coding::Double => "double",
        }
    }

    pub fn uses_gains(self) -> bool {
        !matches!(self, Coding::Plain)
    }

    /// Raw slots consumed per effective dimension.
    pub fn slots_per_dim(self) -> usize {
        match self {
            Coding::Double => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Coding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Coding::Plain),
            "naive" => Ok(Coding::Naive),
            "double" => Ok(Coding::Double),
            other => Err(param(format!("unknown coding `{other}`"))),
        }
    }
}

/// Sampling law for channel coefficients and gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SamplingLaw {
    /// Circularly-symmetric complex normal with unit variance.
    #[default]
    ComplexNormal,
}

/// Draws one unit-variance circularly-symmetric complex normal sample,
/// redrawing anything smaller than [`MIN_DRAW_MAGNITUDE`].
pub fn draw_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    loop {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let z = Complex64::new(re * scale, im * scale);
        if z.norm() >= MIN_DRAW_MAGNITUDE {
            return z;
        }
    }
}

fn check_entry(z: Complex64, what: &str) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(param(format!("{what} is not finite")));
    }
    if z.norm() == 0.0 {
        return Err(param(format!("{what} is zero")));
    }
    Ok(())
}

/// Raw per-slot channel tensor `h[rx][tx][slot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    users: usize,
    slots: usize,
    entries: Vec<Complex64>,
    model: ChannelModel,
    seed: Option<u64>,
}

impl ChannelSet {
    /// Builds a channel set from explicit coefficients laid out as
    /// `entries[(rx * users + tx) * slots + slot]`, checking the model's
    /// structure.
    pub fn from_entries(
        users: usize,
        slots: usize,
        entries: Vec<Complex64>,
        model: ChannelModel,
    ) -> Result<Self> {
        validate_dims(users, slots, model)?;
        if entries.len() != users * users * slots {
            return Err(param(format!(
                "expected {} channel entries, got {}",
                users * users * slots,
                entries.len()
            )));
        }
        for (i, &z) in entries.iter().enumerate() {
            check_entry(z, &format!("channel entry {i}"))?;
        }
        let set = ChannelSet {
            users,
            slots,
            entries,
            model,
            seed: None,
        };
        set.check_model()?;
        Ok(set)
    }

    /// Constant channels from a `users × users` coefficient table
    /// (row = receiver).
    pub fn constant(users: usize, slots: usize, table: &[Complex64]) -> Result<Self> {
        if table.len() != users * users {
            return Err(param("constant table must be users × users"));
        }
        let entries = table
            .iter()
            .flat_map(|&h| std::iter::repeat_n(h, slots))
            .collect();
        Self::from_entries(users, slots, entries, ChannelModel::Constant)
    }

    fn check_model(&self) -> Result<()> {
        let half = self.slots / 2;
        for rx in 0..self.users {
            for tx in 0..self.users {
                let row = self.link(rx, tx);
                let ok = match self.model {
                    ChannelModel::Constant => row.iter().all(|&z| z == row[0]),
                    ChannelModel::SlowChanging => {
                        row[..half].iter().all(|&z| z == row[0])
                            && row[half..].iter().all(|&z| z == row[half])
                    }
                    ChannelModel::Iid => true,
                };
                if !ok {
                    return Err(param(format!(
                        "link ({rx}, {tx}) violates the {} model",
                        self.model
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn h(&self, rx: usize, tx: usize, slot: usize) -> Complex64 {
        self.entries[(rx * self.users + tx) * self.slots + slot]
    }

    /// All slots of one link; the diagonal of its raw extended channel.
    pub fn link(&self, rx: usize, tx: usize) -> &[Complex64] {
        let start = (rx * self.users + tx) * self.slots;
        &self.entries[start..start + self.slots]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

fn validate_dims(users: usize, slots: usize, model: ChannelModel) -> Result<()> {
    if users < 3 {
        return Err(param(format!("need at least 3 users, got {users}")));
    }
    if slots < 2 {
        return Err(param(format!("need at least 2 slots, got {slots}")));
    }
    if model == ChannelModel::SlowChanging && !slots.is_multiple_of(2) {
        return Err(param(format!(
            "slow-changing channels need an even slot count, got {slots}"
        )));
    }
    Ok(())
}

/// Samples a channel realization; deterministic in `seed`.
pub fn generate_channels(
    users: usize,
    slots: usize,
    model: ChannelModel,
    seed: u64,
) -> Result<ChannelSet> {
    validate_dims(users, slots, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = slots / 2;
    let mut entries = Vec::with_capacity(users * users * slots);
    for _ in 0..users * users {
        match model {
            ChannelModel::Constant => {
                let h = draw_complex_normal(&mut rng);
                entries.extend(std::iter::repeat_n(h, slots));
            }
            ChannelModel::SlowChanging => {
                let first = draw_complex_normal(&mut rng);
                let second = draw_complex_normal(&mut rng);
                entries.extend(std::iter::repeat_n(first, half));
                entries.extend(std::iter::repeat_n(second, slots - half));
            }
            ChannelModel::Iid => {
                entries.extend((0..slots).map(|_| draw_complex_normal(&mut rng)));
            }
        }
    }
    Ok(ChannelSet {
        users,
        slots,
        entries,
        model,
        seed: Some(seed),
    })
}

/// Artificial transmit gains `alpha[tx][slot]` and receive gains
/// `beta[rx][slot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPlan {
    users: usize,
    slots: usize,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
    law: SamplingLaw,
    seed: Option<u64>,
}

impl GainPlan {
    /// Explicit gains, each laid out as `[user * slots + slot]`.
    pub fn from_parts(
        users: usize,
        slots: usize,
        alpha: Vec<Complex64>,
        beta: Vec<Complex64>,
    ) -> Result<Self> {
        if users == 0 || slots == 0 {
            return Err(param("gain plan needs at least one user and one slot"));
        }
        if alpha.len() != users * slots || beta.len() != users * slots {
            return Err(param("gain tensors must be users × slots"));
        }
        for (i, &z) in alpha.iter().enumerate() {
            check_entry(z, &format!("alpha entry {i}"))?;
        }
        for (i, &z) in beta.iter().enumerate() {
            check_entry(z, &format!("beta entry {i}"))?;
        }
        Ok(GainPlan {
            users,
            slots,
            alpha,
            beta,
            law: SamplingLaw::ComplexNormal,
            seed: None,
        })
    }

    /// All gains equal to one.
    pub fn unit(users: usize, slots: usize) -> Result<Self> {
        let ones = vec![Complex64::new(1.0, 0.0); users * slots];
        Self::from_parts(users, slots, ones.clone(), ones)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn law(&self) -> SamplingLaw {
        self.law
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn alpha(&self, tx: usize, slot: usize) -> Complex64 {
        self.alpha[tx * self.slots + slot]
    }

    #[inline]
    pub fn beta(&self, rx: usize, slot: usize) -> Complex64 {
        self.beta[rx * self.slots + slot]
    }

    pub fn alpha_row(&self, tx: usize) -> &[Complex64] {
        &self.alpha[tx * self.slots..(tx + 1) * self.slots]
    }

    pub fn beta_row(&self, rx: usize) -> &[Complex64] {
        &self.beta[rx * self.slots..(rx + 1) * self.slots]
    }
}

/// Samples independent gains for every user and slot; deterministic in `seed`.
pub fn generate_gains(users: usize, slots: usize, seed: u64) -> Result<GainPlan> {
    if users == 0 || slots == 0 {
        return Err(param("gain plan needs at least one user and one slot"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = (0..users * slots)
        .map(|_| draw_complex_normal(&mut rng))
        .collect();
    let beta = (0..users * slots)
        .map(|_| draw_complex_normal(&mut rng))
        .collect();
    Ok(GainPlan {
        users,
        slots,
        alpha,
        beta,
        law: SamplingLaw::ComplexNormal,
        seed: Some(seed),
    })
}

/// Where an effective channel came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub slots: usize,
    pub model: ChannelModel,
    pub channel_seed: Option<u64>,
    pub gain_seed: Option<u64>,
}

/// Family of `D × D` diagonal effective channels `H[rx][tx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    users: usize,
    dim: usize,
    diagonals: Vec<Complex64>,
    coding: Coding,
    provenance: Provenance,
}

impl EffectiveChannel {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coding(&self) -> Coding {
        self.coding
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Raw slots the effective channel spans.
    pub fn raw_slots(&self) -> usize {
        self.provenance.slots
    }

    #[inline]
    pub fn entry(&self, rx: usize, tx: usize, q: usize) -> Complex64 {
        self.diagonals[(rx * self.users + tx) * self.dim + q]
    }

    /// Diagonal of `H[rx][tx]`.
    pub fn diag(&self, rx: usize, tx: usize) -> &[Complex64] {
        let start = (rx * self.users + tx) * self.dim;
        &self.diagonals[start..start + self.dim]
    }
}

/// Builds the effective diagonal channels for the requested coding.
pub fn build_effective(
    channels: &ChannelSet,
    gains: Option<&GainPlan>,
    coding: Coding,
) -> Result<EffectiveChannel> {
    let users = channels.users();
    let slots = channels.slots();
    let gains = match (coding, gains) {
        (Coding::Plain, _) => None,
        (_, None) => return Err(param(format!("{coding} coding needs a gain plan"))),
        (_, Some(g)) => {
            if g.users() != users || g.slots() != slots {
                return Err(param(format!(
                    "gain plan is {}×{}, channels are {}×{}",
                    g.users(),
                    g.slots(),
                    users,
                    slots
                )));
            }
            Some(g)
        }
    };
    if coding == Coding::Double && !slots.is_multiple_of(2) {
        return Err(param(format!(
            "double-layered coding needs an even slot count, got {slots}"
        )));
    }

    let dim = slots / coding.slots_per_dim();
    let mut diagonals = Vec::with_capacity(users * users * dim);
    for rx in 0..users {
        for tx in 0..users {
            let h = channels.link(rx, tx);
            match (coding, gains) {
                (Coding::Plain, _) => diagonals.extend_from_slice(h),
                (Coding::Naive, Some(g)) => {
                    let (a, b) = (g.alpha_row(tx), g.beta_row(rx));
                    diagonals.extend((0..dim).map(|q| b[q] * h[q] * a[q]));
                }
                (Coding::Double, Some(g)) => {
                    let (a, b) = (g.alpha_row(tx), g.beta_row(rx));
                    diagonals.extend((0..dim).map(|q| {
                        let p = dim + q;
                        b[q] * h[q] * a[q] + b[p] * h[p] * a[p]
                    }));
                }
                _ => unreachable!("gains resolved above"),
            }
            let row = &diagonals[diagonals.len() - dim..];
            check_effective_row(row, rx, tx)?;
        }
    }

    Ok(EffectiveChannel {
        users,
        dim,
        diagonals,
        coding,
        provenance: Provenance {
            slots,
            model: channels.model(),
            channel_seed: channels.seed(),
            gain_seed: gains.and_then(GainPlan::seed),
        },
    })
}

fn check_effective_row(row: &[Complex64], rx: usize, tx: usize) -> Result<()> {
    let mean = row.iter().map(|z| z.norm()).sum::<f64>() / row.len() as f64;
    if !mean.is_finite() {
        return Err(param(format!("effective channel ({rx}, {tx}) is not finite")));
    }
    for (q, z) in row.iter().enumerate() {
        if z.norm() <= DEGENERATE_RELATIVE * mean {
            return Err(Error::Degenerate(format!(
                "effective entry ({rx}, {tx}, {q}) cancelled to {:.3e}",
                z.norm()
            )));
        }
    }
    Ok(())
}
