//! End-to-end link simulation over the raw slots.
//!
//! Each user's effective-domain block `x = a · V s` is mapped to raw slots
//! (repeated over the slot pair for double coding, weighted by the transmit
//! gains), passed through the raw channel, then folded back with the receive
//! gains. Detection is zero-forcing on the noise-whitened
//! `[desired | interference basis]` matrix. Rates come from the exact
//! post-detection SINR, so results depend only on the seeded gain draws.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{build_effective, generate_gains, ChannelSet, Coding, EffectiveChannel, GainPlan};
use crate::error::{param, Error, Result};
use crate::linalg::{pinv, CMatrix};
use crate::precoder::{build_precoders, Layer, PrecoderConfig, PrecoderSet};
use crate::verify::composite_matrix;

/// Consecutive degenerate draws tolerated before a trial gives up.
pub const MAX_RESAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Strictly increasing SNR points in dB.
    pub snr_points_db: Vec<f64>,
    pub trials: usize,
    /// Transmit power per user per raw slot at 0 dB; noise variance is 1.
    pub power_per_user: f64,
    pub seed: u64,
}

impl LinkConfig {
    pub fn new(snr_points_db: Vec<f64>, trials: usize, seed: u64) -> Self {
        LinkConfig {
            snr_points_db,
            trials,
            power_per_user: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_points_db.is_empty() {
            return Err(param("need at least one SNR point"));
        }
        if self.snr_points_db.iter().any(|s| !s.is_finite()) {
            return Err(param("SNR points must be finite"));
        }
        if self.snr_points_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(param("SNR points must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(param("need at least one trial"));
        }
        if !(self.power_per_user > 0.0 && self.power_per_user.is_finite()) {
            return Err(param("power per user must be positive"));
        }
        Ok(())
    }

    /// Per-user raw-slot power at an SNR point.
    pub fn power_at(&self, snr_db: f64) -> f64 {
        self.power_per_user * 10f64.powf(snr_db / 10.0)
    }
}

/// Sum-rate curve in bits per raw channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub snr_db: Vec<f64>,
    pub sum_rate: Vec<f64>,
    /// `per_user_rate[point][user]`.
    pub per_user_rate: Vec<Vec<f64>>,
    pub dof_estimate: f64,
    /// Degenerate realizations that were resampled.
    pub failures: usize,
    pub trials: usize,
}

/// Pre-log slope between the two highest SNR points.
pub fn estimate_dof(result: &LinkResult) -> Result<f64> {
    slope_of(&result.snr_db, &result.sum_rate)
}

pub fn slope_of(snr_db: &[f64], rates: &[f64]) -> Result<f64> {
    let n = snr_db.len();
    if n < 2 || rates.len() != n {
        return Err(param("DoF estimate needs at least two SNR points"));
    }
    let log2_snr = |db: f64| db / 10.0 * std::f64::consts::LOG2_10;
    let (lo, hi) = (n - 2, n - 1);
    Ok((rates[hi] - rates[lo]) / (log2_snr(snr_db[hi]) - log2_snr(snr_db[lo])))
}

/// One realized link: effective channel, precoders, transmit scaling and
/// receive filters.
#[derive(Debug, Clone)]
pub struct LinkTrial {
    channels: ChannelSet,
    gains: Option<GainPlan>,
    eff: EffectiveChannel,
    pre: PrecoderSet,
    /// Raw-domain energy of each user's precoder for unit-power symbols.
    raw_energy: Vec<f64>,
    /// Effective noise variance per receiver and effective slot.
    noise_var: Vec<Vec<f64>>,
    /// Per receiver: `d_k × D` rows of the whitened ZF inverse, acting on
    /// the whitened effective observation.
    filters: Vec<CMatrix>,
}

impl LinkTrial {
    pub fn new(channels: &ChannelSet, gains: Option<&GainPlan>, coding: Coding, config: &PrecoderConfig) -> Result<Self> {
        let eff = build_effective(channels, gains, coding)?;
        let pre = build_precoders(&eff, config)?;
        Self::from_parts(channels, gains, eff, pre)
    }

    pub fn from_parts(channels: &ChannelSet, gains: Option<&GainPlan>, eff: EffectiveChannel, pre: PrecoderSet) -> Result<Self> {
        let users = eff.users();
        let dim = eff.dim();
        let coding = eff.coding();
        let gains = if coding.uses_gains() { gains.cloned() } else { None };
        if coding.uses_gains() && gains.is_none() {
            return Err(param("coding needs its gain plan"));
        }
        if pre.users() != users || pre.dim() != dim {
            return Err(param("precoders do not match the effective channel"));
        }
        let slots = channels.slots();

        let raw_energy = (0..users)
            .map(|j| {
                let v = pre.v(j + 1);
                (0..slots)
                    .map(|t| {
                        let q = t % dim;
                        let a2 = gains.as_ref().map_or(1.0, |g| g.alpha(j, t).norm_sqr());
                        a2 * v.row(q).iter().map(|z| z.norm_sqr()).sum::<f64>()
                    })
                    .sum()
            })
            .collect();

        let noise_var: Vec<Vec<f64>> = (0..users)
            .map(|k| {
                (0..dim)
                    .map(|q| match &gains {
                        None => 1.0,
                        Some(g) => (q..slots).step_by(dim).map(|t| g.beta(k, t).norm_sqr()).sum(),
                    })
                    .collect()
            })
            .collect();

        let mut filters = Vec::with_capacity(users);
        for k in 0..users {
            let mut a = composite_matrix(&eff, &pre, k + 1)?;
            for (q, mut row) in a.row_iter_mut().enumerate() {
                let w = noise_var[k][q].sqrt().recip();
                row.iter_mut().for_each(|z| *z *= w);
            }
            let inv = pinv(&a);
            let d = pre.v(k + 1).ncols();
            filters.push(inv.rows(0, d).into_owned());
        }

        Ok(LinkTrial {
            channels: channels.clone(),
            gains,
            eff,
            pre,
            raw_energy,
            noise_var,
            filters,
        })
    }

    pub fn effective(&self) -> &EffectiveChannel {
        &self.eff
    }

    pub fn precoders(&self) -> &PrecoderSet {
        &self.pre
    }

    pub fn raw_slots(&self) -> usize {
        self.channels.slots()
    }

    /// Amplitude putting `power` on average into each raw slot of user `j`
    /// (zero-based) for unit-power symbols.
    pub fn amplitude(&self, j: usize, power: f64) -> f64 {
        (power * self.raw_slots() as f64 / self.raw_energy[j]).sqrt()
    }

    /// Effective noise variance at receiver `k`, effective slot `q`.
    pub fn noise_variance(&self, k: usize, q: usize) -> f64 {
        self.noise_var[k][q]
    }

    fn slot_gain_tx(&self, j: usize, t: usize) -> Complex64 {
        self.gains.as_ref().map_or(Complex64::new(1.0, 0.0), |g| g.alpha(j, t))
    }

    fn slot_gain_rx(&self, k: usize, t: usize) -> Complex64 {
        self.gains.as_ref().map_or(Complex64::new(1.0, 0.0), |g| g.beta(k, t))
    }

    /// Raw transmitted block of user `j` (zero-based).
    pub fn transmit(&self, j: usize, symbols: &[Complex64], power: f64) -> Result<Vec<Complex64>> {
        let v = self.pre.v(j + 1);
        if symbols.len() != v.ncols() {
            return Err(param(format!(
                "user {} sends {} streams, got {} symbols",
                j + 1,
                v.ncols(),
                symbols.len()
            )));
        }
        let amp = self.amplitude(j, power);
        let dim = self.eff.dim();
        let x: Vec<Complex64> = (0..dim)
            .map(|q| v.row(q).iter().zip(symbols).map(|(a, s)| a * s).sum::<Complex64>() * amp)
            .collect();
        Ok((0..self.raw_slots())
            .map(|t| self.slot_gain_tx(j, t) * x[t % dim])
            .collect())
    }

    /// Raw observations at every receiver; unit-variance complex noise is
    /// added when `noise` is given.
    pub fn propagate<R: Rng + ?Sized>(&self, blocks: &[Vec<Complex64>], mut noise: Option<&mut R>) -> Vec<Vec<Complex64>> {
        let users = self.eff.users();
        (0..users)
            .map(|k| {
                (0..self.raw_slots())
                    .map(|t| {
                        let clean: Complex64 = (0..users).map(|j| self.channels.h(k, j, t) * blocks[j][t]).sum();
                        match noise.as_deref_mut() {
                            Some(rng) => clean + draw_noise(rng),
                            None => clean,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Folds receiver `k`'s raw observations into the effective domain.
    pub fn combine(&self, k: usize, raw: &[Complex64]) -> Vec<Complex64> {
        let dim = self.eff.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (t, y) in raw.iter().enumerate() {
            out[t % dim] += self.slot_gain_rx(k, t) * y;
        }
        out
    }

    /// Zero-forcing estimate of receiver `k`'s own symbols.
    pub fn detect(&self, k: usize, effective: &[Complex64], power: f64) -> Vec<Complex64> {
        let white: Vec<Complex64> = effective
            .iter()
            .enumerate()
            .map(|(q, y)| y / self.noise_var[k][q].sqrt())
            .collect();
        let amp = self.amplitude(k, power);
        self.filters[k]
            .row_iter()
            .map(|g| g.iter().zip(&white).map(|(a, b)| a * b).sum::<Complex64>() / amp)
            .collect()
    }

    /// Post-detection SINR of every stream at every receiver.
    pub fn stream_sinr(&self, power: f64) -> Vec<Vec<f64>> {
        let users = self.eff.users();
        let dim = self.eff.dim();
        (0..users)
            .map(|k| {
                let w: Vec<f64> = (0..dim).map(|q| self.noise_var[k][q].sqrt().recip()).collect();
                let g = &self.filters[k];
                // gains[(i, j, c)]: response of output i to stream c of user j
                let mut responses: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(users);
                for j in 0..users {
                    let amp = self.amplitude(j, power);
                    let h = self.eff.diag(k, j);
                    let v = self.pre.v(j + 1);
                    let per_col = (0..v.ncols())
                        .map(|c| {
                            (0..g.nrows())
                                .map(|i| {
                                    (0..dim)
                                        .map(|q| g[(i, q)] * w[q] * h[q] * v[(q, c)])
                                        .sum::<Complex64>()
                                        * amp
                                })
                                .collect()
                        })
                        .collect();
                    responses.push(per_col);
                }
                (0..g.nrows())
                    .map(|i| {
                        let noise: f64 = g.row(i).iter().map(|z| z.norm_sqr()).sum();
                        let mut signal = 0.0;
                        let mut interference = 0.0;
                        for (j, cols) in responses.iter().enumerate() {
                            for (c, r) in cols.iter().enumerate() {
                                let p = r[i].norm_sqr();
                                if j == k && c == i {
                                    signal = p;
                                } else {
                                    interference += p;
                                }
                            }
                        }
                        signal / (interference + noise)
                    })
                    .collect()
            })
            .collect()
    }

    /// Per-user rate in bits per raw channel use.
    pub fn user_rates(&self, power: f64) -> Vec<f64> {
        let slots = self.raw_slots() as f64;
        self.stream_sinr(power)
            .iter()
            .map(|s| s.iter().map(|x| (1.0 + x).log2()).sum::<f64>() / slots)
            .collect()
    }
}

fn draw_noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    Complex64::new(re * s, im * s)
}

fn check_layer(coding: Coding, config: &PrecoderConfig) -> Result<()> {
    let expected = match coding {
        Coding::Double => Layer::Double,
        _ => Layer::Single,
    };
    if config.layer != expected {
        return Err(param(format!(
            "{coding} coding needs a {expected}-layer configuration"
        )));
    }
    Ok(())
}

/// A successful draw of gains and the structures built from it.
#[derive(Debug, Clone)]
pub struct Realization {
    pub gains: Option<GainPlan>,
    pub effective: EffectiveChannel,
    pub precoders: PrecoderSet,
    /// Degenerate draws discarded before this one.
    pub redraws: usize,
}

/// Draws gains from `rng` until the effective channel and precoders build,
/// giving up after [`MAX_RESAMPLES`] consecutive degenerate draws.
pub fn realize(
    channels: &ChannelSet,
    coding: Coding,
    config: &PrecoderConfig,
    rng: &mut impl RngCore,
) -> Result<Realization> {
    let mut redraws = 0;
    loop {
        let gain_seed = rng.next_u64();
        let gains = if coding.uses_gains() {
            Some(generate_gains(channels.users(), channels.slots(), gain_seed)?)
        } else {
            None
        };
        let built = build_effective(channels, gains.as_ref(), coding)
            .and_then(|eff| build_precoders(&eff, config).map(|pre| (eff, pre)));
        match built {
            Ok((effective, precoders)) => {
                return Ok(Realization {
                    gains,
                    effective,
                    precoders,
                    redraws,
                })
            }
            Err(Error::Degenerate(msg)) => {
                redraws += 1;
                if redraws > MAX_RESAMPLES {
                    return Err(Error::Simulation(format!(
                        "{redraws} consecutive degenerate realizations; last: {msg}"
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// [`realize`] followed by receiver set-up. Returns the trial and the number
/// of redraws.
pub fn realize_trial(
    channels: &ChannelSet,
    coding: Coding,
    config: &PrecoderConfig,
    rng: &mut impl RngCore,
) -> Result<(LinkTrial, usize)> {
    let r = realize(channels, coding, config, rng)?;
    let trial = LinkTrial::from_parts(channels, r.gains.as_ref(), r.effective, r.precoders)?;
    Ok((trial, r.redraws))
}

/// Random stream for one trial, derived from the run seed and trial index.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Monte Carlo sum rate over seeded gain draws on a fixed channel set.
pub fn simulate_link(
    channels: &ChannelSet,
    coding: Coding,
    config_p: &PrecoderConfig,
    config_l: &LinkConfig,
) -> Result<LinkResult> {
    config_l.validate()?;
    check_layer(coding, config_p)?;
    if channels.users() != config_p.users {
        return Err(param("channel set and precoder config disagree on users"));
    }
    if i128::try_from(channels.slots()).ok() != Some(config_p.extension_length) {
        return Err(param(format!(
            "channel set has {} slots, configuration needs {}",
            channels.slots(),
            config_p.extension_length
        )));
    }

    let users = channels.users();
    let points = config_l.snr_points_db.len();
    let mut per_user = vec![vec![0.0; users]; points];
    let mut failures = 0;
    for trial in 0..config_l.trials {
        let mut rng = trial_rng(config_l.seed, trial);
        let (link, redraws) = realize_trial(channels, coding, config_p, &mut rng)?;
        failures += redraws;
        for (p, &snr) in config_l.snr_points_db.iter().enumerate() {
            let rates = link.user_rates(config_l.power_at(snr));
            for (acc, r) in per_user[p].iter_mut().zip(rates) {
                *acc += r;
            }
        }
    }
    let trials = config_l.trials as f64;
    for row in &mut per_user {
        row.iter_mut().for_each(|r| *r /= trials);
    }
    let sum_rate: Vec<f64> = per_user.iter().map(|r| r.iter().sum()).collect();
    let dof_estimate = if points >= 2 {
        slope_of(&config_l.snr_points_db, &sum_rate)?
    } else {
        0.0
    };
    Ok(LinkResult {
        snr_db: config_l.snr_points_db.clone(),
        sum_rate,
        per_user_rate: per_user,
        dof_estimate,
        failures,
        trials: config_l.trials,
    })
}
