//! Seeded experiment recipes and their CSV renderings.
//!
//! Every row carries the seed that reproduces it: a realization with seed
//! `s` uses `generate_channels(.., s)` and draws its gains from
//! `trial_rng(s, 0)`.

use std::fmt;
use std::str::FromStr;

use crate::channel::{generate_channels, ChannelModel, Coding};
use crate::error::{param, Error, Result};
use crate::link::{realize, simulate_link, trial_rng, LinkConfig, LinkResult, Realization};
use crate::precoder::{build_cascades, closed_form_dof, make_config, Layer, PrecoderConfig};
use crate::verify::{certify, distinctness_audit, AlignmentReport, AuditReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Figure1,
    DofTable,
    Verify,
    Audit,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "figure1" => Ok(Experiment::Figure1),
            "dof_table" => Ok(Experiment::DofTable),
            "verify" => Ok(Experiment::Verify),
            "audit" => Ok(Experiment::Audit),
            other => Err(param(format!("unknown experiment `{other}`"))),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Figure1 => "figure1",
            Experiment::DofTable => "dof_table",
            Experiment::Verify => "verify",
            Experiment::Audit => "audit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub users: usize,
    pub n: u32,
    /// Inclusive `n` sweep for `dof_table`.
    pub n_range: (u32, u32),
    /// `None` means both layers (`dof_table` only).
    pub layer: Option<Layer>,
    pub channel_model: ChannelModel,
    /// `None` means naive and double side by side (`figure1`).
    pub coding: Option<Coding>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentSpec {
            experiment,
            users: 3,
            n: 2,
            n_range: (1, 10),
            layer: None,
            channel_model: ChannelModel::Constant,
            coding: None,
            snr_db: (0..=6).map(|i| f64::from(i) * 10.0).collect(),
            trials: 50,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub summary: Vec<String>,
}

/// `%g`-style rendering with six significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Simulation(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Simulation(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Simulation(format!("csv: {e}")))
}

fn layer_for(coding: Coding) -> Layer {
    match coding {
        Coding::Double => Layer::Double,
        _ => Layer::Single,
    }
}

fn slots_for(config: &PrecoderConfig) -> Result<usize> {
    config.extension_length_usize()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    match spec.experiment {
        Experiment::Figure1 => figure1(spec),
        Experiment::DofTable => dof_table(spec),
        Experiment::Verify => verify_runs(spec),
        Experiment::Audit => audit_runs(spec),
    }
}

/// Sum-rate curve of one coding on seeded channels of the given model.
pub fn sum_rate_curve(
    users: usize,
    n: u32,
    model: ChannelModel,
    coding: Coding,
    snr_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<LinkResult> {
    let config = make_config(users, n, layer_for(coding))?;
    let channels = generate_channels(users, slots_for(&config)?, model, seed)?;
    simulate_link(
        &channels,
        coding,
        &config,
        &LinkConfig::new(snr_db.to_vec(), trials, seed),
    )
}

fn figure1(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let codings = match spec.coding {
        Some(c) => vec![c],
        None => vec![Coding::Naive, Coding::Double],
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for coding in codings {
        let result = sum_rate_curve(
            spec.users,
            spec.n,
            spec.channel_model,
            coding,
            &spec.snr_db,
            spec.trials,
            spec.seed,
        )?;
        summary.push(format!(
            "{coding}: high-SNR slope {:.4}, {} degenerate redraws",
            result.dof_estimate, result.failures
        ));
        for (snr, rate) in result.snr_db.iter().zip(&result.sum_rate) {
            rows.push(vec![
                fmt_sig6(*snr),
                coding.to_string(),
                fmt_sig6(*rate),
                fmt_sig6(result.dof_estimate),
                spec.trials.to_string(),
                spec.seed.to_string(),
            ]);
        }
    }
    Ok(ExperimentOutput {
        csv: csv_text(
            &["snr_db", "coding", "sum_rate_bits_per_use", "dof_estimate", "trials", "seed"],
            rows,
        )?,
        summary,
    })
}

fn dof_table(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let (lo, hi) = spec.n_range;
    if lo == 0 || lo > hi {
        return Err(param(format!("bad n range {lo}:{hi}")));
    }
    let layers = match spec.layer {
        Some(l) => vec![l],
        None => vec![Layer::Single, Layer::Double],
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for layer in layers {
        for n in lo..=hi {
            let dof = closed_form_dof(spec.users, n, layer)?;
            rows.push(vec![
                spec.users.to_string(),
                n.to_string(),
                layer.to_string(),
                dof.num.to_string(),
                dof.den.to_string(),
                format!("{:.6}", dof.value()),
            ]);
        }
        let last = closed_form_dof(spec.users, hi, layer)?;
        summary.push(format!("{layer} layer at n={hi}: {last} = {:.6}", last.value()));
    }
    Ok(ExperimentOutput {
        csv: csv_text(
            &["users", "n", "layer", "dof_exact_num", "dof_exact_den", "dof_float"],
            rows,
        )?,
        summary,
    })
}

/// Realization for seed `s`; see the module docs.
pub fn seeded_realization(
    users: usize,
    n: u32,
    model: ChannelModel,
    coding: Coding,
    seed: u64,
) -> Result<Realization> {
    let config = make_config(users, n, layer_for(coding))?;
    let channels = generate_channels(users, slots_for(&config)?, model, seed)?;
    realize(&channels, coding, &config, &mut trial_rng(seed, 0))
}

fn seeds(spec: &ExperimentSpec) -> impl Iterator<Item = u64> {
    let base = spec.seed;
    (0..spec.trials as u64).map(move |i| base.wrapping_add(i))
}

pub fn verify_one(users: usize, n: u32, model: ChannelModel, coding: Coding, seed: u64) -> Result<AlignmentReport> {
    let r = seeded_realization(users, n, model, coding, seed)?;
    certify(&r.effective, &r.precoders)
}

pub fn audit_one(users: usize, n: u32, model: ChannelModel, coding: Coding, seed: u64) -> Result<AuditReport> {
    let r = seeded_realization(users, n, model, coding, seed)?;
    Ok(distinctness_audit(&build_cascades(&r.effective)?))
}

fn verify_runs(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let coding = spec.coding.unwrap_or(Coding::Double);
    let mut rows = Vec::new();
    let mut passed = 0;
    for seed in seeds(spec) {
        let rep = verify_one(spec.users, spec.n, spec.channel_model, coding, seed)?;
        passed += usize::from(rep.pass);
        rows.push(vec![
            seed.to_string(),
            spec.users.to_string(),
            spec.n.to_string(),
            coding.to_string(),
            spec.channel_model.to_string(),
            fmt_sig6(rep.max_equality()),
            fmt_sig6(rep.max_containment()),
            rep.min_rank().to_string(),
            rep.ranks.first().map_or(0, |r| r.required).to_string(),
            fmt_sig6(rep.min_margin()),
            if rep.pass { "pass" } else { "fail" }.to_string(),
        ]);
    }
    Ok(ExperimentOutput {
        csv: csv_text(
            &[
                "seed",
                "users",
                "n",
                "coding",
                "channel",
                "max_equality_residual",
                "max_containment_residual",
                "min_rank",
                "required_rank",
                "min_margin",
                "verdict",
            ],
            rows,
        )?,
        summary: vec![format!("{passed}/{} realizations certified", spec.trials)],
    })
}

fn audit_runs(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let coding = spec.coding.unwrap_or(Coding::Double);
    let mut rows = Vec::new();
    let mut flagged = 0;
    for seed in seeds(spec) {
        let audit = audit_one(spec.users, spec.n, spec.channel_model, coding, seed)?;
        for s in &audit.series {
            flagged += usize::from(s.flagged);
            rows.push(vec![
                seed.to_string(),
                coding.to_string(),
                spec.channel_model.to_string(),
                s.label.clone(),
                fmt_sig6(s.min_gap),
                s.flagged.to_string(),
            ]);
        }
    }
    Ok(ExperimentOutput {
        csv: csv_text(
            &["seed", "coding", "channel", "series", "min_relative_gap", "flagged"],
            rows,
        )?,
        summary: vec![format!("{flagged} flagged series over {} realizations", spec.trials)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(10.0), "10");
        assert_eq!(fmt_sig6(0.7), "0.7");
        assert_eq!(fmt_sig6(1.23456789), "1.23457");
        assert_eq!(fmt_sig6(-0.000123456789), "-0.000123457");
        assert_eq!(fmt_sig6(123456.7), "123457");
        assert_eq!(fmt_sig6(1.5e-5), "1.5e-5");
        assert_eq!(fmt_sig6(999999.6), "1e6");
        assert_eq!(fmt_sig6(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn dof_table_rows() {
        let mut spec = ExperimentSpec::new(Experiment::DofTable);
        spec.users = 5;
        spec.n_range = (81, 82);
        spec.layer = Some(Layer::Double);
        let out = run_experiment(&spec).unwrap();
        let lines: Vec<_> = out.csv.lines().collect();
        assert_eq!(lines[0], "users,n,layer,dof_exact_num,dof_exact_den,dof_float");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("5,81,double,") && lines[1].ends_with(",1.199463"));
        assert!(lines[2].starts_with("5,82,double,") && lines[2].ends_with(",1.200073"));
    }

    #[test]
    fn bad_range_is_rejected() {
        let mut spec = ExperimentSpec::new(Experiment::DofTable);
        spec.n_range = (4, 2);
        assert!(run_experiment(&spec).is_err());
    }
}
