use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ia_core::experiment::{run_experiment, Experiment, ExperimentSpec};
use ia_core::{ChannelModel, Coding, Layer};

/// Interference alignment experiments over symbol-extended K-user channels.
#[derive(Debug, Parser)]
#[command(name = "iasim", version)]
struct Args {
    /// figure1, dof_table, verify or audit
    #[arg(long)]
    experiment: Experiment,

    #[arg(long, default_value_t = 3)]
    users: usize,

    /// Exponent cap n of the precoder construction.
    #[arg(long, default_value_t = 2)]
    n: u32,

    /// Inclusive sweep `lo:hi` for dof_table; defaults to `n:n`.
    #[arg(long, value_parser = parse_range)]
    n_range: Option<(u32, u32)>,

    /// single, double or both
    #[arg(long, default_value = "both", value_parser = parse_layer)]
    layer: LayerArg,

    /// constant, slow_changing or iid
    #[arg(long, default_value = "constant")]
    channel: ChannelModel,

    /// plain, naive, double or both
    #[arg(long, default_value = "both", value_parser = parse_coding)]
    coding: CodingArg,

    /// SNR sweep `lo:hi:step` in dB, inclusive.
    #[arg(long, default_value = "0:60:10", value_parser = parse_snr)]
    snr: SnrArg,

    /// Monte Carlo trials (figure1) or realizations (verify, audit).
    #[arg(long, default_value_t = 50)]
    trials: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct LayerArg(Option<Layer>);

#[derive(Debug, Clone, Copy)]
struct CodingArg(Option<Coding>);

#[derive(Debug, Clone)]
struct SnrArg(Vec<f64>);

fn parse_layer(s: &str) -> Result<LayerArg, String> {
    match s {
        "both" => Ok(LayerArg(None)),
        other => other.parse().map(|l| LayerArg(Some(l))).map_err(|e| format!("{e}")),
    }
}

fn parse_coding(s: &str) -> Result<CodingArg, String> {
    match s {
        "both" => Ok(CodingArg(None)),
        other => other.parse().map(|c| CodingArg(Some(c))).map_err(|e| format!("{e}")),
    }
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = lo.parse::<u32>().map_err(|e| e.to_string())?;
    let hi = hi.parse::<u32>().map_err(|e| e.to_string())?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= lo <= hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_snr(s: &str) -> Result<SnrArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err("expected lo:hi:step".into());
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(format!("bad sweep {lo}:{hi}:{step}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok(SnrArg((0..count).map(|i| lo + i as f64 * step).collect()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let spec = ExperimentSpec {
        experiment: args.experiment,
        users: args.users,
        n: args.n,
        n_range: args.n_range.unwrap_or((args.n, args.n)),
        layer: args.layer.0,
        channel_model: args.channel,
        coding: args.coding.0,
        snr_db: args.snr.0,
        trials: args.trials,
        seed: args.seed,
    };

    let output = match run_experiment(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("iasim: {e}");
            return ExitCode::from(1);
        }
    };

    let written = match &args.out {
        Some(path) => fs::write(path, &output.csv),
        None => std::io::stdout().write_all(output.csv.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("iasim: cannot write output: {e}");
        return ExitCode::from(1);
    }
    for line in &output.summary {
        eprintln!("{}: {line}", spec.experiment);
    }
    ExitCode::SUCCESS
}
