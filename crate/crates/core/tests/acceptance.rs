//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Tolerances are pinned here and must not drift.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{kappa_double, lambda_double, rel_err};
use ia_core::experiment::{
    run_experiment, seeded_realization, sum_rate_curve, verify_one, Experiment, ExperimentSpec,
};
use ia_core::linalg::numerical_rank;
use ia_core::link::slope_of;
use ia_core::{
    build_cascades, closed_form_dof, generate_channels, make_config, ChannelModel, Coding, Layer,
};
use num_complex::Complex64;

const RESIDUAL_TOL: f64 = 1e-8;
const SCALED_IDENTITY_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-13;
const DOUBLE_DOF_TOL: f64 = 0.05;
const PLAIN_DOF_TOL: f64 = 0.07;
const NAIVE_SLOPE_MAX: f64 = 0.1;
const MC_TRIALS: usize = 50;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: ia_core::Error) -> String {
    e.to_string()
}

fn closed_form() -> Outcome {
    let exact = |k, n, l| closed_form_dof(k, n, l).map_err(err);
    let d = exact(3, 2, Layer::Single)?;
    ensure((d.num, d.den) == (7, 5), || format!("(3,2,single) = {d}"))?;
    let d = exact(3, 2, Layer::Double)?;
    ensure((d.num, d.den) == (7, 10), || format!("(3,2,double) = {d}"))?;
    let d81 = exact(5, 81, Layer::Double)?;
    let d82 = exact(5, 82, Layer::Double)?;
    let r81 = format!("{:.4}", d81.value());
    let r82 = format!("{:.4}", d82.value());
    ensure(r81 == "1.1995", || format!("(5,81,double) = {r81}"))?;
    ensure(r82 == "1.2001", || format!("(5,82,double) = {r82}"))?;
    ensure(d82.exceeds(6, 5).map_err(err)?, || "(5,82,double) not above 6/5".into())?;
    ensure(!d81.exceeds(6, 5).map_err(err)?, || "(5,81,double) above 6/5".into())?;
    Ok(format!("7/5, 7/10, {r81}, {r82}, n=82 exceeds 6/5 exactly"))
}

fn naive_collapse() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let r = seeded_realization(3, 2, ChannelModel::Constant, Coding::Naive, seed).map_err(err)?;
        for (pair, diag) in build_cascades(&r.effective).map_err(err)?.lambdas() {
            let first = diag[0];
            let spread = diag.iter().map(|z| (z - first).norm()).fold(0.0, f64::max) / first.norm();
            worst = worst.max(spread);
            ensure(spread <= SCALED_IDENTITY_TOL, || format!("seed {seed} T{pair:?} spread {spread:e}"))?;
        }
        let rank = numerical_rank(r.precoders.v(1)).rank;
        ensure(rank == 1, || format!("seed {seed}: rank V1 = {rank}"))?;
        let rep = verify_one(3, 2, ChannelModel::Constant, Coding::Naive, seed).map_err(err)?;
        ensure(!rep.pass, || format!("seed {seed}: naive coding certified"))?;
    }
    Ok(format!("100 seeds, max cascade spread {worst:.1e}, rank V1 = 1, all fail"))
}

fn alignment_suite(users: usize, n: u32, model: ChannelModel, seeds: u64, dim: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut margin = f64::INFINITY;
    for seed in 0..seeds {
        let rep = verify_one(users, n, model, Coding::Double, seed).map_err(err)?;
        worst = worst.max(rep.max_residual());
        margin = margin.min(rep.min_margin());
        ensure(rep.max_residual() <= RESIDUAL_TOL, || format!("seed {seed}: residual {:e}", rep.max_residual()))?;
        for rank in &rep.ranks {
            ensure(rank.required == dim && rank.rank == dim, || {
                format!("seed {seed} rx {}: rank {}/{}", rank.receiver, rank.rank, rank.required)
            })?;
        }
        ensure(rep.pass, || format!("seed {seed}: verdict fail"))?;
    }
    Ok(format!("{seeds} seeds, max residual {worst:.1e}, rank {dim}, min margin {margin:.1e}"))
}

fn double_success() -> Outcome {
    let suite = alignment_suite(3, 2, ChannelModel::Constant, 100, 5)?;
    let r = sum_rate_curve(3, 2, ChannelModel::Constant, Coding::Double, &[50.0, 60.0], MC_TRIALS, 1)
        .map_err(err)?;
    ensure((r.dof_estimate - 0.7).abs() <= DOUBLE_DOF_TOL, || format!("dof estimate {:.4}", r.dof_estimate))?;
    Ok(format!("{suite}; dof estimate {:.4}", r.dof_estimate))
}

fn slow_changing() -> Outcome {
    alignment_suite(3, 2, ChannelModel::SlowChanging, 100, 5)
}

fn plain_baseline() -> Outcome {
    let mut margin = f64::INFINITY;
    for seed in 0..100 {
        let rep = verify_one(3, 2, ChannelModel::Iid, Coding::Plain, seed).map_err(err)?;
        margin = margin.min(rep.min_margin());
        ensure(rep.pass && rep.min_rank() == 5, || format!("seed {seed}: rank {}", rep.min_rank()))?;
    }
    let r = sum_rate_curve(3, 2, ChannelModel::Iid, Coding::Plain, &[50.0, 60.0], MC_TRIALS, 1)
        .map_err(err)?;
    ensure((r.dof_estimate - 1.4).abs() <= PLAIN_DOF_TOL, || format!("dof estimate {:.4}", r.dof_estimate))?;
    Ok(format!("100 seeds full rank (min margin {margin:.1e}); dof estimate {:.4}", r.dof_estimate))
}

fn four_users() -> Outcome {
    alignment_suite(4, 1, ChannelModel::Constant, 20, 33)
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut check = |a: Complex64, b: Complex64, what: &str| {
        let e = rel_err(a, b);
        worst = worst.max(e);
        ensure(e <= ORACLE_TOL, || format!("{what}: relative error {e:e}"))
    };
    let cfg = make_config(3, 2, Layer::Double).map_err(err)?;
    for seed in 0..20 {
        let r = seeded_realization(3, 2, ChannelModel::Constant, Coding::Double, seed).map_err(err)?;
        let ch = generate_channels(3, cfg.extension_length as usize, ChannelModel::Constant, seed).map_err(err)?;
        let g = r.gains.as_ref().ok_or("missing gains")?;
        let cas = build_cascades(&r.effective).map_err(err)?;
        for ((k, l), diag) in cas.lambdas() {
            for (q, &z) in diag.iter().enumerate() {
                check(z, lambda_double(&ch, g, k, l, q), &format!("seed {seed} lambda_{k}{l}[{q}]"))?;
            }
        }
        for (q, &z) in cas.kappa().iter().enumerate() {
            check(z, kappa_double(&ch, g, q), &format!("seed {seed} kappa[{q}]"))?;
        }
    }
    Ok(format!("20 seeds, max relative error {worst:.1e}"))
}

fn figure1_spec(seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(Experiment::Figure1);
    spec.trials = MC_TRIALS;
    spec.seed = seed;
    spec
}

fn figure1_slopes() -> Outcome {
    let out = run_experiment(&figure1_spec(1)).map_err(err)?;
    let mut reader = csv::Reader::from_reader(out.csv.as_bytes());
    let mut curves: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let coding = row[1].to_string();
        let snr: f64 = row[0].parse().map_err(|_| format!("bad snr {}", &row[0]))?;
        let rate: f64 = row[2].parse().map_err(|_| format!("bad rate {}", &row[2]))?;
        match curves.iter_mut().find(|c| c.0 == coding) {
            Some(c) => {
                c.1.push(snr);
                c.2.push(rate);
            }
            None => curves.push((coding, vec![snr], vec![rate])),
        }
    }
    let slope = |name: &str| -> Result<f64, String> {
        let (_, snr, rate) = curves.iter().find(|c| c.0 == name).ok_or(format!("no {name} rows"))?;
        slope_of(snr, rate).map_err(err)
    };
    let naive = slope("naive")?;
    let double = slope("double")?;
    ensure(naive < NAIVE_SLOPE_MAX, || format!("naive slope {naive:.4}"))?;
    ensure((double - 0.7).abs() <= DOUBLE_DOF_TOL, || format!("double slope {double:.4}"))?;
    Ok(format!("naive slope {naive:.4}, double slope {double:.4}"))
}

fn determinism() -> Outcome {
    let mut verify = ExperimentSpec::new(Experiment::Verify);
    verify.trials = 10;
    let mut audit = ExperimentSpec::new(Experiment::Audit);
    audit.trials = 10;
    audit.channel_model = ChannelModel::SlowChanging;
    let mut table = ExperimentSpec::new(Experiment::DofTable);
    table.users = 5;
    table.n_range = (1, 100);
    let mut fig = figure1_spec(7);
    fig.trials = 10;
    for spec in [fig, table, verify, audit] {
        let a = run_experiment(&spec).map_err(err)?.csv;
        let b = run_experiment(&spec).map_err(err)?.csv;
        ensure(!a.is_empty() && a.as_bytes() == b.as_bytes(), || format!("{} output differs", spec.experiment))?;
    }
    Ok("figure1, dof_table, verify, audit byte-identical".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form DoF", closed_form),
        ("naive coding collapses on constant channels", naive_collapse),
        ("double-layer alignment and 7/10 slope", double_success),
        ("slow-changing channels", slow_changing),
        ("plain coding on i.i.d. channels", plain_baseline),
        ("four users, n=1, D=33", four_users),
        ("cascade oracle equivalence", oracle_equivalence),
        ("figure1 slope contrast", figure1_slopes),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
