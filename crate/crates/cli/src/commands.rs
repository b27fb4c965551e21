//! Command implementations producing [`Report`]s.

use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use qcr_core::realsym::{min_eig, sym_eigen, symmetrize};
use qcr_core::{
    covariance, frontier_witness, is_random_model, limit_set_sample, optimal_random_bound,
    optimal_random_measurement, random_model_certificate, separation_oracle, simulate_with,
    solve_dual, spur, SimulationOptions, SolveStatus, SolverConfig, StatisticalModel,
};
use serde_json::{json, Map, Value};

use crate::cli::{
    BoundArgs, CheckRandomArgs, Command, DualArgs, InfoArgs, LimitsetArgs, ModelArgs, SimulateArgs,
};
use crate::input::{builtin, read_model_file, read_weight, LoadedModel};
use crate::report::{floats, matrix, num, operator, vector, Report};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    CheckFailed = 1,
    InputError = 2,
    Unconverged = 3,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit: Exit,
    pub json: bool,
}

pub fn execute(command: &Command, args: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let (mut report, exit, json) = match command {
        Command::Info(a) => (info(a, args)?, Exit::Success, a.output.json),
        Command::Bound(a) => (bound(a, args)?, Exit::Success, a.output.json),
        Command::Dual(a) => {
            let (r, e) = dual(a, args)?;
            (r, e, a.output.json)
        }
        Command::CheckRandom(a) => {
            let (r, e) = check_random(a, args)?;
            (r, e, a.output.json)
        }
        Command::Limitset(a) => (limitset(a, args)?, Exit::Success, a.output.json),
        Command::Simulate(a) => (simulate(a, args)?, Exit::Success, a.output.json),
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Outcome { report, exit, json })
}

fn load(args: &ModelArgs) -> Result<LoadedModel> {
    match (&args.model_file, &args.model) {
        (Some(path), _) => read_model_file(path),
        (None, Some(name)) => builtin(name, args.alpha, args.probs.as_deref()),
        (None, None) => bail!("either --model or --model-file is required"),
    }
}

fn start(command: &str, args: Vec<String>, loaded: &LoadedModel) -> Result<Report> {
    let model = &loaded.model;
    let mut report = Report::new(command, args);
    let (fisher_eigenvalues, _) = sym_eigen(model.fisher())?;
    report
        .model
        .insert("source".into(), Value::String(loaded.source.clone()));
    report.model.insert("d".into(), json!(model.dim()));
    report.model.insert("n".into(), json!(model.n_params()));
    report
        .model
        .insert("fisher_eigenvalues".into(), floats(&fisher_eigenvalues));
    Ok(report)
}

fn require_seed(seed: Option<u64>, json: bool) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None if json => bail!("--seed is required with --json for randomized commands"),
        None => Ok(0),
    }
}

/// `tr(G J⁻¹)`, the classical Cramér-Rao reference.
fn classical_bound(model: &StatisticalModel, g: &qcr_core::WeightMatrix) -> f64 {
    (g.entries() * model.fisher_inv()).trace()
}

fn info(a: &InfoArgs, args: Vec<String>) -> Result<Report> {
    let loaded = load(&a.model)?;
    let mut report = start("info", args, &loaded)?;
    let model = &loaded.model;
    report.set("rho_eigenvalues", floats(model.rho().eigenvalues()));
    report.set("fisher", matrix(model.fisher()));
    report.set("fisher_inv", matrix(model.fisher_inv()));
    Ok(report)
}

fn bound(a: &BoundArgs, args: Vec<String>) -> Result<Report> {
    let loaded = load(&a.model)?;
    let mut report = start("bound", args, &loaded)?;
    let model = &loaded.model;
    let g = read_weight(a.g_file.as_deref(), model.n_params())?;
    let random = optimal_random_bound(model, &g)?;
    let classical = classical_bound(model, &g);
    report.set("random_bound", num(random));
    report.set("classical_bound", num(classical));
    report.set("gap", num(random - classical));
    Ok(report)
}

fn dual(a: &DualArgs, args: Vec<String>) -> Result<(Report, Exit)> {
    let loaded = load(&a.model)?;
    let mut report = start("dual", args, &loaded)?;
    let model = &loaded.model;
    let g = read_weight(a.g_file.as_deref(), model.n_params())?;
    let config = SolverConfig {
        feas_tol: a.feas_tol,
        obj_tol: a.tol,
        max_rounds: a.max_rounds,
        multistart: a.multistart,
        seed: require_seed(a.seed, a.output.json)?,
        ..SolverConfig::default()
    };
    let solution = solve_dual(model, &g, &config)?;
    log::info!(
        "dual: optimum {} after {} rounds ({})",
        solution.optimum,
        solution.rounds,
        solution.status.as_str()
    );
    report.set("optimum", num(solution.optimum));
    report.set("upper_bound", num(solution.upper_bound));
    report.set("rounds", json!(solution.rounds));
    report.set("cuts", json!(solution.cuts.len()));
    report.set("feasibility", num(solution.feasibility));
    report.set("random_bound", num(optimal_random_bound(model, &g)?));
    report.set("classical_bound", num(classical_bound(model, &g)));
    let mut point = Map::new();
    point.insert("a".into(), matrix(&solution.dual.a));
    point.insert("s".into(), operator(&solution.dual.s));
    report.set("dual", Value::Object(point));
    if a.certify {
        let mut cert = Map::new();
        match random_model_certificate(model, &g) {
            Ok(c) => {
                let check = separation_oracle(model, &g, &c, &config)?;
                cert.insert("spur".into(), num(spur(&c)));
                cert.insert("feasibility".into(), num(check.min_value));
                cert.insert("a".into(), matrix(&c.a));
                cert.insert("s".into(), operator(&c.s));
            }
            Err(e) => {
                cert.insert("refused".into(), Value::String(e.to_string()));
            }
        }
        report.set("certificate", Value::Object(cert));
    }
    report.status = solution.status.as_str().into();
    let exit = match solution.status {
        SolveStatus::Converged => Exit::Success,
        SolveStatus::Unconverged => Exit::Unconverged,
    };
    Ok((report, exit))
}

fn check_random(a: &CheckRandomArgs, args: Vec<String>) -> Result<(Report, Exit)> {
    let loaded = load(&a.model)?;
    let mut report = start("check-random", args, &loaded)?;
    let verdict = is_random_model(&loaded.model, a.tol)?;
    report.set("verdict", Value::Bool(verdict.verdict));
    report.set("score", num(verdict.score));
    report.set("tol", num(a.tol));
    report.set("c", verdict.c.as_ref().map_or(Value::Null, operator));
    // reported one-based
    report.set(
        "witness",
        verdict
            .witness
            .map_or(Value::Null, |(i, j)| json!([i + 1, j + 1])),
    );
    if verdict.verdict {
        report.status = "random".into();
        Ok((report, Exit::Success))
    } else {
        report.status = "not-random".into();
        Ok((report, Exit::CheckFailed))
    }
}

fn limitset(a: &LimitsetArgs, args: Vec<String>) -> Result<Report> {
    let loaded = load(&a.model)?;
    let mut report = start("limitset", args, &loaded)?;
    let model = &loaded.model;
    let seed = require_seed(a.seed, a.output.json)?;
    let n = model.n_params();
    let samples = limit_set_sample(model, a.samples, seed)?;

    let mut header: Vec<String> = (0..n)
        .flat_map(|i| (0..n).map(move |j| format!("v_{}_{}", i + 1, j + 1)))
        .collect();
    header.push("min_eig_v_minus_j_inv".into());
    if n == 2 {
        header.push("det_vj_minus_id".into());
    }
    let mut csv = header.join(",");
    csv.push('\n');
    let mut worst_eig = f64::INFINITY;
    let mut worst_det = 0.0f64;
    for v in &samples {
        let mut cells: Vec<String> = v.entries().transpose().iter().map(f64::to_string).collect();
        let eig = min_eig(&symmetrize(&(v.entries() - model.fisher_inv())))?;
        worst_eig = worst_eig.min(eig);
        cells.push(eig.to_string());
        if n == 2 {
            let det = frontier_witness(model, v)?.det;
            worst_det = worst_det.max((det - 1.0).abs());
            cells.push(det.to_string());
        }
        let _ = writeln!(csv, "{}", cells.join(","));
    }
    if let Some(path) = &a.csv {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
        report.set("csv", Value::String(path.display().to_string()));
    }
    report.set("samples", json!(samples.len()));
    report.set("seed", json!(seed));
    report.set("min_eig_v_minus_j_inv", num(worst_eig));
    report.set(
        "max_abs_det_minus_one",
        if n == 2 { num(worst_det) } else { Value::Null },
    );
    Ok(report)
}

fn simulate(a: &SimulateArgs, args: Vec<String>) -> Result<Report> {
    let loaded = load(&a.model)?;
    let mut report = start("simulate", args, &loaded)?;
    let model = &loaded.model;
    let seed = require_seed(a.seed, a.output.json)?;
    let g = read_weight(a.g_file.as_deref(), model.n_params())?;
    let p = optimal_random_measurement(model, &g)?;
    let theory = covariance(model, &p)?.into_entries();
    let bound = optimal_random_bound(model, &g)?;
    let options = SimulationOptions {
        weight: Some(g.clone()),
        ..SimulationOptions::new(a.n, seed)
    };
    let result = simulate_with(model, &p, &options)?;
    let count = result.samples as f64;

    let mean_bound = 5.0 * (theory.trace() / count).sqrt();
    let mean_norm = result.empirical_mean.norm();
    let mean_z = result
        .empirical_mean
        .zip_map(&result.mean_std_error, |m, se| m / se);
    let (risk, risk_se) = result.risk.unwrap_or((f64::NAN, f64::NAN));
    let risk_z = (risk - bound) / risk_se;

    report.set("samples", json!(result.samples));
    report.set("seed", json!(seed));
    report.set("empirical_mean", vector(&result.empirical_mean));
    report.set("mean_std_error", vector(&result.mean_std_error));
    report.set("mean_z", vector(&mean_z));
    report.set("mean_norm", num(mean_norm));
    report.set("mean_norm_bound", num(mean_bound));
    report.set("mean_within_bound", Value::Bool(mean_norm <= mean_bound));
    report.set("empirical_cov", matrix(&result.empirical_cov));
    report.set("theory_cov", matrix(&theory));
    report.set("empirical_risk", num(risk));
    report.set("risk_std_error", num(risk_se));
    report.set("theory_risk", num(bound));
    report.set("risk_z", num(risk_z));
    report.set("risk_within_5se", Value::Bool(risk_z.abs() <= 5.0));
    report.set("wide_uncertainty", Value::Bool(result.samples < 30));
    Ok(report)
}
