//! The six studies, each turning a configuration into a [`Record`].

use thermolab::equilibrium::build_ensemble;
use thermolab::ldp::{contraction_report, estimate_nu_n, rate_function, ContractionStatus, RateFunctionTable, DEFAULT_MIN_COUNT};
use thermolab::manifold::{weak_distance, weak_distance_tail_bound, TestFunctionBasis};
use thermolab::oracle::{OracleConfig, TransferOperatorModel};
use thermolab::pressure::{estimate_pressure, PressureEstimate, PressureParams};
use thermolab::selfcheck::{run_all, SelfcheckConfig};
use thermolab::systems::{MapKind, SmoothSystem};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Record, Series};

pub const STUDIES: &[&str] = &["pressure", "equilibrium", "ldp", "rate", "oracle", "selfcheck"];

const DEFAULT_ALPHA: [f64; 3] = [-1.0, 1.0, 0.05];
const DEFAULT_BETA: [f64; 3] = [-4.0, 4.0, 0.25];
const DEFAULT_CAP: f64 = 50.0;

/// Runs `study`; unknown names are configuration errors.
pub fn run_study(study: &str, cfg: &RunConfig) -> Result<Record, CliError> {
    // The seed is mandatory for every study, so check it before any work.
    cfg.seed()?;
    match study {
        "pressure" => pressure(cfg),
        "equilibrium" => equilibrium(cfg),
        "ldp" => ldp(cfg),
        "rate" => rate(cfg),
        "oracle" => oracle(cfg),
        "selfcheck" => selfcheck(cfg),
        other => Err(CliError::Config(format!("unknown study '{other}' (expected one of {})", STUDIES.join(", ")))),
    }
}

fn params(cfg: &RunConfig) -> Result<PressureParams, CliError> {
    Ok(PressureParams::new(cfg.n_values()?, cfg.require("samples")?, cfg.seed()?)?)
}

fn describe_system(r: &mut Record, system: &SmoothSystem) {
    r.set("system.name", system.name.as_str());
    r.set("system.dim", system.dim());
    r.set("system.degree", system.degree());
    if let Some(h) = system.known.topological_entropy {
        r.set("system.topological_entropy", h);
    }
}

fn pressure_series(r: &mut Record, est: &PressureEstimate) {
    r.set("pressure", est.pressure());
    r.set("pressure.intercept", est.intercept);
    r.set("pressure.p_nmax", est.p_nmax());
    r.set("pressure.convergence_gap", est.convergence_gap());
    r.set("n_values", format!("{}..{}", est.n_values[0], est.n_values.last().expect("non-empty")));
    r.set("samples", est.samples);
    r.set("seed", est.seed);
    r.set("ess.min", est.min_ess());
    r.warn(est.ess_warning());
    let mut s = Series::new("pressure", &["n", "log_Zn", "Pn"]);
    let mut e = Series::new("pressure_ess", &["n", "ess"]);
    for i in 0..est.n_values.len() {
        s.push(vec![est.n_values[i].into(), est.log_zn[i].into(), est.pn[i].into()]);
        e.push(vec![est.n_values[i].into(), est.ess[i].into()]);
    }
    r.series.push(s);
    r.series.push(e);
}

fn pressure(cfg: &RunConfig) -> Result<Record, CliError> {
    let system = cfg.system()?;
    let potential = cfg.potential(&system)?;
    let params = params(cfg)?;
    let mut r = Record::new("pressure", cfg);
    describe_system(&mut r, &system);
    r.set("potential", potential.name());
    let est = estimate_pressure(&system, &potential, &params)?;
    pressure_series(&mut r, &est);
    Ok(r)
}

fn basis(cfg: &RunConfig, system: &SmoothSystem) -> Result<TestFunctionBasis, CliError> {
    Ok(match cfg.get::<usize>("basis.k")? {
        Some(k) => TestFunctionBasis::new(system.dim(), k)?,
        None => TestFunctionBasis::default_for(system.dim())?,
    })
}

fn oracle_model(system: &SmoothSystem, potential: &thermolab::Potential, grid: usize) -> Result<TransferOperatorModel, CliError> {
    Ok(TransferOperatorModel::build(system, potential, &OracleConfig::with_grid(grid))?)
}

fn is_circle_map(system: &SmoothSystem) -> bool {
    matches!(system.kind, MapKind::ExpandingCircle { .. })
}

fn equilibrium(cfg: &RunConfig) -> Result<Record, CliError> {
    let system = cfg.system()?;
    let potential = cfg.potential(&system)?;
    let basis = basis(cfg, &system)?;
    let n: usize = cfg.require("n_max")?;
    let samples: usize = cfg.require("samples")?;
    let seed = cfg.seed()?;
    let bins: usize = cfg.or("bins", 16)?;
    let radius: f64 = cfg.or("concentration.radius", 0.1)?;
    let ens = build_ensemble(&system, &potential, n, samples, seed)?;
    let moments = ens.moments(&basis);

    let mut r = Record::new("equilibrium", cfg);
    describe_system(&mut r, &system);
    r.set("potential", potential.name());
    r.set("n", n);
    r.set("samples", samples);
    r.set("seed", seed);
    r.set("basis.k", basis.len());
    r.set("weak_distance.tail_bound", weak_distance_tail_bound(basis.len()));
    r.set("ess", ens.ess());
    r.warn(ens.ess_warning());
    r.set("invariance_defect", ens.invariance_defect(&basis));

    let oracle = if is_circle_map(&system) {
        let grid = cfg.or("oracle.grid", OracleConfig::default().grid)?;
        Some(oracle_model(&system, &potential, grid)?.gibbs_moments(&basis))
    } else {
        None
    };
    let mut header = vec!["k", "label", "moment"];
    if let Some(target) = &oracle {
        header.extend(["oracle", "difference"]);
        r.set("oracle.weak_distance", weak_distance(&moments, target)?);
        r.set("concentration.radius", radius);
        r.set("concentration.mass", ens.concentration_mass(&basis, target, radius)?);
    }
    let mut s = Series::new("moments", &header);
    for (k, m) in moments.iter().enumerate() {
        let mut row = vec![Cell::from(k + 1), basis.label(k + 1).into(), (*m).into()];
        if let Some(target) = &oracle {
            row.extend([target[k].into(), (m - target[k]).into()]);
        }
        s.push(row);
    }
    r.series.push(s);

    let hist = ens.histogram(bins)?;
    r.set("histogram.bins", bins);
    r.set("histogram.max_deviation_from_uniform", hist.max_deviation_from_uniform());
    let width = 1.0 / bins as f64;
    let mut h = if system.dim() == 1 {
        Series::new("histogram", &["x_lo", "x_hi", "mass"])
    } else {
        Series::new("histogram", &["x_lo", "x_hi", "y_lo", "y_hi", "mass"])
    };
    for (i, &mass) in hist.masses.iter().enumerate() {
        let row = if system.dim() == 1 {
            vec![(i as f64 * width).into(), ((i + 1) as f64 * width).into(), mass.into()]
        } else {
            let (ix, iy) = (i / bins, i % bins);
            vec![
                (ix as f64 * width).into(),
                ((ix + 1) as f64 * width).into(),
                (iy as f64 * width).into(),
                ((iy + 1) as f64 * width).into(),
                mass.into(),
            ]
        };
        h.push(row);
    }
    r.series.push(h);
    Ok(r)
}

fn rate_table(cfg: &RunConfig, system: &SmoothSystem, potential: &thermolab::Potential, observables: &[usize]) -> Result<RateFunctionTable, CliError> {
    let alpha = cfg.axis("rate.alpha", DEFAULT_ALPHA)?;
    let beta = cfg.axis("rate.beta", DEFAULT_BETA)?;
    let cap: f64 = cfg.or("rate.cap", DEFAULT_CAP)?;
    let d = observables.len();
    Ok(rate_function(system, potential, observables, vec![alpha; d], vec![beta; d], &params(cfg)?, cap)?)
}

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=d).map(|i| format!("{prefix}_{i}")).collect()
    }
}

fn rate_series(r: &mut Record, table: &RateFunctionTable) {
    let d = table.dim();
    let mut header = axis_names("alpha", d);
    header.push("J".into());
    header.extend(axis_names("beta_argmax", d));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut s = Series::new("rate", &header);
    for i in 0..table.alphas.len() {
        let mut row: Vec<Cell> = table.alphas[i].iter().map(|&a| a.into()).collect();
        row.push(table.value(i).into());
        row.extend(table.beta_argmax[i].iter().map(|&b| Cell::from(b)));
        s.push(row);
    }
    r.series.push(s);

    let mut header = axis_names("beta", d);
    header.extend(["Q".to_string(), "ess".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut q = Series::new("q_functional", &header);
    for i in 0..table.betas.len() {
        let mut row: Vec<Cell> = table.betas[i].iter().map(|&b| b.into()).collect();
        row.extend([table.q[i].into(), table.ess[i].into()]);
        q.push(row);
    }
    r.series.push(q);

    let i = table.argmin();
    r.set("rate.min", table.raw[i]);
    for (c, a) in table.alphas[i].iter().enumerate() {
        r.set(&format!("rate.argmin.{}", c + 1), *a);
    }
    r.set("rate.min_second_difference", table.min_second_difference());
    r.set("rate.min_entry", table.raw.iter().copied().fold(f64::INFINITY, f64::min));
    r.set("rate.cap", table.cap);
    r.set("rate.capped_entries", table.capped.iter().filter(|&&c| c).count());
    let min_ess = table.ess.iter().copied().fold(f64::INFINITY, f64::min);
    r.set("rate.ess.min", min_ess);
}

fn rate(cfg: &RunConfig) -> Result<Record, CliError> {
    let system = cfg.system()?;
    let potential = cfg.potential(&system)?;
    let observables = cfg.observables()?;
    let mut r = Record::new("rate", cfg);
    describe_system(&mut r, &system);
    r.set("potential", potential.name());
    let table = rate_table(cfg, &system, &potential, &observables)?;
    rate_series(&mut r, &table);
    Ok(r)
}

fn ldp(cfg: &RunConfig) -> Result<Record, CliError> {
    let system = cfg.system()?;
    let potential = cfg.potential(&system)?;
    let observables = cfg.observables()?;
    let cs = cfg.constraint(&observables)?;
    let params = params(cfg)?;
    let min_count: usize = cfg.or("ldp.min_count", DEFAULT_MIN_COUNT)?;
    let est = estimate_nu_n(&system, &potential, &cs, &params, min_count)?;

    let mut r = Record::new("ldp", cfg);
    describe_system(&mut r, &system);
    r.set("potential", potential.name());
    r.set("samples", params.samples);
    r.set("seed", params.seed);
    r.set("ldp.min_count", min_count);
    r.set("ldp.regression_points", est.used.iter().filter(|&&u| u).count());
    let mut s = Series::new("ldp", &["n", "nu_n", "log_nu_over_n", "satisfying_count"]);
    for i in 0..est.n_values.len() {
        s.push(vec![est.n_values[i].into(), est.nu[i].into(), est.log_nu_over_n[i].into(), est.satisfying[i].into()]);
        if est.satisfying[i] == 0 {
            r.warnings.push(format!("no satisfying samples at n = {}", est.n_values[i]));
        }
    }
    r.series.push(s);

    let table = rate_table(cfg, &system, &potential, &observables)?;
    let report = contraction_report(&est, &table, &cs)?;
    match report.status {
        ContractionStatus::Measured => {
            r.set("ldp.status", "measured");
            r.set("ldp.slope", est.slope.expect("measured"));
        }
        ContractionStatus::DecayTooFast => r.set("ldp.status", "decay too fast to measure"),
    }
    r.set("contraction.rate", report.rate);
    if let Some(v) = report.decay_rate {
        r.set("contraction.decay_rate", v);
    }
    if let Some(v) = report.abs_gap {
        r.set("contraction.abs_gap", v);
    }
    if let Some(v) = report.rel_gap {
        r.set("contraction.rel_gap", v);
    }
    rate_series(&mut r, &table);
    Ok(r)
}

fn oracle(cfg: &RunConfig) -> Result<Record, CliError> {
    let system = cfg.system()?;
    if !is_circle_map(&system) {
        return Err(thermolab::Error::InvalidSystem(format!("the oracle covers expanding circle maps only, not {system}")).into());
    }
    let potential = cfg.potential(&system)?;
    let grid: usize = cfg.or("oracle.grid", OracleConfig::default().grid)?;
    let model = oracle_model(&system, &potential, grid)?;
    let fine = oracle_model(&system, &potential, 2 * grid)?;
    let est = estimate_pressure(&system, &potential, &params(cfg)?)?;

    let mut r = Record::new("oracle", cfg);
    describe_system(&mut r, &system);
    r.set("potential", potential.name());
    r.set("estimator.pressure", est.pressure());
    r.set("oracle.pressure", model.pressure());
    r.set("difference", est.pressure() - model.pressure());
    r.set("oracle.grid", grid);
    r.set("oracle.self_convergence", (model.pressure() - fine.pressure()).abs());
    r.set("oracle.residual", model.residual());
    r.set("oracle.iterations", model.iterations);
    r.set("oracle.entropy", model.entropy());
    r.set("oracle.mean_potential", model.mean_potential());
    pressure_series(&mut r, &est);
    let basis = basis(cfg, &system)?;
    let mut s = Series::new("oracle_moments", &["k", "label", "moment"]);
    for (k, m) in model.gibbs_moments(&basis).into_iter().enumerate() {
        s.push(vec![(k + 1).into(), basis.label(k + 1).into(), m.into()]);
    }
    r.series.push(s);
    Ok(r)
}

fn selfcheck(cfg: &RunConfig) -> Result<Record, CliError> {
    let defaults = SelfcheckConfig::default();
    let sc = SelfcheckConfig {
        points: cfg.or("selfcheck.points", defaults.points)?,
        samples: cfg.or("samples", defaults.samples)?,
        n_max: cfg.or("n_max", defaults.n_max)?,
        seed: cfg.seed()?,
    };
    let outcomes = run_all(&sc)?;
    let mut r = Record::new("selfcheck", cfg);
    let mut s = Series::new("selfcheck", &["suite", "system", "cases", "worst", "tolerance", "passed"]);
    for o in &outcomes {
        s.push(vec![o.suite.into(), o.system.as_str().into(), o.cases.into(), o.worst.into(), o.tolerance.into(), o.passed().into()]);
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    r.set("checks", outcomes.len());
    r.set("failed", failed);
    r.ok = failed == 0;
    r.series.push(s);
    Ok(r)
}
