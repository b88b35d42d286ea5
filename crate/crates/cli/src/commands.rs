use std::fmt::Write as _;

use sensorq::design::{design, Deconvolution, DesignSolution};
use sensorq::exec::Execution;
use sensorq::fisher::{data_processing_check, posterior_fisher, DataProcessing};
use sensorq::io::{
    curve_csv, fisher_csv, quantizer_csv, rate_csv, simulation_csv, strategy_csv, two_column_csv,
};
use sensorq::pbpo::{
    brute_force, dependence_counterexample, pbpo_multistart, pbpo_sweep, Mode, Strategy,
};
use sensorq::quadrature::Grid;
use sensorq::quantizer::response_curve_with;
use sensorq::rate::compare_rate_strategies;
use sensorq::simulate::{equicorrelated_curve, run_mse_experiment, SimConfig};
use sensorq::Result;

use crate::config::{
    CounterexampleConfig, Ctx, DesignConfig, FisherConfig, PbpoConfig, RateConfig, SimulateConfig,
};

/// Files to write (name, contents) and a text summary.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(String, String)>,
    pub summary: String,
    /// A numerical failure that still produced a summary.
    pub failed: bool,
}

pub fn design_cmd(cfg: &DesignConfig, ctx: &Ctx) -> Result<Output> {
    let prior = cfg.prior.build(ctx)?;
    let noise = cfg.noise.build(ctx)?;
    let sol = design(&prior, &noise, &cfg.target(), cfg.nodes)?;
    let mut out = Output {
        summary: design_summary(&sol),
        ..Output::default()
    };
    match &sol.gamma {
        Some(Deconvolution::Failure(_)) => out.failed = true,
        Some(Deconvolution::Quantizer(q)) => {
            out.files.push(("gstar.csv".into(), curve_csv(&sol.gstar)?));
            out.files
                .push(("quantizer.csv".into(), quantizer_csv(q, &[])?));
        }
        None => out.files.push(("gstar.csv".into(), curve_csv(&sol.gstar)?)),
    }
    Ok(out)
}

fn design_summary(sol: &DesignSolution) -> String {
    let mut s = String::new();
    let g = sol.gstar.grid();
    writeln!(s, "method: {} ({:?})", sol.method.tag(), sol.method).unwrap();
    writeln!(s, "grid: [{}, {}] with {} nodes", g.lo, g.hi, g.nodes).unwrap();
    if let Some(r) = sol.ode_residual {
        writeln!(s, "ode_residual: {r:e}").unwrap();
    }
    if let Some(c) = &sol.check {
        writeln!(s, "objective: {}", c.objective).unwrap();
        writeln!(
            s,
            "perturbed objective range: [{}, {}]",
            c.perturbed_low, c.perturbed_high
        )
        .unwrap();
        writeln!(
            s,
            "information floor: {} (best perturbed floor {})",
            c.floor, c.perturbed_floor
        )
        .unwrap();
        writeln!(s, "stationary point: {:?}", c.extremum).unwrap();
    }
    match &sol.gamma {
        Some(Deconvolution::Quantizer(_)) => writeln!(s, "deconvolution: ok").unwrap(),
        Some(Deconvolution::Failure(f)) => {
            writeln!(s, "deconvolution: failed").unwrap();
            writeln!(s, "reason: {}", f.reason).unwrap();
            writeln!(s, "raw inverse range: [{}, {}]", f.raw_min, f.raw_max).unwrap();
            writeln!(s, "reconvolution residual: {:e}", f.residual).unwrap();
        }
        None => {}
    }
    s
}

pub fn fisher_cmd(cfg: &FisherConfig, ctx: &Ctx) -> Result<Output> {
    let prior = cfg.prior.build(ctx)?;
    let noise = cfg.noise.build(ctx)?;
    let q = cfg.quantizer.build(ctx)?;
    let s = prior.quadrature_support()?;
    let (lo, hi) = if s.lo < s.hi {
        (s.lo, s.hi)
    } else {
        (s.lo - 1.0, s.hi + 1.0)
    };
    let curve = response_curve_with(
        &q,
        &noise,
        Grid::simpson(lo, hi, cfg.nodes)?,
        Execution::Parallel,
    )?;
    let report = posterior_fisher(&curve, &prior, cfg.sensors, cfg.f0)?;
    let mut summary = String::new();
    writeln!(summary, "F_D = {}", report.f_d).unwrap();
    writeln!(summary, "F_0 = {}", report.f_0).unwrap();
    writeln!(summary, "F_P = {}", report.f_p).unwrap();
    writeln!(summary, "F_total = {}", report.f_total).unwrap();
    writeln!(summary, "pcrlb = {}", report.pcrlb).unwrap();
    match data_processing_check(&curve, &prior, &noise)? {
        DataProcessing::Checked { f_i, i_star, holds } => writeln!(
            summary,
            "per-sensor F_i = {f_i} vs unquantized I* = {i_star}: bound holds = {holds}"
        )
        .unwrap(),
        DataProcessing::NotApplicable { f_i, reason } => writeln!(
            summary,
            "per-sensor F_i = {f_i}; no unquantized bound ({reason})"
        )
        .unwrap(),
    }
    let mut files = vec![
        ("fisher.csv".to_string(), fisher_csv(&report)),
        ("curve.csv".to_string(), curve_csv(&curve)?),
    ];
    if let Some(e) = &cfg.equicorrelated {
        let (rhos, fi): (Vec<f64>, Vec<f64>) =
            equicorrelated_curve(e.sensors, e.variance, &e.rhos)?
                .into_iter()
                .unzip();
        files.push((
            "equicorrelated.csv".into(),
            two_column_csv(["rho", "fisher"], &rhos, &fi)?,
        ));
    }
    Ok(Output {
        files,
        summary,
        failed: false,
    })
}

pub fn simulate_cmd(cfg: &SimulateConfig, ctx: &Ctx) -> Result<Output> {
    let sim = SimConfig {
        prior: cfg.prior.build(ctx)?,
        noise: cfg.noise.build(ctx)?,
        quantizer: cfg.quantizer.build(ctx)?,
        sensors: cfg.sensors.clone(),
        runs: cfg.runs,
        seed: cfg.seed,
    };
    let r = run_mse_experiment(&sim)?;
    let mut summary = format!("seed {} with {} runs per N\n", cfg.seed, cfg.runs);
    for row in &r.rows {
        writeln!(
            summary,
            "N = {:>6}: mse = {:.6e} ± {:.1e}, N·mse = {:.5}, limit N·pcrlb = {:.5}",
            row.sensors,
            row.mse,
            row.stderr,
            row.mse * row.sensors as f64,
            row.pcrlb_limit * row.sensors as f64
        )
        .unwrap();
    }
    Ok(Output {
        files: vec![("simulation.csv".into(), simulation_csv(&r)?)],
        summary,
        failed: false,
    })
}

pub fn pbpo_cmd(cfg: &PbpoConfig) -> Result<Output> {
    let p = cfg.problem.build()?;
    let mode = cfg.mode();
    let run = if cfg.starts > 0 {
        pbpo_multistart(&p, mode, cfg.max_sweeps, cfg.starts, cfg.seed)?
    } else {
        pbpo_sweep(&p, &Strategy::constant(&p, 0), mode, cfg.max_sweeps)?
    };
    let mut summary = String::new();
    let tag = match mode {
        Mode::Independent => "independent",
        Mode::Dependent => "dependent",
    };
    writeln!(summary, "mode: {tag}").unwrap();
    writeln!(summary, "risk: {}", run.risk()).unwrap();
    writeln!(
        summary,
        "sweeps: {} (converged: {})",
        run.sweeps, run.converged
    )
    .unwrap();
    writeln!(summary, "trace: {:?}", run.trace).unwrap();
    let mut files = vec![("strategy.csv".to_string(), strategy_csv(&run.strategy)?)];
    if cfg.brute_force {
        let (best, risk) = brute_force(&p)?;
        writeln!(summary, "exhaustive optimum: {risk}").unwrap();
        writeln!(summary, "gap: {}", run.risk() - risk).unwrap();
        files.push(("brute_force.csv".into(), strategy_csv(&best)?));
    }
    Ok(Output {
        files,
        summary,
        failed: false,
    })
}

pub fn rate_cmd(cfg: &RateConfig, ctx: &Ctx) -> Result<Output> {
    let prior = cfg.prior.build(ctx)?;
    let ranked = compare_rate_strategies(
        cfg.budget,
        &cfg.candidates(),
        &prior,
        cfg.variance,
        Execution::Parallel,
    )?;
    let mut summary = format!("budget: {} bits\n", cfg.budget);
    for r in &ranked {
        writeln!(
            summary,
            "#{} candidate {}: {} sensors × {} levels, {} bits, F_D = {}",
            r.rank,
            r.index + 1,
            r.candidate.count,
            r.candidate.levels,
            r.bits_used,
            r.report.f_d
        )
        .unwrap();
    }
    Ok(Output {
        files: vec![("rate.csv".into(), rate_csv(&ranked)?)],
        summary,
        failed: false,
    })
}

pub fn counterexample_cmd(cfg: &CounterexampleConfig) -> Result<Output> {
    let mut table = String::from("n,sensors,identical_best_risk,nonidentical_risk,margin\n");
    let mut summary = String::new();
    let mut files = Vec::new();
    for &n in &cfg.orders {
        let c = dependence_counterexample(n)?;
        writeln!(
            table,
            "{n},{},{},{},{}",
            c.sensors, c.identical_best_risk, c.nonidentical_risk, c.margin
        )
        .unwrap();
        writeln!(
            summary,
            "n = {n} ({} sensors): identical {:.6} vs bisection {:.6}, margin {:.6}",
            c.sensors, c.identical_best_risk, c.nonidentical_risk, c.margin
        )
        .unwrap();
        files.push((
            format!("bisection_n{n}.csv"),
            strategy_csv(&c.nonidentical)?,
        ));
    }
    files.insert(0, ("counterexample.csv".into(), table));
    Ok(Output {
        files,
        summary,
        failed: false,
    })
}
