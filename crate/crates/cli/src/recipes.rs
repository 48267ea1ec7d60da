//! Subcommand implementations.

use std::fmt;

use serde_json::{json, Value};

use corrcs::biht::{self, BihtProblem};
use corrcs::bpdn::{self, BpdnProblem, SpgOptions};
use corrcs::experiments::{
    self, fit_design, fitted_gain, manifest_json, optimize_beta_epsilon, reference_points, results_csv,
    run_experiment, run_phase_sweep, BetaEpsilonObjective, ExperimentConfig, ExperimentResult, GridPoint,
    Manifest, Method, NoiseMode, PhaseSweepConfig, ResultRow,
};
use corrcs::optimizer::SimplexConfig;
use corrcs::quantizer::{self, QuantizerDesign};

use crate::files::{self, curve_script, phase_script, read_matrix, read_vector, vector_csv};
use crate::{
    Common, Figure, OptimizeArgs, PhaseSweepArgs, QuantizerArgs, ReproduceArgs, Scale, SolveArgs, SolveMethod,
    SweepMethod,
};

const BIT_DEPTHS: [u32; 3] = [1, 3, 5];

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    /// Outputs were written but solver non-convergence crossed the threshold.
    SolverFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::SolverFailure(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => f.write_str(m),
            CliError::SolverFailure(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<corrcs::Error> for CliError {
    fn from(e: corrcs::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn check_workers(common: &Common) -> Result<()> {
    match common.workers {
        Some(0) => Err(CliError::Invalid("--workers must be at least 1".into())),
        _ => Ok(()),
    }
}

fn trials(common: &Common, default: usize) -> Result<usize> {
    match common.trials {
        Some(0) => Err(CliError::Invalid("--trials must be at least 1".into())),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

/// Writes `<stem>.csv`, `<stem>.manifest.json` and optionally `<stem>.gp`,
/// then reports flagged runs as a solver failure.
fn emit(common: &Common, stem: &str, manifest: Manifest, script: Option<String>) -> Result<()> {
    files::write(&common.out, &format!("{stem}.csv"), &results_csv(&manifest.results)?)?;
    files::write(&common.out, &format!("{stem}.manifest.json"), &manifest_json(&manifest)?)?;
    if let Some(script) = script {
        files::write(&common.out, &format!("{stem}.gp"), &script)?;
    }
    println!("wrote {stem}.csv, {stem}.manifest.json to {}", common.out.display());
    if manifest.flagged {
        return Err(CliError::SolverFailure(format!(
            "more than {}% of the solves at some grid point did not converge",
            experiments::NONCONVERGED_FLAG_FRACTION * 100.0
        )));
    }
    Ok(())
}

pub fn reproduce(args: &ReproduceArgs) -> Result<()> {
    check_workers(&args.common)?;
    match args.figure {
        Figure::Table1 => table1(&args.common),
        Figure::Fig2 | Figure::Fig3 | Figure::Fig4 => curves(args),
        Figure::Fig5 => {
            let sweep = PhaseSweepArgs {
                scale: args.scale,
                n: None,
                delta_step: None,
                rho_step: None,
                cutoff: 1.0,
                deltas: None,
                methods: vec![SweepMethod::BpdnScale, SweepMethod::Biht],
                common: args.common.clone(),
            };
            sweep_to(&sweep, "fig5")
        }
        Figure::Tables => tables(args),
    }
}

fn table1(common: &Common) -> Result<()> {
    let mut entries = Vec::new();
    for design in [QuantizerDesign::LloydMax, QuantizerDesign::Uniform] {
        for bits in BIT_DEPTHS {
            let fit = fit_design(design, bits, common.seed)?;
            entries.push(json!({
                "design": design.name(),
                "bits": bits,
                "alpha": fit.alpha,
                "sigma_q_sq": fit.sigma_q_sq,
                "sigma_r_sq": fit.sigma_r_sq,
                "samples": fit.sample_count,
            }));
        }
    }
    let table = json!({ "master_seed": common.seed, "entries": entries });
    let text = serde_json::to_string_pretty(&table)?;
    files::write(&common.out, "table1.json", &text)?;
    let mut manifest = Manifest::new("table1", common.seed, json!({ "bits": BIT_DEPTHS }), Vec::new(), false);
    manifest.summary = table;
    files::write(&common.out, "table1.manifest.json", &manifest_json(&manifest)?)?;
    println!("{text}");
    Ok(())
}

fn curves(args: &ReproduceArgs) -> Result<()> {
    let common = &args.common;
    let t = trials(common, if args.scale == Scale::Paper { 1000 } else { 200 })?;
    let (stem, noise_for): (&str, fn(u32, u64) -> corrcs::Result<NoiseMode>) = match args.figure {
        Figure::Fig2 => ("fig2", |b, s| NoiseMode::artificial_from(QuantizerDesign::LloydMax, b, s)),
        Figure::Fig3 => ("fig3", |b, _| Ok(NoiseMode::LloydMaxQuantized { bits: b })),
        _ => ("fig4", |b, _| Ok(NoiseMode::UniformQuantized { bits: b })),
    };
    let mut results: Vec<ExperimentResult> = Vec::new();
    for bits in BIT_DEPTHS {
        let mut cfg = ExperimentConfig::new(
            reference_points(),
            t,
            noise_for(bits, common.seed)?,
            vec![Method::Bpdn, Method::BpdnScale],
            common.seed,
        );
        cfg.workers = common.workers;
        cfg.power = common.power.into();
        results.push(run_experiment(&cfg)?);
    }
    let rows: Vec<ResultRow> = results.iter().flat_map(ExperimentResult::rows).collect();
    let flagged = results.iter().any(ExperimentResult::flagged);
    let configs: Vec<&ExperimentConfig> = results.iter().map(|r| &r.config).collect();
    let mut manifest = Manifest::new(stem, common.seed, serde_json::to_value(configs)?, rows, flagged);
    manifest.summary = Value::Array(results.iter().map(improvements).collect::<Result<_>>()?);
    let script = curve_script(stem, &BIT_DEPTHS, &[("bpdn", "BPDN"), ("bpdn-scale", "BPDN-scale")]);
    emit(common, stem, manifest, Some(script))
}

/// Gain and per-point improvement of bpdn-scale over bpdn in dB.
fn improvements(r: &ExperimentResult) -> Result<Value> {
    let mut points = Vec::new();
    for p in &r.config.grid {
        let (Some(base), Some(scaled)) = (r.get(*p, "bpdn"), r.get(*p, "bpdn-scale")) else {
            continue;
        };
        points.push(json!({
            "m": p.m,
            "k": p.k,
            "improvement_db": experiments::improvement_db(base.mean_nmse, scaled.mean_nmse)?,
        }));
    }
    Ok(json!({ "noise_mode": r.config.noise.name(), "bits": r.config.noise.bits(), "alpha": r.alpha, "points": points }))
}

pub fn phase_sweep(args: &PhaseSweepArgs) -> Result<()> {
    check_workers(&args.common)?;
    sweep_to(args, "phase")
}

fn sweep_to(args: &PhaseSweepArgs, stem: &str) -> Result<()> {
    let common = &args.common;
    let mut cfg = match args.scale {
        Scale::Desk => PhaseSweepConfig::desk(common.seed),
        Scale::Paper => PhaseSweepConfig::paper(common.seed),
    };
    cfg.trials = trials(common, cfg.trials)?;
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.delta_step = args.delta_step.unwrap_or(cfg.delta_step);
    cfg.rho_step = args.rho_step.unwrap_or(cfg.rho_step);
    cfg.nmse_cutoff = args.cutoff;
    cfg.deltas = args.deltas.clone();
    cfg.methods = args
        .methods
        .iter()
        .map(|m| match m {
            SweepMethod::BpdnScale => Method::BpdnScale,
            SweepMethod::Biht => Method::Biht,
        })
        .collect();
    cfg.workers = common.workers;
    cfg.power = common.power.into();
    let result = run_phase_sweep(&cfg)?;
    let mut manifest = Manifest::new(stem, common.seed, serde_json::to_value(&cfg)?, result.rows(), result.flagged());
    manifest.summary = json!({ "alpha": result.alpha });
    let names: Vec<&str> = cfg.methods.iter().map(Method::name).collect();
    emit(common, stem, manifest, Some(phase_script(stem, &names)))
}

struct StudyRows {
    summary: Value,
    rows: Vec<ResultRow>,
}

fn study(point: GridPoint, bits: u32, t: usize, max_evals: usize, common: &Common) -> Result<StudyRows> {
    let alpha = fitted_gain(QuantizerDesign::LloydMax, bits, common.seed)?;
    let mut objective =
        BetaEpsilonObjective::new(point, alpha, t, common.seed, common.power.into(), SpgOptions::default())?;
    let simplex = SimplexConfig {
        max_evals,
        ..SimplexConfig::beta_epsilon(alpha, 1.0)
    };
    let s = optimize_beta_epsilon(&mut objective, Some(simplex), common.workers)?;
    let mut rows = Vec::new();
    for (method, beta, scale) in [
        (Method::BpdnScale, alpha, 1.0),
        (Method::BpdnBeta { beta: s.beta }, s.beta, s.epsilon_ratio),
    ] {
        let values = objective.evaluate_trials(beta, scale)?;
        let (mean_nmse, ci99) = experiments::mean_ci99(&values);
        rows.push(ResultRow {
            n: point.n,
            m: point.m,
            k: point.k,
            delta: point.delta(),
            rho: point.rho(),
            method: method.name().to_string(),
            noise_mode: "artificial".to_string(),
            bits: Some(bits),
            trials: t,
            mean_nmse,
            ci99,
            nonconverged: 0,
        });
    }
    let summary = json!({
        "m": point.m,
        "k": point.k,
        "bits": bits,
        "alpha": alpha,
        "beta": s.beta,
        "beta_over_alpha": s.beta_ratio(),
        "epsilon_over_rule": s.epsilon_ratio,
        "p_opt": s.p_opt,
        "p_alpha": s.p_alpha,
        "evaluations": s.evaluations,
        "converged": s.converged,
    });
    Ok(StudyRows { summary, rows })
}

fn tables(args: &ReproduceArgs) -> Result<()> {
    let common = &args.common;
    let t = trials(common, if args.scale == Scale::Paper { 1000 } else { 100 })?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for bits in BIT_DEPTHS {
        for point in reference_points() {
            let s = study(point, bits, t, 200, common)?;
            rows.extend(s.rows);
            summary.push(s.summary);
        }
    }
    let mut manifest = Manifest::new(
        "tables",
        common.seed,
        json!({ "trials": t, "bits": BIT_DEPTHS, "power": common.power.name() }),
        rows,
        false,
    );
    manifest.summary = Value::Array(summary);
    let script = curve_script("tables", &BIT_DEPTHS, &[("bpdn-scale", "P_alpha"), ("bpdn-beta", "P_2")]);
    emit(common, "tables", manifest, Some(script))
}

pub fn optimize(args: &OptimizeArgs) -> Result<()> {
    let common = &args.common;
    check_workers(common)?;
    let point = GridPoint::new(args.n, args.m, args.k)?;
    if args.k == 0 {
        return Err(CliError::Invalid("--k must be at least 1".into()));
    }
    let t = trials(common, 100)?;
    let s = study(point, args.bits, t, args.max_evals, common)?;
    let mut manifest = Manifest::new(
        "optimize-beta-epsilon",
        common.seed,
        json!({ "n": args.n, "m": args.m, "k": args.k, "bits": args.bits, "trials": t,
                "max_evals": args.max_evals, "power": common.power.name() }),
        s.rows,
        false,
    );
    println!("{}", serde_json::to_string_pretty(&s.summary)?);
    manifest.summary = s.summary;
    emit(common, "optimize", manifest, None)
}

pub fn quantizer(args: &QuantizerArgs) -> Result<()> {
    let design: QuantizerDesign = args.design.into();
    let q = design.design(args.bits, args.sigma)?;
    let seed = corrcs::siggen::derive_seed(&[args.seed, design as u64, u64::from(args.bits)]);
    let fit = quantizer::fit_gain_model_seeded(&q, args.sigma * args.sigma, args.samples, seed)?;
    files::write(&args.out, "quantizer.json", &q.to_json())?;
    let fit_text = serde_json::to_string_pretty(&fit)?;
    files::write(&args.out, "gain_fit.json", &fit_text)?;
    println!("{}", q.to_json().trim_end());
    println!("{fit_text}");
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let a = read_matrix(&args.matrix)?;
    let y = read_vector(&args.y)?;
    if y.len() != a.nrows() {
        return Err(CliError::Invalid(format!(
            "measurement vector has {} entries but the matrix has {} rows",
            y.len(),
            a.nrows()
        )));
    }
    let (report, epsilon) = match args.method {
        SolveMethod::Biht => {
            let k = args
                .k
                .ok_or_else(|| CliError::Invalid("--k is required for biht".into()))?;
            let signs = biht::sign_vector(y.view());
            (biht::solve_biht(&BihtProblem::new(a.view(), signs.view(), k)?)?, None)
        }
        SolveMethod::Bpdn | SolveMethod::BpdnScale => {
            let alpha = match (args.method, args.alpha) {
                (SolveMethod::BpdnScale, None) => {
                    return Err(CliError::Invalid("--alpha is required for bpdn-scale".into()))
                }
                (SolveMethod::BpdnScale, Some(a)) if !(a > 0.0 && a <= 1.0) => {
                    return Err(CliError::Invalid(format!("--alpha must lie in (0, 1], got {a}")))
                }
                (SolveMethod::BpdnScale, Some(a)) => Some(a),
                _ => None,
            };
            let epsilon = resolve_epsilon(args, &y, alpha)?;
            let problem = BpdnProblem::new(a.view(), y.view(), epsilon)?;
            let report = match alpha {
                Some(alpha) => bpdn::solve_post_scaled(&problem, alpha)?,
                None => bpdn::solve_bpdn(&problem)?,
            };
            (report, Some(epsilon))
        }
    };
    files::write(&args.out, "solution.csv", &vector_csv(&report.solution))?;
    let method = match args.method {
        SolveMethod::Bpdn => "bpdn",
        SolveMethod::BpdnScale => "bpdn-scale",
        SolveMethod::Biht => "biht",
    };
    let doc = json!({
        "method": method,
        "alpha": args.alpha,
        "epsilon": epsilon,
        "residual_norm": report.residual_norm,
        "l1_norm": report.l1_norm,
        "iterations": report.iterations,
        "matvecs": report.matvecs,
        "converged": report.converged,
    });
    files::write(&args.out, "report.json", &serde_json::to_string_pretty(&doc)?)?;
    println!("wrote solution.csv, report.json to {}", args.out.display());
    if !report.converged && args.method != SolveMethod::Biht {
        return Err(CliError::SolverFailure("BPDN did not converge".into()));
    }
    Ok(())
}

/// `--epsilon` value, or the noise-level rule from `--sigma` or `--bits`.
fn resolve_epsilon(args: &SolveArgs, y: &ndarray::Array1<f64>, alpha: Option<f64>) -> Result<f64> {
    let m = y.len();
    if args.epsilon != "auto" {
        let eps: f64 = args
            .epsilon
            .parse()
            .map_err(|_| CliError::Invalid(format!("--epsilon must be a number or 'auto', got '{}'", args.epsilon)))?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(CliError::Invalid(format!("--epsilon must be >= 0, got {eps}")));
        }
        return Ok(eps);
    }
    if let Some(sigma) = args.sigma {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(CliError::Invalid(format!("--sigma must be >= 0, got {sigma}")));
        }
        return Ok(bpdn::epsilon_rule(m, sigma));
    }
    let Some(bits) = args.bits else {
        return Err(CliError::Invalid("--epsilon auto needs --sigma or --bits".into()));
    };
    // A Lloyd-Max output has power α_b·σ_ȳ², with α_b the quantizer gain.
    let gain = quantizer::design_lloyd_max(bits, 1.0)?.gaussian_gain(1.0);
    let power = y.dot(y) / m as f64 / gain;
    let sigma = match alpha {
        Some(a) => (a * (1.0 - a) * power).sqrt(),
        None => ((1.0 - gain) * power).sqrt(),
    };
    Ok(bpdn::epsilon_rule(m, sigma))
}
