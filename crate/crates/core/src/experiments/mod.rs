//! Monte-Carlo experiments: seeded trials, reconstruction by each method,
//! NMSE aggregation with 99% confidence intervals, phase-space sweeps and
//! result files.
//!
//! Every trial is a pure function of `(master_seed, N, M, K, trial index)`,
//! trials are collected in index order and sums use a fixed tree, so results
//! are bit-identical for any worker count.

mod io;
mod phase;
mod stats;
mod tuning;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biht::{self, BihtProblem};
use crate::bpdn::{self, BpdnProblem, SolverReport, SpgOptions};
use crate::error::{invalid, Result};
use crate::model::{apply_correlated_noise, NoiseSpec};
use crate::quantizer::{self, fit_gain_model, GainModelFit, QuantizerDesign, ScalarQuantizer};
use crate::siggen::{derive_seed, InstanceConfig, ProblemInstance, Stream};

pub use io::{
    manifest_json, parse_manifest, parse_results_csv, results_csv, Manifest, ResultRow, CSV_HEADER,
    MANIFEST_SCHEMA,
};
pub use phase::{run_phase_sweep, PhaseCell, PhaseSweepConfig, PhaseSweepResult};
pub use stats::{improvement_db, mean_ci99, nmse, pairwise_sum, Z99};
pub use tuning::{optimize_beta_epsilon, BetaEpsilonObjective, BetaEpsilonStudy};

/// Samples used to fit the gain model of a quantizer.
pub const GAIN_FIT_SAMPLES: usize = 1_000_000;
/// Share of non-converged solves above which a grid point is flagged.
pub const NONCONVERGED_FLAG_FRACTION: f64 = 0.01;

const GAIN_FIT_TAG: u64 = 0x4741_494e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl GridPoint {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        InstanceConfig::new(n, m, k, 0, 0)?;
        Ok(Self { n, m, k })
    }

    /// Ensemble `σ_ȳ² = K/M` for unit-variance nonzeros and `N(0, 1/M)` rows.
    pub fn sigma_ybar_sq(&self) -> f64 {
        self.k as f64 / self.m as f64
    }

    pub fn delta(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn rho(&self) -> f64 {
        self.k as f64 / self.m as f64
    }
}

/// The reference `(M, K)` grid at `N = 1000`.
pub fn reference_points() -> Vec<GridPoint> {
    crate::siggen::reference_grid()
        .into_iter()
        .map(|(m, k)| GridPoint {
            n: crate::siggen::REFERENCE_N,
            m,
            k,
        })
        .collect()
}

/// How the observed measurements are produced from `ȳ = A x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `y = α ȳ + w`, `w ~ N(0, α(1−α)σ_ȳ²)`. `bits` only labels the
    /// quantizer resolution the gain was taken from.
    ArtificialCorrelated { alpha: f64, bits: Option<u32> },
    /// `y = Q(ȳ)` with a Lloyd-Max quantizer scaled to `σ_ȳ`.
    LloydMaxQuantized { bits: u32 },
    /// `y = Q(ȳ)` with an MMSE uniform quantizer scaled to `σ_ȳ`.
    UniformQuantized { bits: u32 },
}

impl NoiseMode {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseMode::ArtificialCorrelated { .. } => "artificial",
            NoiseMode::LloydMaxQuantized { .. } => "lloyd-max",
            NoiseMode::UniformQuantized { .. } => "uniform",
        }
    }

    pub fn bits(&self) -> Option<u32> {
        match *self {
            NoiseMode::ArtificialCorrelated { bits, .. } => bits,
            NoiseMode::LloydMaxQuantized { bits } | NoiseMode::UniformQuantized { bits } => Some(bits),
        }
    }

    fn design(&self) -> Option<QuantizerDesign> {
        match self {
            NoiseMode::ArtificialCorrelated { .. } => None,
            NoiseMode::LloydMaxQuantized { .. } => Some(QuantizerDesign::LloydMax),
            NoiseMode::UniformQuantized { .. } => Some(QuantizerDesign::Uniform),
        }
    }

    /// Artificial noise with the gain of a fitted quantizer.
    pub fn artificial_from(design: QuantizerDesign, bits: u32, master_seed: u64) -> Result<Self> {
        let alpha = fitted_gain(design, bits, master_seed)?;
        Ok(NoiseMode::ArtificialCorrelated {
            alpha,
            bits: Some(bits),
        })
    }
}

/// Gain model of a quantizer design, fitted by Monte Carlo on
/// [`GAIN_FIT_SAMPLES`] standard normal samples drawn from a stream derived
/// from `(master_seed, design, bits)`. `α` does not depend on the input
/// deviation.
pub fn fit_design(design: QuantizerDesign, bits: u32, master_seed: u64) -> Result<GainModelFit> {
    let q = design.design(bits, 1.0)?;
    let seed = derive_seed(&[master_seed, GAIN_FIT_TAG, design as u64, u64::from(bits)]);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    fit_gain_model(&q, 1.0, GAIN_FIT_SAMPLES, &mut rng)
}

/// `α` from [`fit_design`].
pub fn fitted_gain(design: QuantizerDesign, bits: u32, master_seed: u64) -> Result<f64> {
    Ok(fit_design(design, bits, master_seed)?.alpha)
}

/// Reconstruction method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    /// Plain BPDN with `ε` from `σ_q`.
    Bpdn,
    /// BPDN with `ε` from `σ_r`, estimate divided by `α`.
    BpdnScale,
    /// `α·A` in the constraint, `ε` from `σ_r`.
    BpdnScaleMatrix,
    /// BPDN with `ε` from `σ_r`, estimate divided by `beta`.
    BpdnBeta { beta: f64 },
    /// BIHT on `sign(ȳ)`, compared with the unit-norm signal.
    Biht,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Bpdn => "bpdn",
            Method::BpdnScale => "bpdn-scale",
            Method::BpdnScaleMatrix => "bpdn-scale-matrix",
            Method::BpdnBeta { .. } => "bpdn-beta",
            Method::Biht => "biht",
        }
    }

    /// Parses names without parameters; `bpdn-beta` needs [`Method::BpdnBeta`].
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bpdn" => Ok(Method::Bpdn),
            "bpdn-scale" => Ok(Method::BpdnScale),
            "bpdn-scale-matrix" => Ok(Method::BpdnScaleMatrix),
            "biht" => Ok(Method::Biht),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }

    fn is_bpdn(&self) -> bool {
        !matches!(self, Method::Biht)
    }
}

/// Choice of the BPDN constraint radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// `scale · √(M + 2√(2M)) · σ`, with `σ = σ_q` for plain BPDN and
    /// `σ = σ_r` for the gain-compensated methods.
    Rule { scale: f64 },
    Explicit { value: f64 },
}

impl Default for EpsilonMode {
    fn default() -> Self {
        EpsilonMode::Rule { scale: 1.0 }
    }
}

/// Source of `σ_ȳ²` for noise generation, quantizer scaling and `ε`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalPower {
    /// `‖ȳ‖²/M` of each trial, as tracked by automatic gain control.
    #[default]
    Measured,
    /// The ensemble value `K/M`.
    Ensemble,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: Vec<GridPoint>,
    pub trials: usize,
    pub noise: NoiseMode,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub epsilon: EpsilonMode,
    pub power: SignalPower,
    /// Keep every per-trial NMSE in the result.
    pub retain_trials: bool,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    pub solver: SpgOptions,
    pub biht_max_iterations: usize,
}

impl ExperimentConfig {
    pub fn new(grid: Vec<GridPoint>, trials: usize, noise: NoiseMode, methods: Vec<Method>, master_seed: u64) -> Self {
        Self {
            grid,
            trials,
            noise,
            methods,
            master_seed,
            epsilon: EpsilonMode::default(),
            power: SignalPower::default(),
            retain_trials: false,
            workers: None,
            solver: SpgOptions::default(),
            biht_max_iterations: biht::DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.grid.is_empty() {
            return Err(invalid("grid is empty"));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods selected"));
        }
        for p in &self.grid {
            InstanceConfig::new(p.n, p.m, p.k, self.master_seed, 0)?;
            if p.k == 0 {
                return Err(invalid(format!("grid point ({}, {}, {}) has K = 0", p.n, p.m, p.k)));
            }
        }
        match self.noise {
            NoiseMode::ArtificialCorrelated { alpha, .. } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(invalid(format!("artificial noise needs alpha in (0, 1), got {alpha}")));
                }
            }
            NoiseMode::LloydMaxQuantized { bits } | NoiseMode::UniformQuantized { bits } => {
                if bits == 0 || bits > quantizer::MAX_BITS {
                    return Err(invalid(format!("bits must lie in 1..={}, got {bits}", quantizer::MAX_BITS)));
                }
            }
        }
        for m in &self.methods {
            if let Method::BpdnBeta { beta } = m {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(invalid(format!("beta must be positive, got {beta}")));
                }
            }
        }
        match self.epsilon {
            EpsilonMode::Rule { scale } if !(scale >= 0.0 && scale.is_finite()) => {
                return Err(invalid(format!("epsilon scale must be >= 0, got {scale}")));
            }
            EpsilonMode::Explicit { value } if !(value >= 0.0 && value.is_finite()) => {
                return Err(invalid(format!("epsilon must be >= 0, got {value}")));
            }
            _ => {}
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Aggregate for one (grid point, method).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: GridPoint,
    pub method: Method,
    pub trials: usize,
    pub mean_nmse: f64,
    pub ci99: f64,
    pub nonconverged: usize,
    /// More than 1% of the BPDN solves did not converge.
    pub flagged: bool,
    pub per_trial: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Gain used for noise generation or compensation.
    pub alpha: f64,
    pub points: Vec<PointResult>,
}

impl ExperimentResult {
    pub fn flagged(&self) -> bool {
        self.points.iter().any(|p| p.flagged)
    }

    pub fn get(&self, point: GridPoint, method: &str) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.point == point && p.method.name() == method)
    }
}

/// Per-trial inputs shared by all methods.
struct TrialContext {
    alpha: f64,
    sigma_ybar_sq: f64,
}

impl TrialContext {
    fn sigma_q(&self) -> f64 {
        ((1.0 - self.alpha) * self.sigma_ybar_sq).sqrt()
    }

    fn sigma_r(&self) -> f64 {
        (self.alpha * (1.0 - self.alpha) * self.sigma_ybar_sq).sqrt()
    }
}

#[derive(Clone, Copy, Debug)]
struct Outcome {
    nmse: f64,
    converged: bool,
}

/// Runs `f` on a pool with `workers` threads, or the global pool.
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let alpha = match (config.noise, config.noise.design()) {
        (NoiseMode::ArtificialCorrelated { alpha, .. }, _) => alpha,
        (_, Some(design)) => fitted_gain(design, config.noise.bits().unwrap_or(1), config.master_seed)?,
        (_, None) => unreachable!("quantized modes carry a design"),
    };
    with_workers(config.workers, || run_points(config, alpha))?
}

fn run_points(config: &ExperimentConfig, alpha: f64) -> Result<ExperimentResult> {
    // Designs are scale-equivariant, so one unit-variance design serves every trial.
    let quantizer = match config.noise.design() {
        Some(design) => Some(design.design(config.noise.bits().unwrap_or(1), 1.0)?),
        None => None,
    };
    let mut points = Vec::with_capacity(config.grid.len() * config.methods.len());
    for &point in &config.grid {
        let outcomes: Vec<Vec<Outcome>> = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(config, point, alpha, quantizer.as_ref(), t))
            .collect::<Result<_>>()?;
        for (j, method) in config.methods.iter().enumerate() {
            let values: Vec<f64> = outcomes.iter().map(|o| o[j].nmse).collect();
            let nonconverged = outcomes.iter().filter(|o| !o[j].converged).count();
            let (mean_nmse, ci99) = mean_ci99(&values);
            let flagged =
                method.is_bpdn() && nonconverged as f64 > NONCONVERGED_FLAG_FRACTION * config.trials as f64;
            points.push(PointResult {
                point,
                method: *method,
                trials: config.trials,
                mean_nmse,
                ci99,
                nonconverged,
                flagged,
                per_trial: config.retain_trials.then_some(values),
            });
        }
    }
    Ok(ExperimentResult {
        config: config.clone(),
        alpha,
        points,
    })
}

/// `σ_ȳ²` of one trial under the chosen convention.
pub fn signal_power(power: SignalPower, point: GridPoint, ybar: &Array1<f64>) -> f64 {
    match power {
        SignalPower::Ensemble => point.sigma_ybar_sq(),
        SignalPower::Measured => ybar.dot(ybar) / ybar.len() as f64,
    }
}

/// Observed measurements `αȳ + w` with `w ~ N(0, α(1−α)σ_ȳ²)`.
pub fn artificial_observation(inst: &ProblemInstance, ybar: &Array1<f64>, alpha: f64, sigma_ybar_sq: f64) -> Result<Array1<f64>> {
    let spec = NoiseSpec::gain_model(alpha, sigma_ybar_sq)?;
    let mut rng = inst.config.rng(Stream::Noise);
    Ok(apply_correlated_noise(ybar, &spec, &mut rng).observed)
}

/// `σ·Q(ȳ/σ)` for a quantizer designed at unit variance.
fn quantize_scaled(q: &ScalarQuantizer, ybar: &Array1<f64>, sigma: f64) -> Array1<f64> {
    ybar.mapv(|v| sigma * q.quantize_value(v / sigma))
}

fn run_trial(
    config: &ExperimentConfig,
    point: GridPoint,
    alpha: f64,
    quantizer: Option<&ScalarQuantizer>,
    trial: u64,
) -> Result<Vec<Outcome>> {
    let p = point;
    let inst = ProblemInstance::generate(InstanceConfig::new(p.n, p.m, p.k, config.master_seed, trial)?)?;
    let a = inst.ensemble.system_matrix();
    let x = inst.signal.values();
    let truth = x.as_slice().expect("contiguous");
    let ybar = a.dot(x);
    let ctx = TrialContext {
        alpha,
        sigma_ybar_sq: signal_power(config.power, p, &ybar),
    };
    if !(ctx.sigma_ybar_sq > 0.0) {
        return Err(invalid("noiseless measurements have zero power"));
    }
    let y = match quantizer {
        Some(q) => quantize_scaled(q, &ybar, ctx.sigma_ybar_sq.sqrt()),
        None => artificial_observation(&inst, &ybar, alpha, ctx.sigma_ybar_sq)?,
    };

    let epsilon = |sigma: f64| match config.epsilon {
        EpsilonMode::Rule { scale } => scale * bpdn::epsilon_rule(p.m, sigma),
        EpsilonMode::Explicit { value } => value,
    };
    // One plain solve per distinct radius, shared by the post-scaled methods.
    let mut plain: Vec<(f64, SolverReport)> = Vec::new();
    let mut solve_plain = |eps: f64| -> Result<SolverReport> {
        if let Some((_, r)) = plain.iter().find(|(e, _)| *e == eps) {
            return Ok(r.clone());
        }
        let r = bpdn::solve_bpdn_with(&BpdnProblem::new(a.view(), y.view(), eps)?, &config.solver)?;
        plain.push((eps, r.clone()));
        Ok(r)
    };

    let mut out = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let (estimate, converged, reference) = match *method {
            Method::Bpdn => {
                let r = solve_plain(epsilon(ctx.sigma_q()))?;
                (r.solution, r.converged, None)
            }
            Method::BpdnScale => {
                let r = bpdn::rescale(solve_plain(epsilon(ctx.sigma_r()))?, alpha);
                (r.solution, r.converged, None)
            }
            Method::BpdnBeta { beta } => {
                let r = bpdn::rescale(solve_plain(epsilon(ctx.sigma_r()))?, beta);
                (r.solution, r.converged, None)
            }
            Method::BpdnScaleMatrix => {
                let prob = BpdnProblem::new(a.view(), y.view(), epsilon(ctx.sigma_r()))?;
                let r = bpdn::solve_scaled_matrix_with(&prob, alpha, &config.solver)?;
                (r.solution, r.converged, None)
            }
            Method::Biht => {
                let signs = biht::sign_vector(ybar.view());
                let mut prob = BihtProblem::new(a.view(), signs.view(), p.k)?;
                prob.max_iterations = config.biht_max_iterations;
                let r = biht::solve_biht(&prob)?;
                (r.solution, r.converged, Some(inst.signal.normalized()))
            }
        };
        let e = estimate.as_slice().expect("contiguous");
        let value = match &reference {
            Some(unit) => nmse(e, unit.values().as_slice().expect("contiguous"))?,
            None => nmse(e, truth)?,
        };
        out.push(Outcome { nmse: value, converged });
    }
    Ok(out)
}
