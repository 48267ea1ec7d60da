//! Phase-space sweeps over `δ = M/N` and `ρ = K/M`.

use serde::{Deserialize, Serialize};

use super::io::ResultRow;
use super::{
    fitted_gain, run_points, with_workers, ExperimentConfig, GridPoint, Method, NoiseMode, PointResult, SignalPower,
};
use crate::bpdn::SpgOptions;
use crate::error::{invalid, Result};
use crate::quantizer::QuantizerDesign;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepConfig {
    pub n: usize,
    pub delta_step: f64,
    pub rho_step: f64,
    pub trials: usize,
    /// Any of `bpdn-scale` and `biht`.
    pub methods: Vec<Method>,
    /// A column stops after the first cell whose mean NMSE exceeds this.
    pub nmse_cutoff: f64,
    pub master_seed: u64,
    /// Restrict the sweep to these `δ` columns (multiples of `delta_step`).
    pub deltas: Option<Vec<f64>>,
    pub power: SignalPower,
    pub workers: Option<usize>,
    pub solver: SpgOptions,
}

impl PhaseSweepConfig {
    /// `N = 256`, steps of 0.05, 100 trials, cutoff 1.
    pub fn desk(master_seed: u64) -> Self {
        Self {
            n: 256,
            delta_step: 0.05,
            rho_step: 0.05,
            trials: 100,
            methods: vec![Method::BpdnScale, Method::Biht],
            nmse_cutoff: 1.0,
            master_seed,
            deltas: None,
            power: SignalPower::default(),
            workers: None,
            solver: SpgOptions::default(),
        }
    }

    /// `N = 1000`, steps of 0.01, 1000 trials, cutoff 1.
    pub fn paper(master_seed: u64) -> Self {
        Self {
            n: 1000,
            delta_step: 0.01,
            rho_step: 0.01,
            trials: 1000,
            ..Self::desk(master_seed)
        }
    }

    fn steps(step: f64, what: &str) -> Result<usize> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(invalid(format!("{what} must lie in (0, 1], got {step}")));
        }
        let count = (1.0 / step).round();
        if ((count * step) - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("{what} {step} does not divide 1")));
        }
        Ok(count as usize)
    }

    pub fn validate(&self) -> Result<()> {
        Self::steps(self.delta_step, "delta_step")?;
        Self::steps(self.rho_step, "rho_step")?;
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.nmse_cutoff > 0.0) {
            return Err(invalid(format!("nmse_cutoff must be positive, got {}", self.nmse_cutoff)));
        }
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods selected"));
        }
        if let Some(m) = self
            .methods
            .iter()
            .find(|m| !matches!(m, Method::BpdnScale | Method::Biht))
        {
            return Err(invalid(format!("phase sweeps support bpdn-scale and biht, not {}", m.name())));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        Ok(())
    }

    /// `δ` columns as step indices.
    fn columns(&self) -> Result<Vec<usize>> {
        let count = Self::steps(self.delta_step, "delta_step")?;
        match &self.deltas {
            None => Ok((1..=count).collect()),
            Some(list) => list
                .iter()
                .map(|&d| {
                    let j = (d / self.delta_step).round();
                    if j < 1.0 || j > count as f64 || (j * self.delta_step - d).abs() > 1e-9 {
                        Err(invalid(format!("delta {d} is not a multiple of {} in (0, 1]", self.delta_step)))
                    } else {
                        Ok(j as usize)
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub delta: f64,
    pub rho: f64,
    pub result: PointResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepResult {
    pub config: PhaseSweepConfig,
    /// Gain of the 1-bit Lloyd-Max quantizer used by `bpdn-scale`.
    pub alpha: f64,
    pub cells: Vec<PhaseCell>,
}

impl PhaseSweepResult {
    pub fn flagged(&self) -> bool {
        self.cells.iter().any(|c| c.result.flagged)
    }

    pub fn cell(&self, delta: f64, rho: f64, method: &str) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| {
            (c.delta - delta).abs() < 1e-9 && (c.rho - rho).abs() < 1e-9 && c.result.method.name() == method
        })
    }

    /// CSV rows; `delta` and `rho` are the nominal cell coordinates.
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells
            .iter()
            .map(|c| {
                let noise = match c.result.method {
                    Method::Biht => "sign",
                    _ => "lloyd-max",
                };
                ResultRow {
                    delta: c.delta,
                    rho: c.rho,
                    ..ResultRow::from_point(&c.result, noise, Some(1))
                }
            })
            .collect()
    }
}

pub fn run_phase_sweep(config: &PhaseSweepConfig) -> Result<PhaseSweepResult> {
    config.validate()?;
    let columns = config.columns()?;
    let rho_count = PhaseSweepConfig::steps(config.rho_step, "rho_step")?;
    let alpha = fitted_gain(QuantizerDesign::LloydMax, 1, config.master_seed)?;
    with_workers(config.workers, || {
        let mut cells = Vec::new();
        for &j in &columns {
            let delta = j as f64 * config.delta_step;
            let m = ((delta * config.n as f64).round() as usize).clamp(1, config.n);
            for method in &config.methods {
                for i in 1..=rho_count {
                    let rho = i as f64 * config.rho_step;
                    let k = (rho * m as f64).round() as usize;
                    if k < 1 {
                        continue;
                    }
                    let mut exp = ExperimentConfig::new(
                        vec![GridPoint { n: config.n, m, k }],
                        config.trials,
                        NoiseMode::LloydMaxQuantized { bits: 1 },
                        vec![*method],
                        config.master_seed,
                    );
                    exp.solver = config.solver;
                    exp.power = config.power;
                    exp.validate()?;
                    let result = run_points(&exp, alpha)?.points.remove(0);
                    let stop = result.mean_nmse > config.nmse_cutoff;
                    cells.push(PhaseCell { delta, rho, result });
                    if stop {
                        break;
                    }
                }
            }
        }
        Ok(PhaseSweepResult {
            config: config.clone(),
            alpha,
            cells,
        })
    })?
}
