//! Empirical search for the scaling factor `β` and radius `ε` that minimize
//! the mean NMSE of `x̂ = x_ε / β` under artificial correlated noise.
//!
//! The radius is searched as a multiple `s` of each trial's rule radius
//! `ε_t = √(M + 2√(2M))·σ_r`, so `s = 1` reproduces `bpdn-scale`.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{artificial_observation, pairwise_sum, signal_power, with_workers, GridPoint, SignalPower};
use crate::bpdn::{self, BpdnProblem, SpgOptions};
use crate::error::{invalid, Result};
use crate::optimizer::{minimize, SimplexConfig};
use crate::siggen::{InstanceConfig, ProblemInstance};
use crate::Error;

struct Trial {
    a: Array2<f64>,
    x: Array1<f64>,
    y: Array1<f64>,
    epsilon_rule: f64,
}

/// Mean NMSE over a fixed set of trials, so repeated evaluations at one
/// `(β, s)` agree exactly. Trials match those of `run_experiment` with
/// artificial noise of gain `alpha` and the same master seed and power.
pub struct BetaEpsilonObjective {
    point: GridPoint,
    alpha: f64,
    solver: SpgOptions,
    trials: Vec<Trial>,
    evaluations: usize,
}

impl BetaEpsilonObjective {
    pub fn new(
        point: GridPoint,
        alpha: f64,
        trials: usize,
        master_seed: u64,
        power: SignalPower,
        solver: SpgOptions,
    ) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let trials = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let inst = ProblemInstance::generate(InstanceConfig::new(point.n, point.m, point.k, master_seed, t)?)?;
                let a = inst.ensemble.system_matrix().clone();
                let x = inst.signal.values().clone();
                let ybar = a.dot(&x);
                let sy2 = signal_power(power, point, &ybar);
                let y = artificial_observation(&inst, &ybar, alpha, sy2)?;
                let epsilon_rule = bpdn::epsilon_rule(point.m, (alpha * (1.0 - alpha) * sy2).sqrt());
                Ok(Trial { a, x, y, epsilon_rule })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            point,
            alpha,
            solver,
            trials,
            evaluations: 0,
        })
    }

    pub fn point(&self) -> GridPoint {
        self.point
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Rule radius of each trial.
    pub fn epsilon_rule(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.epsilon_rule).collect()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Mean NMSE with `ε_t = epsilon_scale · ε_rule,t`.
    pub fn evaluate(&mut self, beta: f64, epsilon_scale: f64) -> Result<f64> {
        let values = self.evaluate_trials(beta, epsilon_scale)?;
        Ok(pairwise_sum(&values) / values.len() as f64)
    }

    /// Per-trial NMSE in trial order.
    pub fn evaluate_trials(&mut self, beta: f64, epsilon_scale: f64) -> Result<Vec<f64>> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        if !(epsilon_scale >= 0.0 && epsilon_scale.is_finite()) {
            return Err(invalid(format!("epsilon scale must be >= 0, got {epsilon_scale}")));
        }
        self.evaluations += 1;
        let solver = self.solver;
        self.trials
            .par_iter()
            .map(|t| {
                let eps = epsilon_scale * t.epsilon_rule;
                let r = bpdn::solve_bpdn_with(&BpdnProblem::new(t.a.view(), t.y.view(), eps)?, &solver)?;
                let e = bpdn::rescale(r, beta).solution;
                super::nmse(e.as_slice().expect("contiguous"), t.x.as_slice().expect("contiguous"))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEpsilonStudy {
    pub point: GridPoint,
    pub trials: usize,
    pub alpha: f64,
    /// Mean NMSE at `(α, ε_rule)`.
    pub p_alpha: f64,
    pub beta: f64,
    /// Optimized `ε / ε_rule`.
    pub epsilon_ratio: f64,
    /// Mean NMSE at the optimized `(β, ε)`.
    pub p_opt: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl BetaEpsilonStudy {
    pub fn beta_ratio(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// Runs the simplex search over `(β, ε/ε_rule)` from `(α, 1)`. `simplex`
/// overrides the default search configuration; its start point and bounds
/// are always replaced.
pub fn optimize_beta_epsilon(
    objective: &mut BetaEpsilonObjective,
    simplex: Option<SimplexConfig>,
    workers: Option<usize>,
) -> Result<BetaEpsilonStudy> {
    let alpha = objective.alpha;
    let mut cfg = simplex.unwrap_or_else(|| SimplexConfig::beta_epsilon(alpha, 1.0));
    cfg.init_point = [alpha, 1.0];
    cfg.lower_bounds = [0.0, 0.0];
    with_workers(workers, || {
        let p_alpha = objective.evaluate(alpha, 1.0)?;
        let mut failure: Option<Error> = None;
        let result = minimize(
            |b, e| match objective.evaluate(b, e) {
                Ok(v) => v,
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            },
            &cfg,
        );
        if let Some(err) = failure {
            return Err(err);
        }
        let result = result?;
        Ok(BetaEpsilonStudy {
            point: objective.point,
            trials: objective.trials.len(),
            alpha,
            p_alpha,
            beta: result.point[0],
            epsilon_ratio: result.point[1],
            p_opt: result.value,
            evaluations: result.evaluations,
            converged: result.converged,
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_experiment, ExperimentConfig, Method, NoiseMode};

    #[test]
    fn matches_harness_at_alpha() {
        let point = GridPoint::new(80, 40, 3).unwrap();
        let mut obj = BetaEpsilonObjective::new(point, 0.7, 5, 11, SignalPower::Measured, SpgOptions::default()).unwrap();
        let p = obj.evaluate(0.7, 1.0).unwrap();
        assert_eq!(p, obj.evaluate(0.7, 1.0).unwrap());
        let cfg = ExperimentConfig::new(
            vec![point],
            5,
            NoiseMode::ArtificialCorrelated {
                alpha: 0.7,
                bits: None,
            },
            vec![Method::BpdnScale],
            11,
        );
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.points[0].mean_nmse, p);
        assert!(obj.evaluate(0.0, 1.0).is_err());
    }

    #[test]
    fn search_does_not_worsen_start() {
        let point = GridPoint::new(60, 30, 2).unwrap();
        let mut obj = BetaEpsilonObjective::new(point, 0.64, 4, 5, SignalPower::Ensemble, SpgOptions::default()).unwrap();
        let rule = obj.epsilon_rule();
        assert!(rule.windows(2).all(|w| w[0] == w[1]));
        let cfg = SimplexConfig {
            max_evals: 30,
            ..SimplexConfig::default()
        };
        let s = optimize_beta_epsilon(&mut obj, Some(cfg), Some(1)).unwrap();
        assert!(s.p_opt <= s.p_alpha);
        assert!(s.beta > 0.0 && s.epsilon_ratio >= 0.0);
        assert_eq!(obj.evaluations(), s.evaluations + 1);
    }
}
