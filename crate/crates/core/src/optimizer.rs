//! Nelder-Mead simplex search over `(β, ε)`.
//!
//! The objective is treated as a black box. Stochastic objectives must fix
//! their random numbers so that repeated calls at one point agree.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Offset from a lower bound at which out-of-range vertices are placed.
pub const BOUNDARY_OFFSET: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub init_point: [f64; 2],
    /// Relative size of the initial simplex per coordinate; used as an
    /// absolute offset for coordinates equal to zero.
    pub init_spread: f64,
    /// Stop once the simplex diameter falls below `tol · max(1, ‖best‖∞)`.
    pub tol: f64,
    pub max_evals: usize,
    /// Coordinates are kept at or above these bounds (plus
    /// [`BOUNDARY_OFFSET`] when a vertex is moved onto one).
    pub lower_bounds: [f64; 2],
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            init_point: [0.0, 0.0],
            init_spread: 0.2,
            tol: 1e-3,
            max_evals: 200,
            lower_bounds: [f64::NEG_INFINITY; 2],
        }
    }
}

impl SimplexConfig {
    /// Search over `β > 0`, `ε ≥ 0` starting from `(β₀, ε₀)`.
    pub fn beta_epsilon(beta0: f64, epsilon0: f64) -> Self {
        Self {
            init_point: [beta0, epsilon0],
            lower_bounds: [0.0, 0.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reflection > 0.0) {
            return Err(invalid(format!("reflection must be > 0, got {}", self.reflection)));
        }
        if !(self.expansion > 1.0 && self.expansion > self.reflection) {
            return Err(invalid(format!(
                "expansion must exceed 1 and the reflection coefficient, got {}",
                self.expansion
            )));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(invalid(format!("contraction must lie in (0, 1), got {}", self.contraction)));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(invalid(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.init_spread > 0.0 && self.init_spread.is_finite()) {
            return Err(invalid(format!("init_spread must be positive, got {}", self.init_spread)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_evals < 3 {
            return Err(invalid("max_evals must allow the initial simplex (>= 3)"));
        }
        if self.init_point.iter().any(|v| !v.is_finite()) {
            return Err(invalid("init_point must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexResult {
    pub point: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// Diameter criterion met before the evaluation budget ran out.
    pub converged: bool,
    /// Best value after the initial simplex and after every iteration.
    pub best_history: Vec<f64>,
}

struct Evaluator<'f, F> {
    objective: &'f mut F,
    lower: [f64; 2],
    evaluations: usize,
}

impl<F: FnMut(f64, f64) -> f64> Evaluator<'_, F> {
    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        let mut q = p;
        for (v, lb) in q.iter_mut().zip(self.lower) {
            if *v <= lb {
                *v = lb + BOUNDARY_OFFSET;
            }
        }
        q
    }

    /// Non-finite values after the start are ranked worst.
    fn eval(&mut self, p: [f64; 2]) -> f64 {
        self.evaluations += 1;
        let v = (self.objective)(p[0], p[1]);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

fn lerp(from: [f64; 2], to: [f64; 2], t: f64) -> [f64; 2] {
    [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
}

/// Minimizes `objective(β, ε)`.
pub fn minimize<F: FnMut(f64, f64) -> f64>(mut objective: F, config: &SimplexConfig) -> Result<SimplexResult> {
    config.validate()?;
    let mut ev = Evaluator {
        objective: &mut objective,
        lower: config.lower_bounds,
        evaluations: 0,
    };

    let x0 = ev.clamp(config.init_point);
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for i in 0..3 {
        let mut p = x0;
        if i > 0 {
            let c = i - 1;
            let h = if p[c] == 0.0 {
                config.init_spread
            } else {
                config.init_spread * p[c]
            };
            p[c] += h;
            p = ev.clamp(p);
        }
        ev.evaluations += 1;
        let v = (ev.objective)(p[0], p[1]);
        if !v.is_finite() {
            return Err(invalid(format!(
                "objective is not finite at initial vertex ({}, {}): {v}",
                p[0], p[1]
            )));
        }
        simplex.push((p, v));
    }

    let by_value = |a: &([f64; 2], f64), b: &([f64; 2], f64)| a.1.total_cmp(&b.1);
    simplex.sort_by(by_value);
    let mut best_history = vec![simplex[0].1];
    let mut iterations = 0usize;
    let mut converged = false;

    loop {
        let best = simplex[0].0;
        let scale = best[0].abs().max(best[1].abs()).max(1.0);
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| (p[0] - best[0]).abs().max((p[1] - best[1]).abs()))
            .fold(0.0f64, f64::max);
        if diameter < config.tol * scale {
            converged = true;
            break;
        }
        if ev.evaluations >= config.max_evals {
            break;
        }

        let (worst, f_worst) = simplex[2];
        let f_best = simplex[0].1;
        let f_second = simplex[1].1;
        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);

        let xr = ev.clamp(lerp(centroid, worst, -config.reflection));
        let fr = ev.eval(xr);
        let mut replacement = None;
        if fr < f_best {
            let xe = ev.clamp(lerp(centroid, worst, -config.reflection * config.expansion));
            let fe = ev.eval(xe);
            replacement = Some(if fe < fr { (xe, fe) } else { (xr, fr) });
        } else if fr < f_second {
            replacement = Some((xr, fr));
        } else if fr < f_worst {
            let xc = ev.clamp(lerp(centroid, xr, config.contraction));
            let fc = ev.eval(xc);
            if fc <= fr {
                replacement = Some((xc, fc));
            }
        } else {
            let xc = ev.clamp(lerp(centroid, worst, config.contraction));
            let fc = ev.eval(xc);
            if fc < f_worst {
                replacement = Some((xc, fc));
            }
        }

        match replacement {
            Some(v) => simplex[2] = v,
            None => {
                let anchor = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let p = ev.clamp(lerp(anchor, vertex.0, config.shrink));
                    *vertex = (p, ev.eval(p));
                }
            }
        }
        simplex.sort_by(by_value);
        iterations += 1;
        best_history.push(simplex[0].1);
    }

    let (point, value) = simplex[0];
    Ok(SimplexResult {
        point,
        value,
        evaluations: ev.evaluations,
        iterations,
        converged,
        best_history,
    })
}
