//! Basis pursuit denoising and its gain-compensated variants.
//!
//! * [`solve_bpdn`]: `min ‖z‖₁ s.t. ‖y − A z‖₂ ≤ ε`.
//! * [`solve_scaled_matrix`]: the same with `α·A` in the constraint.
//! * [`solve_post_scaled`]: plain BPDN followed by division by `β`; with
//!   `β = α` this is the gain-compensated estimate.
//!
//! Minimizers are in general not unique, so the pre- and post-scaled routes
//! agree in accuracy rather than iterate by iterate.

mod l1ball;
mod polish;
mod spgl1;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, DenseOp};

pub use l1ball::project_l1_ball;
pub use spgl1::{SpgOptions, RESIDUAL_SLACK};

/// `min ‖z‖₁ s.t. ‖y − A z‖₂ ≤ ε`.
#[derive(Clone, Copy, Debug)]
pub struct BpdnProblem<'a> {
    pub system_matrix: ArrayView2<'a, f64>,
    pub observed: ArrayView1<'a, f64>,
    pub epsilon: f64,
}

impl<'a> BpdnProblem<'a> {
    pub fn new(system_matrix: ArrayView2<'a, f64>, observed: ArrayView1<'a, f64>, epsilon: f64) -> Result<Self> {
        let p = Self {
            system_matrix,
            observed,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.system_matrix.nrows() != self.observed.len() {
            return Err(Error::DimensionMismatch {
                what: "observed length vs system matrix rows",
                expected: self.system_matrix.nrows(),
                got: self.observed.len(),
            });
        }
        if self.system_matrix.ncols() == 0 {
            return Err(invalid("system matrix has no columns"));
        }
        Ok(())
    }
}

/// Outcome of one reconstruction.
///
/// `residual_norm` is measured against the gain-compensated model: for a
/// solution `x̂` produced with gain `g` (1 for plain BPDN, `α` for the scaled
/// matrix, `β` for the post-scaled estimate) it is `‖y − g·A·x̂‖₂`, which is
/// the quantity the ε constraint bounds. BIHT reports use the sign residual
/// instead; see [`crate::biht::solve_biht`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solution: Array1<f64>,
    pub residual_norm: f64,
    pub l1_norm: f64,
    pub iterations: usize,
    pub matvecs: usize,
    pub converged: bool,
}

/// `ε = √(M + 2√(2M)) · σ`.
pub fn epsilon_rule(m: usize, sigma: f64) -> f64 {
    let m = m as f64;
    (m + 2.0 * (2.0 * m).sqrt()).sqrt() * sigma
}

fn run(problem: &BpdnProblem, gain: f64, opts: &SpgOptions) -> Result<SolverReport> {
    problem.validate()?;
    let owned;
    let a = if problem.system_matrix.is_standard_layout() {
        problem.system_matrix
    } else {
        owned = problem.system_matrix.as_standard_layout().into_owned();
        owned.view()
    };
    let y_owned;
    let y = match problem.observed.as_slice() {
        Some(s) => s,
        None => {
            y_owned = problem.observed.to_vec();
            &y_owned
        }
    };
    let op = DenseOp::new(a, gain);
    Ok(spgl1::solve(&op, y, problem.epsilon, opts))
}

pub fn solve_bpdn(problem: &BpdnProblem) -> Result<SolverReport> {
    solve_bpdn_with(problem, &SpgOptions::default())
}

pub fn solve_bpdn_with(problem: &BpdnProblem, opts: &SpgOptions) -> Result<SolverReport> {
    run(problem, 1.0, opts)
}

/// BPDN with the constraint `‖y − α·A·z‖₂ ≤ ε`.
pub fn solve_scaled_matrix(problem: &BpdnProblem, alpha: f64) -> Result<SolverReport> {
    solve_scaled_matrix_with(problem, alpha, &SpgOptions::default())
}

pub fn solve_scaled_matrix_with(problem: &BpdnProblem, alpha: f64, opts: &SpgOptions) -> Result<SolverReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    run(problem, alpha, opts)
}

/// Plain BPDN, then the estimate divided by `beta`.
pub fn solve_post_scaled(problem: &BpdnProblem, beta: f64) -> Result<SolverReport> {
    solve_post_scaled_with(problem, beta, &SpgOptions::default())
}

pub fn solve_post_scaled_with(problem: &BpdnProblem, beta: f64, opts: &SpgOptions) -> Result<SolverReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let inner = run(problem, 1.0, opts)?;
    Ok(rescale(inner, beta))
}

/// Divides a plain BPDN report by `beta`. The residual against `β·A` is
/// unchanged, so it is carried over.
pub fn rescale(mut report: SolverReport, beta: f64) -> SolverReport {
    if beta != 1.0 {
        report.solution.mapv_inplace(|v| v / beta);
        report.l1_norm = linalg::norm1(report.solution.as_slice().expect("contiguous"));
    }
    report
}
