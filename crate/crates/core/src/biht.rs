//! Binary iterative hard thresholding for 1-bit measurements.
//!
//! Only signs of `A x` are observed, so amplitude is lost and estimates are
//! returned with unit ℓ2 norm.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::bpdn::SolverReport;
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm1, norm2, DenseOp};

pub const DEFAULT_MAX_ITERATIONS: usize = 300;
pub const DEFAULT_STEP_SIZE: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
pub struct BihtProblem<'a> {
    pub system_matrix: ArrayView2<'a, f64>,
    /// Entries are ±1.
    pub signs: ArrayView1<'a, f64>,
    pub k: usize,
    pub max_iterations: usize,
    pub step_size: f64,
    /// Starting iterate; `x = 0` when absent.
    pub initial: Option<ArrayView1<'a, f64>>,
}

impl<'a> BihtProblem<'a> {
    /// Uses the default iteration cap and unit step.
    pub fn new(system_matrix: ArrayView2<'a, f64>, signs: ArrayView1<'a, f64>, k: usize) -> Result<Self> {
        let p = Self {
            system_matrix,
            signs,
            k,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            step_size: DEFAULT_STEP_SIZE,
            initial: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.system_matrix.dim();
        if self.signs.len() != m {
            return Err(Error::DimensionMismatch {
                what: "signs length vs system matrix rows",
                expected: m,
                got: self.signs.len(),
            });
        }
        if self.k == 0 || self.k > n {
            return Err(invalid(format!("k must lie in 1..={n}, got {}", self.k)));
        }
        if let Some(bad) = self.signs.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(invalid(format!("signs must be +1 or -1, found {bad}")));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid(format!("step size must be positive, got {}", self.step_size)));
        }
        if let Some(x0) = self.initial {
            if x0.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "initial iterate length vs system matrix columns",
                    expected: n,
                    got: x0.len(),
                });
            }
        }
        Ok(())
    }
}

/// `sign` with `sign(0) = +1`.
pub fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Signs of `values` with the zero rule of [`sign`].
pub fn sign_vector(values: ArrayView1<f64>) -> Array1<f64> {
    values.mapv(sign)
}

/// Keeps the `k` largest-magnitude entries; on equal magnitudes the lower
/// index wins.
pub fn hard_threshold(v: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for j in top_k(v, k) {
        out[j] = v[j];
    }
    out
}

fn top_k(v: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(v.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let by_magnitude = |p: &usize, q: &usize| v[*q].abs().total_cmp(&v[*p].abs()).then(p.cmp(q));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_magnitude);
        idx.truncate(k);
    }
    idx
}

/// Number of entries where `sign(A x)` disagrees with `signs`.
pub fn sign_mismatches(system_matrix: ArrayView2<f64>, signs: ArrayView1<f64>, x: ArrayView1<f64>) -> usize {
    system_matrix
        .dot(&x)
        .iter()
        .zip(signs)
        .filter(|(v, s)| sign(**v) != **s)
        .count()
}

/// Runs BIHT from the initial iterate (default `x = 0`).
///
/// The report's `residual_norm` is `‖signs − sign(A x̂)‖₂ = 2√(mismatches)`;
/// `converged` means every sign agrees. Without agreement the iterate with
/// the fewest mismatches is returned.
pub fn solve_biht(problem: &BihtProblem) -> Result<SolverReport> {
    problem.validate()?;
    let owned;
    let a = if problem.system_matrix.is_standard_layout() {
        problem.system_matrix
    } else {
        owned = problem.system_matrix.as_standard_layout().into_owned();
        owned.view()
    };
    let signs = problem.signs.to_vec();
    let (m, n) = a.dim();
    let op = DenseOp::new(a, 1.0);

    let mut x = problem.initial.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut ax = vec![0.0; m];
    let mut diff = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut matvecs = 0usize;
    let mut best: Option<(usize, Vec<f64>)> = None;
    let mut iterations = 0usize;
    let half_step = 0.5 * problem.step_size;

    loop {
        op.apply(&x, &mut ax);
        matvecs += 1;
        let mut mismatches = 0usize;
        for ((d, &s), &v) in diff.iter_mut().zip(&signs).zip(&ax) {
            *d = s - sign(v);
            if *d != 0.0 {
                mismatches += 1;
            }
        }
        // x = 0 maps every measurement to +1 and carries no direction, so it
        // is never kept as the best iterate.
        let nonzero = x.iter().any(|&v| v != 0.0);
        if nonzero && best.as_ref().is_none_or(|(h, _)| mismatches < *h) {
            best = Some((mismatches, x.clone()));
        }
        if (nonzero && mismatches == 0) || iterations >= problem.max_iterations {
            break;
        }
        op.apply_t(&diff, &mut grad);
        matvecs += 1;
        for (g, xi) in grad.iter_mut().zip(&x) {
            *g = xi + half_step * *g;
        }
        x = hard_threshold(&grad, problem.k);
        iterations += 1;
    }

    let (mismatches, mut solution) = best.unwrap_or((m, x));
    let norm = norm2(&solution);
    if norm > 0.0 {
        solution.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(SolverReport {
        residual_norm: 2.0 * (mismatches as f64).sqrt(),
        l1_norm: norm1(&solution),
        solution: solution.into(),
        iterations,
        matvecs,
        converged: mismatches == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(m: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 1.0 / (m as f64).sqrt()).unwrap();
        Array2::from_shape_fn((m, n), |_| d.sample(&mut rng))
    }

    fn sparse_unit(n: usize, support: &[usize], seed: u64) -> Array1<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array1::<f64>::zeros(n);
        for &j in support {
            x[j] = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
        }
        let norm = x.dot(&x).sqrt();
        x / norm
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(hard_threshold(&[3.0, -1.0, 0.5, 2.0], 2), vec![3.0, 0.0, 0.0, 2.0]);
        assert_eq!(hard_threshold(&[3.0, -1.0], 0), vec![0.0, 0.0]);
        assert_eq!(hard_threshold(&[3.0, -1.0, 0.5], 3), vec![3.0, -1.0, 0.5]);
    }

    #[test]
    fn threshold_ties_keep_lowest_index() {
        assert_eq!(hard_threshold(&[1.0, -1.0, 1.0, 0.5], 2), vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(hard_threshold(&[0.0, 2.0, -2.0, 2.0], 1), vec![0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_measurement_counts_as_positive() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
        assert_eq!(sign(-1e-300), -1.0);
    }

    #[test]
    fn rejects_invalid_input() {
        let a = Array2::<f64>::eye(3);
        let s = array![1.0, -1.0, 1.0];
        assert!(BihtProblem::new(a.view(), s.view(), 4).is_err());
        assert!(BihtProblem::new(a.view(), s.view(), 0).is_err());
        let bad = array![1.0, 0.0, 1.0];
        assert!(BihtProblem::new(a.view(), bad.view(), 1).is_err());
        let short = array![1.0, 1.0];
        assert!(BihtProblem::new(a.view(), short.view(), 1).is_err());
    }

    #[test]
    fn recovers_from_abundant_signs() {
        let (n, m) = (1000, 2000);
        let a = gaussian(m, n, 11);
        let x0 = sparse_unit(n, &[3, 150, 420, 777, 901], 12);
        let signs = sign_vector(a.dot(&x0).view());
        let p = BihtProblem::new(a.view(), signs.view(), 5).unwrap();
        let rep = solve_biht(&p).unwrap();
        let err = (&rep.solution - &x0).mapv(|v| v * v).sum();
        assert!(err < 0.01, "nmse {err}");
        assert!((rep.solution.dot(&rep.solution).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn converged_runs_are_sign_consistent() {
        let a = gaussian(200, 100, 5);
        let x0 = sparse_unit(100, &[7, 40], 6);
        let signs = sign_vector(a.dot(&x0).view());
        let p = BihtProblem::new(a.view(), signs.view(), 2).unwrap();
        let rep = solve_biht(&p).unwrap();
        let h = sign_mismatches(a.view(), signs.view(), rep.solution.view());
        assert_eq!(rep.residual_norm, 2.0 * (h as f64).sqrt());
        if rep.converged {
            assert_eq!(h, 0);
        }
        assert!(rep.solution.iter().filter(|v| **v != 0.0).count() <= 2);
    }

    #[test]
    fn invariant_to_positive_matrix_scaling() {
        let a = gaussian(120, 60, 8);
        let x0 = sparse_unit(60, &[1, 30, 59], 9);
        let signs = sign_vector(a.dot(&x0).view());
        let base = solve_biht(&BihtProblem::new(a.view(), signs.view(), 3).unwrap()).unwrap();
        // Scaling A by c with step 1/c² keeps every iterate proportional.
        let c = 4.0;
        let scaled = &a * c;
        let mut p = BihtProblem::new(scaled.view(), signs.view(), 3).unwrap();
        p.step_size = 1.0 / (c * c);
        let rep = solve_biht(&p).unwrap();
        let nm = |s: &Array1<f64>| (s - &x0).mapv(|v| v * v).sum();
        assert!((nm(&base.solution) - nm(&rep.solution)).abs() < 1e-10);
    }

    #[test]
    fn full_budget_is_gradient_descent() {
        // k = N: no entry is ever zeroed by the threshold.
        let v = [0.3, -0.1, 2.0];
        assert_eq!(hard_threshold(&v, 3), v.to_vec());
        let a = gaussian(30, 10, 3);
        let x0 = sparse_unit(10, &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9], 4);
        let signs = sign_vector(a.dot(&x0).view());
        let rep = solve_biht(&BihtProblem::new(a.view(), signs.view(), 10).unwrap()).unwrap();
        assert!((rep.solution.dot(&rep.solution) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_consistent_start_stops_immediately() {
        let a = array![[1.0, 0.0], [1.0, -0.5], [0.0, -1.0]];
        let signs = array![1.0, 1.0, -1.0];
        let x0 = array![3.0, 4.0];
        let mut p = BihtProblem::new(a.view(), signs.view(), 2).unwrap();
        p.initial = Some(x0.view());
        let rep = solve_biht(&p).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.solution, array![0.6, 0.8]);
    }
}
