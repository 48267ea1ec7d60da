//! Active-set finish for BPDN.
//!
//! On a support `S` with signs `s` and an active constraint, the optimality
//! conditions `A_Sᵀ r = μ s`, `‖r‖₂ = ε` have the closed-form solution
//! `z_S = z_LS − μ G⁻¹ s` with `G = A_SᵀA_S`, `μ² = (ε² − ‖r_LS‖²) / sᵀG⁻¹s`.
//! The point is optimal once the signs agree and `|A_jᵀ r| ≤ μ` off `S`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{norm2, norm_inf, DenseOp};

/// Relative slack on the off-support dual constraint.
const DUAL_SLACK: f64 = 1e-9;
const MAX_ROUNDS: usize = 40;
/// Entries below this fraction of the largest are treated as zero.
const SUPPORT_CUT: f64 = 1e-9;

/// Returns the certified minimizer. Starts from the support and signs of `x` and swaps single indices in or
/// out until the optimality conditions hold. Returns `None` when the active
/// set degenerates (rank loss, inactive constraint) or the round budget runs
/// out.
pub(crate) fn polish(op: &DenseOp, b: &[f64], sigma: f64, x: &[f64]) -> Option<Vec<f64>> {
    let m = op.rows();
    let n = op.cols();
    let scale = norm_inf(x);
    if scale == 0.0 {
        return None;
    }
    // Largest entries first, at most M of them; the active-set rounds
    // repair a wrong guess.
    let mut order: Vec<usize> = (0..n).filter(|&j| x[j].abs() > SUPPORT_CUT * scale).collect();
    order.sort_by(|&p, &q| x[q].abs().total_cmp(&x[p].abs()).then(p.cmp(&q)));
    order.truncate(m);
    order.sort_unstable();
    let mut support: Vec<(usize, f64)> = order.into_iter().map(|j| (j, x[j].signum())).collect();
    let b_vec = DVector::from_column_slice(b);
    let mut r = vec![0.0; m];
    let mut corr = vec![0.0; n];
    let max_rounds = MAX_ROUNDS.min(2 * m + 10);

    for _ in 0..max_rounds {
        let k = support.len();
        if k == 0 || k > m {
            return None;
        }
        let a_s = DMatrix::from_fn(m, k, |i, c| op.entry(i, support[c].0));
        let chol = (a_s.transpose() * &a_s).cholesky()?;
        let signs = DVector::from_iterator(k, support.iter().map(|&(_, s)| s));
        let x_ls = chol.solve(&(a_s.transpose() * &b_vec));
        let w = chol.solve(&signs);
        let r_ls = &b_vec - &a_s * &x_ls;
        let slack = sigma * sigma - r_ls.norm_squared();
        let q = signs.dot(&w);
        if !(q > 0.0) {
            return None;
        }
        if slack <= 0.0 {
            // Constraint unreachable on S: enlarge S along the residual.
            r.copy_from_slice(r_ls.as_slice());
            op.apply_t(&r, &mut corr);
            let j = best_outside(&support, &corr)?;
            insert(&mut support, j, corr[j].signum());
            continue;
        }
        let mu = (slack / q).sqrt();
        let x_s = &x_ls - &w * mu;

        // Sign flips: drop the entry that crossed zero first along the path.
        let flipped = support
            .iter()
            .enumerate()
            .filter(|(c, (_, s))| x_s[*c] * s <= 0.0)
            .map(|(c, _)| c)
            .max_by(|&p, &q| {
                let dp = (x_s[p] * support[p].1).abs() / x_ls[p].abs().max(f64::MIN_POSITIVE);
                let dq = (x_s[q] * support[q].1).abs() / x_ls[q].abs().max(f64::MIN_POSITIVE);
                dp.total_cmp(&dq)
            });
        if let Some(c) = flipped {
            support.remove(c);
            continue;
        }

        let res = &b_vec - &a_s * &x_s;
        r.copy_from_slice(res.as_slice());
        op.apply_t(&r, &mut corr);
        match best_outside(&support, &corr) {
            Some(j) if corr[j].abs() > mu * (1.0 + DUAL_SLACK) => {
                let sign = corr[j].signum();
                if k == m {
                    // Full support: pivot j in and the first entry that its
                    // column drives to zero out.
                    let a_j = DVector::from_fn(m, |i, _| op.entry(i, j) * sign);
                    let dir = chol.solve(&(a_s.transpose() * a_j));
                    let leave = (0..k)
                        .filter(|&c| dir[c] * x_s[c] > 0.0)
                        .min_by(|&p, &q| (x_s[p] / dir[p]).total_cmp(&(x_s[q] / dir[q])))?;
                    support.remove(leave);
                }
                insert(&mut support, j, sign);
            }
            _ => {
                let mut out = vec![0.0; n];
                for (c, &(j, _)) in support.iter().enumerate() {
                    out[j] = x_s[c];
                }
                if norm2(&r) > sigma * (1.0 + 1e-8) + 1e-14 * b_vec.norm() {
                    return None;
                }
                return Some(out);
            }
        }
    }
    None
}

fn best_outside(support: &[(usize, f64)], corr: &[f64]) -> Option<usize> {
    let mut in_support = vec![false; corr.len()];
    support.iter().for_each(|&(j, _)| in_support[j] = true);
    (0..corr.len())
        .filter(|&j| !in_support[j])
        .max_by(|&p, &q| corr[p].abs().total_cmp(&corr[q].abs()))
}

fn insert(support: &mut Vec<(usize, f64)>, j: usize, sign: f64) {
    let pos = support.partition_point(|&(i, _)| i < j);
    support.insert(pos, (j, sign));
}
