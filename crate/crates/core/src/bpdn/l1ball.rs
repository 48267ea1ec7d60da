//! Euclidean projection onto the ℓ1 ball `{z : ‖z‖₁ ≤ τ}` by the sort-based
//! exact algorithm (soft thresholding at the level that makes `‖z‖₁ = τ`).

/// Projects `v` onto the ℓ1 ball of radius `tau`, writing into `out`.
/// `scratch` is reused across calls to avoid reallocating the sort buffer.
pub(crate) fn project_into(v: &[f64], tau: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
    debug_assert_eq!(v.len(), out.len());
    if tau <= 0.0 {
        out.fill(0.0);
        return;
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= tau {
        out.copy_from_slice(v);
        return;
    }
    let theta = threshold(v, tau, scratch);
    for (o, &x) in out.iter_mut().zip(v) {
        let mag = x.abs() - theta;
        *o = if mag > 0.0 { mag.copysign(x) } else { 0.0 };
    }
}

/// Soft-threshold level θ with `Σ max(|v_i| − θ, 0) = τ`, assuming `‖v‖₁ > τ`.
fn threshold(v: &[f64], tau: f64, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(v.iter().map(|x| x.abs()).filter(|x| *x > 0.0));
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - tau) / (j + 1) as f64;
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

/// Projection of `v` onto the ℓ1 ball of radius `tau`.
pub fn project_l1_ball(v: &[f64], tau: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    project_into(v, tau, &mut out, &mut Vec::new());
    out
}
