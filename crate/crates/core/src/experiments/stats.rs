//! Error figures and trial aggregation.

use crate::error::{invalid, Error, Result};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.5758;

/// `‖estimate − truth‖₂² / ‖truth‖₂²`.
pub fn nmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "estimate length vs truth length",
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    let energy: f64 = truth.iter().map(|t| t * t).sum();
    if !(energy > 0.0) {
        return Err(invalid("truth vector has zero norm"));
    }
    let err: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok(err / energy)
}

/// `10·log₁₀(p_baseline / p_method)`.
pub fn improvement_db(p_baseline: f64, p_method: f64) -> Result<f64> {
    if !(p_baseline > 0.0 && p_method > 0.0) {
        return Err(invalid(format!(
            "error figures must be positive, got {p_baseline} and {p_method}"
        )));
    }
    Ok(10.0 * (p_baseline / p_method).log10())
}

/// Sum with a fixed binary tree, so the result depends only on the order
/// of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean and 99% half-width `Z99 · s / √T` with the `T − 1` sample
/// deviation. The half-width is NaN for a single trial.
pub fn mean_ci99(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = pairwise_sum(values) / t;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let sd = (pairwise_sum(&dev) / (t - 1.0)).sqrt();
    (mean, Z99 * sd / t.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nmse_examples() {
        assert_eq!(nmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(nmse(&[0.5, 0.0], &[1.0, 0.0]).unwrap(), 0.25);
        assert_eq!(nmse(&[0.0, 0.0, 0.0], &[0.3, -2.0, 1.0]).unwrap(), 1.0);
        assert!(nmse(&[1.0], &[0.0]).is_err());
        assert!(nmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_db(0.3, 0.3).unwrap(), 0.0);
        assert!((improvement_db(1.0, 0.1).unwrap() - 10.0).abs() < 1e-12);
        let v = improvement_db(0.29, 0.1212).unwrap();
        assert!((v - 10.0 * (0.29f64 / 0.1212).log10()).abs() < 1e-12);
        assert!((v - 3.79).abs() < 0.005);
        assert!(improvement_db(0.0, 1.0).is_err());
        assert!(improvement_db(1.0, -1.0).is_err());
    }

    #[test]
    fn ci_matches_textbook_formula() {
        let v = [0.1, 0.4, 0.2, 0.3];
        let (mean, hw) = mean_ci99(&v);
        assert!((mean - 0.25).abs() < 1e-15);
        let sd = ((0.0225 + 0.0225 + 0.0025 + 0.0025) / 3.0f64).sqrt();
        assert!((hw - 2.5758 * sd / 2.0).abs() < 1e-15);
        assert!(mean_ci99(&[1.0]).1.is_nan());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }
}
