//! Domain types and the linear signal-correlated noise model
//! `y = α·A·x + w`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Ground-truth sparse vector `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    values: Array1<f64>,
    sparsity: usize,
}

impl SparseSignal {
    /// Wraps a dense vector; the sparsity is the number of nonzero entries.
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("signal length must be at least 1"));
        }
        let sparsity = values.iter().filter(|v| **v != 0.0).count();
        Ok(Self { values, sparsity })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm2(self.values.as_slice().expect("contiguous"))
    }

    /// Copy scaled to unit ℓ2 norm. The zero signal is returned unchanged.
    pub fn normalized(&self) -> Self {
        let nrm = self.norm();
        if nrm == 0.0 {
            return self.clone();
        }
        Self {
            values: &self.values / nrm,
            sparsity: self.sparsity,
        }
    }

    pub fn into_values(self) -> Array1<f64> {
        self.values
    }
}

/// Sparsifying dictionary `Ψ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Dictionary {
    Identity(usize),
    Orthonormal(Array2<f64>),
}

impl Dictionary {
    pub fn dim(&self) -> usize {
        match self {
            Dictionary::Identity(n) => *n,
            Dictionary::Orthonormal(m) => m.nrows(),
        }
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        match self {
            Dictionary::Identity(n) => Array2::eye(*n),
            Dictionary::Orthonormal(m) => m.clone(),
        }
    }
}

/// Measurement matrix `Φ`, dictionary `Ψ` and system matrix `A = ΦΨ`.
#[derive(Clone, Debug)]
pub struct SensingEnsemble {
    measurement: Array2<f64>,
    dictionary: Dictionary,
    // None when Ψ = I, in which case A is Φ itself.
    system: Option<Array2<f64>>,
}

impl SensingEnsemble {
    /// Builds an ensemble with `Ψ = I`.
    pub fn with_identity(measurement: Array2<f64>) -> Result<Self> {
        let (m, n) = measurement.dim();
        if m == 0 || n == 0 || m > n {
            return Err(invalid(format!(
                "measurement matrix must satisfy 1 <= M <= N, got {m}x{n}"
            )));
        }
        Ok(Self {
            measurement: measurement.as_standard_layout().into_owned(),
            dictionary: Dictionary::Identity(n),
            system: None,
        })
    }

    /// Builds `A = ΦΨ` after checking `ΨᵀΨ = I` to within 1e-10.
    pub fn new(measurement: Array2<f64>, dictionary: Array2<f64>) -> Result<Self> {
        let (m, n) = measurement.dim();
        if m == 0 || n == 0 || m > n {
            return Err(invalid(format!(
                "measurement matrix must satisfy 1 <= M <= N, got {m}x{n}"
            )));
        }
        if dictionary.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "dictionary",
                expected: n,
                got: dictionary.nrows(),
            });
        }
        let gram = dictionary.t().dot(&dictionary);
        let off = (&gram - &Array2::<f64>::eye(n))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if off > 1e-10 {
            return Err(invalid(format!(
                "dictionary is not orthonormal (max |ΨᵀΨ - I| = {off:e})"
            )));
        }
        let system = measurement.dot(&dictionary);
        Ok(Self {
            measurement: measurement.as_standard_layout().into_owned(),
            dictionary: Dictionary::Orthonormal(dictionary),
            system: Some(system.as_standard_layout().into_owned()),
        })
    }

    pub fn measurement_matrix(&self) -> &Array2<f64> {
        &self.measurement
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn system_matrix(&self) -> &Array2<f64> {
        self.system.as_ref().unwrap_or(&self.measurement)
    }

    pub fn m(&self) -> usize {
        self.measurement.nrows()
    }

    pub fn n(&self) -> usize {
        self.measurement.ncols()
    }
}

/// Parameters of `y = α·ȳ + w` with `w ~ N(0, σ_w² I)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    alpha: f64,
    sigma_w_sq: f64,
    sigma_ybar_sq: f64,
}

impl NoiseSpec {
    pub fn new(alpha: f64, sigma_w_sq: f64, sigma_ybar_sq: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(sigma_w_sq >= 0.0 && sigma_w_sq.is_finite()) {
            return Err(invalid(format!("sigma_w_sq must be >= 0, got {sigma_w_sq}")));
        }
        if !(sigma_ybar_sq >= 0.0 && sigma_ybar_sq.is_finite()) {
            return Err(invalid(format!(
                "sigma_ybar_sq must be >= 0, got {sigma_ybar_sq}"
            )));
        }
        Ok(Self {
            alpha,
            sigma_w_sq,
            sigma_ybar_sq,
        })
    }

    /// Noise equivalent to a centroid quantizer with gain `alpha`:
    /// `σ_w² = α(1−α)σ_ȳ²`.
    pub fn gain_model(alpha: f64, sigma_ybar_sq: f64) -> Result<Self> {
        Self::new(alpha, alpha * (1.0 - alpha) * sigma_ybar_sq, sigma_ybar_sq)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_w_sq(&self) -> f64 {
        self.sigma_w_sq
    }

    pub fn sigma_ybar_sq(&self) -> f64 {
        self.sigma_ybar_sq
    }
}

/// Observed measurements `y`, optionally with the noiseless `ȳ = Ax`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub observed: Array1<f64>,
    pub noiseless: Option<Array1<f64>>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    /// Total additive noise `n = y − ȳ`, when `ȳ` was retained.
    pub fn noise(&self) -> Option<Array1<f64>> {
        self.noiseless.as_ref().map(|ybar| &self.observed - ybar)
    }
}

/// `ȳ = A·x`.
pub fn measure_noiseless(signal: &SparseSignal, ensemble: &SensingEnsemble) -> Result<Array1<f64>> {
    if signal.len() != ensemble.n() {
        return Err(Error::DimensionMismatch {
            what: "signal length vs ensemble columns",
            expected: ensemble.n(),
            got: signal.len(),
        });
    }
    let a = ensemble.system_matrix();
    let op = linalg::DenseOp::new(a.view(), 1.0);
    let mut out = Array1::zeros(ensemble.m());
    op.apply(
        signal.values().as_slice().expect("contiguous"),
        out.as_slice_mut().expect("contiguous"),
    );
    Ok(out)
}

/// Draws `y = α·ȳ + w`, `w` i.i.d. Gaussian with variance `σ_w²`.
pub fn apply_correlated_noise<R: Rng + ?Sized>(
    noiseless: &Array1<f64>,
    spec: &NoiseSpec,
    rng: &mut R,
) -> MeasurementSet {
    let sd = spec.sigma_w_sq.sqrt();
    let observed = noiseless.mapv(|v| {
        let w: f64 = rng.sample(StandardNormal);
        spec.alpha * v + sd * w
    });
    MeasurementSet {
        observed,
        noiseless: Some(noiseless.clone()),
    }
}

/// Per-entry variance of `n = y − ȳ`: `(α−1)²σ_ȳ² + σ_w²`.
pub fn correlated_noise_variance(spec: &NoiseSpec) -> f64 {
    let d = spec.alpha - 1.0;
    d * d * spec.sigma_ybar_sq + spec.sigma_w_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALPHA_1BIT: f64 = 0.636597595;

    #[test]
    fn sparsity_counts_nonzeros() {
        let s = SparseSignal::new(array![0.0, 1.5, 0.0, -2.0]).unwrap();
        assert_eq!(s.sparsity(), 2);
        assert_eq!(s.support(), vec![1, 3]);
        assert!(SparseSignal::new(Array1::zeros(0)).is_err());
    }

    #[test]
    fn noiseless_measurements() {
        let e = SensingEnsemble::with_identity(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let x = SparseSignal::new(array![1.0, 1.0]).unwrap();
        assert_eq!(measure_noiseless(&x, &e).unwrap(), array![3.0, 7.0]);

        let zero = SparseSignal::new(Array1::zeros(2)).unwrap();
        assert_eq!(measure_noiseless(&zero, &e).unwrap(), array![0.0, 0.0]);

        let eye = SensingEnsemble::with_identity(Array2::eye(3)).unwrap();
        let x = SparseSignal::new(array![0.3, -1.0, 2.0]).unwrap();
        assert_eq!(measure_noiseless(&x, &eye).unwrap(), x.values().clone());

        let bad = SparseSignal::new(array![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            measure_noiseless(&bad, &e),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ensemble_rejects_bad_shapes() {
        assert!(SensingEnsemble::with_identity(Array2::zeros((3, 2))).is_err());
        let phi = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(SensingEnsemble::new(phi.clone(), array![[1.0, 1.0], [0.0, 1.0]]).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rot = array![[s, -s], [s, s]];
        let e = SensingEnsemble::new(array![[1.0, 2.0]], rot.clone()).unwrap();
        let expect = array![[1.0, 2.0]].dot(&rot);
        for (a, b) in e.system_matrix().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::new(0.0, 0.1, 1.0).is_err());
        assert!(NoiseSpec::new(1.1, 0.1, 1.0).is_err());
        assert!(NoiseSpec::new(0.5, -0.1, 1.0).is_err());
        assert!(NoiseSpec::new(1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn deterministic_noise_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ybar = array![2.0, 4.0];
        let y = apply_correlated_noise(&ybar, &NoiseSpec::new(1.0, 0.0, 1.0).unwrap(), &mut rng);
        assert_eq!(y.observed, ybar);
        let y = apply_correlated_noise(&ybar, &NoiseSpec::new(0.5, 0.0, 1.0).unwrap(), &mut rng);
        assert_eq!(y.observed, array![1.0, 2.0]);
        assert_eq!(y.noiseless.as_ref(), Some(&ybar));
        assert_eq!(y.noise().unwrap(), array![-1.0, -2.0]);
    }

    #[test]
    fn noise_variance_formula() {
        let v = correlated_noise_variance(&NoiseSpec::new(1.0, 0.3, 5.0).unwrap());
        assert_abs_diff_eq!(v, 0.3, epsilon = 1e-15);
        let v = correlated_noise_variance(&NoiseSpec::new(0.5, 0.0, 1.0).unwrap());
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        let spec = NoiseSpec::gain_model(ALPHA_1BIT, 1.0).unwrap();
        assert_abs_diff_eq!(correlated_noise_variance(&spec), 1.0 - ALPHA_1BIT, epsilon = 1e-15);
        assert_abs_diff_eq!(correlated_noise_variance(&spec), 0.3634, epsilon = 1e-4);
    }

    #[test]
    fn uncorrelated_part_has_gain_model_variance() {
        // 10^6 draws of w = y − α·ȳ with σ_ȳ² = 1.
        let spec = NoiseSpec::gain_model(ALPHA_1BIT, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ybar = Array1::from_shape_fn(1_000_000, |_| rng.sample::<f64, _>(StandardNormal));
        let y = apply_correlated_noise(&ybar, &spec, &mut rng);
        let w = &y.observed - &(ALPHA_1BIT * &ybar);
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert_abs_diff_eq!(var, ALPHA_1BIT * (1.0 - ALPHA_1BIT), epsilon = 0.002);
        assert_abs_diff_eq!(var, 0.2313, epsilon = 0.002);
    }

    #[test]
    fn total_noise_matches_variance_and_is_uncorrelated_at_unit_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let ybar = Array1::from_shape_fn(n, |_| 1.3 * rng.sample::<f64, _>(StandardNormal));
        for alpha in [1.0, 0.8, ALPHA_1BIT] {
            let spec = NoiseSpec::new(alpha, 0.05, 1.69).unwrap();
            let meas = apply_correlated_noise(&ybar, &spec, &mut rng);
            let noise = meas.noise().unwrap();
            let var = noise.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let expect = correlated_noise_variance(&spec);
            assert!((var / expect - 1.0).abs() < 0.01, "alpha {alpha}: {var} vs {expect}");
            if alpha == 1.0 {
                // Correlation of n with ȳ is zero to within three standard errors.
                let prods: Vec<f64> = noise.iter().zip(&ybar).map(|(a, b)| a * b).collect();
                let mean = prods.iter().sum::<f64>() / n as f64;
                let sd = (prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
                assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt());
            }
        }
    }

    #[test]
    fn measurement_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((5, 9), |_| rng.sample::<f64, _>(StandardNormal));
        let e = SensingEnsemble::with_identity(a).unwrap();
        let x1 = Array1::from_shape_fn(9, |_| rng.sample::<f64, _>(StandardNormal));
        let x2 = Array1::from_shape_fn(9, |_| rng.sample::<f64, _>(StandardNormal));
        let (c1, c2) = (0.7, -2.3);
        let lhs = measure_noiseless(&SparseSignal::new(c1 * &x1 + c2 * &x2).unwrap(), &e).unwrap();
        let m1 = measure_noiseless(&SparseSignal::new(x1).unwrap(), &e).unwrap();
        let m2 = measure_noiseless(&SparseSignal::new(x2).unwrap(), &e).unwrap();
        let rhs = c1 * &m1 + c2 * &m2;
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).abs() < 1e-10);
        }
    }
}
