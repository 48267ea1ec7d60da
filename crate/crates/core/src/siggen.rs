//! Seeded generation of random problem instances.
//!
//! Every random stream is derived from `(master_seed, n, m, k, trial_index,
//! purpose)` by a counter hash, so an instance is a pure function of its
//! configuration and can be rebuilt on any worker in any order.

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{SensingEnsemble, SparseSignal};

/// Signal length used by the reference experiment grid.
pub const REFERENCE_N: usize = 1000;

/// `(M, K)` pairs on the finite-N 99% recovery bound for `N = 1000`.
const REFERENCE_MK: [(usize, usize); 9] = [
    (200, 1),
    (300, 17),
    (400, 41),
    (500, 73),
    (600, 115),
    (700, 167),
    (800, 235),
    (900, 330),
    (1000, 542),
];

/// The nine `(M, K)` grid points at `N = 1000`.
pub fn reference_grid() -> Vec<(usize, usize)> {
    REFERENCE_MK.to_vec()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub master_seed: u64,
    pub trial_index: u64,
}

/// Independent random streams of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Signal,
    Matrix,
    Noise,
    Other(u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Signal => 0x5349_474e,
            Stream::Matrix => 0x4d41_5452,
            Stream::Noise => 0x4e4f_4953,
            Stream::Other(t) => 0x4f54_4852 ^ t.rotate_left(32),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a word sequence into a 64-bit seed.
pub fn derive_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |h, &w| splitmix64(h ^ splitmix64(w)))
}

impl InstanceConfig {
    pub fn new(n: usize, m: usize, k: usize, master_seed: u64, trial_index: u64) -> Result<Self> {
        let c = Self {
            n,
            m,
            k,
            master_seed,
            trial_index,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid("N and M must be positive"));
        }
        if !(self.k <= self.m && self.m <= self.n) {
            return Err(invalid(format!(
                "need K <= M <= N, got K={}, M={}, N={}",
                self.k, self.m, self.n
            )));
        }
        Ok(())
    }

    pub fn seed(&self, stream: Stream) -> u64 {
        derive_seed(&[
            self.master_seed,
            self.n as u64,
            self.m as u64,
            self.k as u64,
            self.trial_index,
            stream.tag(),
        ])
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(stream))
    }
}

/// K-sparse signal with a uniformly drawn support and standard normal
/// nonzeros, optionally scaled to unit ℓ2 norm.
pub fn generate_signal<R: Rng + ?Sized>(
    config: &InstanceConfig,
    unit_norm: bool,
    rng: &mut R,
) -> Result<SparseSignal> {
    if config.k > config.n {
        return Err(invalid(format!("K={} exceeds N={}", config.k, config.n)));
    }
    let mut support = index::sample(rng, config.n, config.k).into_vec();
    support.sort_unstable();
    let mut values = Array1::<f64>::zeros(config.n);
    for &i in &support {
        // A standard normal draw of exactly 0 has probability zero, but the
        // support size must be exact.
        let v = loop {
            let v: f64 = rng.sample(StandardNormal);
            if v != 0.0 {
                break v;
            }
        };
        values[i] = v;
    }
    let signal = SparseSignal::new(values)?;
    Ok(if unit_norm { signal.normalized() } else { signal })
}

/// Gaussian ensemble: `Φ_ij ~ N(0, 1/M)`, `Ψ = I`, so `A = Φ`.
pub fn generate_ensemble<R: Rng + ?Sized>(config: &InstanceConfig, rng: &mut R) -> Result<SensingEnsemble> {
    config.validate()?;
    let scale = 1.0 / (config.m as f64).sqrt();
    let phi = Array2::from_shape_fn((config.m, config.n), |_| {
        scale * rng.sample::<f64, _>(StandardNormal)
    });
    SensingEnsemble::with_identity(phi)
}

/// A signal/ensemble pair drawn from the instance's own streams.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub config: InstanceConfig,
    pub signal: SparseSignal,
    pub ensemble: SensingEnsemble,
}

impl ProblemInstance {
    pub fn generate(config: InstanceConfig) -> Result<Self> {
        config.validate()?;
        let signal = generate_signal(&config, false, &mut config.rng(Stream::Signal))?;
        let ensemble = generate_ensemble(&config, &mut config.rng(Stream::Matrix))?;
        Ok(Self {
            config,
            signal,
            ensemble,
        })
    }
}
