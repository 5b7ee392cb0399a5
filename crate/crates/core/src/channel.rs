//! Sparse FIR channel model.
//!
//! The unknown system is a length-`N` real tap vector `w` with only `K`
//! nonzero ("dominant") taps. Observations follow
//!
//! ```text
//! d(k) = wᵀ x(k) + z(k),    z(k) ~ N(0, σ_n²)
//! ```
//!
//! where `x(k) = [x(k), x(k-1), …, x(k-N+1)]` is the sliding regressor window,
//! newest sample first, zero-padded before the first sample.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `N`-length real tap vector: either the true channel or an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelVector(Vec<f64>);

impl ChannelVector {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("taps", "channel must have at least one tap"));
        }
        if let Some(i) = taps.iter().position(|t| !t.is_finite()) {
            return Err(Error::invalid("taps", format!("tap {i} is not finite")));
        }
        Ok(Self(taps))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "channel length must be at least 1");
        Self(vec![0.0; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub(crate) fn taps_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|t| t.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    /// Inner product with a regressor window of the same length.
    pub fn dot(&self, x: &RegressorWindow) -> Result<f64> {
        check_len(self.len(), x.len())?;
        Ok(self.0.iter().zip(x.samples()).map(|(w, x)| w * x).sum())
    }

    /// `‖self − other‖₂²`.
    pub fn squared_distance(&self, other: &ChannelVector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Indices of taps that are exactly zero.
    pub fn zero_support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.0.iter().filter(|t| **t != 0.0).count()
    }
}

impl AsRef<[f64]> for ChannelVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Shape of a random sparse channel: `N` taps, `K` of them Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseChannelSpec {
    pub n_taps: usize,
    pub n_nonzero: usize,
    /// Variance of each nonzero tap.
    pub tap_variance: f64,
}

impl SparseChannelSpec {
    /// Per-tap variance `1/K`, so that `E{‖w‖₂²} = 1`.
    pub fn new(n_taps: usize, n_nonzero: usize) -> Result<Self> {
        let spec = Self {
            n_taps,
            n_nonzero,
            tap_variance: 1.0 / n_nonzero.max(1) as f64,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        if self.n_nonzero == 0 {
            return Err(Error::invalid("K", "must be at least 1"));
        }
        if self.n_nonzero > self.n_taps {
            return Err(Error::invalid(
                "K",
                format!("K = {} exceeds N = {}", self.n_nonzero, self.n_taps),
            ));
        }
        if !(self.tap_variance > 0.0 && self.tap_variance.is_finite()) {
            return Err(Error::invalid(
                "tap_variance",
                "must be positive and finite",
            ));
        }
        Ok(())
    }
}

/// Sliding input window `[x(k), x(k-1), …, x(k-N+1)]`, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorWindow(Vec<f64>);

impl RegressorWindow {
    /// All-zero window: samples before time 0 are taken as zero.
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self(samples)
    }

    /// Shifts the window by one and inserts `sample` as the newest entry.
    pub fn push(&mut self, sample: f64) {
        if self.0.is_empty() {
            return;
        }
        self.0.rotate_right(1);
        self.0[0] = sample;
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Additive white Gaussian noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_n: f64,
    pub snr_db: f64,
    pub es: f64,
}

impl NoiseSpec {
    /// `σ_n = sqrt(E_s / 10^(snr_db/10))`.
    pub fn from_snr(snr_db: f64, es: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid("snr-db", "must be finite"));
        }
        if !(es > 0.0 && es.is_finite()) {
            return Err(Error::invalid("es", "symbol energy must be positive"));
        }
        let sigma_n = (es / 10f64.powf(snr_db / 10.0)).sqrt();
        Ok(Self {
            sigma_n,
            snr_db,
            es,
        })
    }

    /// Noise-free observations (infinite SNR).
    pub fn noiseless() -> Self {
        Self {
            sigma_n: 0.0,
            snr_db: f64::INFINITY,
            es: 1.0,
        }
    }

    pub fn variance(&self) -> f64 {
        self.sigma_n * self.sigma_n
    }
}

/// Hoyer sparseness `ξ(w) = N/(N−√N) · (1 − ‖w‖₁/(√N‖w‖₂))`.
///
/// Equals 1 for a single nonzero tap and 0 when all taps share one
/// magnitude. Undefined for `N = 1` and for the zero vector.
pub fn sparseness(w: &ChannelVector) -> Result<f64> {
    let n = w.len();
    if n < 2 {
        return Err(Error::SingleTapSparseness);
    }
    let l2 = w.l2_norm();
    if l2 == 0.0 {
        return Err(Error::UndefinedSparseness);
    }
    let n = n as f64;
    let root_n = n.sqrt();
    Ok(n / (n - root_n) * (1.0 - w.l1_norm() / (root_n * l2)))
}

/// Draws a channel with exactly `K` nonzero Gaussian taps at uniformly
/// random positions.
pub fn generate_channel<R: Rng + ?Sized>(
    spec: &SparseChannelSpec,
    rng: &mut R,
) -> Result<ChannelVector> {
    spec.validate()?;
    let gauss = Normal::new(0.0, spec.tap_variance.sqrt())
        .map_err(|e| Error::invalid("tap_variance", e.to_string()))?;
    let mut taps = vec![0.0; spec.n_taps];
    for pos in index::sample(rng, spec.n_taps, spec.n_nonzero) {
        // an exact zero would break the support count
        let mut v = gauss.sample(rng);
        while v == 0.0 {
            v = gauss.sample(rng);
        }
        taps[pos] = v;
    }
    Ok(ChannelVector(taps))
}

/// Equiprobable ±1 training symbol (unit energy).
pub fn training_symbol<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Noisy channel output `d(k) = wᵀx(k) + z(k)`.
///
/// One standard normal is always drawn, also when `σ_n = 0`, so the random
/// stream layout does not depend on the noise level.
pub fn observe<R: Rng + ?Sized>(
    w: &ChannelVector,
    x: &RegressorWindow,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<f64> {
    let clean = w.dot(x)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(clean + noise.sigma_n * z)
}
