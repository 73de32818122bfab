//! Uniform rectangular array model: steering vectors, snapshot synthesis,
//! additive noise, entrywise observation masks and separation checks.
//!
//! Directions are carried as normalized spatial frequencies `f ∈ [0, 1)`,
//! the phase increment `exp(j2πf)` between adjacent elements. Under
//! half-wavelength spacing a physical angle maps to `f = sin θ / 2 mod 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, ComplexVec};

/// `n_x × n_y` uniform rectangular array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_x: usize,
    pub n_y: usize,
}

impl ArrayGeometry {
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        if n_x < 2 || n_y < 2 {
            return Err(Error::InvalidInput(format!(
                "array needs at least 2 elements per dimension, got {n_x} x {n_y}"
            )));
        }
        Ok(Self { n_x, n_y })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn num_elements(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Largest source count the pipelines accept: the Vandermonde
    /// decomposition of an `n × n` Toeplitz matrix is unique only below
    /// full rank.
    pub fn capacity(&self) -> usize {
        self.n_x.min(self.n_y) - 1
    }
}

/// One far-field source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub f_x: f64,
    pub f_y: f64,
    pub amp: Complex64,
}

impl Source {
    pub fn new(f_x: f64, f_y: f64, amp: Complex64) -> Self {
        Self { f_x, f_y, amp }
    }
}

/// Ordered collection of sources; ground truth and estimates share it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSet {
    pub sources: Vec<Source>,
}

impl SourceSet {
    pub fn new(sources: Vec<Source>) -> Self {
        Self { sources }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Source> {
        self.sources.iter()
    }

    pub fn fx(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.f_x).collect()
    }

    pub fn fy(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.f_y).collect()
    }

    /// Σ|s_k|, the atomic norm of the synthesized snapshot when the atoms are
    /// sufficiently separated.
    pub fn l1_mass(&self) -> f64 {
        self.sources.iter().map(|s| s.amp.norm()).sum()
    }

    /// Checks the frequency ranges and that no two sources share a location.
    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.sources.iter().enumerate() {
            for (name, f) in [("f_x", s.f_x), ("f_y", s.f_y)] {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::InvalidInput(format!(
                        "sources[{k}].{name} = {f} outside [0, 1)"
                    )));
                }
            }
            if !s.amp.re.is_finite() || !s.amp.im.is_finite() {
                return Err(Error::InvalidInput(format!("sources[{k}] amplitude not finite")));
            }
        }
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let (a, b) = (&self.sources[i], &self.sources[j]);
                if a.f_x == b.f_x && a.f_y == b.f_y {
                    return Err(Error::InvalidInput(format!(
                        "sources[{i}] and sources[{j}] share location ({}, {})",
                        a.f_x, a.f_y
                    )));
                }
            }
        }
        Ok(())
    }
}

impl FromIterator<Source> for SourceSet {
    fn from_iter<I: IntoIterator<Item = Source>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Observation operator restricted to entrywise masking.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ObservationModel {
    #[default]
    Full,
    /// `true` marks an observed entry.
    Mask(DMatrix<bool>),
}

impl ObservationModel {
    pub fn mask(mask: DMatrix<bool>) -> Result<Self> {
        if !mask.iter().any(|&b| b) {
            return Err(Error::InvalidInput("mask observes no entries".into()));
        }
        Ok(Self::Mask(mask))
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        match self {
            Self::Full => true,
            Self::Mask(m) => m[(i, j)],
        }
    }

    pub fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        match self {
            Self::Mask(m) if m.shape() != shape => Err(Error::ShapeMismatch {
                expected: shape,
                found: m.shape(),
            }),
            _ => Ok(()),
        }
    }
}

/// Wrap-around distance between two frequencies on the unit circle.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Maps a physical angle (radians) to normalized frequency under
/// half-wavelength spacing.
pub fn angle_to_frequency(theta: f64) -> f64 {
    wrap_frequency(theta.sin() / 2.0)
}

/// Inverse of [`angle_to_frequency`] onto `sin θ ∈ [-1, 1)`.
pub fn frequency_to_sine(f: f64) -> f64 {
    let f = wrap_frequency(f);
    if f >= 0.5 {
        2.0 * f - 2.0
    } else {
        2.0 * f
    }
}

/// Reduces a frequency into `[0, 1)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// `(1, e^{j2πf}, …, e^{j2πf(n-1)})ᵀ`.
pub fn steering_vector(n: usize, f: f64) -> ComplexVec {
    ComplexVec::from_fn(n, |i, _| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64))
}

/// Columns are steering vectors at `freqs`.
pub fn steering_matrix(n: usize, freqs: &[f64]) -> ComplexMat {
    ComplexMat::from_fn(n, freqs.len(), |i, k| {
        Complex64::from_polar(1.0, 2.0 * PI * freqs[k] * i as f64)
    })
}

/// Noise-free snapshot `X = Σ_k s_k a_{n_x}(f_{x,k}) a_{n_y}(f_{y,k})ᴴ`.
pub fn synthesize(geom: ArrayGeometry, srcs: &SourceSet) -> Result<ComplexMat> {
    if srcs.is_empty() {
        return Err(Error::InvalidInput("source set is empty".into()));
    }
    let ax = steering_matrix(geom.n_x, &srcs.fx());
    let ay = steering_matrix(geom.n_y, &srcs.fy());
    let s = ComplexMat::from_diagonal(&ComplexVec::from_iterator(
        srcs.len(),
        srcs.iter().map(|s| s.amp),
    ));
    Ok(ax * s * ay.adjoint())
}

/// Per-entry noise variance that yields `snr_db` against `x`.
pub fn noise_variance(x: &ComplexMat, snr_db: f64) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(Error::NonFiniteSnr(snr_db));
    }
    let power = x.norm_squared();
    Ok(power / (x.len() as f64 * 10f64.powf(snr_db / 10.0)))
}

/// Adds circular complex Gaussian noise with the given per-entry variance.
pub fn add_noise_with_variance(x: &ComplexMat, variance: f64, seed: u64) -> ComplexMat {
    if variance == 0.0 {
        return x.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (variance / 2.0).sqrt();
    let mut out = x.clone();
    // column-major fill keeps the draw order independent of matrix shape quirks
    for v in out.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v += Complex64::new(re * scale, im * scale);
    }
    out
}

/// `X + W` with `‖X‖²_F / E‖W‖²_F = 10^(snr_db/10)`.
pub fn add_noise(x: &ComplexMat, snr_db: f64, seed: u64) -> Result<ComplexMat> {
    let var = noise_variance(x, snr_db)?;
    if x.norm_squared() == 0.0 {
        return Err(Error::InvalidInput("cannot set SNR against a zero snapshot".into()));
    }
    Ok(add_noise_with_variance(x, var, seed))
}

/// Zeroes unobserved entries.
pub fn apply_observation(x: &ComplexMat, obs: &ObservationModel) -> Result<ComplexMat> {
    obs.check_shape(x.shape())?;
    Ok(match obs {
        ObservationModel::Full => x.clone(),
        ObservationModel::Mask(m) => x.zip_map(m, |v, keep| if keep { v } else { Complex64::ZERO }),
    })
}

fn min_pairwise_wrap(freqs: &[f64]) -> f64 {
    let mut best: f64 = 1.0;
    for i in 0..freqs.len() {
        for j in (i + 1)..freqs.len() {
            best = best.min(wrap_distance(freqs[i], freqs[j]));
        }
    }
    best
}

/// Minimal pairwise wrap distances `(Δ_x, Δ_y)`; `(1, 1)` for fewer than two
/// sources.
pub fn min_separations(srcs: &SourceSet) -> (f64, f64) {
    (min_pairwise_wrap(&srcs.fx()), min_pairwise_wrap(&srcs.fy()))
}

/// Unit in which the separation bound is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMetric {
    /// Wrap distance between normalized frequencies.
    #[default]
    Frequency,
    /// Wrap distance between `sin θ` values, twice the frequency distance
    /// under half-wavelength spacing.
    Sine,
}

impl SeparationMetric {
    /// Scale from frequency wrap distance into this metric.
    pub fn scale(self) -> f64 {
        match self {
            Self::Frequency => 1.0,
            Self::Sine => 2.0,
        }
    }
}

/// `1.19 / ⌊(n-1)/4⌋`, the sufficient separation for exact recovery.
pub fn separation_bound(n: usize) -> Result<f64> {
    let q = n.saturating_sub(1) / 4;
    if q == 0 {
        return Err(Error::DegenerateSeparationBound { n });
    }
    Ok(1.19 / q as f64)
}

/// Smallest frequency wrap distance that satisfies the bound for `n`
/// elements under `metric`.
pub fn required_frequency_separation(n: usize, metric: SeparationMetric) -> Result<f64> {
    Ok(separation_bound(n)? / metric.scale())
}

/// Whether both dimensions meet the separation bound, distances measured
/// in `metric`.
pub fn separation_condition(
    geom: ArrayGeometry,
    srcs: &SourceSet,
    metric: SeparationMetric,
) -> Result<bool> {
    let bx = separation_bound(geom.n_x)?;
    let by = separation_bound(geom.n_y)?;
    let (dx, dy) = min_separations(srcs);
    Ok(dx * metric.scale() >= bx && dy * metric.scale() >= by)
}

/// Separation check in normalized frequency.
pub fn separation_ok(geom: ArrayGeometry, srcs: &SourceSet) -> Result<bool> {
    separation_condition(geom, srcs, SeparationMetric::Frequency)
}
