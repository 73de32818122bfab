//! Experiment descriptions: the JSON scenario format and random draws of
//! well-separated source sets.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::array::{
    add_noise_with_variance, apply_observation, noise_variance, synthesize, wrap_frequency, ArrayGeometry,
    ObservationModel, Source, SourceSet,
};
use crate::error::{Error, Result};
use crate::linalg::ComplexMat;

/// One source as written in a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub f_x: f64,
    pub f_y: f64,
    pub amp_re: f64,
    pub amp_im: f64,
}

impl From<&Source> for SourceSpec {
    fn from(s: &Source) -> Self {
        Self { f_x: s.f_x, f_y: s.f_y, amp_re: s.amp.re, amp_im: s.amp.im }
    }
}

impl From<&SourceSpec> for Source {
    fn from(s: &SourceSpec) -> Self {
        Source::new(s.f_x, s.f_y, Complex64::new(s.amp_re, s.amp_im))
    }
}

/// Full experiment description.
///
/// `snr_db` absent means a noise-free snapshot. `mask`, when present, is
/// `n_x` rows of `n_y` booleans with `true` marking observed entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_x: usize,
    pub n_y: usize,
    pub sources: Vec<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<bool>>>,
    pub seed: u64,
}

/// A synthesized measurement together with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub y: ComplexMat,
    pub observation: ObservationModel,
    /// Per-entry noise variance actually used (0 when noise-free).
    pub noise_variance: f64,
}

impl Scenario {
    pub fn new(geometry: ArrayGeometry, sources: &SourceSet, snr_db: Option<f64>, seed: u64) -> Self {
        Self {
            n_x: geometry.n_x,
            n_y: geometry.n_y,
            sources: sources.iter().map(SourceSpec::from).collect(),
            snr_db,
            mask: None,
            seed,
        }
    }

    /// Parses and validates a scenario; errors carry serde's line/column.
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.n_x, self.n_y)
    }

    pub fn source_set(&self) -> SourceSet {
        self.sources.iter().map(Source::from).collect()
    }

    pub fn observation(&self) -> Result<ObservationModel> {
        let Some(rows) = &self.mask else { return Ok(ObservationModel::Full) };
        let found_cols = rows.first().map_or(0, Vec::len);
        if rows.len() != self.n_x || rows.iter().any(|r| r.len() != self.n_y) {
            return Err(Error::ShapeMismatch { expected: (self.n_x, self.n_y), found: (rows.len(), found_cols) });
        }
        ObservationModel::mask(DMatrix::from_fn(self.n_x, self.n_y, |i, j| rows[i][j]))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.source_set().validate()?;
        if let Some(s) = self.sources.iter().find(|s| !(s.amp_re.is_finite() && s.amp_im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite amplitude {} + {}i", s.amp_re, s.amp_im)));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::NonFiniteSnr(snr));
            }
        }
        self.observation()?;
        Ok(())
    }

    /// Noise-free signal `X`.
    pub fn clean_signal(&self) -> Result<ComplexMat> {
        synthesize(self.geometry()?, &self.source_set())
    }

    /// `Y = L(X + W)`, with noise drawn from `seed`.
    pub fn snapshot(&self) -> Result<Snapshot> {
        self.validate()?;
        let x = self.clean_signal()?;
        let (noisy, variance) = match self.snr_db {
            Some(snr) if !self.sources.is_empty() => {
                let var = noise_variance(&x, snr)?;
                (add_noise_with_variance(&x, var, self.seed), var)
            }
            _ => (x, 0.0),
        };
        let observation = self.observation()?;
        let y = apply_observation(&noisy, &observation)?;
        Ok(Snapshot { y, observation, noise_variance: variance })
    }
}

/// `k` points on the unit circle with pairwise wrap distance at least
/// `min_sep`, in random order.
///
/// Gaps are `min_sep` plus a Dirichlet-distributed share of the slack, so
/// every feasible configuration can be drawn.
pub fn draw_separated_frequencies<R: Rng + ?Sized>(k: usize, min_sep: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(min_sep >= 0.0 && min_sep.is_finite()) {
        return Err(Error::InvalidInput(format!("separation must be finite and nonnegative, got {min_sep}")));
    }
    if k == 0 {
        return Ok(vec![]);
    }
    // a hair of margin absorbs rounding in the cumulative sum
    let sep = min_sep * (1.0 + 1e-9);
    if k > 1 && k as f64 * sep > 1.0 {
        return Err(Error::InfeasibleSeparation { k, min_sep });
    }
    let slack = if k > 1 { 1.0 - k as f64 * sep } else { 1.0 };
    let weights: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    let start: f64 = rng.random();
    let mut pos = start;
    let mut out = Vec::with_capacity(k);
    for w in &weights {
        out.push(wrap_frequency(pos));
        pos += sep + slack * w / total;
    }
    out.shuffle(rng);
    Ok(out)
}

/// Recipe for random separated scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedDraw {
    pub geometry: ArrayGeometry,
    pub k: usize,
    /// Minimum wrap separation along x and y.
    pub min_sep: (f64, f64),
    /// Amplitude magnitudes are uniform in this range; phases are uniform.
    pub amp_range: (f64, f64),
}

impl SeparatedDraw {
    pub fn new(geometry: ArrayGeometry, k: usize, min_sep: f64) -> Self {
        Self { geometry, k, min_sep: (min_sep, min_sep), amp_range: (1.0, 2.0) }
    }

    pub fn sources(&self, seed: u64) -> Result<SourceSet> {
        if self.k > self.geometry.capacity() {
            return Err(Error::Capacity { order: self.k, capacity: self.geometry.capacity() });
        }
        let (lo, hi) = self.amp_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("bad amplitude range [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = draw_separated_frequencies(self.k, self.min_sep.0, &mut rng)?;
        let fy = draw_separated_frequencies(self.k, self.min_sep.1, &mut rng)?;
        Ok(fx
            .into_iter()
            .zip(fy)
            .map(|(f_x, f_y)| {
                let mag = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                Source::new(f_x, f_y, Complex64::from_polar(mag, phase))
            })
            .collect())
    }

    /// Scenario with sources from `seed` and noise seeded by `seed` as well.
    pub fn scenario(&self, seed: u64, snr_db: Option<f64>) -> Result<Scenario> {
        Ok(Scenario::new(self.geometry, &self.sources(seed)?, snr_db, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::min_separations;
    use proptest::prelude::*;

    const K1: &str = r#"{"n_x": 4, "n_y": 5, "sources": [{"f_x": 0.1, "f_y": 0.7, "amp_re": 1.0, "amp_im": 0.0}], "seed": 3}"#;

    #[test]
    fn parses_minimal_scenario() {
        let sc = Scenario::from_json(K1).unwrap();
        assert_eq!((sc.n_x, sc.n_y, sc.seed), (4, 5, 3));
        assert_eq!(sc.snr_db, None);
        let snap = sc.snapshot().unwrap();
        assert_eq!(snap.noise_variance, 0.0);
        assert_eq!(snap.y, sc.clean_signal().unwrap());
    }

    #[test]
    fn missing_field_is_named() {
        let bad = K1.replace(r#""f_y": 0.7, "#, "");
        let err = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("f_y") && err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let bad = K1.replace(r#""seed": 3"#, r#""seed": 3, "sed": 4"#);
        assert!(Scenario::from_json(&bad).unwrap_err().to_string().contains("sed"));
    }

    #[test]
    fn mask_shape_names_expected_dims() {
        let bad = K1.replace(r#""seed": 3"#, r#""seed": 3, "mask": [[true, true], [true, true]]"#);
        let err = Scenario::from_json(&bad).unwrap_err();
        assert_eq!(err, Error::ShapeMismatch { expected: (4, 5), found: (2, 2) });
    }

    #[test]
    fn noisy_snapshot_is_seeded() {
        let mut sc = Scenario::from_json(K1).unwrap();
        sc.snr_db = Some(10.0);
        let a = sc.snapshot().unwrap();
        assert_eq!(a, sc.snapshot().unwrap());
        sc.seed = 4;
        assert_ne!(a.y, sc.snapshot().unwrap().y);
        assert!((a.noise_variance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let sc = Scenario::from_json(K1).unwrap();
        let text = serde_json::to_string(&sc).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), sc);
    }

    #[test]
    fn infeasible_separation_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            draw_separated_frequencies(4, 0.3, &mut rng),
            Err(Error::InfeasibleSeparation { k: 4, .. })
        ));
        assert_eq!(draw_separated_frequencies(1, 0.9, &mut rng).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn draws_respect_separation(seed in any::<u64>(), k in 2usize..6, frac in 0.1f64..0.99) {
            let sep = frac / k as f64;
            let geom = ArrayGeometry::square(8).unwrap();
            let draw = SeparatedDraw { geometry: geom, k, min_sep: (sep, sep), amp_range: (1.0, 2.0) };
            let srcs = draw.sources(seed).unwrap();
            let (dx, dy) = min_separations(&srcs);
            prop_assert!(dx >= sep && dy >= sep);
            prop_assert!(srcs.iter().all(|s| (1.0..=2.0).contains(&s.amp.norm())));
            prop_assert_eq!(srcs, draw.sources(seed).unwrap());
        }
    }
}
