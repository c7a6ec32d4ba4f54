//! Uniform linear array signal model: steering vectors, true covariances,
//! output SINR and seeded snapshot generation.
//!
//! Steering convention: element `n` (0-based) of `a(θ)` is
//! `exp(i·2π·d·n·sin θ)` with `d` the spacing in wavelengths, which is
//! `exp(iπ n sin θ)` for the default half-wavelength array. Spectra do not
//! depend on the sign or global phase of this convention.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::beamformer::{capon_weights, Beamformer};
use crate::error::{domain, BeamformError, Result};
use crate::linalg::{CMatrix, CVector, HermitianMatrix};

/// Slack allowed when validating angles at the ±π/2 endfire limits.
const ANGLE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    #[serde(default = "half_wavelength")]
    pub spacing_wavelengths: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, spacing_wavelengths: f64) -> Result<Self> {
        let g = ArrayGeometry { n_elements, spacing_wavelengths };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength ULA.
    pub fn ula(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return domain(format!("array needs at least 2 elements, got {}", self.n_elements));
        }
        if !(self.spacing_wavelengths > 0.0 && self.spacing_wavelengths.is_finite()) {
            return domain(format!("element spacing must be positive, got {}", self.spacing_wavelengths));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    /// Direction of arrival in radians from broadside.
    pub doa: f64,
    /// Power in watts.
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceScenario {
    pub geometry: ArrayGeometry,
    pub sources: Vec<Source>,
    pub noise_power: f64,
    /// Index into `sources` of the signal of interest.
    pub soi_index: usize,
}

impl SourceScenario {
    pub fn new(geometry: ArrayGeometry, sources: Vec<Source>, noise_power: f64, soi_index: usize) -> Result<Self> {
        let s = SourceScenario { geometry, sources, noise_power, soi_index };
        s.validate()?;
        Ok(s)
    }

    /// Three unit-power sources at −30°, −26° and 30° impinging on a
    /// 10-element half-wavelength ULA with noise power 1/32 (15 dB SNR).
    pub fn reference() -> Self {
        let sources = [-30.0_f64, -26.0, 30.0].iter().map(|d| Source { doa: d.to_radians(), power: 1.0 }).collect();
        SourceScenario {
            geometry: ArrayGeometry { n_elements: 10, spacing_wavelengths: 0.5 },
            sources,
            noise_power: 1.0 / 32.0,
            soi_index: 0,
        }
    }

    /// Checks the scenario invariants. A source-free scenario is accepted
    /// (it is useful for noise-only tests) but has no signal of interest.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return domain(format!("noise power must be positive, got {}", self.noise_power));
        }
        if self.sources.len() >= self.geometry.n_elements {
            return domain(format!(
                "{} sources need more than {} elements for a subspace split",
                self.sources.len(),
                self.geometry.n_elements
            ));
        }
        for (k, s) in self.sources.iter().enumerate() {
            check_angle(s.doa)?;
            if !(s.power > 0.0 && s.power.is_finite()) {
                return domain(format!("source {k} power must be positive, got {}", s.power));
            }
        }
        if !self.sources.is_empty() && self.soi_index >= self.sources.len() {
            return domain(format!("soi index {} out of range", self.soi_index));
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.geometry.n_elements
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn soi(&self) -> Result<&Source> {
        self.sources
            .get(self.soi_index)
            .ok_or_else(|| BeamformError::Domain("scenario has no signal of interest".into()))
    }
}

/// L snapshots stored as the columns of an N×L matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    data: CMatrix,
    seed: u64,
}

impl SnapshotSet {
    pub fn new(data: CMatrix, seed: u64) -> Result<Self> {
        if data.ncols() == 0 {
            return domain("snapshot set must contain at least one snapshot");
        }
        Ok(SnapshotSet { data, seed })
    }

    pub fn from_vectors(snapshots: &[CVector], seed: u64) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return domain("snapshot set must contain at least one snapshot");
        };
        let n = first.len();
        if let Some(bad) = snapshots.iter().find(|x| x.len() != n) {
            return Err(BeamformError::DimensionMismatch { expected: n, actual: bad.len() });
        }
        let data = CMatrix::from_columns(snapshots);
        Ok(SnapshotSet { data, seed })
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn n_elements(&self) -> usize {
        self.data.nrows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn snapshot(&self, l: usize) -> CVector {
        self.data.column(l).into_owned()
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() && theta.abs() <= FRAC_PI_2 + ANGLE_SLACK {
        Ok(())
    } else {
        domain(format!("angle {theta} rad outside [-pi/2, pi/2]"))
    }
}

pub fn steering_vector(geometry: &ArrayGeometry, theta: f64) -> Result<CVector> {
    check_angle(theta)?;
    Ok(steering_unchecked(geometry, theta))
}

pub(crate) fn steering_unchecked(geometry: &ArrayGeometry, theta: f64) -> CVector {
    let phase = 2.0 * PI * geometry.spacing_wavelengths * theta.sin();
    CVector::from_iterator(
        geometry.n_elements,
        (0..geometry.n_elements).map(|n| Complex64::from_polar(1.0, phase * n as f64)),
    )
}

fn covariance_of(scenario: &SourceScenario, include: impl Fn(usize) -> bool) -> Result<HermitianMatrix> {
    scenario.validate()?;
    let g = &scenario.geometry;
    let mut r = HermitianMatrix::scaled_identity(g.n_elements, scenario.noise_power).into_inner();
    for (_, s) in scenario.sources.iter().enumerate().filter(|(k, _)| include(*k)) {
        let a = steering_unchecked(g, s.doa);
        r += (&a * a.adjoint()).scale(s.power);
    }
    Ok(HermitianMatrix::symmetrized(r))
}

/// `R₀ = Σ_k σ_k² a(θ_k) a(θ_k)ᴴ + σ² I`.
pub fn true_covariance(scenario: &SourceScenario) -> Result<HermitianMatrix> {
    covariance_of(scenario, |_| true)
}

/// Interference-plus-noise covariance: `R₀` without the signal of interest.
pub fn interference_noise_covariance(scenario: &SourceScenario) -> Result<HermitianMatrix> {
    let soi = scenario.soi_index;
    let has_sources = !scenario.sources.is_empty();
    covariance_of(scenario, |k| !(has_sources && k == soi))
}

/// Draws `n_snapshots` snapshots `x = Σ_k a(θ_k) s_k + v` with circularly
/// symmetric Gaussian sources and noise. Pure function of its arguments.
pub fn generate_snapshots(scenario: &SourceScenario, n_snapshots: usize, seed: u64) -> Result<SnapshotSet> {
    scenario.validate()?;
    if n_snapshots == 0 {
        return domain("at least one snapshot is required");
    }
    let g = &scenario.geometry;
    let n = g.n_elements;
    let steering: Vec<CVector> = scenario.sources.iter().map(|s| steering_unchecked(g, s.doa)).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut data = CMatrix::zeros(n, n_snapshots);
    for l in 0..n_snapshots {
        let mut col = CVector::zeros(n);
        for (src, a) in scenario.sources.iter().zip(&steering) {
            let s = complex_gaussian(&mut rng, src.power);
            col.axpy(s, a, Complex64::new(1.0, 0.0));
        }
        for x in col.iter_mut() {
            *x += complex_gaussian(&mut rng, scenario.noise_power);
        }
        data.set_column(l, &col);
    }
    SnapshotSet::new(data, seed)
}

/// Draws from CN(0, power): independent real and imaginary parts, each with
/// variance `power / 2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let scale = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Output SINR `σ₁² |wᴴa₁|² / (wᴴ R_n w)` for the scenario's signal of
/// interest.
pub fn output_sinr(w: &Beamformer, scenario: &SourceScenario) -> Result<f64> {
    let weights = w.weights();
    if weights.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return domain("SINR of the zero beamformer is undefined");
    }
    let soi = scenario.soi()?;
    let a = steering_vector(&scenario.geometry, soi.doa)?;
    let rn = interference_noise_covariance(scenario)?;
    let signal = soi.power * weights.dotc(&a).norm_sqr();
    let noise = rn.quad_form(weights)?;
    Ok(signal / noise)
}

/// MVDR weights `R_n⁻¹ a / (aᴴ R_n⁻¹ a)`.
pub fn mvdr_weights(rn: &HermitianMatrix, a: &CVector) -> Result<Beamformer> {
    capon_weights(rn, a)
}
