//! Seeded Monte-Carlo experiments over the ULA scenario.
//!
//! Each trial draws its own snapshot set from a seed derived from
//! `(master_seed, trial_index)`, so trials are independent of execution
//! order and run in parallel. Every method in a trial sees the same sample
//! covariance.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{generate_snapshots, true_covariance, ArrayGeometry, Source, SourceScenario};
use crate::beamformer::{
    beamformer_power, globally_robust_loading, min_power, min_power_spectrum, music_pseudospectrum, uniform_grid,
    ConstraintKind, SpectrumGrid,
};
use crate::covariance::{
    bayesian_combine, diagonal_load, eigen_threshold, eigendecompose, gamma_matrix, sample_covariance, GammaSpec,
};
use crate::error::{BeamformError, Result};
use crate::linalg::HermitianMatrix;
use crate::metrics::{dispersion, normalize_pattern, PatternEnsemble};

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(BeamformError::Config(msg.into()))
}

/// Scenario as written in a config file; directions in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_elements: usize,
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
    pub noise_power: f64,
    #[serde(default)]
    pub soi_index: usize,
    pub sources: Vec<SourceConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub doa_deg: f64,
    pub power: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ScenarioConfig {
    pub fn reference() -> Self {
        ScenarioConfig {
            n_elements: 10,
            spacing_wavelengths: 0.5,
            noise_power: 1.0 / 32.0,
            soi_index: 0,
            sources: [-30.0, -26.0, 30.0].iter().map(|&doa_deg| SourceConfig { doa_deg, power: 1.0 }).collect(),
        }
    }

    pub fn to_scenario(&self) -> Result<SourceScenario> {
        let geometry = ArrayGeometry::new(self.n_elements, self.spacing_wavelengths)?;
        let sources = self.sources.iter().map(|s| Source { doa: s.doa_deg.to_radians(), power: s.power }).collect();
        SourceScenario::new(geometry, sources, self.noise_power, self.soi_index)
    }
}

/// Prior covariance `R̄` for Bayesian mixing, or loading matrix `C` for the
/// globally robust solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    Identity,
    /// `Γ` built from the sample covariance of the current trial.
    Gamma {
        delta_signal: f64,
        delta_noise: f64,
    },
}

impl MatrixSpec {
    fn build(&self, rhat: &HermitianMatrix, k: usize) -> Result<HermitianMatrix> {
        match *self {
            MatrixSpec::Identity => Ok(HermitianMatrix::identity(rhat.dim())),
            MatrixSpec::Gamma { delta_signal, delta_noise } => {
                gamma_matrix(&eigendecompose(rhat), &GammaSpec::new(delta_signal, delta_noise, k)?)
            }
        }
    }

    fn label(&self) -> String {
        match self {
            MatrixSpec::Identity => "I".into(),
            MatrixSpec::Gamma { delta_signal, delta_noise } => format!("Gamma({delta_signal},{delta_noise})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Capon,
    CaponDl { eps: f64 },
    CaponUdl { delta_signal: f64, delta_noise: f64 },
    EigThreshold { mu: f64 },
    Bayesian { beta: f64, prior: MatrixSpec },
    Music,
    GloballyRobust { t: f64, weight: MatrixSpec },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Capon => "Capon",
            MethodSpec::CaponDl { .. } => "Capon-DL",
            MethodSpec::CaponUdl { .. } => "Capon-UDL",
            MethodSpec::EigThreshold { .. } => "Capon-Thr",
            MethodSpec::Bayesian { .. } => "Capon-Bayes",
            MethodSpec::Music => "MUSIC",
            MethodSpec::GloballyRobust { .. } => "Capon-Global",
        }
    }

    pub fn parameter(&self) -> String {
        match self {
            MethodSpec::Capon | MethodSpec::Music => String::new(),
            MethodSpec::CaponDl { eps } => format!("{eps}"),
            MethodSpec::CaponUdl { delta_signal, delta_noise } => format!("delta1={delta_signal};delta2={delta_noise}"),
            MethodSpec::EigThreshold { mu } => format!("mu={mu}"),
            MethodSpec::Bayesian { beta, prior } => format!("beta={beta};prior={}", prior.label()),
            MethodSpec::GloballyRobust { t, weight } => format!("t={t};weight={}", weight.label()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                config_err(format!("{} {name} must be finite and nonnegative, got {v}", self.name()))
            }
        };
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                config_err(format!("{} {name} must lie in [0, 1], got {v}", self.name()))
            }
        };
        let matrix = |m: &MatrixSpec, strict: bool| match *m {
            MatrixSpec::Identity => Ok(()),
            MatrixSpec::Gamma { delta_signal, delta_noise } => {
                nonneg("delta_signal", delta_signal)?;
                nonneg("delta_noise", delta_noise)?;
                if strict && !(delta_signal > 0.0 && delta_noise > 0.0) {
                    config_err("loading weight Gamma needs positive deltas")
                } else {
                    Ok(())
                }
            }
        };
        match self {
            MethodSpec::Capon | MethodSpec::Music => Ok(()),
            MethodSpec::CaponDl { eps } => nonneg("eps", *eps),
            MethodSpec::CaponUdl { delta_signal, delta_noise } => {
                nonneg("delta_signal", *delta_signal)?;
                nonneg("delta_noise", *delta_noise)
            }
            MethodSpec::EigThreshold { mu } => unit("mu", *mu),
            MethodSpec::Bayesian { beta, prior } => {
                unit("beta", *beta)?;
                matrix(prior, false)
            }
            MethodSpec::GloballyRobust { t, weight } => {
                nonneg("t", *t)?;
                matrix(weight, true)
            }
        }
    }

    /// Raw (unnormalized) spectrum of this method for one covariance.
    pub fn spectrum(
        &self,
        r: &HermitianMatrix,
        n_sources: usize,
        thetas: &[f64],
        geometry: &ArrayGeometry,
        constraint: &ConstraintKind,
    ) -> Result<SpectrumGrid> {
        let effective = match *self {
            MethodSpec::Capon => r.clone(),
            MethodSpec::CaponDl { eps } => diagonal_load(r, eps)?,
            MethodSpec::CaponUdl { delta_signal, delta_noise } => {
                let gamma = gamma_matrix(&eigendecompose(r), &GammaSpec::new(delta_signal, delta_noise, n_sources)?)?;
                r.add(&gamma)?
            }
            MethodSpec::EigThreshold { mu } => eigen_threshold(r, mu)?,
            MethodSpec::Bayesian { beta, prior } => bayesian_combine(r, &prior.build(r, n_sources)?, beta)?,
            MethodSpec::Music => return music_pseudospectrum(r, n_sources, thetas, geometry),
            MethodSpec::GloballyRobust { t, weight } => {
                let c = weight.build(r, n_sources)?;
                let values = thetas
                    .iter()
                    .map(|&theta| {
                        let cset = constraint.at(geometry, theta)?;
                        let (_, opt0) = min_power(r, &cset)?;
                        let sol = globally_robust_loading(r, &cset, opt0 + t, &c)?;
                        beamformer_power(&sol.beamformer, r)
                    })
                    .collect::<Result<Vec<_>>>()?;
                return SpectrumGrid::new(thetas.to_vec(), values);
            }
        };
        min_power_spectrum(&effective, thetas, geometry, constraint)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.parameter();
        if p.is_empty() {
            write!(f, "{}", self.name())
        } else {
            write!(f, "{}({p})", self.name())
        }
    }
}

/// Feasible-set description in config form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintConfig {
    #[default]
    Singleton,
    Quadratic {
        eps2: f64,
        reg: MatrixSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub constraint: ConstraintConfig,
    /// Compute dispersion on raw instead of peak-normalized patterns.
    #[serde(default)]
    pub raw_dispersion: bool,
    pub methods: Vec<MethodSpec>,
}

fn default_grid_points() -> usize {
    200
}
fn default_trials() -> usize {
    10
}
fn default_snapshots() -> usize {
    25
}

impl ExperimentConfig {
    /// Reference scenario with the default grid, trial and snapshot counts.
    pub fn reference(master_seed: u64, methods: Vec<MethodSpec>) -> Self {
        ExperimentConfig {
            scenario: ScenarioConfig::reference(),
            grid_points: default_grid_points(),
            trials: default_trials(),
            snapshots: default_snapshots(),
            master_seed,
            constraint: ConstraintConfig::Singleton,
            raw_dispersion: false,
            methods,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| BeamformError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BeamformError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario.to_scenario().map_err(|e| BeamformError::Config(e.to_string()))?;
        if self.grid_points < 2 {
            return config_err(format!("grid_points must be at least 2, got {}", self.grid_points));
        }
        if self.trials < 1 {
            return config_err("trials must be at least 1");
        }
        if self.snapshots < 1 {
            return config_err("snapshots must be at least 1");
        }
        let k = scenario.n_sources();
        for m in &self.methods {
            m.validate()?;
            let needs_k = matches!(
                m,
                MethodSpec::CaponUdl { .. }
                    | MethodSpec::Music
                    | MethodSpec::Bayesian { prior: MatrixSpec::Gamma { .. }, .. }
                    | MethodSpec::GloballyRobust { weight: MatrixSpec::Gamma { .. }, .. }
            );
            if needs_k && k == 0 {
                return config_err(format!("{} needs at least one source", m.name()));
            }
        }
        if let ConstraintConfig::Quadratic { eps2, reg } = self.constraint {
            if !(eps2 >= 0.0 && eps2.is_finite()) {
                return config_err(format!("constraint eps2 must be finite and nonnegative, got {eps2}"));
            }
            if let MatrixSpec::Gamma { delta_signal, delta_noise } = reg {
                if !(delta_signal >= 0.0 && delta_noise >= 0.0) {
                    return config_err("constraint regularizer deltas must be nonnegative");
                }
            }
        }
        Ok(())
    }

    pub fn source_scenario(&self) -> Result<SourceScenario> {
        self.scenario.to_scenario()
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.grid_points)
    }

    fn constraint_for(&self, r: &HermitianMatrix, k: usize) -> Result<ConstraintKind> {
        Ok(match self.constraint {
            ConstraintConfig::Singleton => ConstraintKind::Singleton,
            ConstraintConfig::Quadratic { eps2, reg } => {
                ConstraintKind::QuadraticRegularized { eps2, reg: reg.build(r, k)? }
            }
        })
    }
}

/// Seed of trial `trial` under `master`: SplitMix64 of the pair.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(master ^ splitmix64(trial as u64 ^ 0x6a09_e667_f3bc_c909))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the bit patterns of a matrix, used to show that all methods
/// in a trial consumed the same covariance.
pub fn covariance_hash(r: &HermitianMatrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for z in r.as_matrix().iter() {
        for bits in [z.re.to_bits(), z.im.to_bits()] {
            for byte in bits.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

/// One (method, trial) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub method: String,
    pub parameter: String,
    pub trial: usize,
    pub seed: u64,
    pub covariance_hash: u64,
    /// Pattern as used for dispersion (normalized unless raw dispersion is
    /// requested); NaN when the solver failed.
    pub values: Vec<f64>,
    pub dispersion_contribution: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct MethodSummary {
    pub spec: MethodSpec,
    pub ensemble: Option<PatternEnsemble>,
    pub dispersion: f64,
    pub records: Vec<RunRecord>,
}

impl MethodSummary {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    /// Mean of the per-trial patterns.
    pub fn mean_spectrum(&self) -> Option<SpectrumGrid> {
        self.ensemble.as_ref().and_then(|e| e.mean_spectrum().ok())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionRow {
    pub method: String,
    pub parameter: String,
    pub dispersion: f64,
}

#[derive(Clone, Debug)]
pub struct MonteCarloResult {
    pub grid: Vec<f64>,
    pub trial_seeds: Vec<u64>,
    pub covariance_hashes: Vec<u64>,
    pub methods: Vec<MethodSummary>,
}

impl MonteCarloResult {
    pub fn dispersion_table(&self) -> Vec<DispersionRow> {
        self.methods
            .iter()
            .map(|m| DispersionRow {
                method: m.spec.name().into(),
                parameter: m.spec.parameter(),
                dispersion: m.dispersion,
            })
            .collect()
    }

    pub fn dispersions(&self) -> Vec<f64> {
        self.methods.iter().map(|m| m.dispersion).collect()
    }
}

struct TrialOutput {
    seed: u64,
    hash: u64,
    spectra: Vec<Result<Vec<f64>>>,
}

/// Runs every configured method on `trials` independent snapshot sets.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<MonteCarloResult> {
    config.validate()?;
    let scenario = config.source_scenario()?;
    let grid = config.grid()?;
    let k = scenario.n_sources();
    let trials: Vec<TrialOutput> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutput> {
            let seed = trial_seed(config.master_seed, t);
            let snapshots = generate_snapshots(&scenario, config.snapshots, seed)?;
            let rhat = sample_covariance(&snapshots)?;
            let hash = covariance_hash(&rhat);
            let constraint = config.constraint_for(&rhat, k);
            let spectra = config
                .methods
                .iter()
                .map(|m| {
                    let constraint = constraint.as_ref().map_err(|e| BeamformError::Config(e.to_string()))?;
                    let sp = m.spectrum(&rhat, k, &grid, &scenario.geometry, constraint)?;
                    if config.raw_dispersion {
                        Ok(sp.into_values())
                    } else {
                        normalize_pattern(sp.values())
                    }
                })
                .collect();
            Ok(TrialOutput { seed, hash, spectra })
        })
        .collect::<Result<Vec<_>>>()?;

    let methods = config.methods.iter().enumerate().map(|(mi, spec)| summarize(*spec, mi, &grid, &trials)).collect();
    Ok(MonteCarloResult {
        grid,
        trial_seeds: trials.iter().map(|t| t.seed).collect(),
        covariance_hashes: trials.iter().map(|t| t.hash).collect(),
        methods,
    })
}

fn summarize(spec: MethodSpec, index: usize, grid: &[f64], trials: &[TrialOutput]) -> MethodSummary {
    let ok: Vec<Vec<f64>> = trials.iter().filter_map(|t| t.spectra[index].as_ref().ok().cloned()).collect();
    let ensemble = if ok.is_empty() { None } else { PatternEnsemble::new(grid.to_vec(), ok).ok() };
    let (disp, mean) = match &ensemble {
        Some(e) => (dispersion(e).unwrap_or(f64::NAN), Some(e.mean_pattern())),
        None => (f64::NAN, None),
    };
    let count = ensemble.as_ref().map_or(1, |e| e.len()) as f64;
    let records = trials
        .iter()
        .enumerate()
        .map(|(trial, t)| {
            let (values, contribution, error) = match &t.spectra[index] {
                Ok(v) => {
                    let dist = mean
                        .as_ref()
                        .map(|m| v.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                        .unwrap_or(f64::NAN);
                    (v.clone(), dist / count, None)
                }
                Err(e) => (vec![f64::NAN; grid.len()], f64::NAN, Some(e.to_string())),
            };
            RunRecord {
                method: spec.name().into(),
                parameter: spec.parameter(),
                trial,
                seed: t.seed,
                covariance_hash: t.hash,
                values,
                dispersion_contribution: contribution,
                error,
            }
        })
        .collect();
    MethodSummary { spec, ensemble, dispersion: disp, records }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TablePreset {
    Table1,
    Table2,
    Table3,
}

impl FromStr for TablePreset {
    type Err = BeamformError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(TablePreset::Table1),
            "table2" => Ok(TablePreset::Table2),
            "table3" => Ok(TablePreset::Table3),
            other => config_err(format!("unknown table preset `{other}` (expected table1, table2 or table3)")),
        }
    }
}

impl TablePreset {
    /// Methods in column order.
    pub fn methods(&self) -> Vec<MethodSpec> {
        let udl = |delta_noise: f64, signals: &[f64]| {
            std::iter::once(MethodSpec::Capon)
                .chain(signals.iter().map(move |&delta_signal| MethodSpec::CaponUdl { delta_signal, delta_noise }))
                .collect()
        };
        match self {
            TablePreset::Table1 => [0.0, 0.01, 0.025, 0.05].iter().map(|&eps| MethodSpec::CaponDl { eps }).collect(),
            TablePreset::Table2 => udl(0.01, &[1.0, 2.0, 3.0, 10.0]),
            TablePreset::Table3 => udl(0.025, &[1.0, 3.0, 5.0, 10.0]),
        }
    }

    pub fn config(&self, master_seed: u64) -> ExperimentConfig {
        ExperimentConfig::reference(master_seed, self.methods())
    }

    pub fn run(&self, master_seed: u64) -> Result<Vec<DispersionRow>> {
        Ok(run_monte_carlo(&self.config(master_seed))?.dispersion_table())
    }
}

/// Where the covariance for a spectrum comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumSource {
    /// First Monte-Carlo trial's sample covariance.
    SingleTrial,
    /// Mean of the normalized patterns over all trials.
    Averaged,
    /// Exact `R₀`, no snapshots.
    ExactCovariance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub method: MethodSpec,
    pub spectrum: SpectrumGrid,
}

/// Peak-normalized spectrum of one method.
pub fn spectrum_command(
    config: &ExperimentConfig,
    method: MethodSpec,
    source: SpectrumSource,
) -> Result<SpectrumReport> {
    let mut cfg = config.clone();
    cfg.methods = vec![method];
    cfg.raw_dispersion = false;
    cfg.validate()?;
    let scenario = cfg.source_scenario()?;
    let grid = cfg.grid()?;
    let k = scenario.n_sources();
    let raw = match source {
        SpectrumSource::ExactCovariance => {
            let r0 = true_covariance(&scenario)?;
            let constraint = cfg.constraint_for(&r0, k)?;
            method.spectrum(&r0, k, &grid, &scenario.geometry, &constraint)?.into_values()
        }
        SpectrumSource::SingleTrial => {
            let snapshots = generate_snapshots(&scenario, cfg.snapshots, trial_seed(cfg.master_seed, 0))?;
            let rhat = sample_covariance(&snapshots)?;
            let constraint = cfg.constraint_for(&rhat, k)?;
            method.spectrum(&rhat, k, &grid, &scenario.geometry, &constraint)?.into_values()
        }
        SpectrumSource::Averaged => {
            let result = run_monte_carlo(&cfg)?;
            let summary = &result.methods[0];
            if let Some(rec) = summary.records.iter().find(|r| r.error.is_some()) {
                return Err(BeamformError::Domain(format!(
                    "trial {} failed: {}",
                    rec.trial,
                    rec.error.as_deref().unwrap_or_default()
                )));
            }
            summary.ensemble.as_ref().map(|e| e.mean_pattern()).unwrap_or_default()
        }
    };
    let values = normalize_pattern(&raw)?;
    Ok(SpectrumReport { method, spectrum: SpectrumGrid::new(grid, values)? })
}
