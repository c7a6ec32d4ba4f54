//! Robustness and resolution diagnostics: pattern normalization, the
//! Monte-Carlo dispersion statistic, the one-sided robustness measure, and
//! peak-based DoA read-off.

use crate::beamformer::{worst_case_power, Beamformer, SpectrumGrid};
use crate::error::{domain, BeamformError, Result};
use crate::linalg::HermitianMatrix;

/// Divides a pattern by its maximum.
pub fn normalize_pattern(values: &[f64]) -> Result<Vec<f64>> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return domain("cannot normalize a pattern without a positive finite maximum");
    }
    Ok(values.iter().map(|v| v / max).collect())
}

/// Per-trial patterns over a shared direction grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternEnsemble {
    grid: Vec<f64>,
    patterns: Vec<Vec<f64>>,
}

impl PatternEnsemble {
    pub fn new(grid: Vec<f64>, patterns: Vec<Vec<f64>>) -> Result<Self> {
        if patterns.is_empty() {
            return domain("ensemble needs at least one pattern");
        }
        if let Some(p) = patterns.iter().find(|p| p.len() != grid.len()) {
            return Err(BeamformError::DimensionMismatch { expected: grid.len(), actual: p.len() });
        }
        Ok(PatternEnsemble { grid, patterns })
    }

    /// Builds an ensemble of peak-normalized patterns.
    pub fn normalized(grid: Vec<f64>, raw: &[Vec<f64>]) -> Result<Self> {
        let patterns = raw.iter().map(|p| normalize_pattern(p)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, patterns)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn patterns(&self) -> &[Vec<f64>] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Elementwise mean pattern, accumulated as offsets from the first
    /// pattern so identical patterns average to themselves exactly.
    pub fn mean_pattern(&self) -> Vec<f64> {
        let t = self.patterns.len() as f64;
        let first = &self.patterns[0];
        (0..self.grid.len())
            .map(|j| first[j] + self.patterns.iter().map(|p| p[j] - first[j]).sum::<f64>() / t)
            .collect()
    }

    pub fn mean_spectrum(&self) -> Result<SpectrumGrid> {
        SpectrumGrid::new(self.grid.clone(), self.mean_pattern())
    }
}

/// `(1/T) Σ_i ‖P_i − P̄‖₂` with `P̄` the mean pattern.
pub fn dispersion(ens: &PatternEnsemble) -> Result<f64> {
    if ens.is_empty() {
        return domain("dispersion of an empty ensemble");
    }
    let mean = ens.mean_pattern();
    let total: f64 =
        ens.patterns().iter().map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).sum();
    Ok(total / ens.len() as f64)
}

/// Smallest `k_θ` with `wᴴRw − p0 ≤ k_θ` over the whole interval set
/// `R̂ − Γ ⪯ R ⪯ R̂ + Γ`. The supremum is attained at `R̂ + Γ`.
pub fn one_sided_robustness_measure(
    w: &Beamformer,
    rhat: &HermitianMatrix,
    gamma: &HermitianMatrix,
    p0: f64,
) -> Result<f64> {
    if !(p0 >= 0.0) {
        return domain(format!("reference power must be nonnegative, got {p0}"));
    }
    Ok((worst_case_power(w, rhat, gamma)? - p0).max(0.0))
}

/// Directions of the `count` largest strict interior local maxima, in
/// descending order of value.
pub fn find_peaks(spectrum: &SpectrumGrid, count: usize) -> Vec<f64> {
    let v = spectrum.values();
    let mut peaks: Vec<(f64, f64)> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .map(|i| (spectrum.thetas()[i], v[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.into_iter().take(count).map(|(t, _)| t).collect()
}

/// True when two distinct strict local maxima of the spectrum match `doa_a`
/// and `doa_b` one-to-one, each within `tol_deg` degrees. Angles in radians.
pub fn resolution_check(spectrum: &SpectrumGrid, doa_a: f64, doa_b: f64, tol_deg: f64) -> Result<bool> {
    if doa_a == doa_b {
        return domain("resolution check needs two distinct directions");
    }
    let tol = tol_deg.to_radians();
    let peaks = find_peaks(spectrum, usize::MAX);
    for (i, &p) in peaks.iter().enumerate() {
        for &q in &peaks[i + 1..] {
            if ((p - doa_a).abs() <= tol && (q - doa_b).abs() <= tol)
                || ((p - doa_b).abs() <= tol && (q - doa_a).abs() <= tol)
            {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
