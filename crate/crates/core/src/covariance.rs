//! Covariance estimation and the covariance transforms used by the robust
//! beamformers: eigen-structure, diagonal loading, eigenvalue thresholding,
//! the unbalanced loading matrix `Γ`, Bayesian mixing, and a sampler for
//! members of the interval uncertainty set `{R : R̂ − Γ ⪯ R ⪯ R̂ + Γ, R ⪰ 0}`.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::array::SnapshotSet;
use crate::error::{domain, BeamformError, Result};
use crate::linalg::{compose, CMatrix, HermitianMatrix};
use crate::random;

/// Shrink attempts before [`sample_interval_member`] falls back to `R̂`.
const INTERVAL_RETRIES: usize = 40;

/// Eigen-decomposition with eigenvalues sorted in descending order and the
/// matching eigenvectors as columns of a unitary matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        compose(&self.eigenvectors, &self.eigenvalues)
    }

    /// `U diag(values) Uᴴ` with this decomposition's eigenvectors.
    pub fn with_eigenvalues(&self, values: &[f64]) -> Result<HermitianMatrix> {
        if values.len() != self.dim() {
            return Err(BeamformError::DimensionMismatch { expected: self.dim(), actual: values.len() });
        }
        Ok(compose(&self.eigenvectors, values))
    }
}

#[derive(Clone, Debug)]
pub struct SubspacePartition {
    pub signal_basis: CMatrix,
    pub noise_basis: CMatrix,
    pub signal_eigenvalues: Vec<f64>,
    pub noise_eigenvalues: Vec<f64>,
}

impl SubspacePartition {
    pub fn signal_projector(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(&self.signal_basis * self.signal_basis.adjoint())
    }

    pub fn noise_projector(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(&self.noise_basis * self.noise_basis.adjoint())
    }
}

/// Loading levels for the signal (`delta_signal`) and noise (`delta_noise`)
/// subspaces of the sample covariance, with `n_sources` signal dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSpec {
    pub delta_signal: f64,
    pub delta_noise: f64,
    pub n_sources: usize,
}

impl GammaSpec {
    pub fn new(delta_signal: f64, delta_noise: f64, n_sources: usize) -> Result<Self> {
        let spec = GammaSpec { delta_signal, delta_noise, n_sources };
        spec.check_deltas()?;
        Ok(spec)
    }

    fn check_deltas(&self) -> Result<()> {
        for (name, d) in [("delta_signal", self.delta_signal), ("delta_noise", self.delta_noise)] {
            if !(d >= 0.0 && d.is_finite()) {
                return domain(format!("{name} must be a finite nonnegative number, got {d}"));
            }
        }
        Ok(())
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_deltas()?;
        check_source_count(self.n_sources, n)
    }
}

fn check_source_count(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        domain(format!("source count {k} must satisfy 0 < K < N = {n}"))
    } else {
        Ok(())
    }
}

/// `(1/L) Σ x_l x_lᴴ`.
pub fn sample_covariance(snapshots: &SnapshotSet) -> Result<HermitianMatrix> {
    if snapshots.is_empty() {
        return domain("sample covariance of an empty snapshot set");
    }
    let x = snapshots.matrix();
    Ok(HermitianMatrix::symmetrized((x * x.adjoint()).unscale(snapshots.len() as f64)))
}

/// Hermitian eigen-decomposition, eigenvalues descending. Ties are ordered
/// arbitrarily; only basis-invariant quantities should be derived from
/// eigenvectors of repeated eigenvalues.
pub fn eigendecompose(r: &HermitianMatrix) -> EigenDecomposition {
    let eig = SymmetricEigen::new(r.as_matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let columns: Vec<_> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    EigenDecomposition { eigenvalues, eigenvectors: CMatrix::from_columns(&columns) }
}

/// Checked variant of [`eigendecompose`] for raw matrices.
pub fn eigendecompose_matrix(m: CMatrix) -> Result<EigenDecomposition> {
    Ok(eigendecompose(&HermitianMatrix::new(m)?))
}

/// First `k` eigenvectors span the signal subspace, the rest the noise
/// subspace.
pub fn partition_subspaces(ed: &EigenDecomposition, k: usize) -> Result<SubspacePartition> {
    let n = ed.dim();
    check_source_count(k, n)?;
    Ok(SubspacePartition {
        signal_basis: ed.eigenvectors.columns(0, k).into_owned(),
        noise_basis: ed.eigenvectors.columns(k, n - k).into_owned(),
        signal_eigenvalues: ed.eigenvalues[..k].to_vec(),
        noise_eigenvalues: ed.eigenvalues[k..].to_vec(),
    })
}

/// `R + eps·I`.
pub fn diagonal_load(r: &HermitianMatrix, eps: f64) -> Result<HermitianMatrix> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return domain(format!("loading level must be finite and nonnegative, got {eps}"));
    }
    Ok(r.add_identity(eps))
}

/// Raises every eigenvalue below `mu·λ₁` to `mu·λ₁`; `mu = 0` is the
/// identity map and `mu = 1` gives `λ₁·I`.
pub fn eigen_threshold(r: &HermitianMatrix, mu: f64) -> Result<HermitianMatrix> {
    if !(0.0..=1.0).contains(&mu) {
        return domain(format!("threshold ratio must lie in [0, 1], got {mu}"));
    }
    let ed = eigendecompose(r);
    let floor = mu * ed.eigenvalues[0];
    let lifted: Vec<f64> =
        ed.eigenvalues.iter().enumerate().map(|(i, &l)| if i == 0 { l } else { l.max(floor) }).collect();
    ed.with_eigenvalues(&lifted)
}

/// `Γ = U blockdiag(δ₁ I_K, δ₂ I_{N−K}) Uᴴ` from the eigenvectors of the
/// sample covariance.
pub fn gamma_matrix(ed: &EigenDecomposition, spec: &GammaSpec) -> Result<HermitianMatrix> {
    let n = ed.dim();
    spec.validate(n)?;
    let diag: Vec<f64> =
        (0..n).map(|i| if i < spec.n_sources { spec.delta_signal } else { spec.delta_noise }).collect();
    ed.with_eigenvalues(&diag)
}

/// `(1 − β) R̂ + β R̄`.
pub fn bayesian_combine(rhat: &HermitianMatrix, rbar: &HermitianMatrix, beta: f64) -> Result<HermitianMatrix> {
    if !(0.0..=1.0).contains(&beta) {
        return domain(format!("mixing weight must lie in [0, 1], got {beta}"));
    }
    rhat.check_len(rbar.dim())?;
    Ok(HermitianMatrix::symmetrized(rhat.as_matrix().scale(1.0 - beta) + rbar.as_matrix().scale(beta)))
}

/// Draws a member `R = R̂ + Γ^{1/2} H Γ^{1/2}` of the interval set with a
/// random Hermitian `H`, `‖H‖₂ ≤ 1`. The congruence keeps
/// `R̂ − Γ ⪯ R ⪯ R̂ + Γ`; `H` is halved until `R ⪰ 0`, falling back to `R̂`.
pub fn sample_interval_member(rhat: &HermitianMatrix, gamma: &HermitianMatrix, seed: u64) -> Result<HermitianMatrix> {
    rhat.check_len(gamma.dim())?;
    let n = rhat.dim();
    let root = gamma.psd_sqrt()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = random::hermitian(&mut rng, n);
    let norm = h.spectral_norm();
    if norm == 0.0 {
        return Ok(rhat.clone());
    }
    // Mix of interior draws and draws on the boundary ‖H‖₂ = 1.
    let radius = if rng.random_bool(0.3) { 1.0 } else { rng.random::<f64>() };
    let mut perturbation = root.as_matrix() * h.as_matrix().scale(radius / norm) * root.as_matrix();
    for _ in 0..INTERVAL_RETRIES {
        let candidate = HermitianMatrix::symmetrized(rhat.as_matrix() + &perturbation);
        if candidate.is_psd() {
            return Ok(candidate);
        }
        perturbation.scale_mut(0.5);
    }
    Ok(rhat.clone())
}

/// Hermitian symmetry residual `max |A_ij − conj(A_ji)|` relative to the
/// largest entry.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}
