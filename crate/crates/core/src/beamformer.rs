//! Weight and spectrum solvers.
//!
//! Every solver here minimizes the output power `wᴴ M w` over a feasible set
//! of beamformers for some effective covariance `M`: plain Capon (`M = R̂`),
//! diagonally loaded, eigenvalue-thresholded, Bayesian-mixed, or the
//! unbalanced loading `M = R̂ + Γ`, which is also the exact worst case of the
//! interval uncertainty set `R̂ − Γ ⪯ R ⪯ R̂ + Γ`. The globally robust
//! variants pick the loading level by root-finding on the optimal value.

use num_complex::Complex64;

use crate::array::{steering_vector, ArrayGeometry};
use crate::covariance::{eigendecompose, gamma_matrix, partition_subspaces, GammaSpec};
use crate::error::{domain, BeamformError, Result};
use crate::linalg::{compose, CVector, HermitianMatrix};

/// Geometric bracket for the loading parameter `k` of the globally robust
/// solvers before any expansion.
pub const K_BRACKET: (f64, f64) = (1e-12, 1e12);

/// Relative tolerance on `φ(k) = τ` that a globally robust solve must meet.
pub const ROOT_REL_TOL: f64 = 1e-8;

const BISECTION_MAX_ITER: usize = 2000;
const BRACKET_EXPANSIONS: usize = 60;

/// A weight vector, optionally tagged with the look direction it serves.
#[derive(Clone, Debug, PartialEq)]
pub struct Beamformer {
    weights: CVector,
    theta: Option<f64>,
}

impl Beamformer {
    pub fn new(weights: CVector) -> Self {
        Beamformer { weights, theta: None }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn weights(&self) -> &CVector {
        &self.weights
    }

    pub fn into_weights(self) -> CVector {
        self.weights
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `e^{iφ} w`; all powers are unchanged by this rotation.
    pub fn rotated(&self, phase: f64) -> Self {
        Beamformer { weights: self.weights.map(|z| z * Complex64::from_polar(1.0, phase)), theta: self.theta }
    }

    pub fn norm_squared(&self) -> f64 {
        self.weights.norm_squared()
    }
}

/// Power values over an ascending direction grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    thetas: Vec<f64>,
    values: Vec<f64>,
}

impl SpectrumGrid {
    pub fn new(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thetas.len() != values.len() {
            return Err(BeamformError::DimensionMismatch { expected: thetas.len(), actual: values.len() });
        }
        if thetas.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("spectrum grid must be strictly increasing");
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return domain(format!("spectrum values must be nonnegative, got {v}"));
        }
        Ok(SpectrumGrid { thetas, values })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest grid step, used as the peak-matching resolution.
    pub fn step(&self) -> f64 {
        self.thetas.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `m` equally spaced directions covering `[−π/2, π/2]` inclusive.
pub fn uniform_grid(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return domain(format!("grid needs at least 2 points, got {m}"));
    }
    let half = std::f64::consts::FRAC_PI_2;
    let step = 2.0 * half / (m - 1) as f64;
    Ok((0..m).map(|i| if i == m - 1 { half } else { -half + step * i as f64 }).collect())
}

/// Feasible set of beamformers for one look direction.
#[derive(Clone, Debug)]
pub enum ConstraintSet {
    /// `{w : wᴴâ = 1}`: the steering vector is taken as exactly known.
    Singleton { steering: CVector },
    /// `{w : wᴴ â âᴴ w − ε₂ wᴴ R̄₂ w ≥ 1}`.
    QuadraticRegularized { steering: CVector, eps2: f64, reg: HermitianMatrix },
}

impl ConstraintSet {
    pub fn singleton(steering: CVector) -> Result<Self> {
        check_nonzero(&steering)?;
        Ok(ConstraintSet::Singleton { steering })
    }

    pub fn quadratic(steering: CVector, eps2: f64, reg: HermitianMatrix) -> Result<Self> {
        check_nonzero(&steering)?;
        if !(eps2 >= 0.0 && eps2.is_finite()) {
            return domain(format!("eps2 must be finite and nonnegative, got {eps2}"));
        }
        reg.check_len(steering.len())?;
        if !reg.is_psd() {
            return domain("regularizer must be positive semidefinite");
        }
        Ok(ConstraintSet::QuadraticRegularized { steering, eps2, reg })
    }

    pub fn steering(&self) -> &CVector {
        match self {
            ConstraintSet::Singleton { steering } | ConstraintSet::QuadraticRegularized { steering, .. } => steering,
        }
    }

    /// `Q = â âᴴ − ε₂ R̄₂` (rank one for the singleton set).
    pub fn quadratic_matrix(&self) -> HermitianMatrix {
        match self {
            ConstraintSet::Singleton { steering } => HermitianMatrix::outer(steering, 1.0),
            ConstraintSet::QuadraticRegularized { steering, eps2, reg } => HermitianMatrix::symmetrized(
                HermitianMatrix::outer(steering, 1.0).into_inner() - reg.as_matrix().scale(*eps2),
            ),
        }
    }
}

fn check_nonzero(v: &CVector) -> Result<()> {
    if v.norm_squared() > 0.0 {
        Ok(())
    } else {
        domain("steering vector must be nonzero")
    }
}

/// Capon (MPDR) weights `R⁻¹a / (aᴴR⁻¹a)`, the minimizer of `wᴴRw` subject
/// to `wᴴa = 1`.
pub fn capon_weights(r: &HermitianMatrix, a: &CVector) -> Result<Beamformer> {
    r.check_len(a.len())?;
    check_nonzero(a)?;
    let f = r.factor()?;
    let y = f.solve(a);
    let denom = a.dotc(&y).re;
    Ok(Beamformer::new(y.unscale(denom)))
}

/// Optimal Capon output power `1 / (aᴴR⁻¹a)`.
pub fn capon_power(r: &HermitianMatrix, a: &CVector) -> Result<f64> {
    r.check_len(a.len())?;
    check_nonzero(a)?;
    Ok(1.0 / r.factor()?.inverse_quad_form(a))
}

pub fn capon_spectrum(r: &HermitianMatrix, thetas: &[f64], geometry: &ArrayGeometry) -> Result<SpectrumGrid> {
    r.check_len(geometry.n_elements)?;
    let f = r.factor()?;
    let values = thetas
        .iter()
        .map(|&t| Ok(1.0 / f.inverse_quad_form(&steering_vector(geometry, t)?)))
        .collect::<Result<Vec<_>>>()?;
    SpectrumGrid::new(thetas.to_vec(), values)
}

/// `wᴴRw`, with rounding-level negatives clipped to zero.
pub fn beamformer_power(w: &Beamformer, r: &HermitianMatrix) -> Result<f64> {
    let p = r.quad_form(w.weights())?;
    if p < -1e-10 * r.frobenius_norm().max(1.0) * w.norm_squared() {
        return domain(format!("negative output power {p}; covariance is not PSD"));
    }
    Ok(p.max(0.0))
}

/// Exact worst-case output power over the interval set,
/// `max_{R̂−Γ ⪯ R ⪯ R̂+Γ} wᴴRw = wᴴ(R̂+Γ)w`.
pub fn worst_case_power(w: &Beamformer, rhat: &HermitianMatrix, gamma: &HermitianMatrix) -> Result<f64> {
    beamformer_power(w, &rhat.add(gamma)?)
}

/// `R̂ + Γ` with `Γ` built from the eigenvectors of `R̂`.
pub fn udl_covariance(rhat: &HermitianMatrix, spec: &GammaSpec) -> Result<HermitianMatrix> {
    let gamma = gamma_matrix(&eigendecompose(rhat), spec)?;
    rhat.add(&gamma)
}

/// Capon spectrum of the unbalanced diagonally loaded covariance `R̂ + Γ`.
pub fn udl_spectrum(
    rhat: &HermitianMatrix,
    spec: &GammaSpec,
    thetas: &[f64],
    geometry: &ArrayGeometry,
) -> Result<SpectrumGrid> {
    capon_spectrum(&udl_covariance(rhat, spec)?, thetas, geometry)
}

/// `1 / (aᴴ U_v Σ_v⁻¹ U_vᴴ a)` from the `N − K` smallest eigenpairs of `R`.
pub fn music_pseudospectrum(
    r: &HermitianMatrix,
    k: usize,
    thetas: &[f64],
    geometry: &ArrayGeometry,
) -> Result<SpectrumGrid> {
    r.check_len(geometry.n_elements)?;
    let ed = eigendecompose(r);
    let part = partition_subspaces(&ed, k)?;
    let floor = 1e-14 * ed.eigenvalues[0].abs().max(f64::MIN_POSITIVE);
    if part.noise_eigenvalues.iter().any(|&l| l <= floor) {
        return Err(BeamformError::Singular { condition: r.condition_estimate() });
    }
    let inv: Vec<f64> = part.noise_eigenvalues.iter().map(|l| 1.0 / l).collect();
    let values = thetas
        .iter()
        .map(|&t| {
            let a = steering_vector(geometry, t)?;
            let proj = part.noise_basis.adjoint() * &a;
            let q: f64 = proj.iter().zip(&inv).map(|(z, w)| z.norm_sqr() * w).sum();
            Ok(1.0 / q)
        })
        .collect::<Result<Vec<_>>>()?;
    SpectrumGrid::new(thetas.to_vec(), values)
}

/// Solution of `min wᴴMw s.t. wᴴQw ≥ 1`.
#[derive(Clone, Debug)]
pub enum RegularizedOutcome {
    Optimal { beamformer: Beamformer, objective: f64, lambda_max: f64 },
    Infeasible { lambda_max: f64 },
}

impl RegularizedOutcome {
    pub fn into_result(self) -> Result<(Beamformer, f64)> {
        match self {
            RegularizedOutcome::Optimal { beamformer, objective, .. } => Ok((beamformer, objective)),
            RegularizedOutcome::Infeasible { lambda_max } => Err(BeamformError::Infeasible { lambda_max }),
        }
    }
}

/// Solves `min wᴴMw s.t. wᴴQw ≥ 1` through the pencil `(Q, M)`: the
/// optimum is `1/λ_max` where `λ_max` is the top eigenvalue of
/// `M^{-1/2} Q M^{-1/2}`, attained at `w = M^{-1/2} u / √λ_max`.
pub fn regularized_constraint_weights(m: &HermitianMatrix, cset: &ConstraintSet) -> Result<RegularizedOutcome> {
    m.check_len(cset.steering().len())?;
    let q = cset.quadratic_matrix();
    let ed = eigendecompose(m);
    let top = ed.eigenvalues[0];
    let bottom = *ed.eigenvalues.last().expect("nonempty");
    if !(bottom > 1e-14 * top.abs()) || !(bottom > 0.0) {
        return Err(BeamformError::Singular { condition: m.condition_estimate() });
    }
    let inv_sqrt: Vec<f64> = ed.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
    let whiten = compose(&ed.eigenvectors, &inv_sqrt);
    let pencil = HermitianMatrix::symmetrized(whiten.as_matrix() * q.as_matrix() * whiten.as_matrix());
    let ped = eigendecompose(&pencil);
    let lambda_max = ped.eigenvalues[0];
    if !(lambda_max > 1e-14 * pencil.frobenius_norm()) {
        return Ok(RegularizedOutcome::Infeasible { lambda_max });
    }
    let u = ped.eigenvectors.column(0).into_owned();
    let w = (whiten.as_matrix() * u).unscale(lambda_max.sqrt());
    Ok(RegularizedOutcome::Optimal { beamformer: Beamformer::new(w), objective: 1.0 / lambda_max, lambda_max })
}

/// `min_{w ∈ 𝒲} wᴴMw` for either constraint kind.
pub fn min_power(m: &HermitianMatrix, cset: &ConstraintSet) -> Result<(Beamformer, f64)> {
    match cset {
        ConstraintSet::Singleton { steering } => {
            let w = capon_weights(m, steering)?;
            let p = beamformer_power(&w, m)?;
            Ok((w, p))
        }
        ConstraintSet::QuadraticRegularized { .. } => regularized_constraint_weights(m, cset)?.into_result(),
    }
}

/// Loading parameter `k` of the globally robust solvers. The effective
/// loading is `C / (4k)`; `Infinite` means no loading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Loading {
    Finite(f64),
    Infinite,
}

impl Loading {
    /// Multiplier `1/(4k)` applied to the loading matrix.
    pub fn loading_scale(&self) -> f64 {
        match self {
            Loading::Finite(k) => 1.0 / (4.0 * k),
            Loading::Infinite => 0.0,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Loading::Infinite)
    }
}

#[derive(Clone, Debug)]
pub struct GlobalSolution {
    pub k: Loading,
    pub beamformer: Beamformer,
    /// `φ(k)`, equal to `τ` up to [`ROOT_REL_TOL`].
    pub objective: f64,
}

/// Globally robust beamformer with a quadratic (weighted) loading penalty:
/// finds `k` with `φ(k) = min_{w∈𝒲} wᴴ(R̂ + C/(4k))w = τ`.
///
/// `weight` is `C`; pass the identity for plain diagonal loading. A `τ` equal
/// to the unloaded optimum returns [`Loading::Infinite`] with the unloaded
/// weights; a smaller `τ` has no solution.
pub fn globally_robust_loading(
    rhat: &HermitianMatrix,
    cset: &ConstraintSet,
    tau: f64,
    weight: &HermitianMatrix,
) -> Result<GlobalSolution> {
    rhat.check_len(weight.dim())?;
    if !(weight.min_eigenvalue() > 0.0) {
        return domain("loading weight must be positive definite");
    }
    let loaded = |k: f64| HermitianMatrix::symmetrized(rhat.as_matrix() + weight.as_matrix().scale(1.0 / (4.0 * k)));
    let (w0, opt0) = min_power(rhat, cset)?;
    let phi = |k: f64| min_power(&loaded(k), cset).map(|(_, p)| p);
    match solve_excess(opt0, tau, phi)? {
        None => Ok(GlobalSolution { k: Loading::Infinite, beamformer: w0, objective: opt0 }),
        Some(k) => {
            let (w, objective) = min_power(&loaded(k), cset)?;
            Ok(GlobalSolution { k: Loading::Finite(k), beamformer: w, objective })
        }
    }
}

/// Shared root-finder for `φ(k) = τ` with `φ` continuous, decreasing, and
/// `φ(∞) = opt0`. Returns `None` for `τ = opt0` (i.e. `k = ∞`).
fn solve_excess(opt0: f64, tau: f64, phi: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    if !tau.is_finite() {
        return domain(format!("target objective must be finite, got {tau}"));
    }
    let exact_tol = 1e-12 * opt0.abs().max(f64::MIN_POSITIVE);
    if tau < opt0 - exact_tol {
        return domain(format!("target objective {tau} is below the unloaded optimum {opt0}"));
    }
    if tau <= opt0 + exact_tol {
        return Ok(None);
    }
    let (mut lo, mut hi) = K_BRACKET;
    let mut expansions = 0;
    while phi(lo)? < tau {
        lo *= 1e-3;
        expansions += 1;
        if expansions > BRACKET_EXPANSIONS {
            return Err(BeamformError::NoConvergence { what: "loading bracket (small k)", iterations: expansions });
        }
    }
    expansions = 0;
    while phi(hi)? > tau {
        hi *= 1e3;
        expansions += 1;
        if expansions > BRACKET_EXPANSIONS {
            return Err(BeamformError::NoConvergence { what: "loading bracket (large k)", iterations: expansions });
        }
    }
    // Geometric bisection: k spans many decades.
    let mut best = (f64::INFINITY, hi);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        let value = phi(mid)?;
        let rel = (value - tau).abs() / tau.abs();
        if rel < best.0 {
            best = (rel, mid);
        }
        if rel <= 1e-14 || !(mid > lo && mid < hi) {
            break;
        }
        if value > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > ROOT_REL_TOL {
        return Err(BeamformError::NoConvergence { what: "loading bisection", iterations: BISECTION_MAX_ITER });
    }
    Ok(Some(best.1))
}

/// Solution of the quartically regularized problem
/// `min wᴴR̂w + (wᴴw)²/(4k) s.t. âᴴw = 1`.
#[derive(Clone, Debug)]
pub struct QuarticSolution {
    pub beamformer: Beamformer,
    /// Lagrange multiplier `λ` in `R̂w + (wᴴw/2k) w = λâ`.
    pub multiplier: f64,
    /// Fixed point `s* = ‖w‖²`.
    pub norm_sq: f64,
    pub objective: f64,
}

/// Solves the quartic problem through its stationarity condition: the
/// optimum is the Capon beamformer of `R̂ + (s/2k)·I` for the unique `s`
/// with `‖w(s)‖² = s`, found by bisection on `[0, ‖w(0)‖²]`.
pub fn quartic_regularized_weights(rhat: &HermitianMatrix, a: &CVector, k: f64) -> Result<QuarticSolution> {
    if !(k > 0.0) {
        return domain(format!("k must be positive, got {k}"));
    }
    let at = |s: f64| -> Result<(CVector, f64)> {
        let m = rhat.add_identity(s / (2.0 * k));
        let f = m.factor()?;
        let y = f.solve(a);
        let denom = a.dotc(&y).re;
        Ok((y.unscale(denom), 1.0 / denom))
    };
    let (w0, lambda0) = at(0.0)?;
    let s_hi0 = w0.norm_squared();
    if k.is_infinite() {
        let objective = rhat.quad_form(&w0)?;
        return Ok(QuarticSolution { beamformer: Beamformer::new(w0), multiplier: lambda0, norm_sq: s_hi0, objective });
    }
    let (mut lo, mut hi) = (0.0, s_hi0);
    let mut iterations = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi {
        iterations += 1;
        if iterations > BISECTION_MAX_ITER {
            return Err(BeamformError::NoConvergence { what: "quartic fixed point", iterations });
        }
        let mid = 0.5 * (lo + hi);
        let (w, _) = at(mid)?;
        let g = w.norm_squared() - mid;
        if g > 0.0 {
            lo = mid;
        } else if g < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let (w, multiplier) = at(s)?;
    let ww = w.norm_squared();
    if (ww - s).abs() > 1e-10 * s.max(f64::MIN_POSITIVE) {
        return Err(BeamformError::NoConvergence { what: "quartic fixed point", iterations });
    }
    let objective = rhat.quad_form(&w)? + ww * ww / (4.0 * k);
    Ok(QuarticSolution { beamformer: Beamformer::new(w), multiplier, norm_sq: s, objective })
}

/// Globally robust beamformer for the squared-Frobenius similarity: finds
/// `k` with the quartic optimum equal to `τ`.
pub fn globally_robust_quartic(rhat: &HermitianMatrix, a: &CVector, tau: f64) -> Result<GlobalSolution> {
    let w0 = capon_weights(rhat, a)?;
    let opt0 = beamformer_power(&w0, rhat)?;
    let phi = |k: f64| quartic_regularized_weights(rhat, a, k).map(|s| s.objective);
    match solve_excess(opt0, tau, phi)? {
        None => Ok(GlobalSolution { k: Loading::Infinite, beamformer: w0, objective: opt0 }),
        Some(k) => {
            let sol = quartic_regularized_weights(rhat, a, k)?;
            Ok(GlobalSolution { k: Loading::Finite(k), beamformer: sol.beamformer, objective: sol.objective })
        }
    }
}

/// Optimal power `min_{w∈𝒲(θ)} wᴴMw` over a direction grid, where `𝒲(θ)`
/// is built from the steering vector at each grid point.
pub fn min_power_spectrum(
    m: &HermitianMatrix,
    thetas: &[f64],
    geometry: &ArrayGeometry,
    constraint: &ConstraintKind,
) -> Result<SpectrumGrid> {
    match constraint {
        ConstraintKind::Singleton => capon_spectrum(m, thetas, geometry),
        ConstraintKind::QuadraticRegularized { eps2, reg } => {
            let values = thetas
                .iter()
                .map(|&t| {
                    let cset = ConstraintSet::quadratic(steering_vector(geometry, t)?, *eps2, reg.clone())?;
                    regularized_constraint_weights(m, &cset)?.into_result().map(|(_, p)| p)
                })
                .collect::<Result<Vec<_>>>()?;
            SpectrumGrid::new(thetas.to_vec(), values)
        }
    }
}

/// Direction-independent description of the feasible set `𝒲(θ)`.
#[derive(Clone, Debug)]
pub enum ConstraintKind {
    Singleton,
    QuadraticRegularized { eps2: f64, reg: HermitianMatrix },
}

impl ConstraintKind {
    pub fn at(&self, geometry: &ArrayGeometry, theta: f64) -> Result<ConstraintSet> {
        let a = steering_vector(geometry, theta)?;
        match self {
            ConstraintKind::Singleton => ConstraintSet::singleton(a),
            ConstraintKind::QuadraticRegularized { eps2, reg } => ConstraintSet::quadratic(a, *eps2, reg.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{true_covariance, SourceScenario};
    use crate::covariance::diagonal_load;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    /// Random `v` with `vᴴa = 1`.
    fn feasible_point(g: &mut ChaCha20Rng, a: &CVector) -> CVector {
        let v = random::complex_vector(g, a.len());
        let c = v.dotc(a);
        v.map(|z| z / c.conj())
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = uniform_grid(200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], -std::f64::consts::FRAC_PI_2);
        assert_eq!(g[199], std::f64::consts::FRAC_PI_2);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(uniform_grid(1).is_err());
    }

    #[test]
    fn spectrum_grid_validation() {
        assert!(SpectrumGrid::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SpectrumGrid::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(SpectrumGrid::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(SpectrumGrid::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn capon_identity() {
        let g = ArrayGeometry::ula(6).unwrap();
        let a = steering_vector(&g, 0.3).unwrap();
        let r = HermitianMatrix::identity(6);
        let w = capon_weights(&r, &a).unwrap();
        assert!((w.weights() - a.unscale(6.0)).norm() < 1e-14);
        assert!((beamformer_power(&w, &r).unwrap() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn capon_distortionless_and_optimal() {
        let mut g = rng(1);
        for _ in 0..10 {
            let r = random::hpd(&mut g, 5, 0.05);
            let a = random::complex_vector(&mut g, 5);
            let w = capon_weights(&r, &a).unwrap();
            assert!((w.weights().dotc(&a) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            let p = beamformer_power(&w, &r).unwrap();
            assert!((p - capon_power(&r, &a).unwrap()).abs() < 1e-10 * p);
            for _ in 0..100 {
                let v = feasible_point(&mut g, &a);
                assert!((v.dotc(&a) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
                assert!(p <= r.quad_form(&v).unwrap() + 1e-10);
            }
        }
    }

    #[test]
    fn capon_keeps_signal_of_interest() {
        let s = SourceScenario::reference();
        let r0 = true_covariance(&s).unwrap();
        let a = steering_vector(&s.geometry, (-30.0_f64).to_radians()).unwrap();
        assert!(capon_power(&r0, &a).unwrap() >= 1.0);
    }

    #[test]
    fn flat_spectrum_for_white_noise() {
        let g = ArrayGeometry::ula(8).unwrap();
        let grid = uniform_grid(50).unwrap();
        let sp = capon_spectrum(&HermitianMatrix::scaled_identity(8, 0.25), &grid, &g).unwrap();
        assert!(sp.values().iter().all(|v| (v - 0.25 / 8.0).abs() < 1e-14));
    }

    #[test]
    fn spectrum_matches_weights_power() {
        let s = SourceScenario::reference();
        let r0 = true_covariance(&s).unwrap();
        let grid = uniform_grid(37).unwrap();
        let sp = capon_spectrum(&r0, &grid, &s.geometry).unwrap();
        for (t, v) in grid.iter().zip(sp.values()) {
            let w = capon_weights(&r0, &steering_vector(&s.geometry, *t).unwrap()).unwrap();
            assert!((beamformer_power(&w, &r0).unwrap() - v).abs() < 1e-10 * v);
        }
    }

    #[test]
    fn power_linearity_and_basis() {
        let mut g = rng(2);
        let a = random::hpd(&mut g, 4, 0.1);
        let b = random::hpd(&mut g, 4, 0.1);
        let w = Beamformer::new(random::complex_vector(&mut g, 4));
        let sum = beamformer_power(&w, &a.add(&b).unwrap()).unwrap();
        let parts = beamformer_power(&w, &a).unwrap() + beamformer_power(&w, &b).unwrap();
        assert!((sum - parts).abs() < 1e-10 * sum);
        let mut e1 = CVector::zeros(3);
        e1[0] = Complex64::new(1.0, 0.0);
        assert_eq!(beamformer_power(&Beamformer::new(e1), &HermitianMatrix::identity(3)).unwrap(), 1.0);
        assert!(beamformer_power(&w, &HermitianMatrix::identity(3)).is_err());
    }

    #[test]
    fn phase_rotation_leaves_power() {
        let mut g = rng(3);
        let r = random::hpd(&mut g, 5, 0.1);
        let w = capon_weights(&r, &random::complex_vector(&mut g, 5)).unwrap();
        let p = beamformer_power(&w, &r).unwrap();
        for phase in [0.3, 1.7, -2.9] {
            assert!((beamformer_power(&w.rotated(phase), &r).unwrap() - p).abs() < 1e-12 * p);
        }
    }

    #[test]
    fn udl_reductions() {
        let mut g = rng(4);
        let geo = ArrayGeometry::ula(6).unwrap();
        let rhat = random::wishart(&mut g, 6, 12);
        let grid = uniform_grid(40).unwrap();
        let plain = capon_spectrum(&rhat, &grid, &geo).unwrap();
        let zero = udl_spectrum(&rhat, &GammaSpec::new(0.0, 0.0, 2).unwrap(), &grid, &geo).unwrap();
        let bal = udl_spectrum(&rhat, &GammaSpec::new(0.01, 0.01, 2).unwrap(), &grid, &geo).unwrap();
        let dl = capon_spectrum(&diagonal_load(&rhat, 0.01).unwrap(), &grid, &geo).unwrap();
        for i in 0..grid.len() {
            assert!((plain.values()[i] - zero.values()[i]).abs() <= 1e-10 * plain.values()[i]);
            assert!((dl.values()[i] - bal.values()[i]).abs() <= 1e-10 * dl.values()[i]);
        }
    }

    #[test]
    fn music_flat_for_identity_and_scale_free() {
        let geo = ArrayGeometry::ula(5).unwrap();
        let grid = uniform_grid(30).unwrap();
        let sp = music_pseudospectrum(&HermitianMatrix::identity(5), 1, &grid, &geo).unwrap();
        // The eigenbasis of I comes back as coordinate axes, and every
        // steering entry has unit modulus, so aᴴP_v a = N − 1 everywhere.
        assert!(sp.values().iter().all(|v| (v - 0.25).abs() < 1e-12));

        let s = SourceScenario::reference();
        let r0 = true_covariance(&s).unwrap();
        let grid = uniform_grid(200).unwrap();
        let base = music_pseudospectrum(&r0, 3, &grid, &s.geometry).unwrap();
        let scaled = music_pseudospectrum(&r0.scale(7.5), 3, &grid, &s.geometry).unwrap();
        for (a, b) in base.values().iter().zip(scaled.values()) {
            assert!((a * 7.5 - b).abs() < 1e-8 * b);
        }
    }

    #[test]
    fn music_rejects_rank_deficient() {
        let geo = ArrayGeometry::ula(4).unwrap();
        let a = steering_vector(&geo, 0.2).unwrap();
        let r = HermitianMatrix::outer(&a, 1.0);
        assert!(music_pseudospectrum(&r, 1, &[0.0, 0.1], &geo).is_err());
    }

    #[test]
    fn regularized_rank_one_matches_capon() {
        let mut g = rng(5);
        for _ in 0..10 {
            let m = random::hpd(&mut g, 4, 0.1);
            let a = random::complex_vector(&mut g, 4);
            let cset = ConstraintSet::quadratic(a.clone(), 0.0, HermitianMatrix::identity(4)).unwrap();
            let RegularizedOutcome::Optimal { beamformer, objective, .. } =
                regularized_constraint_weights(&m, &cset).unwrap()
            else {
                panic!("rank-one constraint is feasible");
            };
            let capon = capon_power(&m, &a).unwrap();
            assert!((objective - capon).abs() <= 1e-10 * capon);
            assert!((beamformer.weights().dotc(&a).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn regularized_infeasible_when_q_negative() {
        let geo = ArrayGeometry::ula(4).unwrap();
        let a = steering_vector(&geo, 0.1).unwrap();
        let cset = ConstraintSet::quadratic(a, 5.0, HermitianMatrix::identity(4)).unwrap();
        let out = regularized_constraint_weights(&HermitianMatrix::identity(4), &cset).unwrap();
        assert!(matches!(out, RegularizedOutcome::Infeasible { .. }));
        assert!(matches!(out.into_result(), Err(BeamformError::Infeasible { .. })));
    }

    #[test]
    fn regularized_optimum_beats_feasible_samples() {
        let mut g = rng(6);
        let m = random::hpd(&mut g, 3, 0.2);
        let a = random::complex_vector(&mut g, 3);
        let reg = random::hpd(&mut g, 3, 0.1);
        let cset = ConstraintSet::quadratic(a, 0.05, reg).unwrap();
        let q = cset.quadratic_matrix();
        let (w, obj) = regularized_constraint_weights(&m, &cset).unwrap().into_result().unwrap();
        assert!((q.quad_form(w.weights()).unwrap() - 1.0).abs() < 1e-10);
        assert!((m.quad_form(w.weights()).unwrap() - obj).abs() < 1e-10 * obj);
        for _ in 0..20_000 {
            let v = random::complex_vector(&mut g, 3);
            let qv = q.quad_form(&v).unwrap();
            if qv > 0.0 {
                assert!(obj <= m.quad_form(&v).unwrap() / qv * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn worst_case_cases() {
        let mut g = rng(7);
        let rhat = random::hpd(&mut g, 4, 0.1);
        let w = Beamformer::new(random::complex_vector(&mut g, 4));
        let base = beamformer_power(&w, &rhat).unwrap();
        assert!((worst_case_power(&w, &rhat, &HermitianMatrix::zeros(4)).unwrap() - base).abs() < 1e-12 * base);
        let eps = 0.3;
        let wc = worst_case_power(&w, &rhat, &HermitianMatrix::scaled_identity(4, eps)).unwrap();
        assert!((wc - base - eps * w.norm_squared()).abs() < 1e-10 * wc);
    }

    #[test]
    fn loading_monotonicity() {
        let mut g = rng(8);
        let rhat = random::wishart(&mut g, 6, 8);
        let a = random::complex_vector(&mut g, 6);
        let mut prev_obj = 0.0;
        let mut prev_norm = f64::INFINITY;
        for eps in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let m = diagonal_load(&rhat, eps).unwrap();
            let w = capon_weights(&m, &a).unwrap();
            let obj = capon_power(&m, &a).unwrap();
            assert!(obj >= prev_obj);
            assert!(w.norm_squared() <= prev_norm * (1.0 + 1e-12));
            prev_obj = obj;
            prev_norm = w.norm_squared();
        }
    }

    #[test]
    fn global_loading_t_zero_is_infinite() {
        let mut g = rng(9);
        let rhat = random::hpd(&mut g, 5, 0.1);
        let a = random::complex_vector(&mut g, 5);
        let cset = ConstraintSet::singleton(a.clone()).unwrap();
        let opt = capon_power(&rhat, &a).unwrap();
        let sol = globally_robust_loading(&rhat, &cset, opt, &HermitianMatrix::identity(5)).unwrap();
        assert!(sol.k.is_infinite());
        assert!((sol.beamformer.weights() - capon_weights(&rhat, &a).unwrap().weights()).norm() < 1e-14);
        assert!(globally_robust_loading(&rhat, &cset, 0.9 * opt, &HermitianMatrix::identity(5)).is_err());
    }

    #[test]
    fn global_loading_solves_target() {
        let mut g = rng(10);
        let rhat = random::hpd(&mut g, 5, 0.05);
        let a = random::complex_vector(&mut g, 5);
        let cset = ConstraintSet::singleton(a.clone()).unwrap();
        let opt = capon_power(&rhat, &a).unwrap();
        let weight = random::hpd(&mut g, 5, 0.5);
        let mut prev_k = f64::INFINITY;
        for t in [1e-6, 1e-3, 0.1, 1.0, 100.0] {
            let tau = opt + t;
            let sol = globally_robust_loading(&rhat, &cset, tau, &weight).unwrap();
            let Loading::Finite(k) = sol.k else { panic!("finite k expected") };
            assert!(k < prev_k);
            prev_k = k;
            let m = HermitianMatrix::symmetrized(rhat.as_matrix() + weight.as_matrix().scale(1.0 / (4.0 * k)));
            let direct = capon_weights(&m, &a).unwrap();
            assert!((capon_power(&m, &a).unwrap() - tau).abs() <= 1e-8 * tau);
            assert!((direct.weights() - sol.beamformer.weights()).norm() <= 1e-8 * direct.weights().norm());
        }
    }

    #[test]
    fn global_loading_with_quadratic_constraint() {
        let mut g = rng(11);
        let rhat = random::hpd(&mut g, 4, 0.05);
        let a = random::complex_vector(&mut g, 4) * Complex64::new(2.0, 0.0);
        let cset = ConstraintSet::quadratic(a, 0.01, HermitianMatrix::identity(4)).unwrap();
        let (_, opt) = min_power(&rhat, &cset).unwrap();
        let sol = globally_robust_loading(&rhat, &cset, opt * 1.5, &HermitianMatrix::identity(4)).unwrap();
        assert!((sol.objective - opt * 1.5).abs() <= 1e-8 * opt * 1.5);
    }

    #[test]
    fn quartic_reduces_to_capon_for_large_k() {
        let mut g = rng(12);
        let rhat = random::hpd(&mut g, 4, 0.1);
        let a = random::complex_vector(&mut g, 4);
        let capon = capon_weights(&rhat, &a).unwrap();
        let inf = quartic_regularized_weights(&rhat, &a, f64::INFINITY).unwrap();
        assert!((inf.beamformer.weights() - capon.weights()).norm() < 1e-14);
        let big = quartic_regularized_weights(&rhat, &a, 1e12).unwrap();
        assert!((big.beamformer.weights() - capon.weights()).norm() < 1e-8 * capon.weights().norm());
        assert!(quartic_regularized_weights(&rhat, &a, 0.0).is_err());
    }

    #[test]
    fn quartic_stationarity_and_feasibility() {
        let mut g = rng(13);
        for k in [0.01, 0.5, 20.0] {
            let rhat = random::hpd(&mut g, 5, 0.05);
            let a = random::complex_vector(&mut g, 5);
            let sol = quartic_regularized_weights(&rhat, &a, k).unwrap();
            let w = sol.beamformer.weights();
            assert!((a.dotc(w) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            let grad = rhat.as_matrix() * w + w.scale(w.norm_squared() / (2.0 * k)) - a.scale(sol.multiplier);
            assert!(grad.norm() <= 1e-8, "residual {}", grad.norm());
        }
    }

    #[test]
    fn global_quartic_hits_target() {
        let mut g = rng(14);
        let rhat = random::hpd(&mut g, 4, 0.1);
        let a = random::complex_vector(&mut g, 4);
        let opt = capon_power(&rhat, &a).unwrap();
        let sol = globally_robust_quartic(&rhat, &a, opt + 0.2).unwrap();
        assert!(!sol.k.is_infinite());
        assert!((sol.objective - opt - 0.2).abs() <= 1e-8 * (opt + 0.2));
        assert!(globally_robust_quartic(&rhat, &a, opt).unwrap().k.is_infinite());
    }
}
