//! Dense complex Hermitian matrices.
//!
//! Every covariance in the crate (true, sample, loaded, thresholded, mixed,
//! and the loading matrix itself) is a [`HermitianMatrix`]. Construction
//! checks Hermitian symmetry and then stores the exactly symmetrized matrix,
//! so downstream eigen-solvers always see a Hermitian input.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{BeamformError, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Absolute tolerance (scaled by the largest entry) for the Hermitian check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalue floor used for PSD feasibility checks.
pub const PSD_TOL: f64 = 1e-10;

/// Smallest accepted squared ratio of Cholesky pivots; below this the matrix
/// is treated as numerically singular.
pub const PIVOT_RATIO_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking it is square and Hermitian within
    /// [`HERMITIAN_TOL`] relative to its largest entry.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(BeamformError::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let asymmetry = max_asymmetry(&m);
        if asymmetry > HERMITIAN_TOL * scale {
            return Err(BeamformError::NotHermitian { asymmetry });
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking. For results of operations that are
    /// Hermitian in exact arithmetic.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        HermitianMatrix(h)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn scaled_identity(n: usize, value: f64) -> Self {
        HermitianMatrix(CMatrix::from_diagonal_element(n, n, Complex64::new(value, 0.0)))
    }

    /// Rank-one matrix `power · v vᴴ`.
    pub fn outer(v: &CVector, power: f64) -> Self {
        Self::symmetrized((v * v.adjoint()).scale(power))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        HermitianMatrix(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    /// `‖self − other‖_F / ‖other‖_F` (absolute when `other` is zero).
    pub fn relative_distance(&self, other: &HermitianMatrix) -> f64 {
        let diff = (&self.0 - &other.0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let base = other.frobenius_norm();
        if base > 0.0 {
            diff / base
        } else {
            diff
        }
    }

    /// Real quadratic form `wᴴ A w`.
    pub fn quad_form(&self, w: &CVector) -> Result<f64> {
        self.check_len(w.len())?;
        Ok(w.dotc(&(&self.0 * w)).re)
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self> {
        self.check_len(other.dim())?;
        Ok(HermitianMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<Self> {
        self.check_len(other.dim())?;
        Ok(HermitianMatrix(&self.0 - &other.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(self.0.scale(s))
    }

    pub fn add_identity(&self, eps: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += Complex64::new(eps, 0.0);
        }
        HermitianMatrix(m)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    /// `λ_max / λ_min` over absolute eigenvalues; infinite when singular.
    pub fn condition_estimate(&self) -> f64 {
        let vals = self.eigenvalues();
        let max = vals.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
        let min = vals.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }

    /// Cholesky factor for solving systems with a positive-definite matrix.
    pub fn factor(&self) -> Result<HpdFactor> {
        match Cholesky::new(self.0.clone()) {
            Some(chol) => {
                let factor = HpdFactor { chol };
                let (min, max) = factor.pivot_range();
                if min > 0.0 && (min / max).powi(2) > PIVOT_RATIO_FLOOR {
                    Ok(factor)
                } else {
                    Err(BeamformError::Singular { condition: self.condition_estimate() })
                }
            }
            None => Err(BeamformError::Singular { condition: self.condition_estimate() }),
        }
    }

    /// Hermitian square root of a PSD matrix; negative eigenvalues within
    /// rounding are clamped to zero.
    pub fn psd_sqrt(&self) -> Result<HermitianMatrix> {
        let eig = SymmetricEigen::new(self.0.clone());
        if eig.eigenvalues.iter().any(|&l| l < -PSD_TOL * self.spectral_norm().max(1.0)) {
            return Err(BeamformError::Domain("square root of an indefinite matrix".into()));
        }
        let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        Ok(compose(&eig.eigenvectors, &roots))
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            Err(BeamformError::DimensionMismatch { expected: self.dim(), actual: n })
        } else {
            Ok(())
        }
    }
}

/// Cholesky factorization `A = L Lᴴ` of a Hermitian positive-definite matrix.
pub struct HpdFactor {
    chol: Cholesky<Complex64, Dyn>,
}

impl HpdFactor {
    pub fn solve(&self, b: &CVector) -> CVector {
        self.chol.solve(b)
    }

    /// `bᴴ A⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn inverse_quad_form(&self, b: &CVector) -> f64 {
        let mut z = b.clone();
        // The lower solve only reads the lower triangle of the dirty factor.
        let ok = self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        debug_assert!(ok);
        z.norm_squared()
    }

    fn pivot_range(&self) -> (f64, f64) {
        self.chol.l_dirty().diagonal().iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), z| (lo.min(z.re), hi.max(z.re)))
    }
}

/// `U diag(values) Uᴴ`.
pub(crate) fn compose(u: &CMatrix, values: &[f64]) -> HermitianMatrix {
    let mut scaled = u.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    HermitianMatrix::symmetrized(scaled * u.adjoint())
}

fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
