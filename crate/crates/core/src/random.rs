//! Random instance generators shared by the oracle suites, tests and benches.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::complex_gaussian;
use crate::linalg::{CMatrix, CVector, HermitianMatrix};

/// Vector with i.i.d. CN(0, 1) entries.
pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| complex_gaussian(rng, 1.0)))
}

/// Hermitian matrix `(G + Gᴴ)/2` with Gaussian `G`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    HermitianMatrix::symmetrized(g)
}

/// Hermitian positive-definite matrix `G Gᴴ / n + floor·I`.
pub fn hpd<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> HermitianMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng, 1.0));
    HermitianMatrix::symmetrized((&g * g.adjoint()).unscale(n as f64)).add_identity(floor)
}

/// Sample covariance of `l` Gaussian snapshots drawn with covariance `I`;
/// singular when `l < n`.
pub fn wishart<R: Rng + ?Sized>(rng: &mut R, n: usize, l: usize) -> HermitianMatrix {
    let x = CMatrix::from_fn(n, l, |_, _| complex_gaussian(rng, 1.0));
    HermitianMatrix::symmetrized((&x * x.adjoint()).unscale(l as f64))
}
