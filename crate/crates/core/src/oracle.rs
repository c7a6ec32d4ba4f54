//! Brute-force property suites. Each suite draws random instances, solves
//! them with the library, and compares against sampling or a closed form.
//! The `oracle` CLI subcommand runs them all.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::array::{output_sinr, steering_vector, true_covariance, SourceScenario};
use crate::beamformer::{
    beamformer_power, capon_power, capon_weights, globally_robust_loading, quartic_regularized_weights,
    regularized_constraint_weights, worst_case_power, Beamformer, ConstraintSet, Loading, RegularizedOutcome,
};
use crate::covariance::{bayesian_combine, eigendecompose, gamma_matrix, sample_interval_member, GammaSpec};
use crate::error::Result;
use crate::linalg::{CVector, HermitianMatrix};
use crate::random;

/// Outcome of one suite: the worst observed violation against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

/// Random feasible point of `{w : wᴴa = 1}`: the minimum-norm solution plus
/// a scaled component orthogonal to `a`.
pub fn random_distortionless<R: Rng + ?Sized>(rng: &mut R, a: &CVector, scale: f64) -> CVector {
    let aa = a.norm_squared();
    let v = random::complex_vector(rng, a.len()).scale(scale);
    let v_perp = &v - a * (a.dotc(&v) / aa);
    a.unscale(aa) + v_perp
}

fn instance(rng: &mut ChaCha20Rng, n: usize) -> (HermitianMatrix, CVector) {
    (random::hpd(rng, n, 0.05), random::complex_vector(rng, n))
}

/// Capon weights never lose to random distortionless weights.
pub fn capon_optimality(seed: u64, cases: usize, samples: usize) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let (r, a) = instance(&mut rng, 5);
        let best = beamformer_power(&capon_weights(&r, &a)?, &r)?;
        for _ in 0..samples {
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            let v = random_distortionless(&mut rng, &a, scale);
            worst = worst.max(best - r.quad_form(&v)?);
        }
    }
    Ok(OracleReport { name: "capon-optimality", cases, worst, tolerance: 1e-10 })
}

/// Interval-set dominance: every sampled member is below `R̂ + Γ` along
/// random directions, and the robust Capon power is attained at `R̂ + Γ`.
pub fn interval_dominance(seed: u64, members: usize, directions: usize) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = 6;
    let rhat = random::wishart(&mut rng, n, 12);
    let gamma = gamma_matrix(&eigendecompose(&rhat), &GammaSpec::new(2.0, 0.05, 2)?)?;
    let upper = rhat.add(&gamma)?;
    let gamma_norm = gamma.spectral_norm();
    let ws: Vec<CVector> = (0..directions).map(|_| random::complex_vector(&mut rng, n)).collect();
    let a = random::complex_vector(&mut rng, n);
    let robust = capon_power(&upper, &a)?;
    let mut worst = 0.0_f64;
    for m in 0..members {
        let r = sample_interval_member(&rhat, &gamma, seed ^ (m as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))?;
        for w in &ws {
            let excess = r.quad_form(w)? - upper.quad_form(w)?;
            worst = worst.max(excess / (w.norm_squared() * gamma_norm).max(f64::MIN_POSITIVE));
        }
        worst = worst.max((capon_power(&r, &a)? - robust) / robust);
    }
    let w = capon_weights(&upper, &a)?;
    worst = worst.max((worst_case_power(&w, &rhat, &gamma)? - robust).abs() / robust);
    Ok(OracleReport { name: "interval-dominance", cases: members, worst, tolerance: 1e-10 })
}

/// Globally robust loading hits its budget and matches loaded Capon.
pub fn global_loading(seed: u64, cases: usize) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let (r, a) = instance(&mut rng, 4);
        let opt0 = capon_power(&r, &a)?;
        let tau = opt0 * (1.0 + 10f64.powf(rng.random_range(-3.0..1.0)));
        let id = HermitianMatrix::identity(4);
        let sol = globally_robust_loading(&r, &ConstraintSet::singleton(a.clone())?, tau, &id)?;
        worst = worst.max((sol.objective - tau).abs() / tau);
        let Loading::Finite(k) = sol.k else {
            worst = f64::INFINITY;
            continue;
        };
        let direct = capon_weights(&r.add_identity(1.0 / (4.0 * k)), &a)?;
        let gap = (sol.beamformer.weights() - direct.weights()).norm() / direct.weights().norm();
        worst = worst.max(gap);
    }
    Ok(OracleReport { name: "global-loading", cases, worst, tolerance: 1e-8 })
}

/// Quartic solution is no worse than random distortionless points.
pub fn quartic(seed: u64, cases: usize, samples: usize) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let (r, a) = instance(&mut rng, 3);
        let k = 10f64.powf(rng.random_range(-2.0..2.0));
        let sol = quartic_regularized_weights(&r, &a, k)?;
        let w = sol.beamformer.weights();
        for _ in 0..samples {
            let scale = 10f64.powf(rng.random_range(-4.0..1.0));
            let v = if rng.random_bool(0.5) {
                random_distortionless(&mut rng, &a, scale)
            } else {
                // Local perturbation of the solution inside the feasible set.
                let d = random_distortionless(&mut rng, &a, scale) - a.unscale(a.norm_squared());
                w + d
            };
            let vv = v.norm_squared();
            worst = worst.max(sol.objective - (r.quad_form(&v)? + vv * vv / (4.0 * k)) - 1e-8);
        }
    }
    Ok(OracleReport { name: "quartic", cases, worst: worst.max(0.0), tolerance: 0.0 })
}

/// Generalized-eigenproblem solver against adaptive random search over
/// directions of `ℂ³`; the search reports `vᴴMv / vᴴQv` for `vᴴQv > 0`.
pub fn regularized(seed: u64, cases: usize, samples: usize) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut done = 0;
    while done < cases {
        let (m, a) = instance(&mut rng, 3);
        let reg = random::hpd(&mut rng, 3, 0.1);
        let eps2 = rng.random_range(0.0..0.5) * a.norm_squared() / reg.spectral_norm();
        let cset = ConstraintSet::quadratic(a, eps2, reg)?;
        let RegularizedOutcome::Optimal { objective, .. } = regularized_constraint_weights(&m, &cset)? else {
            continue;
        };
        done += 1;
        let search = random_search_min(&mut rng, &m, &cset.quadratic_matrix(), samples)?;
        worst = worst.max((search - objective).abs() / objective);
    }
    Ok(OracleReport { name: "regularized", cases, worst, tolerance: 1e-3 })
}

/// Minimum of `vᴴMv / vᴴQv` over sampled `v` with `vᴴQv > 0`. Half the
/// budget samples globally, the rest shrinks a Gaussian cloud around the
/// incumbent.
pub fn random_search_min<R: Rng + ?Sized>(
    rng: &mut R,
    m: &HermitianMatrix,
    q: &HermitianMatrix,
    samples: usize,
) -> Result<f64> {
    let n = m.dim();
    let ratio = |v: &CVector| -> Result<Option<f64>> {
        let den = q.quad_form(v)?;
        Ok(if den > 0.0 { Some(m.quad_form(v)? / den) } else { None })
    };
    let mut best = (f64::INFINITY, random::complex_vector(rng, n));
    let global = samples / 2;
    for _ in 0..global {
        let v = random::complex_vector(rng, n);
        if let Some(x) = ratio(&v)? {
            if x < best.0 {
                best = (x, v.unscale(v.norm()));
            }
        }
    }
    let rounds = 50;
    let per_round = (samples - global) / rounds;
    let mut radius = 0.5;
    for _ in 0..rounds {
        for _ in 0..per_round {
            let v = &best.1 + random::complex_vector(rng, n).scale(radius);
            if let Some(x) = ratio(&v)? {
                if x < best.0 {
                    best = (x, v.unscale(v.norm()));
                }
            }
        }
        radius *= 0.75;
    }
    Ok(best.0)
}

/// Mixed-covariance and scaled-loading forms of the Bayesian beamformer
/// coincide, and `β = 0` is plain Capon.
pub fn bayesian(seed: u64, cases: usize) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let (rhat, a) = instance(&mut rng, 5);
        let rbar = random::hpd(&mut rng, 5, 0.1);
        let beta = rng.random_range(0.0..0.95);
        let mixed = capon_weights(&bayesian_combine(&rhat, &rbar, beta)?, &a)?;
        let loaded = HermitianMatrix::symmetrized(rhat.as_matrix() + rbar.as_matrix().scale(beta / (1.0 - beta)));
        let scaled = capon_weights(&loaded, &a)?;
        worst = worst.max((mixed.weights() - scaled.weights()).norm() / scaled.weights().norm());
        let zero = capon_weights(&bayesian_combine(&rhat, &rbar, 0.0)?, &a)?;
        if zero.weights() != capon_weights(&rhat, &a)?.weights() {
            worst = f64::INFINITY;
        }
    }
    Ok(OracleReport { name: "bayesian", cases, worst, tolerance: 1e-10 })
}

/// Capon at the exact covariance maximizes output SINR.
pub fn sinr(seed: u64, samples: usize) -> Result<OracleReport> {
    let scenario = SourceScenario::reference();
    let soi = scenario.soi()?;
    let a = steering_vector(&scenario.geometry, soi.doa)?;
    let w = capon_weights(&true_covariance(&scenario)?, &a)?;
    let best = output_sinr(&w, &scenario)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let v = Beamformer::new(random::complex_vector(&mut rng, scenario.n_elements()));
        worst = worst.max((output_sinr(&v, &scenario)? - best) / best);
    }
    Ok(OracleReport { name: "sinr", cases: samples, worst, tolerance: 1e-10 })
}

/// Every suite at its default size.
pub fn run_all(seed: u64) -> Result<Vec<OracleReport>> {
    Ok(vec![
        capon_optimality(seed, 20, 500)?,
        interval_dominance(seed, 1000, 100)?,
        global_loading(seed, 50)?,
        quartic(seed, 50, 100_000)?,
        regularized(seed, 50, 1_000_000)?,
        bayesian(seed, 50)?,
        sinr(seed, 1000)?,
    ])
}

/// Every suite with small sample sizes.
pub fn run_quick(seed: u64) -> Result<Vec<OracleReport>> {
    Ok(vec![
        capon_optimality(seed, 3, 200)?,
        interval_dominance(seed, 50, 20)?,
        global_loading(seed, 5)?,
        quartic(seed, 3, 2000)?,
        regularized(seed, 3, 100_000)?,
        bayesian(seed, 10)?,
        sinr(seed, 200)?,
    ])
}
