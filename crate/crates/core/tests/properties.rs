//! Statistical and exact-covariance checks that need whole-pipeline runs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use robust_capon_core::beamformer::quartic_regularized_weights;
use robust_capon_core::covariance::eigendecompose_matrix;
use robust_capon_core::experiment::{run_monte_carlo, ExperimentConfig, MethodSpec, SpectrumSource, TablePreset};
use robust_capon_core::oracle::{random_distortionless, random_search_min};
use robust_capon_core::prelude::*;
use robust_capon_core::random;

fn deg(d: f64) -> f64 {
    d.to_radians()
}

fn reference_doas() -> [f64; 3] {
    [deg(-30.0), deg(-26.0), deg(30.0)]
}

fn assert_peaks_near_doas(peaks: &[f64], step: f64) {
    assert_eq!(peaks.len(), 3, "{peaks:?}");
    for doa in reference_doas() {
        let nearest = peaks.iter().map(|p| (p - doa).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= step + 1e-12, "no peak near {:.1} deg: {peaks:?}", doa.to_degrees());
    }
}

#[test]
fn large_sample_covariance_is_consistent() {
    let scenario = SourceScenario::reference();
    let rhat = sample_covariance(&generate_snapshots(&scenario, 100_000, 3).unwrap()).unwrap();
    let r0 = true_covariance(&scenario).unwrap();
    assert!(rhat.relative_distance(&r0) < 0.05);
}

#[test]
fn noise_only_variance_is_unit() {
    let scenario = SourceScenario::new(ArrayGeometry::ula(4).unwrap(), vec![], 1.0, 0).unwrap();
    let rhat = sample_covariance(&generate_snapshots(&scenario, 100_000, 4).unwrap()).unwrap();
    for i in 0..4 {
        assert!((rhat.get(i, i).re - 1.0).abs() < 0.05);
    }
}

#[test]
fn mvdr_and_capon_maximize_sinr() {
    let scenario = SourceScenario::reference();
    let a = steering_vector(&scenario.geometry, scenario.soi().unwrap().doa).unwrap();
    let mvdr = mvdr_weights(&interference_noise_covariance(&scenario).unwrap(), &a).unwrap();
    let capon = capon_weights(&true_covariance(&scenario).unwrap(), &a).unwrap();
    let h_mvdr = output_sinr(&mvdr, &scenario).unwrap();
    let h_capon = output_sinr(&capon, &scenario).unwrap();
    assert!(h_mvdr >= h_capon - 1e-10 * h_capon);
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let w = Beamformer::new(random::complex_vector(&mut rng, 10));
        let h = output_sinr(&w, &scenario).unwrap();
        assert!(h <= h_mvdr && h <= h_capon);
    }
}

#[test]
fn eigendecomposition_reconstructs_and_shifts() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for n in [2, 5, 10] {
        let h = random::hermitian(&mut rng, n);
        let ed = eigendecompose(&h);
        assert!(ed.reconstruct().relative_distance(&h) < 1e-8);
        let eps = rng.random_range(0.1..2.0);
        let shifted = eigendecompose(&diagonal_load(&h, eps).unwrap());
        for (a, b) in shifted.eigenvalues.iter().zip(&ed.eigenvalues) {
            assert!((a - b - eps).abs() < 1e-10);
        }
        assert!(eigendecompose_matrix(h.as_matrix().clone()).is_ok());
    }
}

#[test]
fn interval_members_obey_both_orderings() {
    let scenario = SourceScenario::reference();
    let rhat = sample_covariance(&generate_snapshots(&scenario, 25, 14).unwrap()).unwrap();
    let gamma = gamma_matrix(&eigendecompose(&rhat), &GammaSpec::new(3.0, 0.01, 3).unwrap()).unwrap();
    let upper = rhat.add(&gamma).unwrap();
    let lower = rhat.sub(&gamma).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let ws: Vec<CVector> = (0..100).map(|_| random::complex_vector(&mut rng, 10)).collect();
    let a = steering_vector(&scenario.geometry, deg(-30.0)).unwrap();
    let w = capon_weights(&rhat, &a).unwrap();
    let p0 = beamformer_power(&w, &rhat).unwrap();
    let measure = one_sided_robustness_measure(&w, &rhat, &gamma, p0).unwrap();
    let worst = worst_case_power(&w, &rhat, &gamma).unwrap();
    for seed in 0..1000 {
        let r = sample_interval_member(&rhat, &gamma, seed).unwrap();
        assert!(upper.sub(&r).unwrap().min_eigenvalue() >= -1e-10);
        assert!(r.sub(&lower).unwrap().min_eigenvalue() >= -1e-10);
        for v in &ws {
            assert!(r.quad_form(v).unwrap() <= upper.quad_form(v).unwrap() + 1e-10);
        }
        let p = beamformer_power(&w, &r).unwrap();
        assert!(p <= worst + 1e-10);
        assert!(p - p0 <= measure + 1e-10);
    }
}

#[test]
fn capon_beats_random_feasible_points() {
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    for _ in 0..10 {
        let r = random::hpd(&mut rng, 6, 0.05);
        let a = random::complex_vector(&mut rng, 6);
        let best = beamformer_power(&capon_weights(&r, &a).unwrap(), &r).unwrap();
        for _ in 0..100 {
            let scale = rng.random_range(0.01..3.0);
            let v = random_distortionless(&mut rng, &a, scale);
            assert!(best <= r.quad_form(&v).unwrap() + 1e-10);
        }
    }
}

#[test]
fn signal_of_interest_is_not_suppressed() {
    let scenario = SourceScenario::reference();
    let r0 = true_covariance(&scenario).unwrap();
    let a = steering_vector(&scenario.geometry, deg(-30.0)).unwrap();
    assert!(capon_power(&r0, &a).unwrap() >= 1.0);
}

#[test]
fn exact_covariance_spectra_peak_at_doas() {
    let scenario = SourceScenario::reference();
    let r0 = true_covariance(&scenario).unwrap();
    let grid = uniform_grid(200).unwrap();
    let step = grid[1] - grid[0];
    let capon = capon_spectrum(&r0, &grid, &scenario.geometry).unwrap();
    assert_peaks_near_doas(&find_peaks(&capon, 3), step);
    let music = music_pseudospectrum(&r0, 3, &grid, &scenario.geometry).unwrap();
    assert_peaks_near_doas(&find_peaks(&music, 3), step);
    assert!(resolution_check(&music, deg(-30.0), deg(-26.0), 1.0).unwrap());
}

#[test]
fn noise_eigenvalues_of_exact_covariance() {
    let r0 = true_covariance(&SourceScenario::reference()).unwrap();
    let part = partition_subspaces(&eigendecompose(&r0), 3).unwrap();
    for l in &part.noise_eigenvalues {
        assert!((l - 1.0 / 32.0).abs() < 1e-10);
    }
}

#[test]
fn udl_without_noise_loading_tracks_music() {
    let scenario = SourceScenario::reference();
    let r0 = true_covariance(&scenario).unwrap();
    let grid = uniform_grid(200).unwrap();
    let udl = udl_spectrum(&r0, &GammaSpec::new(1e6, 0.0, 3).unwrap(), &grid, &scenario.geometry).unwrap();
    let music = music_pseudospectrum(&r0, 3, &grid, &scenario.geometry).unwrap();
    let mut a_sorted = find_peaks(&udl, 3);
    let mut b_sorted = find_peaks(&music, 3);
    assert_eq!(a_sorted.len(), 3);
    a_sorted.sort_by(f64::total_cmp);
    b_sorted.sort_by(f64::total_cmp);
    for (x, y) in a_sorted.iter().zip(&b_sorted) {
        assert!((x - y).abs() <= grid[1] - grid[0] + 1e-12);
    }
}

#[test]
fn estimated_capon_is_no_better_under_true_covariance() {
    let scenario = SourceScenario::reference();
    let r0 = true_covariance(&scenario).unwrap();
    let a = steering_vector(&scenario.geometry, deg(-30.0)).unwrap();
    let ideal = beamformer_power(&capon_weights(&r0, &a).unwrap(), &r0).unwrap();
    for seed in 0..20 {
        let rhat = sample_covariance(&generate_snapshots(&scenario, 25, seed).unwrap()).unwrap();
        let w = capon_weights(&rhat, &a).unwrap();
        assert!(beamformer_power(&w, &r0).unwrap() >= ideal - 1e-10 * ideal);
    }
}

#[test]
fn regularized_solver_matches_random_search() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 3 {
        let m = random::hpd(&mut rng, 3, 0.05);
        let a = random::complex_vector(&mut rng, 3);
        let reg = random::hpd(&mut rng, 3, 0.1);
        let eps2 = 0.3 * a.norm_squared() / reg.spectral_norm();
        let cset = ConstraintSet::quadratic(a, eps2, reg).unwrap();
        let RegularizedOutcome::Optimal { objective, .. } = regularized_constraint_weights(&m, &cset).unwrap() else {
            continue;
        };
        let search = random_search_min(&mut rng, &m, &cset.quadratic_matrix(), 1_000_000).unwrap();
        assert!((search - objective).abs() / objective <= 1e-3);
        assert!(objective <= search * (1.0 + 1e-12));
        checked += 1;
    }
}

#[test]
fn global_solution_is_self_consistent() {
    let mut rng = ChaCha20Rng::seed_from_u64(18);
    for _ in 0..10 {
        let rhat = random::hpd(&mut rng, 5, 0.01);
        let a = random::complex_vector(&mut rng, 5);
        let opt0 = capon_power(&rhat, &a).unwrap();
        let tau = opt0 * rng.random_range(1.01..5.0);
        let id = HermitianMatrix::identity(5);
        let sol = globally_robust_loading(&rhat, &ConstraintSet::singleton(a.clone()).unwrap(), tau, &id).unwrap();
        let Loading::Finite(k) = sol.k else { panic!("expected finite k") };
        let loaded = rhat.add_identity(1.0 / (4.0 * k));
        let w = capon_weights(&loaded, &a).unwrap();
        assert!((beamformer_power(&w, &loaded).unwrap() - tau).abs() / tau <= 1e-8);
        assert!((sol.beamformer.weights() - w.weights()).norm() / w.weights().norm() <= 1e-8);
    }
}

#[test]
fn quartic_stationarity_and_sampling() {
    let mut rng = ChaCha20Rng::seed_from_u64(19);
    for _ in 0..5 {
        let rhat = random::hpd(&mut rng, 3, 0.05);
        let a = random::complex_vector(&mut rng, 3);
        let k = rng.random_range(0.05..20.0);
        let sol = quartic_regularized_weights(&rhat, &a, k).unwrap();
        let w = sol.beamformer.weights();
        let g = rhat.as_matrix() * w + w * Complex64::new(w.norm_squared() / (2.0 * k), 0.0);
        let residual = (&g - &a * Complex64::new(sol.multiplier, 0.0)).norm();
        assert!(residual <= 1e-8 * g.norm().max(1.0), "residual {residual}");
        for _ in 0..10_000 {
            let scale = rng.random_range(0.001..3.0);
            let v = random_distortionless(&mut rng, &a, scale);
            let f = rhat.quad_form(&v).unwrap() + v.norm_squared().powi(2) / (4.0 * k);
            assert!(sol.objective <= f + 1e-8);
        }
    }
}

#[test]
fn averaged_heavy_loading_blurs_close_sources() {
    let mut failures = 0;
    for seed in 1..=10 {
        let res = run_monte_carlo(&ExperimentConfig::reference(seed, vec![MethodSpec::CaponDl { eps: 0.05 }])).unwrap();
        let mean = res.methods[0].mean_spectrum().unwrap();
        failures += !resolution_check(&mean, deg(-30.0), deg(-26.0), 1.5).unwrap() as usize;
    }
    assert!(failures >= 8, "{failures}");
}

#[test]
fn exact_covariance_spectrum_matches_closed_form() {
    let config = ExperimentConfig::reference(0, vec![MethodSpec::Capon]);
    let report = spectrum_command(&config, MethodSpec::Capon, SpectrumSource::ExactCovariance).unwrap();
    let values = report.spectrum.values();
    let thetas = report.spectrum.thetas();
    // Direct inversion of R₀ = A Aᴴ + σ² I.
    let n = 10;
    let mut r0 = CMatrix::from_diagonal_element(n, n, Complex64::new(1.0 / 32.0, 0.0));
    for doa in reference_doas() {
        let v = CVector::from_fn(n, |i, _| Complex64::from_polar(1.0, std::f64::consts::PI * i as f64 * doa.sin()));
        r0 += &v * v.adjoint();
    }
    let inv = r0.try_inverse().unwrap();
    let power = |t: f64| {
        let v = CVector::from_fn(n, |i, _| Complex64::from_polar(1.0, std::f64::consts::PI * i as f64 * t.sin()));
        1.0 / v.dotc(&(&inv * &v)).re
    };
    let peak = thetas.iter().map(|&t| power(t)).fold(f64::MIN, f64::max);
    for idx in [0, 37, 66, 120, 199] {
        let expected = power(thetas[idx]) / peak;
        assert!((values[idx] - expected).abs() <= 1e-9 * expected.max(1e-3), "index {idx}");
    }
}

#[test]
fn loading_trend_holds_in_most_seeds() {
    let seeds = 100;
    let mut ok = 0;
    for seed in 0..seeds {
        let d =
            run_monte_carlo(&ExperimentConfig::reference(seed, TablePreset::Table1.methods())).unwrap().dispersions();
        ok += d.windows(2).all(|p| p[1] <= p[0]) as usize;
    }
    assert!(ok * 10 >= seeds as usize * 9, "{ok}/{seeds}");
}
