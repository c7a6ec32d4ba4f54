//! Fixtures shared by the benchmarks.

use robust_capon_core::prelude::*;

pub struct Fixture {
    pub scenario: SourceScenario,
    pub rhat: HermitianMatrix,
    pub grid: Vec<f64>,
}

/// Reference scenario, one 25-snapshot sample covariance, 200-point grid.
pub fn reference(seed: u64) -> Fixture {
    let scenario = SourceScenario::reference();
    let snapshots = generate_snapshots(&scenario, 25, seed).expect("reference scenario is valid");
    let rhat = sample_covariance(&snapshots).expect("nonempty snapshots");
    let grid = uniform_grid(200).expect("grid size is valid");
    Fixture { scenario, rhat, grid }
}
