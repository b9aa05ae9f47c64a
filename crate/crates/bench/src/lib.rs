//! Shared fixtures for the criterion benches.

use ddjcs_core::numerics::{draw_complex_gaussian, RandomSource, Stream};
use ddjcs_core::{Case, ComplexGrid, SystemConfig};

/// Grid sizes benchmarked by default.
pub const CASES: [Case; 3] = [Case::new(1024, 64), Case::A, Case::B];

/// A unit-variance complex Gaussian grid with a fixed seed.
pub fn noise_grid(rows: usize, cols: usize) -> ComplexGrid {
    let mut rng = RandomSource::new(0xbe_7c, Stream::Data);
    ComplexGrid::from_vec(rows, cols, draw_complex_gaussian(&mut rng, rows * cols, 1.0))
        .expect("length matches dims")
}

pub fn config_for(case: Case) -> SystemConfig {
    case.apply(&SystemConfig::default())
}
