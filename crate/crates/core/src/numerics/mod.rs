//! Complex grids, unitary transforms, interpolators and seeded draws.

mod grid;
mod interp;
mod random;
mod transform;

pub use grid::ComplexGrid;
pub use interp::{dft_interpolate_columns, spline_interpolate_rows};
pub use random::{draw_complex_gaussian, RandomSource, Stream};
pub use transform::{circular_convolve_2d, isfft, sfft};
