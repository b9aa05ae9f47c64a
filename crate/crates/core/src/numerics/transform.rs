//! Unitary DFTs along grid axes and the symplectic pair built from them.
//!
//! With `F_K[i, k] = exp(-j 2 pi i k / K) / sqrt(K)`:
//!
//! * `isfft(X) = F_M X F_N^H` maps delay-Doppler to frequency-time,
//! * `sfft(Y) = F_M^H Y F_N` maps frequency-time back to delay-Doppler.
//!
//! Both preserve the Frobenius norm, so a single DD pulse of power `P`
//! spreads over the FT grid with per-bin power `P / (M N)`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::ComplexGrid;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Unnormalized in-place DFT of a single vector.
pub(crate) fn fft_in_place(buf: &mut [Complex64], direction: FftDirection) {
    if buf.len() > 1 {
        plan(buf.len(), direction).process(buf);
    }
}

/// Unnormalized DFT of every row (along the column index).
fn fft_rows(grid: &mut ComplexGrid, direction: FftDirection) {
    let cols = grid.cols();
    if cols > 1 && !grid.is_empty() {
        plan(cols, direction).process(grid.as_mut_slice());
    }
}

/// Unnormalized DFT of every column (along the row index).
fn fft_cols(grid: &mut ComplexGrid, direction: FftDirection) {
    if grid.rows() > 1 && !grid.is_empty() {
        let mut t = grid.transpose();
        fft_rows(&mut t, direction);
        *grid = t.transpose();
    }
}

fn unitary_scale(grid: &mut ComplexGrid) {
    let n = grid.len();
    if n > 0 {
        grid.scale(1.0 / (n as f64).sqrt());
    }
}

/// Delay-Doppler to frequency-time: `F_M X F_N^H`.
pub fn isfft(x_dd: &ComplexGrid) -> ComplexGrid {
    let mut out = x_dd.clone();
    fft_cols(&mut out, FftDirection::Forward);
    fft_rows(&mut out, FftDirection::Inverse);
    unitary_scale(&mut out);
    out
}

/// Frequency-time to delay-Doppler: `F_M^H Y F_N`, the inverse of [`isfft`].
pub fn sfft(y_ft: &ComplexGrid) -> ComplexGrid {
    let mut out = y_ft.clone();
    fft_cols(&mut out, FftDirection::Inverse);
    fft_rows(&mut out, FftDirection::Forward);
    unitary_scale(&mut out);
    out
}

/// Unnormalized 2-D circular convolution
/// `c[l, k] = sum a[l', k'] b[(l - l') mod M, (k - k') mod N]`.
///
/// Ties to the symplectic pair by `sfft(isfft(a) . isfft(b)) * sqrt(MN) = a (*) b`.
pub fn circular_convolve_2d(a: &ComplexGrid, b: &ComplexGrid) -> Result<ComplexGrid> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let forward = |g: &ComplexGrid| {
        let mut g = g.clone();
        fft_cols(&mut g, FftDirection::Forward);
        fft_rows(&mut g, FftDirection::Forward);
        g
    };
    let mut prod = forward(a).hadamard(&forward(b))?;
    fft_cols(&mut prod, FftDirection::Inverse);
    fft_rows(&mut prod, FftDirection::Inverse);
    prod.scale(1.0 / prod.len().max(1) as f64);
    Ok(prod)
}
