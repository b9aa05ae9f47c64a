//! Pilot interpolation: band-limited (DFT) along frequency, natural cubic
//! spline along time.

use num_complex::Complex64;
use rustfft::FftDirection;

use super::transform::fft_in_place;
use crate::error::{Error, Result};

/// Offset and spacing of a uniform comb covering `target_len` exactly.
fn comb_geometry(positions: &[usize], target_len: usize) -> Option<(usize, usize)> {
    let first = *positions.first()?;
    let step = if positions.len() > 1 { positions[1].checked_sub(first)? } else { target_len };
    if step == 0 || step * positions.len() != target_len || first >= step {
        return None;
    }
    let uniform = positions.iter().enumerate().all(|(p, &pos)| pos == first + p * step);
    uniform.then_some((first, step))
}

/// Band-limited interpolation of comb samples to every position in
/// `0..target_len`.
///
/// The `P` pilot samples are transformed, the spectrum is zero-padded in the
/// middle to `target_len` bins (an even-length Nyquist bin is split
/// between both halves) and transformed back. The result is the periodic
/// trigonometric interpolant through the samples, exact for any sum of
/// exponentials whose period divides the comb and whose frequencies fit in
/// `P` bins.
pub fn dft_interpolate_columns(
    samples: &[Complex64],
    pilot_rows: &[usize],
    target_len: usize,
) -> Result<Vec<Complex64>> {
    if samples.len() != pilot_rows.len() {
        return Err(Error::LengthMismatch(samples.len(), pilot_rows.len()));
    }
    let (offset, step) = comb_geometry(pilot_rows, target_len)
        .ok_or_else(|| Error::NonUniformComb(pilot_rows.to_vec(), target_len))?;
    let p = samples.len();

    let mut spectrum = samples.to_vec();
    fft_in_place(&mut spectrum, FftDirection::Forward);

    let mut padded = vec![Complex64::new(0.0, 0.0); target_len];
    for (k, &x) in spectrum.iter().enumerate() {
        if p % 2 == 0 && k == p / 2 && step > 1 {
            padded[k] += x * 0.5;
            padded[target_len - k] += x * 0.5;
        } else if k <= (p - 1) / 2 || (p % 2 == 0 && k == p / 2) {
            padded[k] += x;
        } else {
            padded[target_len - (p - k)] += x;
        }
    }
    fft_in_place(&mut padded, FftDirection::Inverse);

    let scale = 1.0 / p as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); target_len];
    for (i, z) in padded.into_iter().enumerate() {
        out[(offset + i) % target_len] = z * scale;
    }
    Ok(out)
}

/// Second derivatives of the natural cubic spline through `(x, y)`.
fn natural_spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut moments = vec![0.0; n];
    if n < 3 {
        return moments;
    }
    // Thomas algorithm on the interior equations.
    let interior = n - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    for i in 1..interior {
        let lower = x[i + 1] - x[i];
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    moments[interior] = rhs[interior - 1] / diag[interior - 1];
    for i in (0..interior - 1).rev() {
        moments[i + 1] = (rhs[i] - upper[i] * moments[i + 2]) / diag[i];
    }
    moments
}

fn eval_spline(x: &[f64], y: &[f64], moments: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return y[0];
    }
    let last = x.len() - 1;
    if t >= x[last] {
        return y[last];
    }
    let i = x.partition_point(|&xi| xi <= t) - 1;
    let h = x[i + 1] - x[i];
    let a = (x[i + 1] - t) / h;
    let b = (t - x[i]) / h;
    a * y[i] + b * y[i + 1] + ((a * a * a - a) * moments[i] + (b * b * b - b) * moments[i + 1]) * h * h / 6.0
}

/// Natural cubic spline through pilot samples, evaluated at `0..target_len`.
///
/// Real and imaginary parts are interpolated independently; positions
/// before the first or after the last pilot hold the nearest pilot value.
pub fn spline_interpolate_rows(
    samples: &[Complex64],
    pilot_cols: &[usize],
    target_len: usize,
) -> Result<Vec<Complex64>> {
    if samples.len() != pilot_cols.len() {
        return Err(Error::LengthMismatch(samples.len(), pilot_cols.len()));
    }
    let increasing = pilot_cols.windows(2).all(|w| w[0] < w[1]);
    if pilot_cols.len() < 2 || !increasing || pilot_cols.last().is_some_and(|&c| c >= target_len) {
        return Err(Error::TooFewPilots(pilot_cols.to_vec()));
    }
    let x: Vec<f64> = pilot_cols.iter().map(|&c| c as f64).collect();
    let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
    let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
    let m_re = natural_spline_moments(&x, &re);
    let m_im = natural_spline_moments(&x, &im);
    Ok((0..target_len)
        .map(|t| {
            let t = t as f64;
            Complex64::new(eval_spline(&x, &re, &m_re, t), eval_spline(&x, &im, &m_im, t))
        })
        .collect())
}
