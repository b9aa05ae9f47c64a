//! Reference implementations used as test oracles. Everything here is a
//! direct transcription of a defining sum or closed form, kept independent
//! of the library's fast paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use ddjcs_core::channel::PathParams;
use ddjcs_core::numerics::{draw_complex_gaussian, RandomSource, Stream};
use ddjcs_core::{ComplexGrid, SystemConfig};
use num_complex::Complex64;

pub fn random_grid(rows: usize, cols: usize, seed: u64) -> ComplexGrid {
    let mut rng = RandomSource::new(seed, Stream::Data);
    ComplexGrid::from_vec(rows, cols, draw_complex_gaussian(&mut rng, rows * cols, 1.0)).unwrap()
}

pub fn rel_err(a: &ComplexGrid, b: &ComplexGrid) -> f64 {
    assert_eq!(a.dims(), b.dims());
    let diff: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm_sqr()).sum();
    (diff / b.energy().max(f64::MIN_POSITIVE)).sqrt()
}

/// `F_M X F_N^H` by its double sum.
pub fn isfft_direct(x: &ComplexGrid) -> ComplexGrid {
    let (m, n) = x.dims();
    let norm = 1.0 / ((m * n) as f64).sqrt();
    ComplexGrid::from_fn(m, n, |mi, ni| {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..m {
            for k in 0..n {
                let turns = (mi * l) as f64 / m as f64 - (ni * k) as f64 / n as f64;
                acc += x[(l, k)] * Complex64::from_polar(1.0, -2.0 * PI * turns);
            }
        }
        acc * norm
    })
}

/// `F_M^H Y F_N` by its double sum.
pub fn sfft_direct(y: &ComplexGrid) -> ComplexGrid {
    let (m, n) = y.dims();
    let norm = 1.0 / ((m * n) as f64).sqrt();
    ComplexGrid::from_fn(m, n, |l, k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for mi in 0..m {
            for ni in 0..n {
                let turns = (mi * l) as f64 / m as f64 - (ni * k) as f64 / n as f64;
                acc += y[(mi, ni)] * Complex64::from_polar(1.0, 2.0 * PI * turns);
            }
        }
        acc * norm
    })
}

/// Unnormalized circular convolution by its quadruple sum.
pub fn convolve_direct(a: &ComplexGrid, b: &ComplexGrid) -> ComplexGrid {
    let (m, n) = a.dims();
    ComplexGrid::from_fn(m, n, |l, k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for l2 in 0..m {
            for k2 in 0..n {
                acc += a[(l2, k2)] * b[((l + m - l2) % m, (k + n - k2) % n)];
            }
        }
        acc
    })
}

/// One FT channel bin evaluated straight from the path list.
pub fn channel_bin(paths: &[PathParams], config: &SystemConfig, m: usize, n: usize) -> Complex64 {
    paths
        .iter()
        .map(|p| {
            let phase = 2.0
                * PI
                * (p.nu_hz * n as f64 * config.symbol_duration_s - m as f64 * config.subcarrier_spacing_hz * p.tau_s);
            p.alpha * Complex64::new(phase.cos(), phase.sin())
        })
        .sum()
}

pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Exact bit error rate of Gray-coded square 16-QAM on AWGN at symbol SNR `snr`.
pub fn qam16_ber(snr: f64) -> f64 {
    let a = (snr / 5.0).sqrt();
    0.75 * q_function(a) + 0.5 * q_function(3.0 * a) - 0.25 * q_function(5.0 * a)
}

/// Pool-adjacent-violators fit constrained to be non-increasing.
pub fn isotonic_non_increasing(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb));
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Largest relative gap between a curve and its non-increasing fit.
pub fn isotonic_deviation(y: &[f64]) -> f64 {
    isotonic_non_increasing(y)
        .iter()
        .zip(y)
        .map(|(f, v)| if *f == 0.0 { (v - f).abs() } else { ((v - f) / f).abs() })
        .fold(0.0, f64::max)
}
