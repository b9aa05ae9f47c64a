//! Doubly-selective channels in the FT and DD domains.
//!
//! After cyclic-prefix removal each FT bin sees a single complex gain
//! `H[m, n] = sum_q alpha_q exp(j 2 pi (nu_q n T - m delta_f tau_q))`, so the
//! simulator never generates time-domain samples. The pulse-shaping filter
//! is ideal over the occupied band.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, UserScenario, UserSpec, MAX_EXCESS_DELAY_S};
use crate::error::{Error, Result};
use crate::numerics::{draw_complex_gaussian, ComplexGrid, RandomSource};
use crate::waveform::UserAllocation;

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub alpha: Complex64,
    pub tau_s: f64,
    pub nu_hz: f64,
    /// Variance of `alpha`.
    pub omega: f64,
}

impl PathParams {
    /// Path with a fixed gain, mostly for tests.
    pub fn fixed(alpha: Complex64, tau_s: f64, nu_hz: f64) -> Self {
        Self {
            alpha,
            tau_s,
            nu_hz,
            omega: alpha.norm_sqr(),
        }
    }
}

/// Monostatic echo delay and Doppler.
pub fn two_way_params(range_m: f64, velocity_ms: f64, psi_rad: f64, config: &SystemConfig) -> (f64, f64) {
    let c = config.speed_of_light;
    (2.0 * range_m / c, 2.0 * config.carrier_hz / c * velocity_ms * psi_rad.cos())
}

/// BS-to-UE line-of-sight delay and Doppler.
pub fn one_way_params(range_m: f64, velocity_ms: f64, psi_rad: f64, config: &SystemConfig) -> (f64, f64) {
    let c = config.speed_of_light;
    (range_m / c, config.carrier_hz / c * velocity_ms * psi_rad.cos())
}

/// Free-space one-way power gain `(lambda / (4 pi R))^2`.
pub fn path_gain_comm(range_m: f64, config: &SystemConfig) -> f64 {
    (config.wavelength_m() / (4.0 * PI * range_m)).powi(2)
}

/// Radar-equation two-way power gain `lambda^2 sigma / ((4 pi)^3 R^4)`.
pub fn path_gain_sens(range_m: f64, config: &SystemConfig) -> f64 {
    config.wavelength_m().powi(2) * config.rcs_m2 / ((4.0 * PI).powi(3) * range_m.powi(4))
}

fn rayleigh(rng: &mut RandomSource, omega: f64) -> Complex64 {
    if omega > 0.0 {
        rng.complex_gaussian(omega)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Communication paths of one user: the line-of-sight path first, then
/// `num_paths - 1` scattered paths with excess delay uniform in
/// `[0, MAX_EXCESS_DELAY_S]`, a uniform arrival angle for the Doppler and
/// free-space loss over the longer path.
pub fn comm_paths(user: &UserSpec, config: &SystemConfig, rng: &mut RandomSource) -> Vec<PathParams> {
    let c = config.speed_of_light;
    let (tau, nu) = one_way_params(user.range_m, user.velocity_ms, user.motion_angle_rad, config);
    let omega = path_gain_comm(user.range_m, config);
    let mut paths = vec![PathParams {
        alpha: rayleigh(rng, omega),
        tau_s: tau,
        nu_hz: nu,
        omega,
    }];
    for _ in 1..user.num_paths {
        let excess = rng.random_range(0.0..=MAX_EXCESS_DELAY_S);
        let angle = rng.random_range(0.0..2.0 * PI);
        let omega = path_gain_comm(user.range_m + c * excess, config);
        paths.push(PathParams {
            alpha: rayleigh(rng, omega),
            tau_s: tau + excess,
            nu_hz: config.carrier_hz / c * user.velocity_ms * angle.cos(),
            omega,
        });
    }
    paths
}

/// One line-of-sight echo per user; multipath echoes are neglected.
pub fn sensing_paths(scenario: &UserScenario, config: &SystemConfig, rng: &mut RandomSource) -> Vec<PathParams> {
    scenario
        .users
        .iter()
        .map(|u| {
            let (tau_s, nu_hz) = two_way_params(u.range_m, u.velocity_ms, u.motion_angle_rad, config);
            let omega = path_gain_sens(u.range_m, config);
            PathParams {
                alpha: rayleigh(rng, omega),
                tau_s,
                nu_hz,
                omega,
            }
        })
        .collect()
}

/// `exp(-j 2 pi x)` with the argument reduced to `[0, 1)` first, which keeps
/// full precision for large `x`.
fn cis_turns(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * x.rem_euclid(1.0))
}

/// FT channel on the sub-grid `[m0, m0 + rows) x [n0, n0 + cols)`, with
/// absolute indices in the phases.
pub fn channel_ft_window(
    paths: &[PathParams],
    config: &SystemConfig,
    m0: usize,
    n0: usize,
    rows: usize,
    cols: usize,
) -> ComplexGrid {
    let df = config.subcarrier_spacing_hz;
    let t = config.symbol_duration_s;
    let mut grid = ComplexGrid::zeros(rows, cols);
    for p in paths {
        let freq: Vec<Complex64> = (0..rows).map(|m| cis_turns((m0 + m) as f64 * df * p.tau_s)).collect();
        let time: Vec<Complex64> = (0..cols)
            .map(|n| p.alpha * cis_turns(-p.nu_hz * (n0 + n) as f64 * t))
            .collect();
        let data = grid.as_mut_slice();
        for (m, f) in freq.iter().enumerate() {
            for (z, tn) in data[m * cols..(m + 1) * cols].iter_mut().zip(&time) {
                *z += f * tn;
            }
        }
    }
    grid
}

/// FT channel over the whole `M x N` grid.
pub fn channel_ft(paths: &[PathParams], config: &SystemConfig) -> ComplexGrid {
    channel_ft_window(paths, config, 0, 0, config.num_subcarriers, config.num_symbols)
}

/// FT channel restricted to a user's block.
pub fn comm_channel_ft(paths: &[PathParams], block: &UserAllocation, config: &SystemConfig) -> ComplexGrid {
    channel_ft_window(paths, config, block.m_offset, block.n_offset, block.m_size, block.n_size)
}

/// Sum of all echoes over the full grid.
pub fn sensing_channel_ft(paths: &[PathParams], config: &SystemConfig) -> ComplexGrid {
    channel_ft(paths, config)
}

/// `sum_{i=0}^{L-1} exp(j 2 pi i x / L)`, with the removable singularity at
/// integer multiples of `L` evaluated exactly.
pub fn dirichlet(x: f64, len: usize) -> Complex64 {
    let l = len as f64;
    let turns = x / l;
    if (turns - turns.round()).abs() < 1e-12 {
        // Every term is exp(j 2 pi i p) with integer p.
        return Complex64::new(l, 0.0);
    }
    let ratio = (PI * x).sin() / (PI * turns).sin();
    Complex64::from_polar(ratio, PI * x * (l - 1.0) / l)
}

/// Closed-form DD channel, the [`crate::numerics::sfft`] of [`channel_ft`].
///
/// `H[l, k] = (MN)^{-1/2} sum_q alpha_q D_N(nu_q N T - k) D_M(l - tau_q M delta_f)`
/// with `D_L` the [`dirichlet`] kernel. The delay factor is the periodic
/// sinc produced by the ideal band-limited filter.
pub fn comm_channel_dd(paths: &[PathParams], config: &SystemConfig) -> ComplexGrid {
    let (m, n) = (config.num_subcarriers, config.num_symbols);
    let norm = 1.0 / ((m * n) as f64).sqrt();
    let mut grid = ComplexGrid::zeros(m, n);
    for p in paths {
        let doppler_bins = p.nu_hz * n as f64 * config.symbol_duration_s;
        let delay_bins = p.tau_s * m as f64 * config.subcarrier_spacing_hz;
        let dk: Vec<Complex64> = (0..n).map(|k| dirichlet(doppler_bins - k as f64, n) * p.alpha * norm).collect();
        let dl: Vec<Complex64> = (0..m).map(|l| dirichlet(l as f64 - delay_bins, m)).collect();
        let data = grid.as_mut_slice();
        for (l, a) in dl.iter().enumerate() {
            for (z, b) in data[l * n..(l + 1) * n].iter_mut().zip(&dk) {
                *z += a * b;
            }
        }
    }
    grid
}

/// Per-bin noise powers at the UE and at the sensing receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub comm_w: f64,
    pub sensing_w: f64,
}

impl NoiseModel {
    pub fn from_config(config: &SystemConfig) -> Self {
        let p = config.noise_power_w();
        Self {
            comm_w: p,
            sensing_w: p,
        }
    }

    pub fn silent() -> Self {
        Self {
            comm_w: 0.0,
            sensing_w: 0.0,
        }
    }
}

/// `Y = H . X + W` with `W` i.i.d. `CN(0, noise_w)`.
pub fn apply_channel(x: &ComplexGrid, h: &ComplexGrid, noise_w: f64, rng: &mut RandomSource) -> Result<ComplexGrid> {
    if !(noise_w >= 0.0) {
        return Err(Error::NegativeNoise(noise_w));
    }
    let mut y = h.hadamard(x)?;
    if noise_w > 0.0 {
        let noise = draw_complex_gaussian(rng, y.len(), noise_w);
        for (z, w) in y.as_mut_slice().iter_mut().zip(noise) {
            *z += w;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sfft, Stream};

    #[test]
    fn echo_parameters() {
        let config = SystemConfig::default();
        let (tau, nu) = two_way_params(15.0, 14.0, 0.0, &config);
        assert!((tau - 100.069e-9).abs() < 1e-12);
        assert!((nu - 6537.86).abs() < 0.1, "{nu}");
        let (_, nu) = two_way_params(15.0, 14.0, PI / 2.0, &config);
        assert!(nu.abs() < 1e-9);
    }

    #[test]
    fn gains_follow_distance_laws() {
        let config = SystemConfig::default();
        assert!((path_gain_comm(25.0, &config) / 1.8584e-10 - 1.0).abs() < 1e-4);
        assert!((path_gain_sens(25.0, &config) / 2.3662e-14 - 1.0).abs() < 1e-4);
        assert!((path_gain_comm(25.0, &config) / path_gain_comm(50.0, &config) - 4.0).abs() < 1e-12);
        assert!((path_gain_sens(25.0, &config) / path_gain_sens(50.0, &config) - 16.0).abs() < 1e-12);
        let no_rcs = SystemConfig {
            rcs_m2: 0.0,
            ..config
        };
        assert_eq!(path_gain_sens(25.0, &no_rcs), 0.0);
    }

    #[test]
    fn dirichlet_matches_sum() {
        for &(x, len) in &[(0.3, 8usize), (-2.7, 8), (8.0, 8), (-16.0, 8), (3.0, 8), (5.5, 7)] {
            let direct: Complex64 = (0..len)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 * x / len as f64))
                .sum();
            assert!((dirichlet(x, len) - direct).norm() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn on_grid_dd_is_a_single_tap() {
        let config = SystemConfig::default().with_grid(16, 8);
        let res = crate::config::resolutions(&config);
        let p = PathParams::fixed(Complex64::new(1.0, 0.0), 3.0 * res.delta_tau_s, 2.0 * res.delta_nu_hz);
        let dd = comm_channel_dd(&[p], &config);
        let peak = dd[(3, 2)];
        assert!((peak - Complex64::new((16.0f64 * 8.0).sqrt(), 0.0)).norm() < 1e-9);
        assert!((dd.energy() - peak.norm_sqr()).abs() < 1e-9);
        assert!((sfft(&channel_ft(&[p], &config)).add(&dd.scaled(-1.0)).unwrap().energy()).sqrt() < 1e-9);
    }

    #[test]
    fn noiseless_application_is_product() {
        let x = ComplexGrid::from_fn(4, 3, |r, c| Complex64::new(r as f64, c as f64));
        let h = ComplexGrid::from_fn(4, 3, |_, _| Complex64::new(1.0, 0.0));
        let mut rng = RandomSource::new(3, Stream::CommNoise);
        assert_eq!(apply_channel(&x, &h, 0.0, &mut rng).unwrap(), x);
    }
}
