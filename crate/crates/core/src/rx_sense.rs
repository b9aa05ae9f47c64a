//! Monostatic sensing receiver: DD map, peak picking, range/velocity
//! conversion and error statistics.

use serde::{Deserialize, Serialize};

use crate::config::{resolutions, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{sfft, ComplexGrid};

/// Default half-widths `(delay, Doppler)` of the window masked around each
/// detected peak.
pub const DEFAULT_EXCLUSION: (usize, usize) = (2, 2);

pub fn to_dd(y_ft: &ComplexGrid) -> ComplexGrid {
    sfft(y_ft)
}

/// Picks `count` maxima of `|Y|^2`, masking a circular
/// `(2 w_l + 1) x (2 w_k + 1)` window around each pick. Ties go to the
/// smallest delay bin, then the smallest Doppler bin.
pub fn detect_peaks(y_dd: &ComplexGrid, count: usize, exclusion: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    let (m, n) = y_dd.dims();
    let power = y_dd.power();
    let mut masked = vec![false; power.len()];
    let mut peaks = Vec::with_capacity(count);
    for _ in 0..count {
        let best = power
            .iter()
            .zip(&masked)
            .enumerate()
            .filter(|(_, (_, &mask))| !mask)
            .fold(None, |best: Option<(usize, f64)>, (i, (&p, _))| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((i, p)),
            });
        let Some((idx, _)) = best else {
            return Err(Error::TooManyPeaks {
                requested: count,
                available: peaks.len(),
            });
        };
        let (l, k) = (idx / n, idx % n);
        peaks.push((l, k));
        let (wl, wk) = (exclusion.0.min(m / 2), exclusion.1.min(n / 2));
        for dl in 0..=2 * wl {
            let row = (l + m - wl + dl) % m;
            for dk in 0..=2 * wk {
                masked[row * n + (k + n - wk + dk) % n] = true;
            }
        }
    }
    Ok(peaks)
}

/// Signed offset of `k` from `k0` wrapped into `[-n/2, n/2)`.
fn wrap_offset(k: usize, k0: usize, n: usize) -> i64 {
    let half = (n / 2) as i64;
    let d = (k as i64 - k0 as i64).rem_euclid(n as i64);
    if d >= n as i64 - half {
        d - n as i64
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingEstimate {
    pub peak_bins: Vec<(usize, usize)>,
    pub tau_s: Vec<f64>,
    pub nu_hz: Vec<f64>,
    pub range_m: Vec<f64>,
    pub velocity_ms: Vec<f64>,
}

/// Converts peak positions to delay, Doppler, range and velocity relative to
/// the transmitted pulse at `origin`.
///
/// Delay offsets are taken modulo `M` (targets are in front of the radar);
/// Doppler offsets wrap into `[-N/2, N/2)`.
pub fn estimate_params(peaks: &[(usize, usize)], origin: (usize, usize), config: &SystemConfig) -> SensingEstimate {
    let res = resolutions(config);
    let (m, n) = (config.num_subcarriers, config.num_symbols);
    let mut est = SensingEstimate {
        peak_bins: peaks.to_vec(),
        tau_s: Vec::with_capacity(peaks.len()),
        nu_hz: Vec::with_capacity(peaks.len()),
        range_m: Vec::with_capacity(peaks.len()),
        velocity_ms: Vec::with_capacity(peaks.len()),
    };
    for &(l, k) in peaks {
        let dl = ((l + m - origin.0 % m) % m) as f64;
        let dk = wrap_offset(k, origin.1, n) as f64;
        est.tau_s.push(dl * res.delta_tau_s);
        est.nu_hz.push(dk * res.delta_nu_hz);
        est.range_m.push(dl * res.delta_range_m);
        est.velocity_ms.push(dk * res.delta_velocity_ms);
    }
    est
}

/// Greedy one-to-one association by range: repeatedly pairs the closest
/// remaining (truth, estimate). Returns, for every truth, the index of its
/// estimate.
pub fn associate(estimated_ranges: &[f64], true_ranges: &[f64]) -> Result<Vec<usize>> {
    if estimated_ranges.len() != true_ranges.len() {
        return Err(Error::UnmatchedEstimates {
            estimates: estimated_ranges.len(),
            truths: true_ranges.len(),
        });
    }
    let mut pairs: Vec<(f64, usize, usize)> = true_ranges
        .iter()
        .enumerate()
        .flat_map(|(u, r)| estimated_ranges.iter().enumerate().map(move |(e, re)| ((r - re).abs(), u, e)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut matched = vec![usize::MAX; true_ranges.len()];
    let mut used = vec![false; estimated_ranges.len()];
    for (_, u, e) in pairs {
        if matched[u] == usize::MAX && !used[e] {
            matched[u] = e;
            used[e] = true;
        }
    }
    Ok(matched)
}

/// Squared range and velocity error of every truth after association.
pub fn squared_errors(est: &SensingEstimate, truth: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let true_ranges: Vec<f64> = truth.iter().map(|t| t.0).collect();
    let map = associate(&est.range_m, &true_ranges)?;
    Ok(truth
        .iter()
        .zip(map)
        .map(|(&(r, v), e)| ((est.range_m[e] - r).powi(2), (est.velocity_ms[e] - v).powi(2)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub range_m: f64,
    pub velocity_ms: f64,
}

/// `(1/U) sqrt(sum_u E[e_u^2])` for range and velocity, the expectation taken
/// over trials. Every trial must report the same number of users.
pub fn rmse(per_trial: &[Vec<(f64, f64)>]) -> Result<Rmse> {
    let Some(first) = per_trial.first() else {
        return Ok(Rmse {
            range_m: 0.0,
            velocity_ms: 0.0,
        });
    };
    let users = first.len();
    if let Some(bad) = per_trial.iter().find(|t| t.len() != users) {
        return Err(Error::UnmatchedEstimates {
            estimates: bad.len(),
            truths: users,
        });
    }
    if users == 0 {
        return Ok(Rmse {
            range_m: 0.0,
            velocity_ms: 0.0,
        });
    }
    let trials = per_trial.len() as f64;
    let (mut sr, mut sv) = (0.0, 0.0);
    for trial in per_trial {
        for &(er, ev) in trial {
            sr += er;
            sv += ev;
        }
    }
    let u = users as f64;
    Ok(Rmse {
        range_m: (sr / trials).sqrt() / u,
        velocity_ms: (sv / trials).sqrt() / u,
    })
}

/// Mean `|H^DD|^2`; equal to the FT mean by unitarity, so the FT channel can
/// be passed directly.
pub fn gain_dd(h_s: &ComplexGrid) -> f64 {
    h_s.mean_power()
}

/// DD SNR `P_s G / (sum_u P_c,u G + P_n)`, linear.
pub fn sensing_snr(p_s_dd: f64, p_c_dd_per_user: &[f64], gain: f64, noise_w: f64) -> f64 {
    let interference: f64 = p_c_dd_per_user.iter().sum::<f64>() * gain;
    p_s_dd * gain / (interference + noise_w)
}

/// Communication power per DD bin for a user block: `P_c M_cu N_cu / (M N)`.
pub fn comm_power_dd(p_c_ft: f64, m_cu: usize, n_cu: usize, config: &SystemConfig) -> f64 {
    p_c_ft * (m_cu * n_cu) as f64 / config.grid_size() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_offset(64, 64, 128), 0);
        assert_eq!(wrap_offset(61, 64, 128), -3);
        assert_eq!(wrap_offset(127, 64, 128), 63);
        assert_eq!(wrap_offset(0, 64, 128), -64);
        assert_eq!(wrap_offset(2, 125, 128), 5);
    }

    #[test]
    fn peaks_in_height_order() {
        let mut g = ComplexGrid::zeros(16, 16);
        g[(3, 4)] = Complex64::new(1.0, 0.0);
        g[(10, 12)] = Complex64::new(2f64.sqrt(), 0.0);
        assert_eq!(detect_peaks(&g, 2, (1, 1)).unwrap(), vec![(10, 12), (3, 4)]);
    }

    #[test]
    fn ties_break_on_smallest_index() {
        let g = ComplexGrid::zeros(4, 4);
        assert_eq!(detect_peaks(&g, 2, (0, 0)).unwrap(), vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn exhaustive_and_overflow() {
        let g = ComplexGrid::from_fn(3, 2, |r, c| Complex64::new((r * 2 + c) as f64, 0.0));
        assert_eq!(detect_peaks(&g, 6, (0, 0)).unwrap().len(), 6);
        assert!(matches!(
            detect_peaks(&g, 7, (0, 0)),
            Err(Error::TooManyPeaks { requested: 7, .. })
        ));
    }

    #[test]
    fn association_is_one_to_one() {
        assert_eq!(associate(&[35.0, 14.6, 25.2], &[15.0, 25.0, 35.0]).unwrap(), vec![1, 2, 0]);
        // Two truths competing for the same estimate.
        assert_eq!(associate(&[15.1, 40.0], &[15.0, 15.2]).unwrap(), vec![0, 1]);
        assert!(associate(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_normalization() {
        assert_eq!(rmse(&[vec![(0.0, 0.0)]]).unwrap().range_m, 0.0);
        let r = rmse(&[vec![(4.0, 9.0)], vec![(4.0, 9.0)]]).unwrap();
        assert_eq!((r.range_m, r.velocity_ms), (2.0, 3.0));
        // Two users with squared errors 1 and 3: sqrt(4) / 2.
        let r = rmse(&[vec![(1.0, 0.0), (3.0, 0.0)]]).unwrap();
        assert_eq!(r.range_m, 1.0);
    }

    #[test]
    fn snr_regimes() {
        assert_eq!(sensing_snr(2.0, &[], 0.5, 0.25), 4.0);
        let a = sensing_snr(1.0, &[1.0], 1.0, 1e-12);
        let b = sensing_snr(1.0, &[2.0], 1.0, 1e-12);
        assert!((a / b - 2.0).abs() < 1e-9);
    }
}
