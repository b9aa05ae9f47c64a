//! UE receiver: pilot-based channel estimation, one-tap equalization and
//! hard 16-QAM decisions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dft_interpolate_columns, spline_interpolate_rows, ComplexGrid, RandomSource};
use crate::waveform::{Qam16, QamFrame};

/// Estimates below this fraction of the largest estimate are erased.
pub const ERASURE_THRESHOLD: f64 = 1e-12;

/// Least-squares estimates at the pilots, interpolated over the whole block.
///
/// Each pilot symbol is interpolated across frequency with
/// [`dft_interpolate_columns`], then each subcarrier across time with
/// [`spline_interpolate_rows`]. Before the frequency step the common
/// linear phase across pilots (the bulk delay) is measured and removed,
/// and it is restored afterwards, so the DFT step only has to carry the
/// residual delay spread.
///
/// `pilot_scale` is the transmit amplitude applied to the unit-power pilots.
pub fn estimate_channel(y_block: &ComplexGrid, frame: &QamFrame, pilot_scale: f64) -> Result<ComplexGrid> {
    let (m_cu, n_cu) = y_block.dims();
    if frame.symbols.dims() != (m_cu, n_cu) {
        return Err(Error::DimensionMismatch {
            left: (m_cu, n_cu),
            right: frame.symbols.dims(),
        });
    }
    let pattern = &frame.pattern;
    pattern.check(m_cu, n_cu)?;
    let rows = pattern.rows(m_cu);

    let mut ls: Vec<Vec<Complex64>> = Vec::with_capacity(pattern.symbols.len());
    for &n in &pattern.symbols {
        let mut column = Vec::with_capacity(rows.len());
        for &m in &rows {
            let tx = frame.symbols[(m, n)] * pilot_scale;
            if tx.norm_sqr() == 0.0 {
                return Err(Error::ZeroPilot(m, n));
            }
            column.push(y_block[(m, n)] / tx);
        }
        ls.push(column);
    }

    let lag: Complex64 = ls
        .iter()
        .flat_map(|col| col.windows(2).map(|w| w[1] * w[0].conj()))
        .sum();
    let per_subcarrier = lag.arg() / pattern.comb as f64;
    let ramp = |m: usize| Complex64::from_polar(1.0, per_subcarrier * m as f64);

    let mut freq_interp: Vec<Vec<Complex64>> = Vec::with_capacity(ls.len());
    for column in &ls {
        let flat: Vec<Complex64> = column.iter().zip(&rows).map(|(h, &m)| h * ramp(m).conj()).collect();
        let mut full = dft_interpolate_columns(&flat, &rows, m_cu)?;
        for (m, h) in full.iter_mut().enumerate() {
            *h *= ramp(m);
        }
        freq_interp.push(full);
    }

    let mut h_hat = ComplexGrid::zeros(m_cu, n_cu);
    let mut samples = vec![Complex64::new(0.0, 0.0); pattern.symbols.len()];
    for m in 0..m_cu {
        for (s, col) in samples.iter_mut().zip(&freq_interp) {
            *s = col[m];
        }
        let row = spline_interpolate_rows(&samples, &pattern.symbols, n_cu)?;
        for (n, h) in row.into_iter().enumerate() {
            h_hat[(m, n)] = h;
        }
    }
    Ok(h_hat)
}

/// Removes a known Doppler rotation `exp(j 2 pi nu (n0 + n) T)` from a block
/// whose first symbol has absolute index `n_offset`.
pub fn compensate_doppler(y_block: &mut ComplexGrid, doppler_hz: f64, n_offset: usize, symbol_duration_s: f64) {
    if doppler_hz == 0.0 {
        return;
    }
    let cols = y_block.cols();
    let derotate: Vec<Complex64> = (0..cols)
        .map(|n| {
            let turns = (doppler_hz * (n_offset + n) as f64 * symbol_duration_s).rem_euclid(1.0);
            Complex64::from_polar(1.0, -2.0 * PI * turns)
        })
        .collect();
    for (i, z) in y_block.as_mut_slice().iter_mut().enumerate() {
        *z *= derotate[i % cols];
    }
}

/// Zero-forcing equalization and hard decisions on every data bin.
///
/// Bins whose estimate is erased get random bits from `erasure_rng`.
pub fn equalize_demap(
    y_block: &ComplexGrid,
    h_hat: &ComplexGrid,
    frame: &QamFrame,
    data_scale: f64,
    erasure_rng: &mut RandomSource,
) -> Result<Vec<u8>> {
    if y_block.dims() != h_hat.dims() {
        return Err(Error::DimensionMismatch {
            left: y_block.dims(),
            right: h_hat.dims(),
        });
    }
    if frame.pilot_mask.len() != y_block.len() {
        return Err(Error::LengthMismatch(frame.pilot_mask.len(), y_block.len()));
    }
    let h_max = h_hat.as_slice().iter().map(|h| h.norm()).fold(0.0, f64::max);
    let floor = ERASURE_THRESHOLD * h_max;

    let mut bits = vec![0u8; frame.data_bins() * Qam16::BITS_PER_SYMBOL];
    let mut words = bits.chunks_exact_mut(Qam16::BITS_PER_SYMBOL);
    let bins = y_block.as_slice().iter().zip(h_hat.as_slice()).zip(&frame.pilot_mask);
    for ((y, h), &is_pilot) in bins {
        if is_pilot {
            continue;
        }
        let word = words.next().expect("one word per data bin");
        if h.norm() <= floor || data_scale == 0.0 {
            for b in word.iter_mut() {
                *b = erasure_rng.random_range(0..=1u8);
            }
        } else {
            Qam16::demap(y / (h * data_scale), word);
        }
    }
    Ok(bits)
}

/// Fraction of differing bits.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch(tx.len(), rx.len()));
    }
    if tx.is_empty() {
        return Ok(0.0);
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommMetrics {
    /// Mean `|H|^2` over the block.
    pub gain: f64,
    /// `P_c G / (P_s G + P_n)`, linear.
    pub snr: f64,
}

impl CommMetrics {
    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }
}

/// Average FT SNR of a block, counting the sensing signal as interference.
pub fn comm_metrics(h_block: &ComplexGrid, p_c_ft: f64, p_s_ft: f64, noise_w: f64) -> CommMetrics {
    let gain = h_block.mean_power();
    CommMetrics {
        gain,
        snr: p_c_ft * gain / (p_s_ft * gain + noise_w),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommRxResult {
    pub ber: f64,
    pub bits_decided: Vec<u8>,
    pub metrics: CommMetrics,
}

/// Receiver settings for one user block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommReceiver {
    pub p_c_ft: f64,
    pub p_s_ft: f64,
    pub noise_w: f64,
    /// Doppler removed by frequency synchronization before estimation.
    pub sync_doppler_hz: f64,
    pub n_offset: usize,
    pub symbol_duration_s: f64,
}

impl CommReceiver {
    /// Full chain on a received block; `h_true` only feeds the SNR metric.
    pub fn receive(
        &self,
        y_block: &ComplexGrid,
        h_true: &ComplexGrid,
        frame: &QamFrame,
        erasure_rng: &mut RandomSource,
    ) -> Result<CommRxResult> {
        let mut y = y_block.clone();
        compensate_doppler(&mut y, self.sync_doppler_hz, self.n_offset, self.symbol_duration_s);
        let scale = self.p_c_ft.sqrt();
        let h_hat = estimate_channel(&y, frame, scale)?;
        let bits_decided = equalize_demap(&y, &h_hat, frame, scale, erasure_rng)?;
        Ok(CommRxResult {
            ber: ber(&frame.bits, &bits_decided)?,
            bits_decided,
            metrics: comm_metrics(h_true, self.p_c_ft, self.p_s_ft, self.noise_w),
        })
    }
}
