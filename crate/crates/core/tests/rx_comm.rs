mod common;

use common::{channel_bin, qam16_ber};
use ddjcs_core::channel::{apply_channel, comm_channel_ft, PathParams};
use ddjcs_core::numerics::{draw_complex_gaussian, RandomSource, Stream};
use ddjcs_core::rx_comm::{ber, comm_metrics, equalize_demap, estimate_channel, CommReceiver};
use ddjcs_core::waveform::{PilotPattern, QamFrame, UserAllocation};
use ddjcs_core::{ComplexGrid, SystemConfig};
use num_complex::Complex64;

const P_C: f64 = 0.02;

fn frame(seed: u64) -> QamFrame {
    QamFrame::random(
        240,
        14,
        &PilotPattern::default(),
        &mut RandomSource::new(seed, Stream::Data),
        &mut RandomSource::new(seed, Stream::Pilot),
    )
    .unwrap()
}

fn block() -> UserAllocation {
    UserAllocation {
        user_id: 0,
        m_offset: 333,
        n_offset: 40,
        m_size: 240,
        n_size: 14,
    }
}

fn transmit(frame: &QamFrame, h: &ComplexGrid, noise_w: f64, seed: u64) -> ComplexGrid {
    let x = frame.symbols.clone().scaled(P_C.sqrt());
    apply_channel(&x, h, noise_w, &mut RandomSource::new(seed, Stream::CommNoise)).unwrap()
}

fn max_rel_err(a: &ComplexGrid, b: &ComplexGrid) -> f64 {
    let scale = b.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn flat_channel_is_recovered_everywhere() {
    let f = frame(1);
    let c0 = Complex64::new(0.3, -0.7);
    let h = ComplexGrid::from_fn(240, 14, |_, _| c0);
    let h_hat = estimate_channel(&transmit(&f, &h, 0.0, 1), &f, P_C.sqrt()).unwrap();
    assert!(h_hat.as_slice().iter().all(|z| (z - c0).norm() < 1e-12));
}

#[test]
fn single_path_delay_is_recovered() {
    let config = SystemConfig::default();
    let f = frame(2);
    // 35 m line of sight, not on the block's delay grid.
    let p = PathParams::fixed(Complex64::new(1e-5, 2e-5), 35.0 / config.speed_of_light, 0.0);
    let h = comm_channel_ft(&[p], &block(), &config);
    assert!((h[(17, 3)] - channel_bin(&[p], &config, 333 + 17, 43)).norm() < 1e-18);
    let h_hat = estimate_channel(&transmit(&f, &h, 0.0, 2), &f, P_C.sqrt()).unwrap();
    assert!(max_rel_err(&h_hat, &h) < 1e-6);
}

#[test]
fn estimation_error_falls_with_noise() {
    let config = SystemConfig::default();
    let p = PathParams::fixed(Complex64::new(1e-5, 0.0), 100e-9, 0.0);
    let h = comm_channel_ft(&[p], &block(), &config);
    let mut last = f64::INFINITY;
    for noise_w in [1e-12, 1e-13, 1e-14, 1e-15] {
        let mut mse = 0.0;
        for seed in 0..20 {
            let f = frame(seed);
            let h_hat = estimate_channel(&transmit(&f, &h, noise_w, seed), &f, P_C.sqrt()).unwrap();
            mse += h_hat.add(&h.clone().scaled(-1.0)).unwrap().mean_power();
        }
        assert!(mse < last, "{noise_w}: {mse} vs {last}");
        last = mse;
    }
}

#[test]
fn noiseless_perfect_csi_decodes_everything() {
    let f = frame(3);
    let h = ComplexGrid::from_fn(240, 14, |m, n| Complex64::from_polar(1e-4, 0.01 * (m + n) as f64));
    let y = transmit(&f, &h, 0.0, 3);
    let bits = equalize_demap(&y, &h, &f, P_C.sqrt(), &mut RandomSource::new(3, Stream::Erasure)).unwrap();
    assert_eq!(ber(&f.bits, &bits).unwrap(), 0.0);
}

#[test]
fn awgn_ber_at_15_db() {
    let snr = 10f64.powf(1.5);
    let noise_w = P_C / snr;
    let h = ComplexGrid::from_fn(240, 14, |_, _| Complex64::new(1.0, 0.0));
    let (mut errors, mut total) = (0.0, 0usize);
    let mut seed = 0;
    while total < 1_000_000 {
        let f = frame(seed);
        let y = transmit(&f, &h, noise_w, seed);
        let bits = equalize_demap(&y, &h, &f, P_C.sqrt(), &mut RandomSource::new(seed, Stream::Erasure)).unwrap();
        errors += ber(&f.bits, &bits).unwrap() * bits.len() as f64;
        total += bits.len();
        seed += 1;
    }
    let measured = errors / total as f64;
    let theory = qam16_ber(snr);
    assert!(measured / theory < 1.5 && theory / measured < 1.5, "{measured} vs {theory}");
}

#[test]
fn erased_bins_produce_coin_flips() {
    let f = frame(4);
    let h = ComplexGrid::from_fn(240, 14, |_, _| Complex64::new(1.0, 0.0));
    let y = transmit(&f, &h, 0.0, 4);
    let mut h_hat = h.clone();
    for m in 0..240 {
        h_hat.as_mut_slice()[m * 14 + 5] = Complex64::new(0.0, 0.0);
    }
    let bits = equalize_demap(&y, &h_hat, &f, P_C.sqrt(), &mut RandomSource::new(4, Stream::Erasure)).unwrap();
    let rate = ber(&f.bits, &bits).unwrap();
    // One column of 14 erased: about half its bits wrong.
    assert!((rate - 0.5 / 14.0).abs() < 0.01, "{rate}");
}

#[test]
fn doppler_sync_enables_estimation() {
    let config = SystemConfig::default();
    let f = frame(5);
    let nu = 7000.0;
    let p = PathParams::fixed(Complex64::new(1e-5, 0.0), 80e-9, nu);
    let h = comm_channel_ft(&[p], &block(), &config);
    let y = transmit(&f, &h, 0.0, 5);
    let rx = |sync| CommReceiver {
        p_c_ft: P_C,
        p_s_ft: 0.0,
        noise_w: 0.0,
        sync_doppler_hz: sync,
        n_offset: 40,
        symbol_duration_s: config.symbol_duration_s,
    };
    let mut rng = RandomSource::new(5, Stream::Erasure);
    assert_eq!(rx(nu).receive(&y, &h, &f, &mut rng).unwrap().ber, 0.0);
    assert!(rx(0.0).receive(&y, &h, &f, &mut rng).unwrap().ber > 0.05);
}

#[test]
fn snr_decreases_with_sensing_power() {
    let h = ComplexGrid::from_vec(1, 2, draw_complex_gaussian(&mut RandomSource::new(1, Stream::Channel), 2, 1e-10)).unwrap();
    let p_n = SystemConfig::default().noise_power_w();
    let snrs: Vec<f64> = [1e-6, 1e-5, 1e-4, 1e-3]
        .iter()
        .map(|&p_s| comm_metrics(&h, 0.02 - p_s, p_s, p_n).snr)
        .collect();
    assert!(snrs.windows(2).all(|w| w[1] < w[0]));
    assert!(snrs.iter().all(|s| s.is_finite()));
}
