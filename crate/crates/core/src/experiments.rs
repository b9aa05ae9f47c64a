//! Monte Carlo trials and power-split sweeps.
//!
//! Every random draw of a trial comes from a stream keyed by
//! `(seed, purpose, user, grid, trial index)`. The split exponent is not part
//! of the key, so all points of a sweep see the same data, placements,
//! channels and noise for a given trial index and differ only in how the
//! power is shared.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{comm_channel_ft, comm_paths, apply_channel, sensing_channel_ft, sensing_paths, NoiseModel};
use crate::config::{power_split, validate, SystemConfig, UserScenario};
use crate::error::{Error, Result};
use crate::numerics::{ComplexGrid, RandomSource, Stream};
use crate::rx_comm::CommReceiver;
use crate::rx_sense::{
    comm_power_dd, detect_peaks, estimate_params, gain_dd, rmse, sensing_snr, squared_errors, to_dd, SensingEstimate,
    DEFAULT_EXCLUSION,
};
use crate::waveform::{
    allocate_users, build_comm_grid, build_sensing_dd, superimpose, PilotPattern, PulseAmplitude, PulseSpec, QamFrame,
    UserAllocation,
};

/// Grid size `M x N` of one sweep case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Case {
    pub m: usize,
    pub n: usize,
}

impl Case {
    pub const A: Case = Case { m: 1024, n: 128 };
    pub const B: Case = Case { m: 2048, n: 256 };
    pub const C: Case = Case { m: 4096, n: 512 };

    pub const fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    pub fn of(config: &SystemConfig) -> Self {
        Self::new(config.num_subcarriers, config.num_symbols)
    }

    pub fn apply(&self, config: &SystemConfig) -> SystemConfig {
        config.with_grid(self.m, self.n)
    }

    fn key(&self) -> u64 {
        ((self.m as u64) << 32) | self.n as u64
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCase(s.to_string());
        let (m, n) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let m: usize = m.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if m == 0 || n == 0 {
            return Err(bad());
        }
        Ok(Self { m, n })
    }
}

/// `points` split exponents from `beta_min` to `beta_max` (both negative),
/// evenly spaced in `log10 |beta|` and returned in increasing order.
pub fn log_beta_grid(beta_min: f64, beta_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(beta_min < 0.0) {
        return Err(Error::NonNegativeBeta(beta_min));
    }
    if !(beta_max < 0.0) {
        return Err(Error::NonNegativeBeta(beta_max));
    }
    let (lo, hi) = (beta_min.min(beta_max), beta_min.max(beta_max));
    if points <= 1 {
        return Ok(vec![hi; points]);
    }
    let (a, b) = ((-lo).log10(), (-hi).log10());
    Ok((0..points)
        .map(|i| match i {
            0 => lo,
            _ if i == points - 1 => hi,
            _ => -10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64),
        })
        .collect())
}

/// Twelve exponents between -5e-3 and -1e-4.
pub fn default_beta_grid() -> Vec<f64> {
    log_beta_grid(-5e-3, -1e-4, 12).expect("constant bounds are negative")
}

/// Knobs that are not part of the system configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub pulse_amplitude: PulseAmplitude,
    pub exclusion: (usize, usize),
    pub pilots: PilotPattern,
    /// Transmit user data; when off only the sensing pulse is sent and no
    /// communication metrics are produced.
    pub comm: bool,
    /// Draw thermal noise at both receivers.
    pub noise: bool,
    /// Let each UE remove its line-of-sight Doppler before estimation.
    pub doppler_sync: bool,
    /// Draw echo gains as `CN(0, Omega)`; when off, every echo has power
    /// exactly `Omega` with a random phase.
    pub echo_fading: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            pulse_amplitude: PulseAmplitude::Random,
            exclusion: DEFAULT_EXCLUSION,
            pilots: PilotPattern::default(),
            comm: true,
            noise: true,
            doppler_sync: true,
            echo_fading: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub beta: f64,
    pub case: Case,
    pub trial: u64,
    pub allocations: Vec<UserAllocation>,
    pub user_ber: Vec<f64>,
    pub user_bits: Vec<usize>,
    /// Linear FT SNR per user.
    pub snr_ft: Vec<f64>,
    /// Linear DD SNR.
    pub snr_dd: f64,
    pub estimate: SensingEstimate,
    /// `(R, V cos psi)` per user.
    pub truth: Vec<(f64, f64)>,
    /// Squared `(range, velocity)` error per user after association.
    pub squared_errors: Vec<(f64, f64)>,
}

/// A trial together with the transmitted FT grid and the received DD map.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub result: TrialResult,
    pub tx_ft: ComplexGrid,
    pub y_dd: ComplexGrid,
}

struct Streams {
    seed: u64,
    key: [u64; 2],
}

impl Streams {
    fn get(&self, stream: Stream, sub: usize) -> RandomSource {
        RandomSource::keyed(self.seed, stream, sub as u32, self.key)
    }
}

/// One complete transmit, channel and receive pass.
pub fn run_trial(
    config: &SystemConfig,
    scenario: &UserScenario,
    beta: f64,
    trial: u64,
    options: &TrialOptions,
) -> Result<TrialResult> {
    run_trial_detailed(config, scenario, beta, trial, options).map(|a| a.result)
}

pub fn run_trial_detailed(
    config: &SystemConfig,
    scenario: &UserScenario,
    beta: f64,
    trial: u64,
    options: &TrialOptions,
) -> Result<TrialArtifacts> {
    validate(config, scenario)?;
    let case = Case::of(config);
    let streams = Streams {
        seed: config.rng_seed,
        key: [case.key(), trial],
    };
    let split = power_split(beta, config)?;
    let noise = if options.noise {
        NoiseModel::from_config(config)
    } else {
        NoiseModel::silent()
    };

    let allocations = allocate_users(scenario, config, &mut streams.get(Stream::Placement, 0))?;
    let frames = allocations
        .iter()
        .map(|a| {
            QamFrame::random(
                a.m_size,
                a.n_size,
                &options.pilots,
                &mut streams.get(Stream::Data, a.user_id),
                &mut streams.get(Stream::Pilot, a.user_id),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let x_c = if options.comm {
        build_comm_grid(config, &allocations, &frames, split.comm_w)?
    } else {
        ComplexGrid::zeros(config.num_subcarriers, config.num_symbols)
    };
    let pulse_spec = PulseSpec::single(config, options.pulse_amplitude);
    let (pulses, x_s_dd) = build_sensing_dd(&pulse_spec, config, split.sensing_w, &mut streams.get(Stream::Pulse, 0))?;
    let tx_ft = superimpose(&x_c, &x_s_dd)?;

    // Sensing.
    let mut echo_paths = sensing_paths(scenario, config, &mut streams.get(Stream::Channel, 0));
    if !options.echo_fading {
        for p in &mut echo_paths {
            let phase = if p.alpha.norm() > 0.0 { p.alpha / p.alpha.norm() } else { Complex64::new(1.0, 0.0) };
            p.alpha = phase * p.omega.sqrt();
        }
    }
    let h_s = sensing_channel_ft(&echo_paths, config);
    let y_s = apply_channel(&tx_ft, &h_s, noise.sensing_w, &mut streams.get(Stream::SensingNoise, 0))?;
    let y_dd = to_dd(&y_s);
    let users = scenario.users.len();
    let truth: Vec<(f64, f64)> = scenario
        .users
        .iter()
        .map(|u| (u.range_m, u.velocity_ms * u.motion_angle_rad.cos()))
        .collect();
    let origin = pulses.origin().unwrap_or((0, 0));
    let peaks = detect_peaks(&y_dd, users, options.exclusion)?;
    let estimate = estimate_params(&peaks, origin, config);
    let sq_errors = squared_errors(&estimate, &truth)?;
    // Users whose data is on the air.
    let served = if options.comm { allocations.len() } else { 0 };
    let p_c_dd: Vec<f64> = allocations[..served]
        .iter()
        .map(|a| comm_power_dd(split.comm_w, a.m_size, a.n_size, config))
        .collect();
    let snr_dd = sensing_snr(pulses.power_dd_w, &p_c_dd, gain_dd(&h_s), noise.sensing_w);

    // Communication.
    let mut user_ber = Vec::with_capacity(users);
    let mut user_bits = Vec::with_capacity(users);
    let mut snr_ft = Vec::with_capacity(users);
    for (alloc, frame) in allocations[..served].iter().zip(&frames) {
        let u = alloc.user_id;
        let paths = comm_paths(&scenario.users[u], config, &mut streams.get(Stream::Channel, 1 + u));
        let h = comm_channel_ft(&paths, alloc, config);
        let x_block = tx_ft.block(alloc.m_offset, alloc.n_offset, alloc.m_size, alloc.n_size);
        let y = apply_channel(&x_block, &h, noise.comm_w, &mut streams.get(Stream::CommNoise, u))?;
        let rx = CommReceiver {
            p_c_ft: split.comm_w,
            p_s_ft: split.sensing_w,
            noise_w: noise.comm_w,
            sync_doppler_hz: if options.doppler_sync { paths[0].nu_hz } else { 0.0 },
            n_offset: alloc.n_offset,
            symbol_duration_s: config.symbol_duration_s,
        };
        let out = rx.receive(&y, &h, frame, &mut streams.get(Stream::Erasure, u))?;
        user_ber.push(out.ber);
        user_bits.push(frame.bits.len());
        snr_ft.push(out.metrics.snr);
    }

    Ok(TrialArtifacts {
        result: TrialResult {
            beta,
            case,
            trial,
            allocations,
            user_ber,
            user_bits,
            snr_ft,
            snr_dd,
            estimate,
            truth,
            squared_errors: sq_errors,
        },
        tx_ft,
        y_dd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub betas: Vec<f64>,
    pub cases: Vec<Case>,
    pub trials: u64,
    pub scenario: UserScenario,
    pub options: TrialOptions,
}

impl SweepSpec {
    fn check(&self) -> Result<()> {
        if let Some(&b) = self.betas.iter().find(|b| !(**b < 0.0)) {
            return Err(Error::NonNegativeBeta(b));
        }
        Ok(())
    }
}

/// Aggregate of all trials at one `(beta, case)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub mean_ber: f64,
    pub rmse_range_m: f64,
    pub rmse_velocity_ms: f64,
    pub mean_snr_ft_db: f64,
    pub mean_snr_dd_db: f64,
    /// Trials that completed.
    pub trials: u64,
    /// Per-trial BER averaged over users; kept in memory only.
    #[serde(skip)]
    pub trial_ber: Vec<f64>,
}

impl SweepPoint {
    pub fn case(&self) -> Case {
        Case::new(self.m, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub beta: f64,
    pub case: Case,
    pub trial: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Ordered by case, then by increasing `beta`.
    pub points: Vec<SweepPoint>,
    pub failures: Vec<TrialFailure>,
}

impl SweepResult {
    /// Points of one case, in increasing `beta`.
    pub fn curve(&self, case: Case) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.case() == case).collect()
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Aggregates trials of a single point: mean BER over users and trials, the
/// RMSE of [`rmse`] and SNRs averaged in linear scale.
pub fn aggregate(beta: f64, case: Case, trials: &[TrialResult]) -> Result<SweepPoint> {
    let bers: Vec<f64> = trials.iter().flat_map(|t| t.user_ber.iter().copied()).collect();
    let snr_ft: Vec<f64> = trials.iter().flat_map(|t| t.snr_ft.iter().copied()).collect();
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let errors: Vec<Vec<(f64, f64)>> = trials.iter().map(|t| t.squared_errors.clone()).collect();
    let r = rmse(&errors)?;
    let snr_dd: Vec<f64> = trials.iter().map(|t| t.snr_dd).collect();
    Ok(SweepPoint {
        beta,
        m: case.m,
        n: case.n,
        mean_ber: mean(&bers),
        rmse_range_m: r.range_m,
        rmse_velocity_ms: r.velocity_ms,
        mean_snr_ft_db: db(mean(&snr_ft)),
        mean_snr_dd_db: db(mean(&snr_dd)),
        trials: trials.len() as u64,
        trial_ber: trials.iter().map(|t| mean(&t.user_ber)).collect(),
    })
}

/// Runs every `(case, beta, trial)` in parallel and reduces in a fixed order,
/// so the result does not depend on scheduling. Failing trials are recorded
/// and left out of their point.
pub fn run_sweep(config: &SystemConfig, spec: &SweepSpec) -> Result<SweepResult> {
    spec.check()?;
    let mut betas = spec.betas.clone();
    betas.sort_by(f64::total_cmp);
    for case in &spec.cases {
        validate(&case.apply(config), &spec.scenario)?;
    }

    let jobs: Vec<(usize, usize, u64)> = (0..spec.cases.len())
        .flat_map(|c| (0..betas.len()).flat_map(move |b| (0..spec.trials).map(move |t| (c, b, t))))
        .collect();
    let outcomes: Vec<Result<TrialResult>> = jobs
        .par_iter()
        .map(|&(c, b, t)| {
            let cfg = spec.cases[c].apply(config);
            run_trial(&cfg, &spec.scenario, betas[b], t, &spec.options)
        })
        .collect();

    let mut result = SweepResult::default();
    let per_point = spec.trials as usize;
    for (point, chunk) in outcomes.chunks(per_point.max(1)).enumerate() {
        if per_point == 0 {
            break;
        }
        let (c, b) = (point / betas.len(), point % betas.len());
        let case = spec.cases[c];
        let mut ok = Vec::with_capacity(chunk.len());
        for (t, outcome) in chunk.iter().enumerate() {
            match outcome {
                Ok(r) => ok.push(r.clone()),
                Err(e) => result.failures.push(TrialFailure {
                    beta: betas[b],
                    case,
                    trial: t as u64,
                    message: e.to_string(),
                }),
            }
        }
        result.points.push(aggregate(betas[b], case, &ok)?);
    }
    Ok(result)
}

/// Writes one CSV row per point under a fixed header. Floats are written in
/// shortest round-trip form, so parsing the file restores them exactly.
pub fn emit_csv<W: Write>(result: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record([
        "beta",
        "M",
        "N",
        "mean_ber",
        "rmse_range_m",
        "rmse_velocity_ms",
        "mean_snr_ft_db",
        "mean_snr_dd_db",
        "trials",
    ])?;
    for p in &result.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit_csv(result, std::io::BufWriter::new(file))
}

pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<SweepPoint>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| Ok(row?)).collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepPoint>> {
    parse_csv(std::fs::File::open(path)?)
}
