//! System and scenario parameters.
//!
//! Defaults follow a 5G NR numerology-3 downlink burst at 70 GHz: 120 kHz
//! subcarrier spacing, 8.9 us symbols (cyclic prefix included) and a 20 mW
//! per-bin power budget shared between communication and sensing.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest excess delay drawn for non-line-of-sight communication paths.
pub const MAX_EXCESS_DELAY_S: f64 = 400e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    /// Carrier frequency (Hz).
    #[serde(rename = "f_c")]
    pub carrier_hz: f64,
    /// Subcarrier spacing (Hz).
    #[serde(rename = "delta_f")]
    pub subcarrier_spacing_hz: f64,
    /// OFDM symbol duration including the cyclic prefix (s).
    #[serde(rename = "T")]
    pub symbol_duration_s: f64,
    /// Subcarriers in the full grid.
    #[serde(rename = "M")]
    pub num_subcarriers: usize,
    /// OFDM symbols in the downlink burst.
    #[serde(rename = "N")]
    pub num_symbols: usize,
    /// Per-bin transmit power budget shared by both functions (W).
    #[serde(rename = "P_tot_ft")]
    pub total_power_w: f64,
    #[serde(rename = "c")]
    pub speed_of_light: f64,
    /// Thermal noise power spectral density (W/Hz).
    #[serde(rename = "noise_psd")]
    pub noise_psd_w_per_hz: f64,
    pub noise_figure_db: f64,
    /// Radar cross-section of every target (m^2).
    #[serde(rename = "sigma_rcs")]
    pub rcs_m2: f64,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 70e9,
            subcarrier_spacing_hz: 120e3,
            symbol_duration_s: 8.9e-6,
            num_subcarriers: 1024,
            num_symbols: 128,
            total_power_w: 20e-3,
            speed_of_light: SPEED_OF_LIGHT,
            noise_psd_w_per_hz: 10f64.powf(-174.0 / 10.0) * 1e-3,
            noise_figure_db: 7.0,
            rcs_m2: 1.0,
            rng_seed: 0x5eed_d00d,
        }
    }
}

impl SystemConfig {
    /// Returns a copy resized to an `m` x `n` grid.
    pub fn with_grid(&self, m: usize, n: usize) -> Self {
        Self {
            num_subcarriers: m,
            num_symbols: n,
            ..self.clone()
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        self.speed_of_light / self.carrier_hz
    }

    /// Cyclic prefix duration, the part of the symbol beyond `1 / delta_f`.
    pub fn cyclic_prefix_s(&self) -> f64 {
        self.symbol_duration_s - 1.0 / self.subcarrier_spacing_hz
    }

    /// Noise power collected in one FT bin (W).
    pub fn noise_power_w(&self) -> f64 {
        self.noise_psd_w_per_hz * self.subcarrier_spacing_hz * 10f64.powf(self.noise_figure_db / 10.0)
    }

    pub fn grid_size(&self) -> usize {
        self.num_subcarriers * self.num_symbols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub range_m: f64,
    /// Speed along the direction of motion (m/s).
    pub velocity_ms: f64,
    /// Angle between the direction of motion and the line of sight (rad).
    #[serde(default)]
    pub motion_angle_rad: f64,
    #[serde(default = "default_num_paths")]
    pub num_paths: usize,
    /// Allocated subcarriers.
    #[serde(rename = "M_cu", default = "default_m_cu")]
    pub m_cu: usize,
    /// Allocated OFDM symbols.
    #[serde(rename = "N_cu", default = "default_n_cu")]
    pub n_cu: usize,
}

fn default_num_paths() -> usize {
    1
}

fn default_m_cu() -> usize {
    240
}

fn default_n_cu() -> usize {
    14
}

impl UserSpec {
    pub fn new(range_m: f64, velocity_ms: f64) -> Self {
        Self {
            range_m,
            velocity_ms,
            motion_angle_rad: 0.0,
            num_paths: default_num_paths(),
            m_cu: default_m_cu(),
            n_cu: default_n_cu(),
        }
    }

    pub fn with_block(mut self, m_cu: usize, n_cu: usize) -> Self {
        self.m_cu = m_cu;
        self.n_cu = n_cu;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserScenario {
    pub users: Vec<UserSpec>,
    #[serde(default = "default_qam_order")]
    pub qam_order: u32,
}

fn default_qam_order() -> u32 {
    16
}

impl Default for UserScenario {
    /// Three line-of-sight UEs at 15/25/35 m moving radially at 14/25/30 m/s.
    fn default() -> Self {
        Self {
            users: vec![
                UserSpec::new(15.0, 14.0),
                UserSpec::new(25.0, 25.0),
                UserSpec::new(35.0, 30.0),
            ],
            qam_order: default_qam_order(),
        }
    }
}

impl UserScenario {
    pub fn empty() -> Self {
        Self {
            users: Vec::new(),
            qam_order: default_qam_order(),
        }
    }
}

/// Config file layout: both sections optional, missing fields take defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    pub system: SystemConfig,
    pub scenario: UserScenario,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    NonPositive(&'static str),
    SymbolShorterThanUseful { symbol_s: f64, useful_s: f64 },
    NonPositiveRange { user: usize },
    NoPaths { user: usize },
    EmptyBlock { user: usize },
    BlockExceedsGrid { user: usize, m_cu: usize, n_cu: usize },
    AllocationOverflow { allocated: usize, available: usize },
    DelayExceedsCyclicPrefix { user: usize, delay_s: f64, cp_s: f64 },
    AmbiguousDoppler { user: usize, doppler_hz: f64, limit_hz: f64 },
    UnsupportedQam(u32),
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NonPositive(field) => write!(f, "{field} must be positive"),
            Issue::SymbolShorterThanUseful { symbol_s, useful_s } => write!(
                f,
                "symbol duration {symbol_s:e} s is shorter than the useful duration {useful_s:e} s"
            ),
            Issue::NonPositiveRange { user } => write!(f, "user {user}: range must be positive"),
            Issue::NoPaths { user } => write!(f, "user {user}: at least one path is required"),
            Issue::EmptyBlock { user } => write!(f, "user {user}: allocation block is empty"),
            Issue::BlockExceedsGrid { user, m_cu, n_cu } => {
                write!(f, "user {user}: block {m_cu}x{n_cu} does not fit the grid")
            }
            Issue::AllocationOverflow {
                allocated,
                available,
            } => write!(f, "user blocks need {allocated} bins, grid has {available}"),
            Issue::DelayExceedsCyclicPrefix { user, delay_s, cp_s } => write!(
                f,
                "user {user}: delay {delay_s:e} s exceeds the cyclic prefix {cp_s:e} s"
            ),
            Issue::AmbiguousDoppler {
                user,
                doppler_hz,
                limit_hz,
            } => write!(
                f,
                "user {user}: echo Doppler {doppler_hz} Hz exceeds the unambiguous limit {limit_hz} Hz"
            ),
            Issue::UnsupportedQam(order) => write!(f, "unsupported QAM order {order}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError(pub Vec<Issue>);

impl std::error::Error for ValidationError {}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: ")?;
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Checks every invariant and reports all violations at once.
pub fn validate(config: &SystemConfig, scenario: &UserScenario) -> Result<(), ValidationError> {
    let mut issues = Vec::new();
    let positive = [
        ("f_c", config.carrier_hz),
        ("delta_f", config.subcarrier_spacing_hz),
        ("T", config.symbol_duration_s),
        ("P_tot_ft", config.total_power_w),
        ("c", config.speed_of_light),
    ];
    for (name, value) in positive {
        if !(value > 0.0 && value.is_finite()) {
            issues.push(Issue::NonPositive(name));
        }
    }
    if config.num_subcarriers == 0 {
        issues.push(Issue::NonPositive("M"));
    }
    if config.num_symbols == 0 {
        issues.push(Issue::NonPositive("N"));
    }
    if !(config.noise_psd_w_per_hz >= 0.0) {
        issues.push(Issue::NonPositive("noise_psd"));
    }
    if !(config.rcs_m2 >= 0.0) {
        issues.push(Issue::NonPositive("sigma_rcs"));
    }
    if !issues.is_empty() {
        // Derived checks below would divide by the broken fields.
        return Err(ValidationError(issues));
    }

    let useful = 1.0 / config.subcarrier_spacing_hz;
    if config.symbol_duration_s < useful {
        issues.push(Issue::SymbolShorterThanUseful {
            symbol_s: config.symbol_duration_s,
            useful_s: useful,
        });
    }
    if scenario.qam_order != 16 {
        issues.push(Issue::UnsupportedQam(scenario.qam_order));
    }

    let cp = config.cyclic_prefix_s();
    let doppler_limit = 0.5 / config.symbol_duration_s;
    let mut allocated = 0usize;
    for (user, spec) in scenario.users.iter().enumerate() {
        if !(spec.range_m > 0.0 && spec.range_m.is_finite()) {
            issues.push(Issue::NonPositiveRange { user });
        }
        if spec.num_paths == 0 {
            issues.push(Issue::NoPaths { user });
        }
        if spec.m_cu == 0 || spec.n_cu == 0 {
            issues.push(Issue::EmptyBlock { user });
        }
        if spec.m_cu > config.num_subcarriers || spec.n_cu > config.num_symbols {
            issues.push(Issue::BlockExceedsGrid {
                user,
                m_cu: spec.m_cu,
                n_cu: spec.n_cu,
            });
        }
        allocated += spec.m_cu * spec.n_cu;

        if spec.range_m > 0.0 {
            let echo_delay = 2.0 * spec.range_m / config.speed_of_light;
            let mut comm_delay = spec.range_m / config.speed_of_light;
            if spec.num_paths > 1 {
                comm_delay += MAX_EXCESS_DELAY_S;
            }
            let delay_s = echo_delay.max(comm_delay);
            if delay_s >= cp {
                issues.push(Issue::DelayExceedsCyclicPrefix {
                    user,
                    delay_s,
                    cp_s: cp,
                });
            }
        }
        let echo_doppler = 2.0 * config.carrier_hz / config.speed_of_light * spec.velocity_ms.abs();
        if echo_doppler >= doppler_limit {
            issues.push(Issue::AmbiguousDoppler {
                user,
                doppler_hz: echo_doppler,
                limit_hz: doppler_limit,
            });
        }
    }
    let available = config.grid_size();
    if allocated > available {
        issues.push(Issue::AllocationOverflow {
            allocated,
            available,
        });
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(ValidationError(issues))
    }
}

/// Grid resolutions and unambiguous spans of the delay-Doppler lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolutions {
    pub delta_tau_s: f64,
    pub delta_nu_hz: f64,
    pub delta_range_m: f64,
    pub delta_velocity_ms: f64,
    pub max_range_m: f64,
    /// Velocities are unambiguous in `[-max, max)`.
    pub max_velocity_ms: f64,
}

pub fn resolutions(config: &SystemConfig) -> Resolutions {
    let c = config.speed_of_light;
    let delta_tau_s = 1.0 / (config.num_subcarriers as f64 * config.subcarrier_spacing_hz);
    let delta_nu_hz = 1.0 / (config.num_symbols as f64 * config.symbol_duration_s);
    Resolutions {
        delta_tau_s,
        delta_nu_hz,
        delta_range_m: c * delta_tau_s / 2.0,
        delta_velocity_ms: c * delta_nu_hz / (2.0 * config.carrier_hz),
        max_range_m: c * config.num_subcarriers as f64 * delta_tau_s / 2.0,
        max_velocity_ms: c / (4.0 * config.carrier_hz * config.symbol_duration_s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    /// Per-bin communication power (W).
    pub comm_w: f64,
    /// Per-bin sensing power in the FT domain (W).
    pub sensing_w: f64,
}

/// Splits the per-bin budget with `rho = 10^beta` going to communication.
pub fn power_split(beta: f64, config: &SystemConfig) -> Result<PowerSplit> {
    if !(beta < 0.0) {
        return Err(Error::NonNegativeBeta(beta));
    }
    let total = config.total_power_w;
    // 1 - 10^beta without cancellation for beta close to zero.
    let sensing_w = -(beta * std::f64::consts::LN_10).exp_m1() * total;
    Ok(PowerSplit {
        comm_w: total - sensing_w,
        sensing_w,
    })
}
