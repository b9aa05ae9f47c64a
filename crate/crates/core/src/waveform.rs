//! Transmit grid construction.
//!
//! Each UE receives a contiguous `M_cu x N_cu` block of the FT grid carrying
//! Gray-coded 16-QAM data and comb-type pilots. The radar pulse is placed on
//! the DD grid, mapped to FT with [`isfft`] and added on top of everything.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, UserScenario};
use crate::error::{Error, Result};
use crate::numerics::{isfft, ComplexGrid, RandomSource};

const PLACEMENT_RESTARTS: usize = 100;
const DRAWS_PER_USER: usize = 100;

/// Rectangular FT block assigned to one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAllocation {
    pub user_id: usize,
    pub m_offset: usize,
    pub n_offset: usize,
    pub m_size: usize,
    pub n_size: usize,
}

impl UserAllocation {
    pub fn contains(&self, m: usize, n: usize) -> bool {
        (self.m_offset..self.m_offset + self.m_size).contains(&m)
            && (self.n_offset..self.n_offset + self.n_size).contains(&n)
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.m_offset < other.m_offset + other.m_size
            && other.m_offset < self.m_offset + self.m_size
            && self.n_offset < other.n_offset + other.n_size
            && other.n_offset < self.n_offset + self.n_size
    }

    pub fn len(&self) -> usize {
        self.m_size * self.n_size
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Places every user block uniformly at random without overlap.
///
/// Users are placed in order, each with a bounded number of rejection draws;
/// when a user cannot be placed the whole layout is restarted, up to a fixed
/// number of times, so infeasible packings fail instead of looping.
pub fn allocate_users(
    scenario: &UserScenario,
    config: &SystemConfig,
    rng: &mut RandomSource,
) -> Result<Vec<UserAllocation>> {
    let (m, n) = (config.num_subcarriers, config.num_symbols);
    let users = scenario.users.len();
    let fail = || Error::PlacementFailed {
        users,
        attempts: PLACEMENT_RESTARTS * DRAWS_PER_USER,
    };
    if scenario
        .users
        .iter()
        .any(|u| u.m_cu == 0 || u.n_cu == 0 || u.m_cu > m || u.n_cu > n)
    {
        return Err(fail());
    }

    'layout: for _ in 0..PLACEMENT_RESTARTS {
        let mut placed: Vec<UserAllocation> = Vec::with_capacity(users);
        for (user_id, spec) in scenario.users.iter().enumerate() {
            let found = (0..DRAWS_PER_USER).find_map(|_| {
                let candidate = UserAllocation {
                    user_id,
                    m_offset: rng.random_range(0..=m - spec.m_cu),
                    n_offset: rng.random_range(0..=n - spec.n_cu),
                    m_size: spec.m_cu,
                    n_size: spec.n_cu,
                };
                placed.iter().all(|p| !p.overlaps(&candidate)).then_some(candidate)
            });
            match found {
                Some(a) => placed.push(a),
                None => continue 'layout,
            }
        }
        return Ok(placed);
    }
    Err(fail())
}

/// Gray-coded square 16-QAM with unit average energy.
///
/// Bits `b0 b1` select the in-phase level and `b2 b3` the quadrature level,
/// each through the Gray sequence `00, 01, 11, 10 -> -3, -1, +1, +3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Qam16;

impl Qam16 {
    pub const BITS_PER_SYMBOL: usize = 4;
    pub const SCALE: f64 = 0.316_227_766_016_837_94; // 1 / sqrt(10)

    fn level(b_hi: u8, b_lo: u8) -> f64 {
        match (b_hi, b_lo) {
            (0, 0) => -3.0,
            (0, 1) => -1.0,
            (1, 1) => 1.0,
            _ => 3.0,
        }
    }

    fn bits_of(level: f64) -> (u8, u8) {
        if level < -2.0 {
            (0, 0)
        } else if level < 0.0 {
            (0, 1)
        } else if level < 2.0 {
            (1, 1)
        } else {
            (1, 0)
        }
    }

    pub fn map(bits: &[u8]) -> Complex64 {
        debug_assert_eq!(bits.len(), Self::BITS_PER_SYMBOL);
        Complex64::new(Self::level(bits[0], bits[1]), Self::level(bits[2], bits[3])) * Self::SCALE
    }

    /// Minimum-distance decision, written into `out[..4]`.
    pub fn demap(z: Complex64, out: &mut [u8]) {
        let (b0, b1) = Self::bits_of(z.re / Self::SCALE);
        let (b2, b3) = Self::bits_of(z.im / Self::SCALE);
        out[..4].copy_from_slice(&[b0, b1, b2, b3]);
    }

    pub fn constellation() -> Vec<Complex64> {
        (0..16u8)
            .map(|w| Self::map(&[(w >> 3) & 1, (w >> 2) & 1, (w >> 1) & 1, w & 1]))
            .collect()
    }
}

/// Comb pilot layout inside a user block: selected OFDM symbols carry pilots
/// on every `comb`-th subcarrier starting at `offset`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotPattern {
    pub symbols: Vec<usize>,
    pub comb: usize,
    pub offset: usize,
}

impl Default for PilotPattern {
    fn default() -> Self {
        Self {
            symbols: vec![2, 11],
            comb: 2,
            offset: 0,
        }
    }
}

impl PilotPattern {
    pub fn check(&self, m_cu: usize, n_cu: usize) -> Result<()> {
        let ordered = self.symbols.windows(2).all(|w| w[0] < w[1]);
        let fits = self.symbols.len() >= 2
            && ordered
            && self.symbols.last().is_some_and(|&s| s < n_cu)
            && self.comb >= 1
            && self.offset < self.comb
            && m_cu % self.comb == 0;
        if fits {
            Ok(())
        } else {
            Err(Error::PilotPatternOutOfBlock(m_cu, n_cu))
        }
    }

    /// Pilot subcarriers relative to the block.
    pub fn rows(&self, m_cu: usize) -> Vec<usize> {
        (self.offset..m_cu).step_by(self.comb).collect()
    }

    pub fn is_pilot(&self, m: usize, n: usize) -> bool {
        m % self.comb == self.offset && self.symbols.contains(&n)
    }

    /// Row-major `m_cu * n_cu` mask of pilot positions.
    pub fn mask(&self, m_cu: usize, n_cu: usize) -> Vec<bool> {
        let mut mask = vec![false; m_cu * n_cu];
        for m in self.rows(m_cu) {
            for &n in &self.symbols {
                mask[m * n_cu + n] = true;
            }
        }
        mask
    }
}

/// Unit-power symbols of one user block, before power scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct QamFrame {
    /// Data bits in row-major order of the non-pilot positions.
    pub bits: Vec<u8>,
    /// `M_cu x N_cu` symbols, pilots included.
    pub symbols: ComplexGrid,
    pub pilot_mask: Vec<bool>,
    pub pattern: PilotPattern,
}

impl QamFrame {
    /// Random data from `data_rng` and random QPSK pilots from `pilot_rng`.
    pub fn random(
        m_cu: usize,
        n_cu: usize,
        pattern: &PilotPattern,
        data_rng: &mut RandomSource,
        pilot_rng: &mut RandomSource,
    ) -> Result<Self> {
        pattern.check(m_cu, n_cu)?;
        let pilot_mask = pattern.mask(m_cu, n_cu);
        let data_bins = pilot_mask.iter().filter(|&&p| !p).count();
        let bits: Vec<u8> = (0..data_bins * Qam16::BITS_PER_SYMBOL)
            .map(|_| data_rng.random_range(0..=1u8))
            .collect();
        let qpsk = std::f64::consts::FRAC_1_SQRT_2;

        let mut words = bits.chunks_exact(Qam16::BITS_PER_SYMBOL);
        let mut data = Vec::with_capacity(m_cu * n_cu);
        for &is_pilot in &pilot_mask {
            let z = if is_pilot {
                let re = if pilot_rng.random_bool(0.5) { qpsk } else { -qpsk };
                let im = if pilot_rng.random_bool(0.5) { qpsk } else { -qpsk };
                Complex64::new(re, im)
            } else {
                Qam16::map(words.next().expect("one word per data bin"))
            };
            data.push(z);
        }
        Ok(Self {
            bits,
            symbols: ComplexGrid::from_vec(m_cu, n_cu, data)?,
            pilot_mask,
            pattern: pattern.clone(),
        })
    }

    pub fn data_bins(&self) -> usize {
        self.pilot_mask.iter().filter(|&&p| !p).count()
    }
}

/// Places each user's frame, scaled by `sqrt(p_c_ft)`, into an otherwise
/// empty `M x N` grid.
pub fn build_comm_grid(
    config: &SystemConfig,
    allocations: &[UserAllocation],
    frames: &[QamFrame],
    p_c_ft: f64,
) -> Result<ComplexGrid> {
    if allocations.len() != frames.len() {
        return Err(Error::LengthMismatch(allocations.len(), frames.len()));
    }
    let mut grid = ComplexGrid::zeros(config.num_subcarriers, config.num_symbols);
    let amp = p_c_ft.sqrt();
    for (alloc, frame) in allocations.iter().zip(frames) {
        if frame.symbols.dims() != (alloc.m_size, alloc.n_size) {
            return Err(Error::DimensionMismatch {
                left: (alloc.m_size, alloc.n_size),
                right: frame.symbols.dims(),
            });
        }
        for m in 0..alloc.m_size {
            for n in 0..alloc.n_size {
                grid[(alloc.m_offset + m, alloc.n_offset + n)] = frame.symbols[(m, n)] * amp;
            }
        }
    }
    Ok(grid)
}

/// How the complex amplitude `s[l, k]` of each pulse is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseAmplitude {
    /// `CN(0, 1)` draw per pulse.
    #[default]
    Random,
    /// `s = 1`.
    Unit,
}

/// Requested pulse positions on the DD grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub positions: Vec<(usize, usize)>,
    pub amplitude: PulseAmplitude,
}

impl PulseSpec {
    /// A single pulse at zero delay and mid-grid Doppler, so that echoes with
    /// negative Doppler do not wrap around the grid edge.
    pub fn single(config: &SystemConfig, amplitude: PulseAmplitude) -> Self {
        Self {
            positions: vec![(0, config.num_symbols / 2)],
            amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingPulse {
    pub delay_bin: usize,
    pub doppler_bin: usize,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingPulseSet {
    pub pulses: Vec<SensingPulse>,
    /// DD power given to each pulse (W).
    pub power_dd_w: f64,
}

impl SensingPulseSet {
    pub fn origin(&self) -> Option<(usize, usize)> {
        self.pulses.first().map(|p| (p.delay_bin, p.doppler_bin))
    }
}

/// Builds the DD sensing grid.
///
/// The FT budget `p_s_ft` is shared equally among the pulses, so each pulse
/// gets `p_s_ft * M * N / I` in the DD domain and, with unit amplitudes,
/// every FT bin of `isfft` of the result carries `p_s_ft` on average.
pub fn build_sensing_dd(
    spec: &PulseSpec,
    config: &SystemConfig,
    p_s_ft: f64,
    rng: &mut RandomSource,
) -> Result<(SensingPulseSet, ComplexGrid)> {
    let (m, n) = (config.num_subcarriers, config.num_symbols);
    let mut grid = ComplexGrid::zeros(m, n);
    if spec.positions.is_empty() {
        return Ok((
            SensingPulseSet {
                pulses: Vec::new(),
                power_dd_w: 0.0,
            },
            grid,
        ));
    }
    let power_dd_w = p_s_ft * (m * n) as f64 / spec.positions.len() as f64;
    let amp = power_dd_w.sqrt();
    let mut pulses = Vec::with_capacity(spec.positions.len());
    for &(l, k) in &spec.positions {
        if l >= m || k >= n || pulses.iter().any(|p: &SensingPulse| (p.delay_bin, p.doppler_bin) == (l, k)) {
            return Err(Error::InvalidPulse(l, k));
        }
        let amplitude = match spec.amplitude {
            PulseAmplitude::Unit => Complex64::new(1.0, 0.0),
            PulseAmplitude::Random => rng.complex_gaussian(1.0),
        };
        grid[(l, k)] = amplitude * amp;
        pulses.push(SensingPulse {
            delay_bin: l,
            doppler_bin: k,
            amplitude,
        });
    }
    Ok((SensingPulseSet { pulses, power_dd_w }, grid))
}

/// `X_c + isfft(X_s)`.
pub fn superimpose(x_c_ft: &ComplexGrid, x_s_dd: &ComplexGrid) -> Result<ComplexGrid> {
    x_c_ft.add(&isfft(x_s_dd))
}
