use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent purposes a draw can serve. Each maps to its own key lane,
/// so changing how many values one stage consumes never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Placement,
    Data,
    Pilot,
    Pulse,
    Channel,
    CommNoise,
    SensingNoise,
    Erasure,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::Data => 2,
            Stream::Pilot => 3,
            Stream::Pulse => 4,
            Stream::Channel => 5,
            Stream::CommNoise => 6,
            Stream::SensingNoise => 7,
            Stream::Erasure => 8,
        }
    }
}

/// Counter-keyed ChaCha8 stream.
///
/// The 256-bit key is the tuple `(seed, stream | sub << 32, key_a, key_b)`,
/// so distinct tuples never share a sequence and each one is reproducible
/// on its own.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: Stream) -> Self {
        Self::keyed(seed, stream, 0, [0, 0])
    }

    pub fn keyed(seed: u64, stream: Stream, sub: u32, key: [u64; 2]) -> Self {
        let mut bytes = [0u8; 32];
        let lane = stream.id() | (u64::from(sub) << 32);
        for (i, word) in [seed, lane, key[0], key[1]].into_iter().enumerate() {
            bytes[i * 8..(i + 1) * 8].copy_from_slice(&word.to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(bytes),
        }
    }

    pub fn complex_gaussian(&mut self, variance: f64) -> Complex64 {
        let sigma = (variance / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(self);
        let im: f64 = StandardNormal.sample(self);
        Complex64::new(sigma * re, sigma * im)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `n` i.i.d. circularly-symmetric `CN(0, variance)` samples.
pub fn draw_complex_gaussian(rng: &mut RandomSource, n: usize, variance: f64) -> Vec<Complex64> {
    if variance == 0.0 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    (0..n).map(|_| rng.complex_gaussian(variance)).collect()
}
