//! Counter-based random numbers: every draw is a pure function of
//! `(key, counter)`, so mode amplitudes can be fetched in any order.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x5EDC_1A55_1CA1_0F1E;

/// SplitMix64 output mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random-access SplitMix64 stream: word `i` is what the sequential
/// generator seeded with `key` would emit at position `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ SEED_SALT),
        }
    }

    #[inline]
    pub fn word(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in (0, 1], 53-bit resolution.
    #[inline]
    pub fn uniform_open_closed(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normals from words `2i` and `2i+1` (Box–Muller).
    #[inline]
    pub fn normal_pair(&self, index: u64) -> (f64, f64) {
        let u1 = self.uniform_open_closed(2 * index);
        let u2 = self.uniform_open_closed(2 * index + 1);
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        (radius * c, radius * s)
    }
}
