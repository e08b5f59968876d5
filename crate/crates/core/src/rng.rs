//! Deterministic pseudo-random stream used for node placement and cluster
//! elections.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood's `splitmix64` finalizer
//! over a Weyl sequence). It was chosen because it is tiny, has a published
//! closed-form step, and produces identical output on every platform, so a
//! seed written into a results file is enough to reproduce a run anywhere.
//!
//! Unit-interval samples map the top 53 bits of each output onto `[0, 1)`:
//! `(u >> 11) as f64 * 2^-53`.

const WEYL_INCREMENT: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 stream. The full state is the last Weyl counter value, so
/// cloning the struct forks a stream that replays identically.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(WEYL_INCREMENT);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
        z ^ (z >> 31)
    }

    /// Uniform sample in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `[0, bound)` via Lemire's multiply-shift reduction.
    /// Bias is at most `bound / 2^64`, far below anything a simulation of
    /// this size can observe.
    pub fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "next_index requires a non-empty range");
        (((self.next_u64() as u128) * (bound as u128)) >> 64) as usize
    }
}
