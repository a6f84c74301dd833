//! Deterministic sampling RNG.
//!
//! SplitMix64 is a counter-based generator: output n is a fixed mix of
//! `seed + n·γ`, so streams are reproducible across platforms and can be
//! derived independently per (seed, instance, sample, temperature) cell
//! without sharing state.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Stream for one exploration cell, keyed by (seed, instance index,
    /// sample index, temperature index).
    pub fn for_cell(seed: u64, instance: usize, sample: usize, temperature: usize) -> Self {
        let mut key = SplitMix64::new(seed);
        for word in [instance as u64, sample as u64, temperature as u64] {
            let mixed = key.next_u64();
            key = SplitMix64::new(mixed ^ word.wrapping_mul(GAMMA));
        }
        SplitMix64::new(key.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
