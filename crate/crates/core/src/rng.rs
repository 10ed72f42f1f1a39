//! Portable, pinned pseudo-random machinery.
//!
//! Every randomized operation in this crate draws from the generators in this
//! module, never from platform or library defaults. The algorithms and
//! constants are fixed so that a seed produces the same split on every
//! machine, forever:
//!
//! * stream generator: xoshiro256** (Blackman & Vigna), state seeded by four
//!   successive splitmix64 outputs;
//! * substreams: the i-th substream seed is the i-th output of the splitmix64
//!   sequence started at the master seed;
//! * bounded integers: Lemire's unbiased multiply-shift rejection;
//! * shuffling: Fisher-Yates, descending index;
//! * floats: 53 high bits mapped to [0, 1).
//!
//! The [`GENERATOR_NAME`] string is stamped into every split manifest.

/// Generator identifier recorded in manifests.
pub const GENERATOR_NAME: &str =
    "xoshiro256** (splitmix64 seeding/substreams, Lemire bounded sampling, Fisher-Yates shuffle)";

const SPLITMIX64_GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 step: advance `state` by the golden-ratio increment and return
/// the scrambled output. Constants from Steele, Lea & Flood's SplittableRandom.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX64_GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for substream `stream` of master seed `master`: the `stream`-th output
/// of the splitmix64 sequence seeded with `master`, computed by jumping the
/// counter directly. Substreams are what make parallel iteration evaluation
/// order-independent.
pub fn substream_seed(master: u64, stream: u64) -> u64 {
    let mut state = master.wrapping_add(stream.wrapping_mul(SPLITMIX64_GOLDEN));
    splitmix64(&mut state)
}

/// FNV-1a 64-bit hash, used to fold strings (class names) into stream ids.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// xoshiro256** stream generator.
#[derive(Debug, Clone)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    /// Expand a 64-bit seed into the 256-bit state with four splitmix64 steps.
    pub fn from_seed(seed: u64) -> Self {
        let mut state = seed;
        let s = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Xoshiro256StarStar { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform f64 in [0, 1) from the high 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform index in [0, bound) via Lemire's multiply-shift.
    ///
    /// # Panics
    /// Panics if `bound` is zero.
    pub fn gen_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "gen_index bound must be positive");
        let bound = bound as u64;
        let mut x = self.next_u64();
        let mut m = u128::from(x) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                x = self.next_u64();
                m = u128::from(x) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle, iterating from the last index down.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.gen_index(i + 1);
            slice.swap(i, j);
        }
    }

    /// Draw `k` distinct indices from [0, n) by a partial Fisher-Yates pass,
    /// in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n} without replacement");
        let mut idx: Vec<usize> = (0..n).collect();
        for j in 0..k {
            let r = j + self.gen_index(n - j);
            idx.swap(j, r);
        }
        idx.truncate(k);
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix64_reference_outputs() {
        // Reference values for seed 0 from the public-domain splitmix64.c.
        let mut s = 0u64;
        assert_eq!(splitmix64(&mut s), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(&mut s), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(splitmix64(&mut s), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn substream_matches_sequence() {
        let master = 0xDEAD_BEEF;
        let mut s = master;
        let seq: Vec<u64> = (0..5).map(|_| splitmix64(&mut s)).collect();
        for (i, &expect) in seq.iter().enumerate() {
            assert_eq!(substream_seed(master, i as u64), expect);
        }
    }

    #[test]
    fn gen_index_stays_in_bounds() {
        let mut rng = Xoshiro256StarStar::from_seed(1);
        for bound in [1usize, 2, 3, 7, 100, 1 << 20] {
            for _ in 0..200 {
                assert!(rng.gen_index(bound) < bound);
            }
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = Xoshiro256StarStar::from_seed(9);
        let mut v: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn sample_indices_distinct_and_exhaustive_at_k_eq_n() {
        let mut rng = Xoshiro256StarStar::from_seed(3);
        let picks = rng.sample_indices(10, 10);
        let mut sorted = picks.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());

        let picks = rng.sample_indices(100, 8);
        assert_eq!(picks.len(), 8);
        let mut dedup = picks.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 8);
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = Xoshiro256StarStar::from_seed(42);
        let mut b = Xoshiro256StarStar::from_seed(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
