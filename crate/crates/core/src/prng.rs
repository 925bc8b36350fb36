//! Deterministic pseudo-random numbers.
//!
//! Everything seeded in this crate (bootstrap resampling, fit restarts,
//! synthetic corpora) draws from PCG-XSH-RR 64/32 ("pcg32"), implemented
//! here to match the PCG reference C implementation bit for bit. Fixing
//! the generator in the public contract makes seeded results
//! reproducible across platforms and across reimplementations of this
//! toolkit.

const MULTIPLIER: u64 = 6364136223846793005;

/// pcg32: 64 bits of state, 32-bit output, selectable stream.
#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    /// Seeds with an initial state and a stream id, following the
    /// reference `pcg32_srandom_r` procedure.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (stream << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform integer in `[0, bound)` via the reference
    /// `pcg32_boundedrand_r` rejection scheme (no modulo bias).
    pub fn next_below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u32();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 32 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4294967296.0
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and an integer label
/// (bootstrap week number, cross-validation fold index, ...).
///
/// Defined as `splitmix64(base XOR label * 0x9E3779B97F4A7C15)`; part of
/// the reproducibility contract, so reimplementations can match seeded
/// outputs exactly.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    splitmix64(base ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_stream() {
        // First outputs of the PCG reference implementation seeded with
        // pcg32_srandom_r(42, 54), as printed by the pcg32-demo program.
        let mut rng = Pcg32::new(42, 54);
        let expected = [
            0xa15c02b7u32,
            0x7b47f409,
            0xba1d3330,
            0x83d2f293,
            0xbfa4784b,
            0xcbed606e,
        ];
        for &want in &expected {
            assert_eq!(rng.next_u32(), want);
        }
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut rng = Pcg32::new(7, 1);
        for _ in 0..10_000 {
            assert!(rng.next_below(13) < 13);
        }
    }

    #[test]
    fn bounded_draws_hit_every_value() {
        let mut rng = Pcg32::new(1, 2);
        let mut seen = [false; 8];
        for _ in 0..1_000 {
            seen[rng.next_below(8) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn unit_floats_in_range() {
        let mut rng = Pcg32::new(99, 3);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn streams_are_independent() {
        let a: Vec<u32> = (0..8)
            .map({
                let mut r = Pcg32::new(42, 0);
                move |_| r.next_u32()
            })
            .collect();
        let b: Vec<u32> = (0..8)
            .map({
                let mut r = Pcg32::new(42, 1);
                move |_| r.next_u32()
            })
            .collect();
        assert_ne!(a, b);
    }

    #[test]
    fn derive_seed_distinguishes_labels() {
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 1), derive_seed(43, 1));
        // stable value, part of the reproducibility contract
        assert_eq!(derive_seed(0, 0), splitmix64(0));
    }
}
