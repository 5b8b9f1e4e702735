//! Seeding helpers shared by every stochastic component.
//!
//! All randomness flows from a 64-bit seed into a `ChaCha8Rng`; independent
//! consumers use distinct ChaCha streams so that adding a consumer never
//! shifts the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for initial-condition sampling. Noise uses streams `0..N`.
pub const INITIAL_STREAM: u64 = u64::MAX;
/// Stream used for probe / auxiliary draws.
pub const PROBE_STREAM: u64 = u64::MAX - 1;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed splitting: the seed of sub-run `(a, b)` depends only on
/// the master seed and the coordinates, never on execution order.
pub fn sub_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(master ^ splitmix64(a.wrapping_mul(0xA24B_AED4_963E_E407) ^ splitmix64(b)))
}

/// Radical inverse of `index` in the given prime base (Halton component).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Point `index` of the Halton sequence in `dims` dimensions (`dims <= 8`).
pub fn halton(index: u64, dims: usize) -> Vec<f64> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    assert!(dims <= PRIMES.len(), "halton supports at most 8 dimensions");
    PRIMES[..dims].iter().map(|&p| radical_inverse(index, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_of_each_other() {
        let a: f64 = stream_rng(7, 0).gen();
        let b: f64 = stream_rng(7, 1).gen();
        let a2: f64 = stream_rng(7, 0).gen();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn halton_base2_prefix() {
        let xs: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(xs, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn sub_seed_differs_per_coordinate() {
        assert_ne!(sub_seed(1, 0, 1), sub_seed(1, 1, 0));
        assert_eq!(sub_seed(9, 3, 4), sub_seed(9, 3, 4));
    }
}
