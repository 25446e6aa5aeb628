//! Portable, splittable random streams.
//!
//! Every trial draws from its own ChaCha8 stream whose 256-bit key is the
//! SHA-256 digest of `(master seed, experiment tag, cell coordinates, trial)`.
//! Streams are therefore independent of thread scheduling, and two distinct
//! coordinate tuples never share a key.
//!
//! Gaussian variates use the inverse normal CDF (Acklam's rational
//! approximation) so the transform is the same on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

/// Internal seed used for eigensolver start vectors, independent of any trial seed.
pub(crate) const SOLVER_SEED: u64 = 0x5eed_1a2c_2057_0001;

/// Derive a stream for one trial of one grid cell.
pub fn stream(master_seed: u64, tag: &str, coords: &[u64], trial: u64) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(b"entrywise/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update((coords.len() as u64).to_le_bytes());
    for c in coords {
        hasher.update(c.to_le_bytes());
    }
    hasher.update(trial.to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    Stream::from_seed(digest)
}

/// Stream for a single standalone draw (e.g. `sample(spec, seed)`).
pub fn seeded(seed: u64) -> Stream {
    stream(seed, "sample", &[], 0)
}

/// Uniform on the open interval (0, 1) with 53 bits of resolution.
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let k = rng.next_u64() >> 11;
    (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn bernoulli<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> bool {
    open01(rng) < p
}

/// Random ±1.
#[inline]
pub fn rademacher<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    if rng.next_u32() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn std_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    inverse_normal_cdf(open01(rng))
}

/// Number of failures before the next success of a Bernoulli(p) sequence,
/// used to skip over unobserved entries. `p` must lie in (0, 1).
#[inline]
pub(crate) fn geometric_gap<R: RngCore + ?Sized>(rng: &mut R, ln_one_minus_p: f64) -> usize {
    let g = (open01(rng).ln() / ln_one_minus_p).floor();
    if g >= usize::MAX as f64 {
        usize::MAX
    } else {
        g as usize
    }
}

/// Fisher-Yates shuffle driven by our own stream so results stay portable.
pub fn shuffle<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Acklam's rational approximation of Φ⁻¹ (relative error below 1.2e-9).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    debug_assert!(p > 0.0 && p < 1.0);
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}
