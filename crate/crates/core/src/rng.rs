//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`). A stream is
//! identified by `(seed, stream)`: the key is derived from `seed` with
//! `SeedableRng::seed_from_u64` and the 64-bit ChaCha stream id is set to
//! `stream`, so replications and Monte-Carlo blocks get disjoint,
//! independent sequences. Uniform reals take the top 53 bits of
//! `next_u64`: `u = (x >> 11) · 2⁻⁵³ ∈ [0, 1)`.

pub use rand_chacha::ChaCha8Rng as StreamRng;
use rand_core::{RngCore, SeedableRng};

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (rng.next_u64() >> 11) as f64 * SCALE
}

/// Uniform on `[lo, hi)`.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}
