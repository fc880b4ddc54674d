//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating-point type, instantiated as `f64` (the [`crate::Real`] alias) or `f32`.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar: f32 or f64.
///
/// `Display`/`FromStr` are required because the on-disk formats store numbers
/// as shortest round-trip decimal text.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + Debug
    + Default
    + SampleUniform
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Lossless-enough usize → scalar conversion for counts and indices.
pub(crate) fn from_usize<F: Scalar>(n: usize) -> F {
    F::from_usize(n).expect("count representable as scalar")
}

/// Parse a scalar from trimmed decimal text.
pub(crate) fn parse_scalar<F: Scalar>(text: &str) -> Option<F> {
    F::from_str(text.trim()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn display_parse_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x: f64 = f64::standard_normal(&mut rng) * 1e3;
            let back: f64 = parse_scalar(&format!("{x}")).unwrap();
            assert_eq!(x, back);
            let y = x as f32;
            let back32: f32 = parse_scalar(&format!("{y}")).unwrap();
            assert_eq!(y, back32);
        }
    }
}
