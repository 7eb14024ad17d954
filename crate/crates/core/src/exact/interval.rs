use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Closed interval with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RatInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        RatInterval { lo, hi }
    }

    pub fn point(x: BigRational) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn add_scalar(&self, c: &BigRational) -> RatInterval {
        RatInterval { lo: &self.lo + c, hi: &self.hi + c }
    }

    pub fn mul(&self, other: &RatInterval) -> RatInterval {
        if !self.lo.is_negative() && !other.lo.is_negative() {
            return RatInterval { lo: &self.lo * &other.lo, hi: &self.hi * &other.hi };
        }
        let p = [&self.lo * &other.lo, &self.lo * &other.hi, &self.hi * &other.lo, &self.hi * &other.hi];
        let lo = p.iter().min().unwrap().clone();
        let hi = p.iter().max().unwrap().clone();
        RatInterval { lo, hi }
    }

    /// Outward-rounded `f64` enclosure.
    pub fn to_f64_bounds(&self) -> (f64, f64) {
        (round_down(&self.lo), round_up(&self.hi))
    }

    /// Width is at most `2^-bits`.
    pub fn width_at_most_bits(&self, bits: u32) -> bool {
        let w = self.width();
        w * BigRational::from_integer(BigInt::one() << bits) <= BigRational::one()
    }
}

fn round_down(x: &BigRational) -> f64 {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if !v.is_finite() {
        return if x.is_negative() { f64::NEG_INFINITY } else { f64::MAX };
    }
    match BigRational::from_float(v) {
        Some(r) if &r > x => v.next_down(),
        _ => v,
    }
}

fn round_up(x: &BigRational) -> f64 {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if !v.is_finite() {
        return if x.is_negative() { f64::MIN } else { f64::INFINITY };
    }
    match BigRational::from_float(v) {
        Some(r) if &r < x => v.next_up(),
        _ => v,
    }
}

/// Dyadic rational `m / 2^bits`.
pub(crate) fn dyadic(m: BigInt, bits: u32) -> BigRational {
    BigRational::new(m, BigInt::one() << bits)
}

/// Largest dyadic with denominator `2^bits` not exceeding `x`.
pub(crate) fn dyadic_floor(x: &BigRational, bits: u32) -> BigRational {
    let scaled = x * BigRational::from_integer(BigInt::one() << bits);
    dyadic(scaled.floor().to_integer(), bits)
}

pub(crate) fn dyadic_ceil(x: &BigRational, bits: u32) -> BigRational {
    let scaled = x * BigRational::from_integer(BigInt::one() << bits);
    dyadic(scaled.ceil().to_integer(), bits)
}

impl Default for RatInterval {
    fn default() -> Self {
        RatInterval::point(BigRational::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn outward_rounding_encloses() {
        let iv = RatInterval::new(q(1, 3), q(2, 3));
        let (lo, hi) = iv.to_f64_bounds();
        assert!(BigRational::from_float(lo).unwrap() <= q(1, 3));
        assert!(BigRational::from_float(hi).unwrap() >= q(2, 3));
        let exact = RatInterval::point(q(1, 2));
        assert_eq!(exact.to_f64_bounds(), (0.5, 0.5));
    }

    #[test]
    fn signed_products() {
        let a = RatInterval::new(q(-1, 1), q(2, 1));
        let b = RatInterval::new(q(-3, 1), q(1, 1));
        let p = a.mul(&b);
        assert_eq!(p, RatInterval::new(q(-6, 1), q(3, 1)));
    }
}
