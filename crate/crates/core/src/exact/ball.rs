use num_bigint::BigInt;
use num_traits::FromPrimitive;

const REL: f64 = 4.0 * f64::EPSILON;

/// Midpoint-radius enclosure in `f64`.
///
/// Every operation inflates the radius by a few ulps of the result so the
/// enclosure survives round-to-nearest. Used as a fast filter in front of
/// exact decisions; a `Ball` never decides anything it cannot certify.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub mid: f64,
    pub rad: f64,
}

#[allow(clippy::should_implement_trait)]
impl Ball {
    pub fn exact(x: f64) -> Ball {
        Ball { mid: x, rad: 0.0 }
    }

    pub fn new(mid: f64, rad: f64) -> Ball {
        Ball { mid, rad }
    }

    pub fn is_finite(&self) -> bool {
        self.mid.is_finite() && self.rad.is_finite()
    }

    fn slack(v: f64) -> f64 {
        v.abs() * REL + f64::MIN_POSITIVE
    }

    pub fn add(self, o: Ball) -> Ball {
        let mid = self.mid + o.mid;
        Ball { mid, rad: self.rad + o.rad + Ball::slack(mid) }
    }

    pub fn sub(self, o: Ball) -> Ball {
        let mid = self.mid - o.mid;
        Ball { mid, rad: self.rad + o.rad + Ball::slack(mid) }
    }

    pub fn mul(self, o: Ball) -> Ball {
        let mid = self.mid * o.mid;
        let rad = self.mid.abs() * o.rad + o.mid.abs() * self.rad + self.rad * o.rad;
        Ball { mid, rad: rad * (1.0 + REL) + Ball::slack(mid) }
    }

    pub fn scale(self, k: f64) -> Ball {
        let mid = self.mid * k;
        Ball { mid, rad: self.rad * k.abs() * (1.0 + REL) + Ball::slack(mid) }
    }

    pub fn lo(&self) -> f64 {
        self.mid - self.rad * (1.0 + REL)
    }

    pub fn hi(&self) -> f64 {
        self.mid + self.rad * (1.0 + REL)
    }

    /// Sign when the enclosure excludes zero.
    pub fn certain_sign(&self) -> Option<i8> {
        if !self.is_finite() {
            return None;
        }
        if self.lo() > 0.0 {
            Some(1)
        } else if self.hi() < 0.0 {
            Some(-1)
        } else if self.mid == 0.0 && self.rad == 0.0 {
            Some(0)
        } else {
            None
        }
    }

    /// `floor` of every point in the ball when they all agree.
    pub fn certain_floor(&self) -> Option<BigInt> {
        if !self.is_finite() || self.mid.abs() > 4.0e15 {
            return None;
        }
        let (lo, hi) = (self.lo(), self.hi());
        let (fl, fh) = (lo.floor(), hi.floor());
        // an exact integer endpoint is ambiguous unless the ball is a point
        if fl == fh && (lo != fl || self.rad == 0.0) {
            BigInt::from_f64(fl)
        } else {
            None
        }
    }
}
