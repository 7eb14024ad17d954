//! Real algebraic number fields `Q(θ)` with elements in the power basis.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ball::Ball;
use super::interval::{dyadic_ceil, dyadic_floor, RatInterval};
use super::poly::QPoly;
use crate::error::{Error, Result};

/// Precision to which the generator is isolated at construction.
const ROOT_BITS: u32 = 192;
/// Hard cap for on-demand refinement in `embed`.
const MAX_EMBED_BITS: u32 = 1 << 14;

/// A real number field `Q(θ)` where `θ` is a distinguished real root of a
/// monic integer polynomial.
///
/// The minimal polynomial is assumed irreducible; that is checked only for
/// the shipped presets. Arithmetic in a field built on a reducible polynomial
/// is a quotient ring with zero divisors and equality tests become meaningless.
pub struct NumberField {
    minpoly: Vec<BigInt>,
    poly: QPoly,
    root: RatInterval,
    theta_pows: Vec<f64>,
    /// `round(θ^i · 2^FIX_BITS)` for `i < d`.
    fixed_pows: Vec<BigInt>,
}

const FIX_BITS: u32 = 160;

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumberField")
            .field("minpoly", &self.minpoly.iter().map(|c| c.to_string()).collect::<Vec<_>>())
            .field("theta", &self.theta())
            .finish()
    }
}

impl NumberField {
    /// The field of rationals, represented as `Q[x]/(x)`.
    pub fn rationals() -> Arc<NumberField> {
        static Q: OnceLock<Arc<NumberField>> = OnceLock::new();
        Q.get_or_init(|| {
            Arc::new(NumberField {
                minpoly: vec![BigInt::zero(), BigInt::one()],
                poly: QPoly::from_ints(&[BigInt::zero(), BigInt::one()]),
                root: RatInterval::point(BigRational::zero()),
                theta_pows: vec![1.0],
                fixed_pows: vec![BigInt::one() << FIX_BITS],
            })
        })
        .clone()
    }

    /// Field generated by the unique root of `minpoly` in `(lo, hi)`.
    ///
    /// `minpoly` lists integer coefficients lowest degree first and must be
    /// monic.
    pub fn new(minpoly: Vec<BigInt>, lo: BigRational, hi: BigRational) -> Result<Arc<NumberField>> {
        let poly = check_minpoly(&minpoly)?;
        if minpoly.len() == 2 {
            let r = -BigRational::from_integer(minpoly[0].clone());
            if r < lo || r > hi {
                return Err(Error::RootIsolation("linear root outside the given interval".into()));
            }
            return Ok(Arc::new(NumberField::from_parts(minpoly, poly, RatInterval::point(r))));
        }
        if lo >= hi {
            return Err(Error::RootIsolation("empty isolating interval".into()));
        }
        if poly.sign_at(&lo) == 0 || poly.sign_at(&hi) == 0 {
            return Err(Error::RootIsolation("isolating interval endpoint is a rational root; the polynomial is reducible".into()));
        }
        let n = poly.count_roots(&lo, &hi);
        if n != 1 {
            return Err(Error::RootIsolation(format!("interval contains {n} real roots, expected exactly one")));
        }
        let root = bisect(&poly, RatInterval::new(lo, hi), ROOT_BITS);
        Ok(Arc::new(NumberField::from_parts(minpoly, poly, root)))
    }

    /// Field generated by the real root of `minpoly` closest to `approx`.
    pub fn near(minpoly: Vec<BigInt>, approx: f64) -> Result<Arc<NumberField>> {
        let poly = check_minpoly(&minpoly)?;
        let roots = poly.isolate_real_roots();
        if roots.is_empty() {
            return Err(Error::RootIsolation("minimal polynomial has no real root".into()));
        }
        let target =
            BigRational::from_float(approx).ok_or_else(|| Error::RootIsolation(format!("approximation {approx} is not finite")))?;
        let pick = roots
            .iter()
            .min_by(|a, b| {
                let da = distance(&target, a);
                let db = distance(&target, b);
                da.cmp(&db)
            })
            .unwrap()
            .clone();
        if minpoly.len() == 2 {
            return NumberField::new(minpoly, pick.0 - BigRational::one(), pick.1 + BigRational::one());
        }
        NumberField::new(minpoly, pick.0, pick.1)
    }

    fn from_parts(minpoly: Vec<BigInt>, poly: QPoly, root: RatInterval) -> NumberField {
        let d = minpoly.len() - 1;
        let mid = root.midpoint();
        let mut theta_pows = Vec::with_capacity(d);
        let mut fixed_pows = Vec::with_capacity(d);
        let scale = BigRational::from_integer(BigInt::one() << FIX_BITS);
        let mut p = BigRational::one();
        for _ in 0..d {
            theta_pows.push(p.to_f64().unwrap_or(f64::NAN));
            fixed_pows.push((&p * &scale).round().to_integer());
            p *= &mid;
        }
        NumberField { minpoly, poly, root, theta_pows, fixed_pows }
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    pub fn minpoly(&self) -> &[BigInt] {
        &self.minpoly
    }

    pub fn is_rational(&self) -> bool {
        self.degree() == 1
    }

    /// `f64` approximation of the generator.
    pub fn theta(&self) -> f64 {
        if self.degree() == 1 {
            return self.root.lo.to_f64().unwrap_or(f64::NAN);
        }
        self.root.midpoint().to_f64().unwrap_or(f64::NAN)
    }

    /// `f64` values of `θ^i` for `i < d`, each correctly rounded from a
    /// rational within `2^-190` of the true power.
    pub fn theta_powers(&self) -> &[f64] {
        &self.theta_pows
    }

    /// Isolating interval for the generator (at least `ROOT_BITS` accurate).
    pub fn root_interval(&self) -> &RatInterval {
        &self.root
    }

    /// Generator enclosure of width at most `2^-bits`.
    pub fn refine(&self, bits: u32) -> RatInterval {
        if self.root.width_at_most_bits(bits) {
            return self.root.clone();
        }
        bisect(&self.poly, self.root.clone(), bits)
    }

    /// Structural identity: same minimal polynomial and same real root.
    pub fn same_as(&self, other: &NumberField) -> bool {
        std::ptr::eq(self, other) || (self.minpoly == other.minpoly && self.root.intersects(&other.root))
    }

    fn reduce(&self, mut c: Vec<BigRational>) -> Vec<BigRational> {
        let d = self.degree();
        if d == 1 {
            // rationals embedded with θ rational: fold θ^k into the constant
            if c.len() > 1 {
                let theta = self.root.lo.clone();
                let mut acc = BigRational::zero();
                for v in c.iter().rev() {
                    acc = acc * &theta + v;
                }
                return vec![acc];
            }
            c.resize(1, BigRational::zero());
            return c;
        }
        while c.len() > d {
            let top = c.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let base = c.len() - d;
            for (i, ci) in self.minpoly[..d].iter().enumerate() {
                if !ci.is_zero() {
                    c[base + i] -= &top * BigRational::from_integer(ci.clone());
                }
            }
        }
        c.resize(d, BigRational::zero());
        c
    }
}

fn check_minpoly(minpoly: &[BigInt]) -> Result<QPoly> {
    if minpoly.len() < 2 {
        return Err(Error::InvalidMinpoly("degree must be at least 1".into()));
    }
    if !minpoly.last().unwrap().is_one() {
        return Err(Error::InvalidMinpoly("minimal polynomial must be monic".into()));
    }
    Ok(QPoly::from_ints(minpoly))
}

fn distance(x: &BigRational, iv: &(BigRational, BigRational)) -> BigRational {
    if &iv.0 < x && x <= &iv.1 {
        BigRational::zero()
    } else {
        let a = (x - &iv.0).abs();
        let b = (x - &iv.1).abs();
        a.min(b)
    }
}

/// Bisect an interval known to contain exactly one simple root with a sign
/// change, keeping dyadic endpoints, until its width is at most `2^-bits`.
fn bisect(poly: &QPoly, start: RatInterval, bits: u32) -> RatInterval {
    // snap outward to dyadics so later midpoints stay short
    let mut lo = dyadic_floor(&start.lo, bits.min(64));
    let mut hi = dyadic_ceil(&start.hi, bits.min(64));
    if poly.sign_at(&lo) == 0 || poly.sign_at(&hi) == 0 || poly.count_roots(&lo, &hi) != 1 {
        lo = start.lo.clone();
        hi = start.hi.clone();
    }
    let s_lo = poly.sign_at(&lo);
    let two = BigRational::from_integer(BigInt::from(2));
    let target = BigRational::new(BigInt::one(), BigInt::one() << bits);
    while &hi - &lo > target {
        let mid = (&lo + &hi) / &two;
        let s = poly.sign_at(&mid);
        if s == 0 {
            return RatInterval::point(mid);
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    RatInterval::new(lo, hi)
}

/// An exact element of a number field, stored as power-basis coordinates.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<NumberField>,
    coeffs: Vec<BigRational>,
}

impl FieldElement {
    pub fn zero(field: &Arc<NumberField>) -> Self {
        FieldElement { field: field.clone(), coeffs: vec![BigRational::zero(); field.degree()] }
    }

    pub fn one(field: &Arc<NumberField>) -> Self {
        FieldElement::from_rational(field, BigRational::one())
    }

    pub fn from_rational(field: &Arc<NumberField>, q: BigRational) -> Self {
        let mut coeffs = vec![BigRational::zero(); field.degree()];
        coeffs[0] = q;
        FieldElement { field: field.clone(), coeffs }
    }

    pub fn from_int(field: &Arc<NumberField>, n: i64) -> Self {
        FieldElement::from_rational(field, BigRational::from_integer(n.into()))
    }

    pub fn ratio(field: &Arc<NumberField>, num: i64, den: i64) -> Self {
        FieldElement::from_rational(field, BigRational::new(num.into(), den.into()))
    }

    /// A rational number in the field of rationals.
    pub fn rational(num: i64, den: i64) -> Self {
        FieldElement::ratio(&NumberField::rationals(), num, den)
    }

    /// The generator `θ`.
    pub fn generator(field: &Arc<NumberField>) -> Self {
        let mut c = vec![BigRational::zero(); field.degree() + 1];
        c[1] = BigRational::one();
        FieldElement { field: field.clone(), coeffs: field.reduce(c) }
    }

    /// Element with the given power-basis coordinates; longer inputs are
    /// reduced modulo the minimal polynomial.
    pub fn from_coeffs(field: &Arc<NumberField>, coeffs: Vec<BigRational>) -> Self {
        FieldElement { field: field.clone(), coeffs: field.reduce(coeffs) }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Zero::is_zero)
    }

    /// The value as a rational when all non-constant coordinates vanish.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    pub fn same_field(&self, other: &FieldElement) -> bool {
        Arc::ptr_eq(&self.field, &other.field) || self.field.same_as(&other.field)
    }

    /// Re-home a rational element into `field`; elements already in `field`
    /// are returned unchanged.
    pub fn lift_into(&self, field: &Arc<NumberField>) -> Result<FieldElement> {
        if self.field.same_as(field) {
            return Ok(FieldElement { field: field.clone(), coeffs: self.coeffs.clone() });
        }
        match self.as_rational() {
            Some(q) => Ok(FieldElement::from_rational(field, q.clone())),
            None => Err(Error::FieldMismatch),
        }
    }

    pub fn checked_add(&self, other: &FieldElement) -> Result<FieldElement> {
        if !self.same_field(other) {
            return Err(Error::FieldMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(FieldElement { field: self.field.clone(), coeffs })
    }

    pub fn checked_sub(&self, other: &FieldElement) -> Result<FieldElement> {
        if !self.same_field(other) {
            return Err(Error::FieldMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(FieldElement { field: self.field.clone(), coeffs })
    }

    pub fn checked_mul(&self, other: &FieldElement) -> Result<FieldElement> {
        if !self.same_field(other) {
            return Err(Error::FieldMismatch);
        }
        let d = self.coeffs.len();
        if d == 1 {
            return Ok(FieldElement { field: self.field.clone(), coeffs: vec![&self.coeffs[0] * &other.coeffs[0]] });
        }
        let mut prod = vec![BigRational::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Ok(FieldElement { field: self.field.clone(), coeffs: self.field.reduce(prod) })
    }

    pub fn mul_rational(&self, q: &BigRational) -> FieldElement {
        FieldElement { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| c * q).collect() }
    }

    pub fn mul_int(&self, n: &BigInt) -> FieldElement {
        let q = BigRational::from_integer(n.clone());
        self.mul_rational(&q)
    }

    pub fn add_rational(&self, q: &BigRational) -> FieldElement {
        let mut out = self.clone();
        out.coeffs[0] += q;
        out
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against
    /// the minimal polynomial.
    pub fn inv(&self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.coeffs.len() == 1 {
            return Ok(FieldElement { field: self.field.clone(), coeffs: vec![self.coeffs[0].recip()] });
        }
        let a = QPoly::new(self.coeffs.clone());
        let (g, s, _) = QPoly::ext_gcd(&a, &self.field.poly);
        if g.degree() != Some(0) {
            return Err(Error::InvalidMinpoly("element shares a factor with a reducible minimal polynomial".into()));
        }
        Ok(FieldElement::from_coeffs(&self.field, s.coeffs().to_vec()))
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement> {
        self.checked_mul(&other.inv()?)
    }

    pub fn pow(&self, e: u32) -> FieldElement {
        let mut base = self.clone();
        let mut acc = FieldElement::one(&self.field);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Fast `f64` enclosure. The radius may be large (or infinite) for
    /// badly conditioned coordinates; callers fall back to `embed`.
    pub fn ball(&self) -> Ball {
        if self.coeffs.len() == 1 {
            let c = &self.coeffs[0];
            if c.is_zero() {
                return Ball::exact(0.0);
            }
            let v = c.to_f64().unwrap_or(f64::NAN);
            if c.denom().is_one() && v.abs() < 9.0e15 {
                return Ball::exact(v);
            }
            return Ball::new(v, v.abs() * 2.0 * f64::EPSILON + f64::MIN_POSITIVE);
        }
        let d = self.coeffs.len();
        let mut mid = 0.0;
        let mut mag = 0.0;
        for (c, t) in self.coeffs.iter().zip(&self.field.theta_pows) {
            if c.is_zero() {
                continue;
            }
            let v = c.to_f64().unwrap_or(f64::NAN) * t;
            mid += v;
            mag += v.abs();
        }
        Ball::new(mid, mag * (4 * d + 4) as f64 * f64::EPSILON + f64::MIN_POSITIVE)
    }

    /// Rational enclosure of the real value with width at most `2^-bits`.
    pub fn embed(&self, bits: u32) -> Result<RatInterval> {
        if self.coeffs.len() == 1 {
            return Ok(RatInterval::point(self.coeffs[0].clone()));
        }
        let mag = self.coeffs.iter().map(|c| c.abs()).fold(BigRational::zero(), |a, b| a + b);
        let mag_bits = mag.ceil().to_integer().bits() as u32;
        let mut theta_bits = bits + mag_bits + 8;
        loop {
            if theta_bits > MAX_EMBED_BITS {
                return Err(Error::PrecisionUnreachable { bits });
            }
            let t = self.field.refine(theta_bits);
            let v = horner_interval(&self.coeffs, &t);
            if v.width_at_most_bits(bits) {
                return Ok(v);
            }
            theta_bits += theta_bits.max(32) / 2;
        }
    }

    /// Sign of the real value, decided exactly.
    pub fn signum(&self) -> i8 {
        if let Some(q) = self.as_rational() {
            return if q.is_zero() {
                0
            } else if q.is_positive() {
                1
            } else {
                -1
            };
        }
        if let Some(s) = self.ball().certain_sign() {
            return s;
        }
        if self.is_zero() {
            return 0;
        }
        let mut bits = 64;
        loop {
            let iv = self.embed(bits).expect("nonzero field element has a resolvable sign");
            if iv.lo.is_positive() {
                return 1;
            }
            if iv.hi.is_negative() {
                return -1;
            }
            bits *= 2;
        }
    }

    /// Exact comparison of real values.
    pub fn cmp_value(&self, other: &FieldElement) -> Ordering {
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return a.cmp(b);
        }
        let (a, b) = (self.ball(), other.ball());
        if a.is_finite() && b.is_finite() {
            if a.hi() < b.lo() {
                return Ordering::Less;
            }
            if a.lo() > b.hi() {
                return Ordering::Greater;
            }
        }
        match (self - other).signum() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        }
    }

    /// Exact `⌊x⌋`.
    pub fn floor(&self) -> BigInt {
        if let Some(q) = self.as_rational() {
            return q.floor().to_integer();
        }
        if let Some(f) = self.ball().certain_floor() {
            return f;
        }
        let mut bits = 64;
        let mut checked_integer = false;
        loop {
            let iv = self.embed(bits).expect("field element embedding");
            let lo = iv.lo.floor().to_integer();
            let hi = iv.hi.floor().to_integer();
            if lo == hi {
                return lo;
            }
            if !checked_integer {
                checked_integer = true;
                if self.add_rational(&-BigRational::from_integer(hi.clone())).is_zero() {
                    return hi;
                }
            }
            bits *= 2;
        }
    }

    /// Exact `⌈x⌉`.
    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    /// Nearest `f64` up to a few ulps, with relative accuracy for tiny values.
    pub fn to_f64(&self) -> f64 {
        if let Some(q) = self.as_rational() {
            return q.to_f64().unwrap_or(f64::NAN);
        }
        let b = self.ball();
        if b.is_finite() && b.rad <= b.mid.abs() * 1e-15 {
            return b.mid;
        }
        if let Some(v) = self.fixed_point_f64() {
            return v;
        }
        let mut bits = 64;
        while bits <= MAX_EMBED_BITS {
            let Ok(iv) = self.embed(bits) else { break };
            if !iv.contains_zero() {
                let small = if iv.lo.is_positive() { iv.lo.clone() } else { -iv.hi.clone() };
                if iv.width() * BigRational::from_integer(BigInt::one() << 56u32) <= small {
                    return iv.midpoint().to_f64().unwrap_or(f64::NAN);
                }
            }
            bits *= 2;
        }
        b.mid
    }

    /// `Σ c_i θ^i` with `θ^i` as 160-bit fixed-point integers; declines when
    /// cancellation eats more than about 100 bits.
    fn fixed_point_f64(&self) -> Option<f64> {
        let l = self.denominator_lcm();
        let mut sum = BigInt::zero();
        let mut mag = BigInt::zero();
        for (c, p) in self.coeffs.iter().zip(&self.field.fixed_pows) {
            if c.is_zero() {
                continue;
            }
            let n = c.numer() * (&l / c.denom());
            mag += n.abs();
            sum += n * p;
        }
        if sum.is_zero() || sum.abs() < (mag << 64u32) {
            return None;
        }
        let num = sum.to_f64()?;
        let den = l.to_f64()?;
        if !num.is_finite() || !den.is_finite() || den == 0.0 {
            return BigRational::new(sum, l << FIX_BITS).to_f64();
        }
        Some(num / den / 2f64.powi(FIX_BITS as i32))
    }

    /// Lexicographic order on coordinates; a cheap deterministic total order
    /// that is unrelated to the real value.
    pub fn coeff_cmp(&self, other: &FieldElement) -> Ordering {
        self.coeffs.iter().cmp(other.coeffs.iter())
    }

    /// Least common multiple of coordinate denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }
}

fn horner_interval(coeffs: &[BigRational], t: &RatInterval) -> RatInterval {
    let mut acc = RatInterval::point(coeffs[coeffs.len() - 1].clone());
    for c in coeffs[..coeffs.len() - 1].iter().rev() {
        acc = acc.mul(t).add_scalar(c);
    }
    acc
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && self.same_field(other)
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (≈ {})", self.to_f64())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})θ")?,
                _ => write!(f, "({c})θ^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).expect("operands live in different number fields")
            }
        }
        impl std::ops::$trait<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$checked(&rhs).expect("operands live in different number fields")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}
