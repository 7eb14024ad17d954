//! Carpet systems `S_i(x, y) = (βx + t_x, αy + t_y)` and word algebra.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact::{FieldElement, NumberField};

/// Unvalidated carpet description.
#[derive(Clone, Debug)]
pub struct RawCarpet {
    pub alpha: FieldElement,
    pub beta: FieldElement,
    pub maps: Vec<(FieldElement, FieldElement)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Translation {
    pub tx: FieldElement,
    pub ty: FieldElement,
}

/// A validated carpet: `α < β`, translations inside the unit square and
/// pairwise disjoint open rectangles. All scalars live in one number field.
#[derive(Clone, Debug)]
pub struct CarpetIfs {
    field: Arc<NumberField>,
    alpha: FieldElement,
    beta: FieldElement,
    maps: Vec<Translation>,
    alpha_f: f64,
    beta_f: f64,
}

/// A finite word over `{0, .., m-1}`; the first letter is the outermost map.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Word> {
        if indices.is_empty() {
            return Err(Error::EmptyWord);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::IndexOutOfRange { index: bad, m });
        }
        Ok(Word(indices))
    }

    /// Build from 1-based letters as written in the literature.
    pub fn from_one_based(letters: &[usize], m: usize) -> Result<Word> {
        if let Some(&bad) = letters.iter().find(|&&i| i == 0 || i > m) {
            return Err(Error::IndexOutOfRange { index: bad, m });
        }
        Word::new(letters.iter().map(|i| i - 1).collect(), m)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn power(&self, n: usize) -> Word {
        Word(self.0.repeat(n))
    }

    /// The `idx`-th word of length `k` in lexicographic order.
    pub fn nth(idx: u64, k: usize, m: usize) -> Word {
        let mut v = vec![0; k];
        let mut rest = idx;
        for slot in v.iter_mut().rev() {
            *slot = (rest % m as u64) as usize;
            rest /= m as u64;
        }
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l + 1)?;
        }
        write!(f, ")")
    }
}

/// The cylinder rectangle `S_w([0,1]^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderRect {
    pub x0: FieldElement,
    pub y0: FieldElement,
    pub width: FieldElement,
    pub height: FieldElement,
}

impl CylinderRect {
    /// Closed containment of `other` in `self`.
    pub fn contains(&self, other: &CylinderRect) -> bool {
        let x1 = &self.x0 + &self.width;
        let y1 = &self.y0 + &self.height;
        let ox1 = &other.x0 + &other.width;
        let oy1 = &other.y0 + &other.height;
        self.x0.cmp_value(&other.x0) != Ordering::Greater
            && self.y0.cmp_value(&other.y0) != Ordering::Greater
            && ox1.cmp_value(&x1) != Ordering::Greater
            && oy1.cmp_value(&y1) != Ordering::Greater
    }

    /// Open interiors intersect.
    pub fn interiors_meet(&self, other: &CylinderRect) -> bool {
        open_overlap(&self.x0, &self.width, &other.x0, &other.width) && open_overlap(&self.y0, &self.height, &other.y0, &other.height)
    }
}

fn open_overlap(a: &FieldElement, wa: &FieldElement, b: &FieldElement, wb: &FieldElement) -> bool {
    // (a, a+wa) ∩ (b, b+wb) ≠ ∅  ⇔  b < a + wa  and  a < b + wb
    b.cmp_value(&(a + wa)) == Ordering::Less && a.cmp_value(&(b + wb)) == Ordering::Less
}

fn common_field(scalars: &[&FieldElement]) -> Result<Arc<NumberField>> {
    let mut field: Option<Arc<NumberField>> = None;
    for s in scalars {
        if s.field().is_rational() {
            continue;
        }
        match &field {
            None => field = Some(s.field().clone()),
            Some(f) if f.same_as(s.field()) => {}
            Some(_) => return Err(Error::FieldMismatch),
        }
    }
    Ok(field.unwrap_or_else(NumberField::rationals))
}

pub fn validate_carpet(raw: &RawCarpet) -> Result<CarpetIfs> {
    if raw.maps.is_empty() {
        return Err(Error::ParameterOutOfRange("a carpet needs at least one map".into()));
    }
    let mut all: Vec<&FieldElement> = vec![&raw.alpha, &raw.beta];
    for (tx, ty) in &raw.maps {
        all.push(tx);
        all.push(ty);
    }
    let field = common_field(&all)?;
    let alpha = raw.alpha.lift_into(&field)?;
    let beta = raw.beta.lift_into(&field)?;
    let alpha_f = alpha.to_f64();
    let beta_f = beta.to_f64();
    let one = FieldElement::one(&field);
    for (name, v, vf) in [("alpha", &alpha, alpha_f), ("beta", &beta, beta_f)] {
        if v.signum() <= 0 || v.cmp_value(&one) != Ordering::Less {
            return Err(Error::NotContractive { which: name, value: vf });
        }
    }
    if alpha.cmp_value(&beta) != Ordering::Less {
        return Err(Error::OrderViolation { alpha: alpha_f, beta: beta_f });
    }
    let x_room = &one - &beta;
    let y_room = &one - &alpha;
    let mut maps = Vec::with_capacity(raw.maps.len());
    for (i, (tx, ty)) in raw.maps.iter().enumerate() {
        let tx = tx.lift_into(&field)?;
        let ty = ty.lift_into(&field)?;
        let inside = tx.signum() >= 0
            && ty.signum() >= 0
            && tx.cmp_value(&x_room) != Ordering::Greater
            && ty.cmp_value(&y_room) != Ordering::Greater;
        if !inside {
            return Err(Error::TranslationOutOfBox { map: i + 1 });
        }
        maps.push(Translation { tx, ty });
    }
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            let (a, b) = (&maps[i], &maps[j]);
            if open_overlap(&a.tx, &beta, &b.tx, &beta) && open_overlap(&a.ty, &alpha, &b.ty, &alpha) {
                return Err(Error::RectangleOverlap(i + 1, j + 1));
            }
        }
    }
    Ok(CarpetIfs { field, alpha, beta, maps, alpha_f, beta_f })
}

/// The two-map Przytycki-Urbański carpet with translations `(0,0)` and
/// `(1-β, 1-α)`.
pub fn pu_carpet(alpha: &FieldElement, beta: &FieldElement) -> Result<CarpetIfs> {
    let half = FieldElement::rational(1, 2);
    let field = common_field(&[alpha, beta])?;
    let a = alpha.lift_into(&field)?;
    let b = beta.lift_into(&field)?;
    let h = half.lift_into(&field)?;
    let one = FieldElement::one(&field);
    let ok =
        a.signum() > 0 && a.cmp_value(&h) != Ordering::Greater && h.cmp_value(&b) == Ordering::Less && b.cmp_value(&one) == Ordering::Less;
    if !ok {
        return Err(Error::ParameterOutOfRange(format!(
            "PU carpets need 0 < alpha <= 1/2 < beta < 1, got alpha = {}, beta = {}",
            a.to_f64(),
            b.to_f64()
        )));
    }
    let zero = FieldElement::zero(&field);
    validate_carpet(&RawCarpet { alpha: a.clone(), beta: b.clone(), maps: vec![(zero.clone(), zero), (&one - &b, &one - &a)] })
}

impl CarpetIfs {
    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn alpha(&self) -> &FieldElement {
        &self.alpha
    }

    pub fn beta(&self) -> &FieldElement {
        &self.beta
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_f
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta_f
    }

    pub fn maps(&self) -> &[Translation] {
        &self.maps
    }

    pub fn tx_f64(&self) -> Vec<f64> {
        self.maps.iter().map(|t| t.tx.to_f64()).collect()
    }

    /// A single map: the attractor is a point.
    pub fn is_degenerate(&self) -> bool {
        self.maps.len() == 1
    }

    /// Projected first-level intervals have disjoint interiors, so the
    /// projection satisfies the open set condition with `(0,1)`.
    pub fn projection_osc(&self) -> bool {
        for i in 0..self.maps.len() {
            for j in i + 1..self.maps.len() {
                if open_overlap(&self.maps[i].tx, &self.beta, &self.maps[j].tx, &self.beta) {
                    return false;
                }
            }
        }
        true
    }

    /// Rebuild the system with a different vertical ratio.
    pub fn with_alpha(&self, alpha: &FieldElement) -> Result<CarpetIfs> {
        validate_carpet(&RawCarpet {
            alpha: alpha.clone(),
            beta: self.beta.clone(),
            maps: self.maps.iter().map(|t| (t.tx.clone(), t.ty.clone())).collect(),
        })
    }

    pub fn raw(&self) -> RawCarpet {
        RawCarpet {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            maps: self.maps.iter().map(|t| (t.tx.clone(), t.ty.clone())).collect(),
        }
    }

    fn check(&self, w: &Word) -> Result<()> {
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        if let Some(&bad) = w.indices().iter().find(|&&i| i >= self.m()) {
            return Err(Error::IndexOutOfRange { index: bad, m: self.m() });
        }
        Ok(())
    }

    pub fn compose_cylinder(&self, w: &Word) -> Result<CylinderRect> {
        self.check(w)?;
        let mut x0 = FieldElement::zero(&self.field);
        let mut y0 = FieldElement::zero(&self.field);
        for &i in w.indices().iter().rev() {
            x0 = &self.maps[i].tx + &(&self.beta * &x0);
            y0 = &self.maps[i].ty + &(&self.alpha * &y0);
        }
        let k = w.len() as u32;
        Ok(CylinderRect { x0, y0, width: self.beta.pow(k), height: self.alpha.pow(k) })
    }

    /// Left endpoint of the projected cylinder `π S_w([0,1]^2)`.
    pub fn left_endpoint(&self, w: &Word) -> Result<FieldElement> {
        self.check(w)?;
        let mut x0 = FieldElement::zero(&self.field);
        for &i in w.indices().iter().rev() {
            x0 = &self.maps[i].tx + &(&self.beta * &x0);
        }
        Ok(x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> FieldElement {
        FieldElement::rational(n, d)
    }

    fn golden_beta() -> FieldElement {
        let k = NumberField::near(vec![BigInt::from(-1), BigInt::from(1), BigInt::from(1)], 0.618).unwrap();
        FieldElement::generator(&k)
    }

    fn raw(alpha: FieldElement, beta: FieldElement, maps: &[(FieldElement, FieldElement)]) -> RawCarpet {
        RawCarpet { alpha, beta, maps: maps.to_vec() }
    }

    #[test]
    fn validation_examples() {
        let ok = validate_carpet(&raw(r(1, 3), r(1, 2), &[(r(0, 1), r(0, 1)), (r(1, 2), r(2, 3))])).unwrap();
        assert_eq!(ok.m(), 2);
        let swapped = validate_carpet(&raw(r(1, 2), r(1, 3), &[(r(0, 1), r(0, 1)), (r(2, 3), r(1, 2))]));
        assert!(matches!(swapped, Err(Error::OrderViolation { .. })));
        let dup = validate_carpet(&raw(r(1, 3), r(1, 2), &[(r(0, 1), r(0, 1)), (r(0, 1), r(0, 1))]));
        assert_eq!(dup.unwrap_err(), Error::RectangleOverlap(1, 2));
        let outside = validate_carpet(&raw(r(1, 3), r(1, 2), &[(r(3, 4), r(0, 1))]));
        assert_eq!(outside.unwrap_err(), Error::TranslationOutOfBox { map: 1 });
        let big = validate_carpet(&raw(r(1, 3), r(1, 1), &[(r(0, 1), r(0, 1))]));
        assert!(matches!(big, Err(Error::NotContractive { which: "beta", .. })));
    }

    #[test]
    fn touching_rectangles_are_allowed() {
        let c = validate_carpet(&raw(r(1, 2), r(2, 3), &[(r(0, 1), r(0, 1)), (r(1, 3), r(1, 2))]));
        assert!(c.is_ok());
    }

    #[test]
    fn pu_constructor() {
        assert!(pu_carpet(&r(1, 2), &golden_beta()).is_ok());
        let s2 = NumberField::near(vec![BigInt::from(-2), BigInt::from(0), BigInt::from(1)], 1.41).unwrap();
        let beta = FieldElement::generator(&s2).mul_rational(&num_rational::BigRational::new(1.into(), 2.into()));
        assert!(pu_carpet(&r(1, 3), &beta).is_ok());
        assert!(matches!(pu_carpet(&r(3, 5), &r(7, 10)), Err(Error::ParameterOutOfRange(_))));
    }

    #[test]
    fn cylinders_of_pu_carpet() {
        let beta = golden_beta();
        let alpha = r(1, 2);
        let c = pu_carpet(&alpha, &beta).unwrap();
        let w1 = c.compose_cylinder(&Word::from_one_based(&[1], 2).unwrap()).unwrap();
        assert!(w1.x0.is_zero() && w1.y0.is_zero());
        assert_eq!(w1.width, beta.lift_into(c.field()).unwrap());
        let w2 = c.compose_cylinder(&Word::from_one_based(&[2], 2).unwrap()).unwrap();
        let one = FieldElement::one(c.field());
        assert_eq!(w2.x0, &one - &beta);
        let w12 = c.compose_cylinder(&Word::from_one_based(&[1, 2], 2).unwrap()).unwrap();
        assert_eq!(w12.x0, &beta * &(&one - &beta));
        assert_eq!(w12.y0.as_rational().unwrap(), &num_rational::BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn golden_endpoint_coincidence() {
        let beta = golden_beta();
        let c = pu_carpet(&r(1, 2), &beta).unwrap();
        let one = FieldElement::one(c.field());
        let a = c.left_endpoint(&Word::from_one_based(&[2, 1, 1], 2).unwrap()).unwrap();
        let b = c.left_endpoint(&Word::from_one_based(&[1, 2, 2], 2).unwrap()).unwrap();
        assert_eq!(a, &one - &beta);
        assert_eq!(a, b);
        let z = c.left_endpoint(&Word::from_one_based(&[1, 1, 1, 1], 2).unwrap()).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn word_errors() {
        assert_eq!(Word::new(vec![], 2).unwrap_err(), Error::EmptyWord);
        assert_eq!(Word::new(vec![0, 2], 2).unwrap_err(), Error::IndexOutOfRange { index: 2, m: 2 });
        assert_eq!(Word::from_one_based(&[1, 2, 2], 2).unwrap().to_string(), "(1,2,2)");
        assert_eq!(Word::nth(5, 3, 2).indices(), &[1, 0, 1]);
    }
}
