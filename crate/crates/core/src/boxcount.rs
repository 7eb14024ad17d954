//! Box counts of the attractor and of its projection on exact grids.
//!
//! Cells are closed axis-aligned squares `[i r, (i+1) r] × [j r, (j+1) r]`;
//! a cell is counted when it meets the covering set in a set of positive
//! area (positive length for the projection), so cylinders touching a grid
//! line from one side do not spill into the neighbouring cell.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::carpet::CarpetIfs;
use crate::csv::{g17, Table};
use crate::endpoints::Budget;
use crate::error::{Error, Result};
use crate::exact::FieldElement;
use crate::fit::{fit_line, SlopeFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Attractor,
    Projection,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountEntry {
    pub r: f64,
    pub count: u64,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountSeries {
    pub target: Target,
    pub entries: Vec<BoxCountEntry>,
}

impl BoxCountSeries {
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["r", "N_r"]);
        for e in &self.entries {
            t.push(vec![g17(e.r), e.count.to_string()]);
        }
        t.render()
    }
}

/// Closed intervals with disjoint interiors, sorted.
pub type Cover = Vec<(FieldElement, FieldElement)>;

/// Merged union of the depth-`p` projected cylinders.
pub fn projection_cover(ifs: &CarpetIfs, p: usize, budget: &Budget) -> Result<Cover> {
    let mut cover = unit_cover(ifs);
    for _ in 0..p {
        cover = refine_cover(ifs, &cover, budget)?;
    }
    Ok(cover)
}

fn unit_cover(ifs: &CarpetIfs) -> Cover {
    vec![(FieldElement::zero(ifs.field()), FieldElement::one(ifs.field()))]
}

/// `U_{p+1} = ∪_i (t_i + β U_p)`, merged.
fn refine_cover(ifs: &CarpetIfs, cover: &Cover, budget: &Budget) -> Result<Cover> {
    let mut pieces: Vec<(FieldElement, FieldElement)> = Vec::with_capacity(cover.len() * ifs.m());
    for t in ifs.maps() {
        for (a, b) in cover {
            pieces.push((&t.tx + &(a * ifs.beta()), &t.tx + &(b * ifs.beta())));
        }
    }
    pieces.sort_by(|x, y| x.0.cmp_value(&y.0));
    let mut merged: Cover = Vec::with_capacity(pieces.len());
    for (a, b) in pieces {
        match merged.last_mut() {
            Some(last) if a.cmp_value(&last.1).is_le() => {
                if b.cmp_value(&last.1).is_gt() {
                    last.1 = b;
                }
            }
            _ => merged.push((a, b)),
        }
    }
    if merged.len() > budget.max_points {
        return Err(Error::BudgetExceeded {
            what: "projection cover components".into(),
            needed: merged.len() as u128,
            limit: budget.max_points as u128,
        });
    }
    Ok(merged)
}

/// True when the cover is exactly `[0, 1]`.
pub fn covers_unit_interval(cover: &Cover) -> bool {
    cover.len() == 1 && cover[0].0.is_zero() && cover[0].1.is_one()
}

/// Smallest depth `p ≤ cap` at which the projected cylinders cover `[0, 1]`.
pub fn unit_cover_depth(ifs: &CarpetIfs, cap: usize, budget: &Budget) -> Result<Option<usize>> {
    let mut cover = unit_cover(ifs);
    for p in 1..=cap {
        cover = refine_cover(ifs, &cover, budget)?;
        if covers_unit_interval(&cover) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn check_scale(r: &BigRational) -> Result<()> {
    if !r.is_positive() || r >= &BigRational::one() {
        return Err(Error::ParameterOutOfRange(format!("scale r = {r} must lie in (0, 1)")));
    }
    Ok(())
}

/// Smallest `n` with `ratio^n ≤ r`.
fn depth_for(ratio: &FieldElement, r: &FieldElement) -> usize {
    let mut pow = FieldElement::one(ratio.field());
    let mut n = 0;
    while pow.cmp_value(r).is_gt() {
        pow = &pow * ratio;
        n += 1;
    }
    n
}

fn to_i64(n: BigInt) -> i64 {
    n.to_i64().expect("grid index fits in i64")
}

/// Columns `[lo, hi]` of the `r`-grid meeting `(a, b)` in positive length,
/// given `a/r` and `b/r`.
fn columns(a_over_r: &FieldElement, b_over_r: &FieldElement) -> Option<(i64, i64)> {
    let lo = to_i64(a_over_r.floor());
    let hi = to_i64(b_over_r.ceil()) - 1;
    (hi >= lo).then_some((lo, hi))
}

fn count_ranges(mut ranges: Vec<(i64, i64)>) -> u64 {
    ranges.sort_unstable();
    let mut total = 0u64;
    let mut cur: Option<(i64, i64)> = None;
    for (lo, hi) in ranges {
        match cur {
            Some((cl, ch)) if lo <= ch + 1 => cur = Some((cl, ch.max(hi))),
            Some((cl, ch)) => {
                total += (ch - cl + 1) as u64;
                cur = Some((lo, hi));
            }
            None => cur = Some((lo, hi)),
        }
    }
    if let Some((cl, ch)) = cur {
        total += (ch - cl + 1) as u64;
    }
    total
}

/// `N_r(πF)` through the depth-`n` cover with `β^n ≤ r`. Returns `(count, n)`.
pub fn box_count_projection(ifs: &CarpetIfs, r: &BigRational, budget: &Budget) -> Result<(u64, usize)> {
    check_scale(r)?;
    let n = depth_for(ifs.beta(), &FieldElement::from_rational(ifs.field(), r.clone()));
    let cover = projection_cover(ifs, n, budget)?;
    let inv = r.recip();
    let ranges: Vec<(i64, i64)> = cover.iter().filter_map(|(a, b)| columns(&a.mul_rational(&inv), &b.mul_rational(&inv))).collect();
    Ok((count_ranges(ranges), n))
}

/// `N_r(F)` through the depth-`n` cylinder rectangles with `α^n ≤ r`.
/// Inside each rectangle the horizontal extent is refined to the image of
/// the depth-`p` projection cover with `β^{n+p} ≤ r`. Returns `(count, n)`.
pub fn box_count_attractor(ifs: &CarpetIfs, r: &BigRational, budget: &Budget) -> Result<(u64, usize)> {
    check_scale(r)?;
    let n = depth_for(ifs.alpha(), &FieldElement::from_rational(ifs.field(), r.clone()));
    budget.check_words(ifs.m(), n)?;
    let field = ifs.field();
    let beta_n = ifs.beta().pow(n as u32);
    let alpha_n = ifs.alpha().pow(n as u32);
    let r_rel = FieldElement::from_rational(field, r.clone()).checked_div(&beta_n)?;
    let p = depth_for(ifs.beta(), &r_rel);
    let cover = projection_cover(ifs, p, budget)?;
    let inv = r.recip();
    let scaled: Vec<(FieldElement, FieldElement)> =
        cover.iter().map(|(a, b)| ((a * &beta_n).mul_rational(&inv), (b * &beta_n).mul_rational(&inv))).collect();
    let height = alpha_n.mul_rational(&inv);

    let mut corners: Vec<(FieldElement, FieldElement)> = vec![(FieldElement::zero(field), FieldElement::zero(field))];
    let mut bpow = FieldElement::one(field);
    let mut apow = FieldElement::one(field);
    for _ in 0..n {
        let incs: Vec<(FieldElement, FieldElement)> = ifs.maps().iter().map(|t| (&t.tx * &bpow, &t.ty * &apow)).collect();
        let mut next = Vec::with_capacity(corners.len() * incs.len());
        for (x, y) in &corners {
            for (dx, dy) in &incs {
                next.push((x + dx, y + dy));
            }
        }
        corners = next;
        bpow = &bpow * ifs.beta();
        apow = &apow * ifs.alpha();
    }

    let mut rows: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
    for (x, y) in &corners {
        let x = x.mul_rational(&inv);
        let y = y.mul_rational(&inv);
        let Some((r0, r1)) = columns(&y, &(&y + &height)) else { continue };
        let cols: Vec<(i64, i64)> = scaled.iter().filter_map(|(a, b)| columns(&(&x + a), &(&x + b))).collect();
        for row in r0..=r1 {
            rows.entry(row).or_default().extend_from_slice(&cols);
        }
    }
    let count = rows.into_values().map(count_ranges).sum();
    Ok((count, n))
}

pub fn box_count_series(ifs: &CarpetIfs, target: Target, scales: &[BigRational], budget: &Budget) -> Result<BoxCountSeries> {
    let mut entries = Vec::with_capacity(scales.len());
    for r in scales {
        let (count, depth) = match target {
            Target::Attractor => box_count_attractor(ifs, r, budget)?,
            Target::Projection => box_count_projection(ifs, r, budget)?,
        };
        entries.push(BoxCountEntry { r: r.to_f64().unwrap_or(f64::NAN), count, depth });
    }
    Ok(BoxCountSeries { target, entries })
}

/// Slope of `log N_r` against `log(1/r)`; needs at least four scales
/// spanning a factor of 100.
pub fn fit_box_dimension(series: &BoxCountSeries) -> Result<SlopeFit> {
    let e = &series.entries;
    if e.len() < 4 {
        return Err(Error::InsufficientScales(format!("{} scales, need at least 4", e.len())));
    }
    let lo = e.iter().map(|x| x.r).fold(f64::INFINITY, f64::min);
    let hi = e.iter().map(|x| x.r).fold(0.0, f64::max);
    if hi / lo < 100.0 {
        return Err(Error::InsufficientScales(format!("scales span a factor {:.3}, need 100", hi / lo)));
    }
    if e.iter().any(|x| x.count == 0) {
        return Err(Error::InsufficientScales("zero count".into()));
    }
    let xs: Vec<f64> = e.iter().map(|x| -x.r.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|x| (x.count as f64).ln()).collect();
    fit_line(&xs, &ys)
}

/// `2^{-lo}, …, 2^{-hi}`.
pub fn dyadic_scales(lo: u32, hi: u32) -> Vec<BigRational> {
    (lo..=hi).map(|e| BigRational::new(1.into(), BigInt::one() << e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::{preset, preset_with_alpha};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn projection_counts() {
        let b = Budget::default();
        let golden = preset("pu-golden").unwrap();
        assert_eq!(box_count_projection(&golden, &q(1, 256), &b).unwrap().0, 256);
        let cantor = preset("cantor-third").unwrap();
        for n in 1..=8 {
            assert_eq!(box_count_projection(&cantor, &q(1, 3i64.pow(n)), &b).unwrap().0, 1 << n);
        }
        let two = preset("bm-two-column").unwrap();
        assert_eq!(box_count_projection(&two, &q(1, 1024), &b).unwrap().0, 1024);
    }

    #[test]
    fn unit_cover_certificates() {
        let b = Budget::default();
        assert_eq!(unit_cover_depth(&preset("pu-golden").unwrap(), 4, &b).unwrap(), Some(1));
        assert_eq!(unit_cover_depth(&preset("lebesgue-half").unwrap(), 4, &b).unwrap(), Some(1));
        assert_eq!(unit_cover_depth(&preset("cantor-third").unwrap(), 6, &b).unwrap(), None);
    }

    #[test]
    fn separated_attractor_counts() {
        let b = Budget::default();
        // α = 1/4, β = 1/2, r = 1/16: 16 rows, each meeting one cylinder of width 1/4
        let two = preset("bm-two-column").unwrap();
        let (n4, _) = box_count_attractor(&two, &q(1, 16), &b).unwrap();
        assert_eq!(n4, 16);
        let s = box_count_series(&two, Target::Attractor, &dyadic_scales(4, 12), &b).unwrap();
        let f = fit_box_dimension(&s).unwrap();
        assert!((f.slope - 1.0).abs() < 0.1, "{}", f.slope);
    }

    #[test]
    fn garsia_half_box_dimension() {
        let c = preset_with_alpha("pu-garsia-sqrt2", &FieldElement::rational(1, 2)).unwrap();
        let s = box_count_series(&c, Target::Attractor, &dyadic_scales(6, 13), &Budget::default()).unwrap();
        let f = fit_box_dimension(&s).unwrap();
        assert!((f.slope - 1.5).abs() < 0.1, "{}", f.slope);
    }

    #[test]
    fn nested_scale_counts() {
        let b = Budget::default();
        let c = preset("pu-golden").unwrap();
        for e in 3..9 {
            let r = 2f64.powi(-e);
            let (a, _) = box_count_attractor(&c, &q(1, 1 << e), &b).unwrap();
            let (h, _) = box_count_attractor(&c, &q(1, 1 << (e + 1)), &b).unwrap();
            assert!(a <= h && (h as f64) <= 4.0 * a as f64 + 4.0 * (1.0 / r + 1.0));
        }
    }

    #[test]
    fn fit_needs_scales() {
        let s = BoxCountSeries {
            target: Target::Projection,
            entries: (1..=4).map(|k| BoxCountEntry { r: 2f64.powi(-k), count: 1 << k, depth: k as usize }).collect(),
        };
        assert!(matches!(fit_box_dimension(&s), Err(Error::InsufficientScales(_))));
        let s = BoxCountSeries {
            target: Target::Projection,
            entries: (1..=8).map(|k| BoxCountEntry { r: 2f64.powi(-k), count: 1 << k, depth: k as usize }).collect(),
        };
        assert!((fit_box_dimension(&s).unwrap().slope - 1.0).abs() < 1e-12);
    }
}
