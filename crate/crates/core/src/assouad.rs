//! Two-scale covering exponent.
//!
//! For each `k` the window scale is `R = α^k` and the fine scale is
//! `r = α^{n+k}` with `β^{n+1} < (α/β)^k ≤ β^n`. Inside a level-`k`
//! cylinder an `R`-window is the image of a vertical tube of width
//! `(α/β)^k` in the unit square, so counts are taken in tube coordinates:
//! cells of width `(α/β)^k α^n` and height `α^n` meeting the depth-`n`
//! cylinders, whose horizontal extent is refined by a projection cover.
//! Grid arithmetic is in `f64`; values within rounding distance of a grid
//! line snap onto it.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::boxcount::projection_cover;
use crate::carpet::CarpetIfs;
use crate::csv::{g17, Table};
use crate::endpoints::{Budget, EndpointLevel};
use crate::error::{Error, Result};
use crate::exact::FieldElement;
use crate::fit::{fit_line, SlopeFit};

const SNAP: f64 = 1e-9;
/// Absolute error allowed on unit-square coordinates.
const COORD_ERR: f64 = 1e-15;
/// Corner anchors per `k` after thinning.
pub const MAX_ANCHORS: usize = 256;
/// Cap on components of the horizontal refinement cover.
pub const MAX_COVER_COMPONENTS: usize = 1 << 16;
/// Cap on distinct endpoints behind the measure-guided window.
pub const GUIDE_MAX_POINTS: usize = 1 << 18;
/// Default cap on `m^n` for the depth-`n` localisation.
pub const DEFAULT_MAX_CYLINDERS: u128 = 1 << 16;

/// Largest `n` with `m^n ≤ DEFAULT_MAX_CYLINDERS`.
pub fn default_n_max(m: usize) -> usize {
    if m < 2 {
        return 16;
    }
    let mut n = 0;
    while (m as u128).pow(n as u32 + 1) <= DEFAULT_MAX_CYLINDERS {
        n += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    Corner,
    Guided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssouadWindowSample {
    pub k: usize,
    pub anchor: Anchor,
    /// Left edge of the tube in the rescaled level-`k` cylinder.
    pub offset: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub count: u64,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssouadRow {
    pub k: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub n_k: usize,
    pub max_count: u64,
    pub max_window_exponent: f64,
    pub guided_is_max: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssouadEstimate {
    pub rows: Vec<AssouadRow>,
    /// Best window and guided window for each `k`.
    pub samples: Vec<AssouadWindowSample>,
    /// `log max_count` against `log(R/r)`.
    pub fit: SlopeFit,
    /// Fraction of `k` where the guided window attains the maximum.
    pub guided_hit_rate: f64,
}

impl AssouadEstimate {
    pub fn exponent(&self) -> f64 {
        self.fit.slope
    }

    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["k", "R", "r", "n_k", "max_window_exponent"]);
        for row in &self.rows {
            t.push(vec![row.k.to_string(), g17(row.big_r), g17(row.r), row.n_k.to_string(), g17(row.max_window_exponent)]);
        }
        t.render()
    }
}

/// `n(k)`: the depth with `β^{n+1} < (α/β)^k ≤ β^n`.
pub fn coupled_depth(ifs: &CarpetIfs, k: usize) -> Result<usize> {
    let tau = ifs.alpha().checked_div(ifs.beta())?.pow(k as u32);
    let mut n = 0;
    let mut next = ifs.beta().clone();
    while next.cmp_value(&tau).is_ge() {
        next = &next * ifs.beta();
        n += 1;
    }
    Ok(n)
}

/// Refinement depth `p` with `β^{n+p} ≤ (α/β)^k α^n`.
fn refinement_depth(ifs: &CarpetIfs, k: usize, n: usize) -> usize {
    let (a, b) = (ifs.alpha_f64(), ifs.beta_f64());
    let rel = (a / b).powi(k as i32) * a.powi(n as i32) / b.powi(n as i32);
    (rel.ln() / b.ln() - 1e-9).ceil().max(0.0) as usize
}

/// Deepest projection cover within `MAX_COVER_COMPONENTS`, up to `cap`.
fn max_cover_depth(ifs: &CarpetIfs, cap: usize, budget: &Budget) -> Result<usize> {
    let loose = Budget { max_points: MAX_COVER_COMPONENTS, ..*budget };
    let mut p = 0;
    while p < cap && projection_cover(ifs, p + 1, &loose).is_ok() {
        p += 1;
    }
    Ok(p)
}

/// One `k` per depth `n(k) ∈ [2, n_max]`, the smallest such `k`, stopping
/// once the horizontal refinement would exceed `MAX_COVER_COMPONENTS`.
pub fn default_k_list(ifs: &CarpetIfs, n_max: usize) -> Result<Vec<usize>> {
    let p_max = max_cover_depth(ifs, 64, &Budget::default())?;
    let mut ks = Vec::new();
    let mut seen = None;
    for k in 1..=1000 {
        let n = coupled_depth(ifs, k)?;
        if n > n_max || refinement_depth(ifs, k, n) > p_max {
            break;
        }
        if n >= 2 && seen != Some(n) {
            ks.push(k);
            seen = Some(n);
        }
    }
    Ok(ks)
}

/// Depth-`n` cylinders in the unit square, sorted by left edge.
struct Cylinders {
    x: Vec<f64>,
    y: Vec<f64>,
    width: f64,
    height: f64,
}

impl Cylinders {
    fn build(ifs: &CarpetIfs, n: usize) -> Cylinders {
        let field = ifs.field();
        let mut corners = vec![(FieldElement::zero(field), FieldElement::zero(field))];
        let mut bpow = FieldElement::one(field);
        let mut apow = FieldElement::one(field);
        for _ in 0..n {
            let incs: Vec<(FieldElement, FieldElement)> = ifs.maps().iter().map(|t| (&t.tx * &bpow, &t.ty * &apow)).collect();
            corners = corners.par_iter().flat_map_iter(|(x, y)| incs.iter().map(move |(dx, dy)| (x + dx, y + dy))).collect();
            bpow = &bpow * ifs.beta();
            apow = &apow * ifs.alpha();
        }
        let mut pts: Vec<(f64, f64)> = corners.par_iter().map(|(x, y)| (x.to_f64(), y.to_f64())).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Cylinders {
            x: pts.iter().map(|p| p.0).collect(),
            y: pts.iter().map(|p| p.1).collect(),
            width: bpow.to_f64(),
            height: apow.to_f64(),
        }
    }
}

fn snap_floor(v: f64, tol: f64) -> i64 {
    (v + tol).floor() as i64
}

fn snap_ceil(v: f64, tol: f64) -> i64 {
    (v - tol).ceil() as i64
}

struct Geometry<'a> {
    cyl: &'a Cylinders,
    /// Horizontal cover of `πF` in `[0, 1]`.
    cover: &'a [(f64, f64)],
    tau: f64,
    cell_w: f64,
    cell_h: f64,
}

impl Geometry<'_> {
    /// Cells of the tube `[u, u + τ] × [0, 1]` meeting the localisation.
    fn count(&self, u: f64) -> u64 {
        let c = self.cyl;
        let lo = c.x.partition_point(|&x| x + c.width <= u);
        let hi = c.x.partition_point(|&x| x < u + self.tau);
        let tol_h = SNAP + COORD_ERR / self.cell_h;
        let tol_w = SNAP + COORD_ERR / self.cell_w;
        let mut spans: Vec<(i64, i64, i64)> = Vec::new();
        for i in lo..hi {
            let (x0, y0) = (c.x[i], c.y[i]);
            let r0 = snap_floor(y0 / self.cell_h, tol_h);
            let r1 = snap_ceil((y0 + c.height) / self.cell_h, tol_h) - 1;
            // cover components overlapping the tube
            let a = (u - x0) / c.width;
            let b = (u + self.tau - x0) / c.width;
            let first = self.cover.partition_point(|&(_, hi)| hi <= a);
            for &(ca, cb) in &self.cover[first..] {
                if ca >= b {
                    break;
                }
                let left = (x0 + ca * c.width).max(u);
                let right = (x0 + cb * c.width).min(u + self.tau);
                let c0 = snap_floor((left - u) / self.cell_w, tol_w);
                let c1 = snap_ceil((right - u) / self.cell_w, tol_w) - 1;
                if c1 < c0 {
                    continue;
                }
                for row in r0..=r1 {
                    spans.push((row, c0, c1));
                }
            }
        }
        spans.sort_unstable();
        let mut total = 0u64;
        let mut cur: Option<(i64, i64, i64)> = None;
        for (row, a, b) in spans {
            cur = match cur {
                Some((cr, ca, cb)) if cr == row && a <= cb + 1 => Some((cr, ca, cb.max(b))),
                Some((_, ca, cb)) => {
                    total += (cb - ca + 1) as u64;
                    Some((row, a, b))
                }
                None => Some((row, a, b)),
            };
        }
        if let Some((_, ca, cb)) = cur {
            total += (cb - ca + 1) as u64;
        }
        total
    }
}

/// Left edge of the `τ`-bin carrying the most projected mass, from a level
/// whose cylinders are at most `τ/8` long.
fn guided_offset(level: &EndpointLevel, m: usize, tau: f64) -> f64 {
    let bins = (1.0 / tau).ceil() as usize;
    let mut mass = vec![0.0f64; bins];
    let w = level.width().to_f64();
    let unit = (m as f64).powi(-(level.depth() as i32));
    for (e, c) in level.points() {
        let a = e.to_f64();
        let b = a + w;
        let mut j = ((a / tau).floor() as usize).min(bins - 1);
        loop {
            let lo = (j as f64 * tau).max(a);
            let hi = ((j + 1) as f64 * tau).min(b);
            if hi > lo {
                mass[j] += *c as f64 * unit * (hi - lo) / w;
            }
            if (j + 1) as f64 * tau >= b || j + 1 == bins {
                break;
            }
            j += 1;
        }
    }
    let best = mass.iter().enumerate().fold(0, |bi, (i, &v)| if v > mass[bi] { i } else { bi });
    (best as f64 * tau).min(1.0 - tau).max(0.0)
}

fn f64_cover(ifs: &CarpetIfs, p: usize, budget: &Budget) -> Result<Vec<(f64, f64)>> {
    let mut depth = 0;
    let mut cover = projection_cover(ifs, 0, budget)?;
    while depth < p {
        let next = projection_cover(ifs, depth + 1, budget)?;
        if next.len() > MAX_COVER_COMPONENTS {
            break;
        }
        cover = next;
        depth += 1;
    }
    Ok(cover.iter().map(|(a, b)| (a.to_f64(), b.to_f64())).collect())
}

/// Window counts for each `k` and the fitted exponent.
pub fn estimate_assouad_two_scale(ifs: &CarpetIfs, ks: &[usize], budget: &Budget) -> Result<AssouadEstimate> {
    estimate_assouad_two_scale_seeded(ifs, ks, budget, 0)
}

/// As `estimate_assouad_two_scale`; `seed` sets the phase of the thinned
/// corner anchors.
pub fn estimate_assouad_two_scale_seeded(ifs: &CarpetIfs, ks: &[usize], budget: &Budget, seed: u64) -> Result<AssouadEstimate> {
    let phase = (seed as f64 * 0.618_033_988_749_894_8).fract();
    if ks.is_empty() {
        return Err(Error::ParameterOutOfRange("k list is empty".into()));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks[0] == 0 {
        return Err(Error::ParameterOutOfRange("k must be positive".into()));
    }
    let (alpha, beta) = (ifs.alpha_f64(), ifs.beta_f64());
    let mut cylinders: BTreeMap<usize, Cylinders> = BTreeMap::new();
    let mut covers: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let open = Budget { max_words: u128::MAX, ..*budget };
    let mut guide = EndpointLevel::root(ifs);
    let mut rows = Vec::with_capacity(ks.len());
    let mut samples = Vec::new();
    for &k in &ks {
        let n = coupled_depth(ifs, k)?;
        budget.check_words(ifs.m(), n)?;
        let tau = (alpha / beta).powi(k as i32);
        let big_r = alpha.powi(k as i32);
        let r = alpha.powi((n + k) as i32);
        let cell_w = tau * alpha.powi(n as i32);
        let cell_h = alpha.powi(n as i32);
        let cyl = &*cylinders.entry(n).or_insert_with(|| Cylinders::build(ifs, n));
        let p = refinement_depth(ifs, k, n);
        if let Entry::Vacant(slot) = covers.entry(p) {
            slot.insert(f64_cover(ifs, p, budget)?);
        }
        let geo = Geometry { cyl, cover: &covers[&p], tau, cell_w, cell_h };

        while guide.width().to_f64() > tau / 8.0 {
            match guide.extend(ifs, &open) {
                Ok(next) if next.distinct() <= GUIDE_MAX_POINTS => guide = next,
                _ => break,
            }
        }
        let guided_u = guided_offset(&guide, ifs.m(), tau);

        let mut anchors: Vec<f64> = cyl.x.iter().map(|&x| x.min(1.0 - tau).max(0.0)).collect();
        anchors.dedup();
        if anchors.len() > MAX_ANCHORS {
            let step = anchors.len() as f64 / MAX_ANCHORS as f64;
            anchors = (0..MAX_ANCHORS).map(|i| anchors[((i as f64 + phase) * step) as usize]).collect();
        }
        anchors.push(1.0 - tau);
        let counts: Vec<u64> = anchors.par_iter().map(|&u| geo.count(u)).collect();
        let guided_count = geo.count(guided_u);
        let (best_i, best_corner) = counts.iter().enumerate().fold((0, 0u64), |b, (i, &c)| if c > b.1 { (i, c) } else { b });
        let max_count = best_corner.max(guided_count);
        let log_ratio = (big_r / r).ln();
        let exponent = |c: u64| (c.max(1) as f64).ln() / log_ratio;
        let sample = |anchor, offset, count| AssouadWindowSample { k, anchor, offset, big_r, r, count, exponent: exponent(count) };
        samples.push(sample(Anchor::Corner, anchors[best_i], best_corner));
        samples.push(sample(Anchor::Guided, guided_u, guided_count));
        rows.push(AssouadRow {
            k,
            big_r,
            r,
            n_k: n,
            max_count,
            max_window_exponent: exponent(max_count),
            guided_is_max: guided_count >= best_corner,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|row| (row.big_r / row.r).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|row| (row.max_count.max(1) as f64).ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    let guided_hit_rate = rows.iter().filter(|r| r.guided_is_max).count() as f64 / rows.len() as f64;
    Ok(AssouadEstimate { rows, samples, fit, guided_hit_rate })
}
