//! The projected Bernoulli measure on interval grids, its moment sums, the
//! L^q spectrum and estimators of the asymptote slope `s`.

use std::io::{Read, Write};
use std::sync::Arc;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::carpet::CarpetIfs;
use crate::csv::{g17, Table};
use crate::endpoints::{Budget, EndpointLevel};
use crate::error::{Error, Result};
use crate::exact::{Ball, FieldElement, NumberField};
use crate::fit::{fit_line, SlopeFit};

/// A uniform grid `[j·r, (j+1)·r)` covering `[0, 1]`, last bin closed.
#[derive(Clone, Debug)]
pub struct BinGrid {
    width: FieldElement,
    inv_width: FieldElement,
    count: usize,
}

impl BinGrid {
    /// `count` bins of width `1/count`.
    pub fn uniform(field: &Arc<NumberField>, count: usize) -> Result<BinGrid> {
        if count == 0 {
            return Err(Error::ZeroBins);
        }
        let width = FieldElement::ratio(field, 1, count as i64);
        Ok(BinGrid { inv_width: FieldElement::from_int(field, count as i64), width, count })
    }

    /// Bins of the given exact width; the count is `⌈1/r⌉`.
    pub fn with_width(width: FieldElement) -> Result<BinGrid> {
        if width.signum() <= 0 {
            return Err(Error::ZeroBins);
        }
        let inv_width = width.inv()?;
        let count = inv_width.ceil().to_usize().ok_or(Error::ZeroBins)?.max(1);
        Ok(BinGrid { width, inv_width, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn width(&self) -> &FieldElement {
        &self.width
    }
}

/// Exact masses of the depth-`n` projected measure on a grid.
#[derive(Clone, Debug)]
pub struct BinnedMeasure {
    depth: usize,
    bin_width: FieldElement,
    masses: Vec<FieldElement>,
    masses_f64: Vec<f64>,
    total: FieldElement,
}

impl BinnedMeasure {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn bin_width(&self) -> &FieldElement {
        &self.bin_width
    }

    pub fn bin_width_f64(&self) -> f64 {
        self.bin_width.to_f64()
    }

    pub fn masses(&self) -> &[FieldElement] {
        &self.masses
    }

    pub fn masses_f64(&self) -> &[f64] {
        &self.masses_f64
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> &FieldElement {
        &self.total
    }

    /// Merge consecutive groups of `factor` bins.
    pub fn coarsen(&self, factor: usize) -> BinnedMeasure {
        let field = self.bin_width.field();
        let masses: Vec<FieldElement> =
            self.masses.chunks(factor.max(1)).map(|ch| ch.iter().fold(FieldElement::zero(field), |a, b| &a + b)).collect();
        let masses_f64 = masses.iter().map(FieldElement::to_f64).collect();
        BinnedMeasure {
            depth: self.depth,
            bin_width: self.bin_width.mul_int(&BigInt::from(factor)),
            masses,
            masses_f64,
            total: self.total.clone(),
        }
    }

    /// Length-prefixed binary dump of the exact masses.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"CDBM1\n")?;
        w.write_all(&(self.depth as u64).to_le_bytes())?;
        w.write_all(&(self.bin_width.field().degree() as u64).to_le_bytes())?;
        w.write_all(&(self.masses.len() as u64).to_le_bytes())?;
        write_element(&mut w, &self.bin_width)?;
        for m in &self.masses {
            write_element(&mut w, m)?;
        }
        Ok(())
    }

    /// Read a dump written by [`BinnedMeasure::write_binary`]; `field` must be
    /// the field the measure was computed in.
    pub fn read_binary<R: Read>(mut r: R, field: &Arc<NumberField>) -> Result<BinnedMeasure> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != b"CDBM1\n" {
            return Err(Error::Parse("not a binned-measure dump".into()));
        }
        let depth = read_u64(&mut r)? as usize;
        let degree = read_u64(&mut r)? as usize;
        let len = read_u64(&mut r)? as usize;
        if degree != field.degree() {
            return Err(Error::FieldMismatch);
        }
        let bin_width = read_element(&mut r, field)?;
        let masses: Vec<FieldElement> = (0..len).map(|_| read_element(&mut r, field)).collect::<Result<_>>()?;
        let total = masses.iter().fold(FieldElement::zero(field), |a, b| &a + b);
        let masses_f64 = masses.iter().map(FieldElement::to_f64).collect();
        Ok(BinnedMeasure { depth, bin_width, masses, masses_f64, total })
    }
}

fn write_int<W: Write>(w: &mut W, n: &BigInt) -> Result<()> {
    let bytes = n.to_signed_bytes_le();
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(&bytes)?;
    Ok(())
}

fn write_element<W: Write>(w: &mut W, x: &FieldElement) -> Result<()> {
    for c in x.coeffs() {
        write_int(w, c.numer())?;
        write_int(w, c.denom())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_int<R: Read>(r: &mut R) -> Result<BigInt> {
    let mut lb = [0u8; 4];
    r.read_exact(&mut lb)?;
    let mut bytes = vec![0u8; u32::from_le_bytes(lb) as usize];
    r.read_exact(&mut bytes)?;
    Ok(BigInt::from_signed_bytes_le(&bytes))
}

fn read_element<R: Read>(r: &mut R, field: &Arc<NumberField>) -> Result<FieldElement> {
    let mut coeffs = Vec::with_capacity(field.degree());
    for _ in 0..field.degree() {
        let n = read_int(r)?;
        let d = read_int(r)?;
        if d.sign() != Sign::Plus {
            return Err(Error::Parse("non-positive denominator in dump".into()));
        }
        coeffs.push(BigRational::new(n, d));
    }
    Ok(FieldElement::from_coeffs(field, coeffs))
}

/// Bin the depth-`n` projected measure into `bins` equal bins.
pub fn bin_projected_measure(ifs: &CarpetIfs, depth: usize, bins: usize, budget: &Budget) -> Result<BinnedMeasure> {
    let grid = BinGrid::uniform(ifs.field(), bins)?;
    if grid.count() > budget.max_bins {
        return Err(Error::BudgetExceeded { what: "bins".into(), needed: bins as u128, limit: budget.max_bins as u128 });
    }
    let level = EndpointLevel::build(ifs, depth, budget)?;
    bin_level(ifs, &level, &grid)
}

/// Bin an endpoint level; each cylinder `[e, e + β^n]` spreads its mass over
/// the bins it meets in proportion to overlap length.
///
/// Work is done on integer coordinate vectors over one common denominator
/// `D`: with `a = e/r` and `b = (e + β^n)/r`, bin `⌊a⌋` receives
/// `⌊a⌋ + 1 − a`, full bins receive 1 and bin `⌊b⌋` receives `b − ⌊b⌋`, all
/// in units of `r/β^n` of the cylinder's mass.
pub fn bin_level(ifs: &CarpetIfs, level: &EndpointLevel, grid: &BinGrid) -> Result<BinnedMeasure> {
    let field = ifs.field();
    let d = field.degree();
    let w = level.width();
    let ratio = &grid.width * &w.inv()?;
    let span = w * &grid.inv_width;
    let last = grid.count - 1;

    let level_den = level.points().iter().fold(BigInt::one(), |acc, (e, _)| num_integer::Integer::lcm(&acc, &e.denominator_lcm()));
    let iw_den = grid.inv_width.denominator_lcm();
    let d0 = &level_den * &iw_den;
    let den = num_integer::Integer::lcm(&d0, &span.denominator_lcm());
    let lift = &den / &d0;
    // column k: coordinates of θ^k · inv_width · iw_den · lift
    let iw_int = grid.inv_width.mul_int(&(&iw_den * &lift));
    let theta = FieldElement::generator(field);
    let mut mat: Vec<Vec<BigInt>> = Vec::with_capacity(d);
    let mut col = iw_int;
    for _ in 0..d {
        mat.push(int_coords(&col)?);
        col = &col * &theta;
    }
    let span_int = int_coords(&span.mul_int(&den))?;
    let den_vec = unit_vec(d, &den);
    let pows = field.theta_powers().to_vec();
    let den_f = den.to_f64().unwrap_or(f64::INFINITY);

    let floor_of = |v: &[BigInt]| -> BigInt {
        if den_f.is_finite() && den_f > 0.0 {
            let mut mid = 0.0;
            let mut mag = 0.0;
            for (c, t) in v.iter().zip(&pows) {
                let x = c.to_f64().unwrap_or(f64::NAN) * t;
                mid += x;
                mag += x.abs();
            }
            let ball = Ball::new(mid / den_f, (mag / den_f) * (8 * d + 8) as f64 * f64::EPSILON + f64::MIN_POSITIVE);
            if let Some(f) = ball.certain_floor() {
                return f;
            }
        }
        let coeffs = v.iter().map(|c| BigRational::new(c.clone(), den.clone())).collect();
        FieldElement::from_coeffs(field, coeffs).floor()
    };

    let chunks: Vec<Vec<(usize, Vec<BigInt>)>> = level
        .points()
        .par_chunks(2048)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len() * 2);
            for (e, c) in chunk {
                let cm = BigInt::from(*c);
                let ev: Vec<BigInt> = e.coeffs().iter().map(|q| q.numer() * (&level_den / q.denom())).collect();
                let mut a = vec![BigInt::zero(); d];
                for (k, ek) in ev.iter().enumerate() {
                    if ek.is_zero() {
                        continue;
                    }
                    for (ai, mk) in a.iter_mut().zip(&mat[k]) {
                        *ai += ek * mk;
                    }
                }
                let b: Vec<BigInt> = a.iter().zip(&span_int).map(|(x, y)| x + y).collect();
                let ja = floor_of(&a);
                let jb = floor_of(&b);
                let ja_u = ja.to_usize().unwrap_or(0).min(last);
                if ja == jb {
                    out.push((ja_u, span_int.iter().map(|x| x * &cm).collect()));
                    continue;
                }
                let next = BigInt::from(ja_u as u64 + 1);
                let head: Vec<BigInt> = den_vec.iter().zip(&a).map(|(dv, av)| (dv * &next - av) * &cm).collect();
                out.push((ja_u, head));
                let jb_u = jb.to_usize().unwrap_or(usize::MAX);
                for j in ja_u + 1..jb_u.min(last + 1) {
                    out.push((j, den_vec.iter().map(|x| x * &cm).collect()));
                }
                let tail: Vec<BigInt> = b.iter().zip(&den_vec).map(|(bv, dv)| (bv - dv * &jb) * &cm).collect();
                if tail.iter().any(|t| !t.is_zero()) {
                    out.push((jb_u.min(last), tail));
                }
            }
            out
        })
        .collect();

    let mut raw: Vec<Option<Vec<BigInt>>> = vec![None; grid.count];
    for chunk in chunks {
        for (j, v) in chunk {
            match &mut raw[j] {
                Some(acc) => acc.iter_mut().zip(v).for_each(|(x, y)| *x += y),
                slot => *slot = Some(v),
            }
        }
    }
    let norm = &den * BigInt::from(level.total_words());
    let masses: Vec<FieldElement> = raw
        .par_iter()
        .map(|v| match v {
            None => FieldElement::zero(field),
            Some(v) => {
                let coeffs = v.iter().map(|x| BigRational::new(x.clone(), norm.clone())).collect();
                let m = FieldElement::from_coeffs(field, coeffs);
                if ratio.is_one() {
                    m
                } else {
                    &m * &ratio
                }
            }
        })
        .collect();
    let total = masses.iter().fold(FieldElement::zero(field), |a, b| &a + b);
    if !total.is_one() {
        return Err(Error::InvariantViolation(format!("binned mass totals {total}, expected 1")));
    }
    let masses_f64 = masses.par_iter().map(FieldElement::to_f64).collect();
    Ok(BinnedMeasure { depth: level.depth(), bin_width: grid.width.clone(), masses, masses_f64, total })
}

fn int_coords(x: &FieldElement) -> Result<Vec<BigInt>> {
    x.coeffs()
        .iter()
        .map(|c| if c.is_integer() { Ok(c.to_integer()) } else { Err(Error::InvariantViolation("expected integral coordinates".into())) })
        .collect()
}

fn unit_vec(d: usize, v: &BigInt) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); d];
    out[0] = v.clone();
    out
}

/// `log Σ mass^q` over bins with positive mass, by log-sum-exp.
pub fn log_moment_sum(masses: &[f64], q: f64) -> Result<f64> {
    if q <= 0.0 || !q.is_finite() {
        return Err(Error::NonpositiveQ(q));
    }
    let logs: Vec<f64> = masses.iter().filter(|&&m| m > 0.0).map(|&m| q * m.ln()).collect();
    if logs.is_empty() {
        return Err(Error::DegenerateFit("measure has no positive bins".into()));
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok(top + s.ln())
}

/// `Σ mass^q` over bins with positive mass.
pub fn moment_sum(bm: &BinnedMeasure, q: f64) -> Result<f64> {
    Ok(log_moment_sum(bm.masses_f64(), q)?.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact endpoint enumeration and exact bin masses.
    Exact,
    /// Floating-point iteration of the self-similarity operator on a fine grid.
    Cascade,
}

/// Which backend builds the measure ladder.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Exact on the deepest affordable depths, cascade when those are too
    /// coarse.
    #[default]
    Auto,
    /// Exact measures at these depths with bin width `β^n`.
    Depths(Vec<usize>),
    /// Cascade backend with `2^grid_bits` cells.
    Cascade { grid_bits: u32 },
}

/// One measure in the ladder, at bin width `width`.
#[derive(Clone, Debug)]
pub struct Rung {
    pub depth: usize,
    pub width: f64,
    pub masses: Vec<f64>,
}

impl Rung {
    pub fn max_mass(&self) -> f64 {
        self.masses.iter().cloned().fold(0.0, f64::max)
    }
}

/// Projected measures across a range of scales.
#[derive(Clone, Debug)]
pub struct MeasureLadder {
    pub method: Method,
    pub rungs: Vec<Rung>,
}

/// Deepest depth reached by the automatic schedule.
pub const AUTO_MAX_DEPTH: usize = 24;
/// Number of depths the automatic schedule fits over.
pub const AUTO_DEPTHS: usize = 13;
/// Distinct endpoints allowed by the automatic schedule.
pub const AUTO_MAX_POINTS: usize = 1 << 18;
/// Coarsest acceptable finest width for the exact backend.
pub const AUTO_MIN_RESOLUTION: f64 = 1.0 / 4096.0;
/// Default cascade grid: `2^20` cells.
pub const CASCADE_GRID_BITS: u32 = 20;

pub fn build_ladder(ifs: &CarpetIfs, schedule: &Schedule, budget: &Budget) -> Result<MeasureLadder> {
    match schedule {
        Schedule::Depths(depths) => {
            if let Some(&d) = depths.iter().find(|&&d| d > budget.max_depth) {
                return Err(Error::BudgetExceeded { what: "schedule depth".into(), needed: d as u128, limit: budget.max_depth as u128 });
            }
            exact_ladder(ifs, depths, budget)
        }
        Schedule::Cascade { grid_bits } => cascade_ladder(ifs, *grid_bits),
        Schedule::Auto => {
            let depths = auto_depths(ifs, budget)?;
            match depths {
                Some(d) => exact_ladder(ifs, &d, budget),
                None => cascade_ladder(ifs, CASCADE_GRID_BITS),
            }
        }
    }
}

/// Depths for the exact backend, or `None` when the affordable depths
/// resolve scales coarser than [`AUTO_MIN_RESOLUTION`].
pub fn auto_depths(ifs: &CarpetIfs, budget: &Budget) -> Result<Option<Vec<usize>>> {
    let cap = Budget { max_points: budget.max_points.min(AUTO_MAX_POINTS), ..*budget };
    let beta = ifs.beta_f64();
    let mut level = EndpointLevel::root(ifs);
    let mut deepest = 0;
    while deepest < AUTO_MAX_DEPTH.min(budget.max_depth) {
        let bins = beta.powi(deepest as i32 + 1).recip().ceil();
        if bins > cap.max_bins as f64 {
            break;
        }
        match level.extend(ifs, &cap) {
            Ok(next) => {
                level = next;
                deepest += 1;
            }
            Err(Error::BudgetExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if deepest < 3 || beta.powi(deepest as i32) > AUTO_MIN_RESOLUTION {
        return Ok(None);
    }
    let first = deepest.saturating_sub(AUTO_DEPTHS - 1).max(1);
    Ok(Some((first..=deepest).collect()))
}

fn exact_ladder(ifs: &CarpetIfs, depths: &[usize], budget: &Budget) -> Result<MeasureLadder> {
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::TooFewDepths { needed: 1, got: 0 });
    }
    if let Some(&max) = sorted.last() {
        budget.check_words(ifs.m(), max)?;
    }
    let mut level = EndpointLevel::root(ifs);
    let mut rungs = Vec::with_capacity(sorted.len());
    for &d in &sorted {
        while level.depth() < d {
            level = level.extend(ifs, budget)?;
        }
        let grid = BinGrid::with_width(level.width().clone())?;
        if grid.count() > budget.max_bins {
            return Err(Error::BudgetExceeded {
                what: format!("bins at depth {d}"),
                needed: grid.count() as u128,
                limit: budget.max_bins as u128,
            });
        }
        let bm = bin_level(ifs, &level, &grid)?;
        rungs.push(Rung { depth: d, width: bm.bin_width_f64(), masses: bm.masses_f64 });
    }
    Ok(MeasureLadder { method: Method::Exact, rungs })
}

/// Stationary projected measure approximated on `2^grid_bits` cells by
/// iterating `Tμ = (1/m) Σ μ∘S_i^{-1}`, then re-binned at widths `β^n`.
pub fn cascade_ladder(ifs: &CarpetIfs, grid_bits: u32) -> Result<MeasureLadder> {
    if !(8..=26).contains(&grid_bits) {
        return Err(Error::ParameterOutOfRange(format!("cascade grid bits {grid_bits} outside 8..=26")));
    }
    let n = 1usize << grid_bits;
    let h = 1.0 / n as f64;
    let beta = ifs.beta_f64();
    let txs = ifs.tx_f64();
    let m = txs.len() as f64;
    let iterations = ((h.ln() / beta.ln()).ceil() as usize + 32).max(64);
    let mut mu = vec![h; n];
    let mut next = vec![0.0f64; n];
    for _ in 0..iterations {
        next.iter_mut().for_each(|v| *v = 0.0);
        for &t in &txs {
            push_forward(&mu, &mut next, beta, t, 1.0 / m);
        }
        std::mem::swap(&mut mu, &mut next);
    }
    let cdf = compensated_prefix(&mu);

    // scales resolved by the grid: well above the smearing length h/(1-β)
    let r_min = (256.0 * h / (1.0 - beta)).max(256.0 * h);
    let r_max = 1.0 / 32.0;
    let mut depths: Vec<usize> =
        (1..100_000).take_while(|&d| beta.powi(d as i32) >= r_min).filter(|&d| beta.powi(d as i32) <= r_max).collect();
    if depths.len() > 16 {
        let k = depths.len();
        depths = (0..16).map(|i| depths[i * (k - 1) / 15]).collect();
        depths.dedup();
    }
    if depths.len() < 3 {
        return Err(Error::InsufficientScales(format!(
            "cascade grid of 2^{grid_bits} cells resolves fewer than three scales for beta = {beta}"
        )));
    }
    let rungs = depths
        .iter()
        .map(|&d| {
            let r = beta.powi(d as i32);
            let count = (1.0 / r).ceil() as usize;
            let masses = (0..count)
                .map(|j| {
                    let lo = cdf_at(&cdf, j as f64 * r, n);
                    let hi = cdf_at(&cdf, ((j + 1) as f64 * r).min(1.0), n);
                    (hi - lo).max(0.0)
                })
                .collect();
            Rung { depth: d, width: r, masses }
        })
        .collect();
    Ok(MeasureLadder { method: Method::Cascade, rungs })
}

/// Add `weight · μ∘S^{-1}` for `S(x) = βx + t`, splitting each image cell
/// proportionally over the fine cells it meets.
fn push_forward(mu: &[f64], out: &mut [f64], beta: f64, t: f64, weight: f64) {
    let n = mu.len();
    let nf = n as f64;
    for (c, &mass) in mu.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let a = (t + beta * c as f64 / nf) * nf;
        let b = (t + beta * (c + 1) as f64 / nf) * nf;
        let ia = (a.floor() as usize).min(n - 1);
        let ib = (b.floor() as usize).min(n - 1);
        let w = mass * weight;
        if ia == ib {
            out[ia] += w;
        } else {
            let frac = ((ia + 1) as f64 - a) / (b - a);
            out[ia] += w * frac;
            out[ib] += w * (1.0 - frac);
        }
    }
}

fn compensated_prefix(mu: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mu.len() + 1);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    out.push(0.0);
    for &v in mu {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

fn cdf_at(cdf: &[f64], x: f64, n: usize) -> f64 {
    let pos = (x * n as f64).clamp(0.0, n as f64);
    let i = (pos.floor() as usize).min(n - 1);
    let f = pos - i as f64;
    cdf[i] + f * (cdf[i + 1] - cdf[i])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauSample {
    pub q: f64,
    pub tau: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LqSpectrumEstimate {
    pub samples: Vec<TauSample>,
    /// `(r_min, r_max)`
    pub scale_range: (f64, f64),
    pub method: Method,
    pub depths: Vec<usize>,
}

impl LqSpectrumEstimate {
    pub fn tau_at(&self, q: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.q == q).map(|s| s.tau)
    }

    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["q", "tau_hat", "residual"]);
        for s in &self.samples {
            t.push(vec![g17(s.q), g17(s.tau), g17(s.residual)]);
        }
        t.render()
    }
}

/// Default `q` grid: low orders for shape plus the tail window.
pub fn default_q_grid() -> Vec<f64> {
    let mut qs = vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0];
    qs.extend(tail_q_grid(DEFAULT_TAIL));
    qs
}

/// Tail window for the asymptote fit.
pub const DEFAULT_TAIL: (f64, f64) = (16.0, 48.0);

pub fn tail_q_grid(tail: (f64, f64)) -> Vec<f64> {
    let mut qs = Vec::new();
    let mut q = tail.0;
    while q <= tail.1 + 1e-9 {
        qs.push(q);
        q += 4.0;
    }
    qs
}

/// τ̂(q) as the slope of `log Σ mass^q` against `log r` across the ladder.
pub fn tau_from_ladder(ladder: &MeasureLadder, qs: &[f64]) -> Result<LqSpectrumEstimate> {
    if ladder.rungs.len() < 3 {
        return Err(Error::TooFewDepths { needed: 3, got: ladder.rungs.len() });
    }
    let xs: Vec<f64> = ladder.rungs.iter().map(|r| r.width.ln()).collect();
    let mut samples = Vec::with_capacity(qs.len());
    for &q in qs {
        let ys: Vec<f64> = ladder.rungs.iter().map(|r| log_moment_sum(&r.masses, q)).collect::<Result<_>>()?;
        let f = fit_line(&xs, &ys)?;
        samples.push(TauSample { q, tau: f.slope, residual: f.residual_rms });
    }
    let widths = ladder.rungs.iter().map(|r| r.width);
    let r_min = widths.clone().fold(f64::INFINITY, f64::min);
    let r_max = widths.fold(0.0, f64::max);
    Ok(LqSpectrumEstimate {
        samples,
        scale_range: (r_min, r_max),
        method: ladder.method,
        depths: ladder.rungs.iter().map(|r| r.depth).collect(),
    })
}

pub fn estimate_tau(ifs: &CarpetIfs, qs: &[f64], schedule: &Schedule, budget: &Budget) -> Result<LqSpectrumEstimate> {
    if let Some(&q) = qs.iter().find(|&&q| q <= 0.0 || !q.is_finite()) {
        return Err(Error::NonpositiveQ(q));
    }
    if let Schedule::Depths(d) = schedule {
        if d.len() < 3 {
            return Err(Error::TooFewDepths { needed: 3, got: d.len() });
        }
    }
    let ladder = build_ladder(ifs, schedule, budget)?;
    tau_from_ladder(&ladder, qs)
}

/// Fit `τ̂(q) = s·q − c` over the tail window; the slope is `s`.
pub fn estimate_s_from_tau(spectrum: &LqSpectrumEstimate, tail: (f64, f64)) -> Result<SlopeFit> {
    let tail_samples: Vec<&TauSample> = spectrum.samples.iter().filter(|s| s.q >= tail.0 - 1e-12 && s.q <= tail.1 + 1e-12).collect();
    if tail_samples.len() < 3 {
        return Err(Error::InsufficientTail { lo: tail.0, hi: tail.1 });
    }
    let xs: Vec<f64> = tail_samples.iter().map(|s| s.q).collect();
    let ys: Vec<f64> = tail_samples.iter().map(|s| s.tau).collect();
    fit_line(&xs, &ys)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinBinPoint {
    pub depth: usize,
    pub bin_width: f64,
    pub min_bin_dim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinBinEstimate {
    pub series: Vec<MinBinPoint>,
    /// Value at the finest scale.
    pub last: f64,
    /// Slope of `log max mass` against `log r`.
    pub fit: SlopeFit,
    pub method: Method,
}

impl MinBinEstimate {
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["depth", "bin_width", "min_bin_dim"]);
        for p in &self.series {
            t.push(vec![p.depth.to_string(), g17(p.bin_width), g17(p.min_bin_dim)]);
        }
        t.render()
    }
}

/// Minimal local dimension over bins, `log(max mass)/log r`, per rung.
pub fn min_bin_from_ladder(ladder: &MeasureLadder) -> Result<MinBinEstimate> {
    if ladder.rungs.len() < 3 {
        return Err(Error::TooFewDepths { needed: 3, got: ladder.rungs.len() });
    }
    let mut series = Vec::with_capacity(ladder.rungs.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in &ladder.rungs {
        let top = r.max_mass();
        if top <= 0.0 {
            return Err(Error::DegenerateFit("rung without mass".into()));
        }
        let lw = r.width.ln();
        let dim = if lw == 0.0 { 0.0 } else { top.ln() / lw };
        series.push(MinBinPoint { depth: r.depth, bin_width: r.width, min_bin_dim: dim });
        xs.push(lw);
        ys.push(top.ln());
    }
    let fit = fit_line(&xs, &ys)?;
    let last = series.iter().min_by(|a, b| a.bin_width.total_cmp(&b.bin_width)).unwrap().min_bin_dim;
    Ok(MinBinEstimate { series, last, fit, method: ladder.method })
}

pub fn estimate_s_min_bin(ifs: &CarpetIfs, schedule: &Schedule, budget: &Budget) -> Result<MinBinEstimate> {
    if let Schedule::Depths(d) = schedule {
        if d.len() < 3 {
            return Err(Error::TooFewDepths { needed: 3, got: d.len() });
        }
    }
    min_bin_from_ladder(&build_ladder(ifs, schedule, budget)?)
}

/// Lower bound `s ≥ log 2 / (−n log β)` where `β^n ≤ 1/2 < β^{n−1}`.
///
/// Returns `(n, bound)`.
pub fn convolution_lower_bound(beta: &FieldElement) -> Result<(u32, f64)> {
    let half = FieldElement::rational(1, 2).lift_into(beta.field())?;
    let one = FieldElement::one(beta.field());
    if beta.cmp_value(&half) != std::cmp::Ordering::Greater || beta.cmp_value(&one) != std::cmp::Ordering::Less {
        return Err(Error::ParameterOutOfRange(format!("beta = {} must lie in (1/2, 1)", beta.to_f64())));
    }
    let mut n = 1u32;
    let mut p = beta.clone();
    while p.cmp_value(&half) == std::cmp::Ordering::Greater {
        p = &p * beta;
        n += 1;
        if n > 100_000 {
            return Err(Error::ParameterOutOfRange("beta too close to 1".into()));
        }
    }
    let pf = p.to_f64();
    Ok((n, std::f64::consts::LN_2 / -pf.ln()))
}

/// `log m / (−log β)`, the similarity dimension of the projection.
pub fn similarity_dimension(ifs: &CarpetIfs) -> f64 {
    (ifs.m() as f64).ln() / -ifs.beta_f64().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::{pu_carpet, validate_carpet, RawCarpet};

    fn r(n: i64, d: i64) -> FieldElement {
        FieldElement::rational(n, d)
    }

    #[test]
    fn bins_wider_than_cylinders() {
        let c = pu_carpet(&r(1, 2), &r(3, 5)).unwrap();
        let one = bin_projected_measure(&c, 1, 1, &Budget::default()).unwrap();
        assert_eq!(one.masses(), &[r(1, 1)]);
        // [0, 9/25] and [6/25, 3/5] meet bin [0, 1/2]; the others are mirror images
        let two = bin_projected_measure(&c, 2, 2, &Budget::default()).unwrap();
        assert_eq!(two.masses(), &[r(1, 2), r(1, 2)]);
        let three = bin_projected_measure(&c, 2, 3, &Budget::default()).unwrap();
        assert!(three.total().is_one());
    }

    fn columns(beta: FieldElement, tx: FieldElement) -> CarpetIfs {
        validate_carpet(&RawCarpet { alpha: r(1, 4), beta, maps: vec![(r(0, 1), r(0, 1)), (tx, r(3, 4))] }).unwrap()
    }

    fn golden() -> CarpetIfs {
        let k = NumberField::near(vec![BigInt::from(-1), BigInt::from(1), BigInt::from(1)], 0.618).unwrap();
        pu_carpet(&r(1, 2), &FieldElement::generator(&k)).unwrap()
    }

    #[test]
    fn lebesgue_bins_are_uniform() {
        let c = columns(r(1, 2), r(1, 2));
        let bm = bin_projected_measure(&c, 10, 1024, &Budget::default()).unwrap();
        assert!(bm.total().is_one());
        for m in bm.masses() {
            assert_eq!(m.as_rational().unwrap(), &BigRational::new(1.into(), 1024.into()));
        }
        let q2 = moment_sum(&bm, 2.0).unwrap();
        assert!((q2 - 1.0 / 1024.0).abs() < 1e-15);
        assert!((moment_sum(&bm, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_bins() {
        let c = columns(r(1, 3), r(2, 3));
        let n = 5;
        let bm = bin_projected_measure(&c, n, 243, &Budget::default()).unwrap();
        let nonzero = bm.masses().iter().filter(|m| !m.is_zero()).count();
        assert_eq!(nonzero, 32);
        for m in bm.masses().iter().filter(|m| !m.is_zero()) {
            assert_eq!(m.as_rational().unwrap(), &BigRational::new(1.into(), 32.into()));
        }
        let q3 = moment_sum(&bm, 3.0).unwrap();
        assert!((q3 / 2f64.powi(-10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn golden_coincidence_shares_a_bin() {
        let c = golden();
        let level = EndpointLevel::build(&c, 3, &Budget::default()).unwrap();
        let grid = BinGrid::with_width(level.width().clone()).unwrap();
        let bm = bin_level(&c, &level, &grid).unwrap();
        assert!(bm.total().is_one());
        let one_minus_beta = &FieldElement::one(c.field()) - c.beta();
        let (e, n) = level.points().iter().find(|(e, _)| *e == one_minus_beta).unwrap();
        assert_eq!(*n, 2);
        let j = (e * &grid.inv_width).floor().to_usize().unwrap();
        assert!(bm.masses_f64()[j] > 0.0);
    }

    #[test]
    fn refinement_consistency() {
        let c = golden();
        let fine = bin_projected_measure(&c, 7, 64, &Budget::default()).unwrap();
        let coarse = bin_projected_measure(&c, 7, 32, &Budget::default()).unwrap();
        assert_eq!(fine.coarsen(2).masses(), coarse.masses());
    }

    #[test]
    fn binary_dump_round_trip() {
        let c = golden();
        let bm = bin_projected_measure(&c, 6, 40, &Budget::default()).unwrap();
        let mut buf = Vec::new();
        bm.write_binary(&mut buf).unwrap();
        let back = BinnedMeasure::read_binary(&buf[..], c.field()).unwrap();
        assert_eq!(back.masses(), bm.masses());
        assert!(back.total().is_one());
    }

    #[test]
    fn errors() {
        let c = golden();
        assert_eq!(bin_projected_measure(&c, 3, 0, &Budget::default()).unwrap_err(), Error::ZeroBins);
        assert!(matches!(log_moment_sum(&[0.5, 0.5], 0.0), Err(Error::NonpositiveQ(_))));
        let tight = Budget { max_words: 1 << 8, ..Budget::default() };
        assert!(matches!(bin_projected_measure(&c, 9, 16, &tight), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn convolution_bounds() {
        let (n, b) = convolution_lower_bound(&r(3, 5)).unwrap();
        assert_eq!(n, 2);
        assert!((b - 0.6784).abs() < 1e-4);
        let (n, b) = convolution_lower_bound(&r(9, 10)).unwrap();
        assert_eq!(n, 7);
        assert!((b - 0.9398).abs() < 1e-4);
        let k = NumberField::near(vec![BigInt::from(-2), BigInt::from(0), BigInt::from(1)], 1.41).unwrap();
        let beta = FieldElement::generator(&k).mul_rational(&BigRational::new(1.into(), 2.into()));
        assert_eq!(convolution_lower_bound(&beta).unwrap(), (2, 1.0));
        assert!(convolution_lower_bound(&r(1, 2)).is_err());
    }

    #[test]
    fn osc_spectrum_closed_form() {
        let c = columns(r(1, 2), r(1, 2));
        let est = estimate_tau(&c, &[1.0, 2.0, 4.0, 8.0], &Schedule::Depths(vec![6, 7, 8, 9]), &Budget::default()).unwrap();
        for s in &est.samples {
            assert!((s.tau - (s.q - 1.0)).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn cascade_reproduces_lebesgue() {
        let c = columns(r(1, 2), r(1, 2));
        let ladder = cascade_ladder(&c, 18).unwrap();
        let s = min_bin_from_ladder(&ladder).unwrap();
        assert!((s.fit.slope - 1.0).abs() < 1e-6);
    }

    #[test]
    fn g17_csv_headers() {
        let c = columns(r(1, 2), r(1, 2));
        let est = estimate_tau(&c, &[2.0], &Schedule::Depths(vec![3, 4, 5]), &Budget::default()).unwrap();
        assert!(est.to_csv().starts_with("q,tau_hat,residual\n2,"));
    }
}
