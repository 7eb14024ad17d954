//! Assouad bounds for carpets, corollary cases and dimension reports.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;

use crate::boxcount::unit_cover_depth;
use crate::carpet::CarpetIfs;
use crate::endpoints::Budget;
use crate::error::{Error, Result};
use crate::exact::{FieldElement, NumberField};
use crate::json::scalar_to_json;
use crate::measure::{
    build_ladder, convolution_lower_bound, estimate_s_from_tau, min_bin_from_ladder, similarity_dimension, tail_q_grid, tau_from_ladder,
    Schedule, DEFAULT_TAIL,
};
use crate::preset::{preset_info, BetaClass};
use crate::symbolic::h_lower_bound;

const SLACK: f64 = 1e-12;
/// Tolerance for matching `s` against the minimal symbolic local dimension.
pub const CASE3_TOLERANCE: f64 = 0.02;
/// Deepest projection cover tried when certifying `πF = [0, 1]`.
pub const UNIT_COVER_CAP: usize = 12;
/// Word length for the default `H` lower bound.
pub const DEFAULT_H_KMAX: usize = 12;

fn violation(msg: impl Into<String>) -> Error {
    Error::PreconditionViolation(msg.into())
}

/// `(lower, upper)` bounds on `ad F`:
/// `max{bd πF + log(mβ^s)/(−log α), ad πF + H/(−log α)}` and
/// `ad πF + log(mβ^s)/(−log α)`.
pub fn assouad_bounds(m: usize, alpha: f64, beta: f64, s: f64, h: f64, bd_pif: f64, ad_pif: f64) -> Result<(f64, f64)> {
    if !(0.0 < alpha && alpha < beta && beta < 1.0) {
        return Err(violation(format!("0 < alpha < beta < 1 fails for alpha = {alpha}, beta = {beta}")));
    }
    if m < 1 {
        return Err(violation("m >= 1 fails"));
    }
    let log_m = (m as f64).ln();
    if !(-SLACK..=bd_pif.min(1.0) + SLACK).contains(&s) {
        return Err(violation(format!("0 <= s <= min(bd_piF, 1) fails for s = {s}, bd_piF = {bd_pif}")));
    }
    if !(-SLACK..=log_m + SLACK).contains(&h) {
        return Err(violation(format!("0 <= H <= log m fails for H = {h}")));
    }
    if !(bd_pif <= ad_pif + SLACK && ad_pif <= 1.0 + SLACK && bd_pif >= -SLACK) {
        return Err(violation(format!("bd_piF <= ad_piF <= 1 fails for bd_piF = {bd_pif}, ad_piF = {ad_pif}")));
    }
    let neg_log_beta = -beta.ln();
    if s > (log_m - h) / neg_log_beta + SLACK {
        return Err(violation(format!(
            "s <= (log m - H)/(-log beta) fails: s = {s}, minimal symbolic local dimension = {}",
            (log_m - h) / neg_log_beta
        )));
    }
    let neg_log_alpha = -alpha.ln();
    let mid = (log_m - s * neg_log_beta) / neg_log_alpha;
    let lower = (bd_pif + mid).max(ad_pif + h / neg_log_alpha);
    let upper = ad_pif + mid;
    if lower > upper + SLACK {
        return Err(Error::InvariantViolation(format!("lower bound {lower} exceeds upper bound {upper}")));
    }
    Ok((lower, upper))
}

/// Box dimension of a carpet with uniform ratios:
/// `bd πF + log(m β^{bd πF})/(−log α)`.
pub fn carpet_box_dimension(m: usize, alpha: f64, beta: f64, bd_pif: f64) -> f64 {
    bd_pif + ((m as f64).ln() + bd_pif * beta.ln()) / -alpha.ln()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Depth-`depth` projected cylinders cover `[0, 1]` exactly.
    UnitIntervalCover {
        depth: usize,
    },
    /// Projected first-level cylinders have disjoint interiors.
    OpenSetCondition,
    /// Weak separation asserted by the user.
    WspFlag,
    SymbolicSaturation {
        s: f64,
        symbolic_min_dim: f64,
        tolerance: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseClassification {
    /// Lowest applicable case, if any.
    pub case: Option<u8>,
    /// Every case that applies.
    pub cases: Vec<u8>,
    pub evidence: Vec<Evidence>,
    pub beta_class: Option<BetaClass>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Flags {
    /// User assertion on the weak separation property of `πF`.
    pub wsp: Option<bool>,
}

/// Decide which corollary case applies.
pub fn classify_corollary(
    ifs: &CarpetIfs,
    s: Option<f64>,
    h_lower: f64,
    flags: Flags,
    beta_class: Option<BetaClass>,
    budget: &Budget,
) -> Result<CaseClassification> {
    let mut cases = Vec::new();
    let mut evidence = Vec::new();
    if let Some(depth) = unit_cover_depth(ifs, UNIT_COVER_CAP, budget)? {
        cases.push(1);
        evidence.push(Evidence::UnitIntervalCover { depth });
    }
    let osc = ifs.projection_osc();
    if osc && flags.wsp == Some(false) {
        return Err(Error::ConflictingEvidence(
            "weak separation flagged false, but projected cylinders satisfy the open set condition".into(),
        ));
    }
    if osc || flags.wsp == Some(true) {
        cases.push(2);
        evidence.push(if osc { Evidence::OpenSetCondition } else { Evidence::WspFlag });
    }
    if let Some(s) = s {
        let sym = symbolic_min_dim(ifs.m(), ifs.beta_f64(), h_lower);
        if (s - sym).abs() <= CASE3_TOLERANCE {
            cases.push(3);
            evidence.push(Evidence::SymbolicSaturation { s, symbolic_min_dim: sym, tolerance: CASE3_TOLERANCE });
        }
    }
    Ok(CaseClassification { case: cases.first().copied(), cases, evidence, beta_class })
}

/// `(log m − H)/(−log β)`
pub fn symbolic_min_dim(m: usize, beta: f64, h: f64) -> f64 {
    ((m as f64).ln() - h) / -beta.ln()
}

/// `β_k`, the root in `(1/2, 1)` of `x^k + … + x − 1`, and
/// `s = log φ/(k log β_k) − log 2/log β_k`.
pub fn hu_s_multinacci(k: u32) -> Result<(FieldElement, f64)> {
    if !(2..=12).contains(&k) {
        return Err(Error::ParameterOutOfRange(format!("multinacci order must be in 2..=12, got {k}")));
    }
    let mut minpoly = vec![BigInt::from(1); k as usize + 1];
    minpoly[0] = BigInt::from(-1);
    let half = BigRational::new(1.into(), 2.into());
    let field = NumberField::new(minpoly, half, BigRational::from_integer(1.into()))?;
    let beta = FieldElement::generator(&field);
    let b = beta.to_f64();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let s = phi.ln() / (k as f64 * b.ln()) - 2f64.ln() / b.ln();
    Ok((beta, s))
}

/// Lower bound `(2 − θ) log 2/(−log β)` on `s` from an upper bound `θ` on
/// `ad F` at `α = 1/2`.
pub fn alpha_half_inversion(ad_upper: f64, beta: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&ad_upper) {
        return Err(Error::ParameterOutOfRange(format!("ad_F upper bound must lie in [1, 2], got {ad_upper}")));
    }
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok((2.0 - ad_upper) * 2f64.ln() / -beta.ln())
}

/// `1 + log 2/(−log α) − log β/(2 log α)`, the PU bound from `s ≥ 1/2`.
pub fn pu_half_bound(alpha: f64, beta: f64) -> f64 {
    1.0 + 2f64.ln() / -alpha.ln() - beta.ln() / (2.0 * alpha.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SSource {
    TauFit,
    MinBin,
    ConvolutionBound,
    User,
    #[serde(rename = "Hu-formula")]
    HuFormula,
}

/// `s` as used in the bounds: a value, or only a bracket.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SReport {
    pub value: Option<f64>,
    pub source: SSource,
    pub bracket: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportInputs {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_exact: Value,
    pub beta_exact: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimates {
    pub s_tau: f64,
    pub s_minbin: f64,
    pub s_minbin_last: f64,
    pub convolution_bound: Option<f64>,
    pub symbolic_min_dim: f64,
    pub h_best_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionReport {
    pub inputs: ReportInputs,
    pub s: SReport,
    #[serde(rename = "H_lower")]
    pub h_lower: f64,
    #[serde(rename = "bd_piF")]
    pub bd_pif: f64,
    #[serde(rename = "ad_piF")]
    pub ad_pif: f64,
    pub bounds: Bounds,
    pub case: Option<u8>,
    pub classification: CaseClassification,
    #[serde(rename = "bd_F")]
    pub bd_f: f64,
    #[serde(rename = "ad_F")]
    pub ad_f: Option<f64>,
    #[serde(rename = "ad_F_bracket")]
    pub ad_f_bracket: [f64; 2],
    #[serde(rename = "hd_F_lower")]
    pub hd_f_lower: Option<f64>,
    pub estimates: Option<Estimates>,
    pub notes: Vec<String>,
}

impl DimensionReport {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    fn check_ranges(&self) -> Result<()> {
        let mut vals = vec![self.bd_pif, self.ad_pif, self.bounds.lower, self.bounds.upper, self.bd_f];
        vals.extend(self.ad_f);
        vals.extend(self.hd_f_lower);
        vals.extend(self.ad_f_bracket);
        if let Some(v) = vals.iter().find(|v| !(-SLACK..=2.0 + SLACK).contains(*v)) {
            return Err(Error::InvariantViolation(format!("dimension value {v} outside [0, 2]")));
        }
        if self.bounds.lower > self.bounds.upper + SLACK {
            return Err(Error::InvariantViolation("theorem lower bound exceeds upper bound".into()));
        }
        Ok(())
    }
}

/// Exact `ad F` for the applicable case, `None` when no case applies.
#[allow(clippy::too_many_arguments)]
fn corollary_value(case: Option<u8>, m: usize, alpha: f64, beta: f64, s: f64, h: f64, bd_pif: f64, ad_pif: f64) -> Option<f64> {
    let neg_log_alpha = -alpha.ln();
    let mid = ((m as f64).ln() + s * beta.ln()) / neg_log_alpha;
    match case? {
        1 => Some(1.0 + mid),
        2 => Some(bd_pif + mid),
        3 => Some(ad_pif + h / neg_log_alpha),
        _ => None,
    }
}

/// Everything `assemble_report` needs beyond the carpet.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingredients {
    pub s: SReport,
    pub h_lower: f64,
    pub bd_pif: f64,
    pub ad_pif: f64,
    pub classification: CaseClassification,
    pub dim_nu_beta: Option<f64>,
    pub estimates: Option<Estimates>,
    pub preset: Option<String>,
    pub notes: Vec<String>,
}

/// Combine computed ingredients into a report. With a bracketed `s` the
/// bounds are taken over the whole bracket.
pub fn assemble_report(ifs: &CarpetIfs, ing: Ingredients) -> Result<DimensionReport> {
    let (m, alpha, beta) = (ifs.m(), ifs.alpha_f64(), ifs.beta_f64());
    let Ingredients { s, h_lower, bd_pif, ad_pif, classification, dim_nu_beta, estimates, preset, mut notes } = ing;
    let [lo, hi] = s.bracket;
    let (bounds, ad_f, ad_f_bracket) = match s.value {
        Some(v) => {
            let (lower, upper) = assouad_bounds(m, alpha, beta, v, h_lower, bd_pif, ad_pif)?;
            let exact = corollary_value(classification.case, m, alpha, beta, v, h_lower, bd_pif, ad_pif);
            if let Some(a) = exact {
                if (a - lower).abs() > 1e-9 || (a - upper).abs() > 1e-9 {
                    return Err(Error::InvariantViolation(format!(
                        "case {:?} value {a} does not match bounds [{lower}, {upper}]",
                        classification.case
                    )));
                }
            }
            let bracket = match exact {
                Some(a) => [a, a],
                None => [lower, upper],
            };
            (Bounds { lower, upper }, exact, bracket)
        }
        None => {
            let (lower, _) = assouad_bounds(m, alpha, beta, hi, h_lower, bd_pif, ad_pif)?;
            let (_, upper) = assouad_bounds(m, alpha, beta, lo, h_lower, bd_pif, ad_pif)?;
            notes.push(format!("s is only bracketed in [{lo}, {hi}]; bounds hold over the bracket"));
            (Bounds { lower, upper }, None, [lower, upper])
        }
    };
    let bd_f = carpet_box_dimension(m, alpha, beta, bd_pif);
    let pu = unit_cover_depth(ifs, 1, &Budget::default())?.is_some() && m == 2;
    let hd_f_lower = match dim_nu_beta {
        Some(d) if pu => Some(d + (2.0 * beta).ln() / -alpha.ln()),
        Some(_) => {
            notes.push("dim_nu_beta ignored: Hausdorff lower bound is only formed for two-map carpets over [0, 1]".into());
            None
        }
        None => None,
    };
    if let Some(a) = ad_f {
        if (a - bd_f).abs() <= 1e-12 {
            notes.push("ad_F equals bd_F".into());
        }
    }
    let report = DimensionReport {
        inputs: ReportInputs { m, alpha, beta, alpha_exact: scalar_to_json(ifs.alpha()), beta_exact: scalar_to_json(ifs.beta()), preset },
        s,
        h_lower,
        bd_pif,
        ad_pif,
        bounds,
        case: classification.case,
        classification,
        bd_f,
        ad_f,
        ad_f_bracket,
        hd_f_lower,
        estimates,
        notes,
    };
    report.check_ranges()?;
    Ok(report)
}

/// How `s` is supplied to `pu_report`.
#[derive(Clone, Debug, PartialEq)]
pub enum SInput {
    Value { value: f64, source: SSource },
    Bracket { lo: f64, hi: f64, source: SSource },
}

/// Report for the two-map carpet over `[0, 1]` with ratios `α ≤ 1/2 < β`.
pub fn pu_report(alpha: &FieldElement, beta: &FieldElement, s: Option<SInput>, dim_nu_beta: Option<f64>) -> Result<DimensionReport> {
    let ifs = crate::carpet::pu_carpet(alpha, beta)?;
    let s = s.ok_or_else(|| Error::MissingInput("s".into()))?;
    let s = match s {
        SInput::Value { value, source } => {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParameterOutOfRange(format!("s must lie in [0, 1], got {value}")));
            }
            SReport { value: Some(value), source, bracket: [value, value] }
        }
        SInput::Bracket { lo, hi, source } => {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::ParameterOutOfRange(format!("bad s bracket [{lo}, {hi}]")));
            }
            SReport { value: None, source, bracket: [lo, hi] }
        }
    };
    let classification =
        CaseClassification { case: Some(1), cases: vec![1], evidence: vec![Evidence::UnitIntervalCover { depth: 1 }], beta_class: None };
    let report = assemble_report(
        &ifs,
        Ingredients {
            s,
            h_lower: 0.0,
            bd_pif: 1.0,
            ad_pif: 1.0,
            classification,
            dim_nu_beta,
            estimates: None,
            preset: None,
            notes: Vec::new(),
        },
    )?;
    Ok(report)
}

/// Inputs to the full report pipeline.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportRequest {
    pub preset: Option<String>,
    pub flags: Flags,
    /// User value of `ad πF`.
    pub ad_pif: Option<f64>,
    /// User value of `s`; overrides the preset and estimated sources.
    pub s: Option<f64>,
    pub dim_nu_beta: Option<f64>,
    pub h_kmax: Option<usize>,
}

/// Compute all ingredients for `ifs` and assemble the report.
pub fn dimension_report(ifs: &CarpetIfs, req: &ReportRequest, budget: &Budget) -> Result<DimensionReport> {
    let (m, beta) = (ifs.m(), ifs.beta_f64());
    let mut notes = Vec::new();
    let info = req.preset.as_deref().map(preset_info).transpose()?;

    let h = h_lower_bound(ifs, req.h_kmax.unwrap_or(DEFAULT_H_KMAX), budget)?;
    let sym = symbolic_min_dim(m, beta, h.h_lower);

    let ladder = build_ladder(ifs, &Schedule::Auto, budget)?;
    let tail = tail_q_grid(DEFAULT_TAIL);
    let s_tau = estimate_s_from_tau(&tau_from_ladder(&ladder, &tail)?, DEFAULT_TAIL)?.slope;
    let minbin = min_bin_from_ladder(&ladder)?;

    let unit_depth = unit_cover_depth(ifs, UNIT_COVER_CAP, budget)?;
    let osc = ifs.projection_osc();
    let one_minus_beta = &FieldElement::one(ifs.field()) - ifs.beta();
    let bernoulli = m == 2 && beta > 0.5 && ifs.maps().iter().any(|t| t.tx.is_zero()) && ifs.maps().iter().any(|t| t.tx == one_minus_beta);
    let conv = if bernoulli { Some(convolution_lower_bound(ifs.beta())?.1) } else { None };

    let sim = similarity_dimension(ifs);
    let bd_pif = if unit_depth.is_some() {
        1.0
    } else if osc {
        sim.min(1.0)
    } else {
        let scales = crate::boxcount::dyadic_scales(4, 14);
        let series = crate::boxcount::box_count_series(ifs, crate::boxcount::Target::Projection, &scales, budget)?;
        let fit = crate::boxcount::fit_box_dimension(&series)?.slope.clamp(0.0, 1.0);
        notes.push("bd_piF estimated by box counting".into());
        fit
    };
    let ad_pif = if unit_depth.is_some() {
        1.0
    } else if osc || req.flags.wsp == Some(true) {
        bd_pif
    } else if req.flags.wsp == Some(false) {
        1.0
    } else {
        req.ad_pif.ok_or_else(|| Error::MissingInput("ad_piF: no separation evidence; supply it".into()))?
    };
    let ad_pif = req.ad_pif.unwrap_or(ad_pif);

    // certified bracket for s
    let hi = 1.0f64.min(sym).min(bd_pif);
    let lo = if osc { sim.min(hi) } else { conv.unwrap_or(0.0).min(hi) };
    let clamp = |v: f64| v.clamp(lo, hi);
    let s = if let Some(v) = req.s {
        SReport { value: Some(v), source: SSource::User, bracket: [lo, hi] }
    } else if let Some(v) = info.as_ref().and_then(|i| i.multinacci).map(hu_s_multinacci).transpose()?.map(|h| h.1) {
        if v <= hi + SLACK {
            SReport { value: Some(v.min(hi)), source: SSource::HuFormula, bracket: [lo, hi] }
        } else {
            notes.push(format!(
                "Hu-formula value {v} exceeds the certified upper bound {hi} from symbolic classes; using the tau-fit estimate"
            ));
            SReport { value: Some(clamp(s_tau)), source: SSource::TauFit, bracket: [lo, hi] }
        }
    } else if lo >= hi {
        SReport { value: Some(lo), source: if osc { SSource::TauFit } else { SSource::ConvolutionBound }, bracket: [lo, hi] }
    } else if info.as_ref().is_some_and(|i| i.class == BetaClass::Salem) {
        notes.push("Salem beta: s < 1 is known but its value is not; only the bracket is reported".into());
        SReport { value: None, source: SSource::TauFit, bracket: [lo, hi] }
    } else {
        if clamp(s_tau) != s_tau {
            notes.push(format!("tau-fit s = {s_tau} clamped into the certified bracket"));
        }
        SReport { value: Some(clamp(s_tau)), source: SSource::TauFit, bracket: [lo, hi] }
    };
    if osc && s.source == SSource::TauFit && s.value.is_some() {
        notes.push("open set condition fixes s at the similarity dimension of the projection".into());
    }
    let classification = classify_corollary(ifs, s.value, h.h_lower, req.flags, info.as_ref().map(|i| i.class), budget)?;
    if classification.case.is_none() {
        notes.push("no corollary case certified; only the theorem bounds are reported".into());
    }
    let pisot = info.as_ref().is_some_and(|i| i.class == BetaClass::Pisot);
    let estimates = Estimates {
        s_tau,
        s_minbin: minbin.fit.slope,
        s_minbin_last: minbin.last,
        convolution_bound: conv,
        symbolic_min_dim: sym,
        h_best_k: h.best_k,
    };
    let mut report = assemble_report(
        ifs,
        Ingredients {
            s,
            h_lower: h.h_lower,
            bd_pif,
            ad_pif,
            classification,
            dim_nu_beta: req.dim_nu_beta,
            estimates: Some(estimates),
            preset: req.preset.clone(),
            notes,
        },
    )?;
    if pisot {
        match report.ad_f {
            Some(a) if a > report.bd_f => report.notes.push("Pisot beta: 1 < bd_F < ad_F < 2".into()),
            Some(a) => return Err(Error::InvariantViolation(format!("Pisot preset with ad_F = {a} not above bd_F = {}", report.bd_f))),
            None => {}
        }
    }
    Ok(report)
}
