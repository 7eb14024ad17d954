//! Parameter sweep over `β` for the two-map family with fixed `α`.

use carpetdim::csv::{g17, Table};
use carpetdim::measure::{
    build_ladder, convolution_lower_bound, default_q_grid, estimate_s_from_tau, tau_from_ladder, Schedule, DEFAULT_TAIL,
};
use carpetdim::symbolic::h_lower_bound;
use carpetdim::theorem::{pu_report, symbolic_min_dim, SInput, SSource};
use carpetdim::{pu_carpet, Budget, Error, FieldElement, Result};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub conv_n: u32,
    pub conv_bound: f64,
    pub s_tau: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub bd_f: f64,
    pub ad_f_lo: f64,
    pub ad_f_hi: f64,
    /// `ad F` with the tau-fit `s` clamped into `[s_lo, s_hi]`.
    pub ad_f_tau: f64,
}

pub fn sweep_row(alpha: &FieldElement, beta: &FieldElement, h_kmax: usize, budget: &Budget) -> Result<SweepRow> {
    let ifs = pu_carpet(alpha, beta)?;
    let (conv_n, conv_bound) = convolution_lower_bound(beta)?;
    let ladder = build_ladder(&ifs, &Schedule::Auto, budget)?;
    let spectrum = tau_from_ladder(&ladder, &default_q_grid())?;
    let s_tau = estimate_s_from_tau(&spectrum, DEFAULT_TAIL)?.slope;
    let h = h_lower_bound(&ifs, h_kmax, budget)?;
    let s_hi = symbolic_min_dim(2, ifs.beta_f64(), h.h_lower).min(1.0);
    let s_lo = conv_bound.min(s_hi);
    let bracket = pu_report(alpha, beta, Some(SInput::Bracket { lo: s_lo, hi: s_hi, source: SSource::ConvolutionBound }), None)?;
    let s_mid = s_tau.clamp(s_lo, s_hi);
    let point = pu_report(alpha, beta, Some(SInput::Value { value: s_mid, source: SSource::TauFit }), None)?;
    let ad_f_tau = point.ad_f.ok_or_else(|| Error::InvariantViolation("two-map report without a case value".into()))?;
    Ok(SweepRow {
        beta: ifs.beta_f64(),
        conv_n,
        conv_bound,
        s_tau,
        s_lo,
        s_hi,
        bd_f: bracket.bd_f,
        ad_f_lo: bracket.ad_f_bracket[0],
        ad_f_hi: bracket.ad_f_bracket[1],
        ad_f_tau,
    })
}

/// One row per `β`, in grid order.
pub fn sweep(alpha: &FieldElement, betas: &[FieldElement], h_kmax: usize, budget: &Budget) -> Result<Vec<SweepRow>> {
    if betas.is_empty() {
        return Err(Error::Parse("empty beta grid".into()));
    }
    betas.par_iter().map(|b| sweep_row(alpha, b, h_kmax, budget)).collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut t = Table::new(&["beta", "conv_n", "conv_bound", "s_tau", "s_lo", "s_hi", "bd_F", "ad_F_lo", "ad_F_hi", "ad_F_tau"]);
    for r in rows {
        t.push(vec![
            g17(r.beta),
            r.conv_n.to_string(),
            g17(r.conv_bound),
            g17(r.s_tau),
            g17(r.s_lo),
            g17(r.s_hi),
            g17(r.bd_f),
            g17(r.ad_f_lo),
            g17(r.ad_f_hi),
            g17(r.ad_f_tau),
        ]);
    }
    t.render()
}
