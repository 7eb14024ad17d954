//! Batch driver: runs requested tasks on one carpet and writes CSV/JSON
//! artifacts plus a manifest.

pub mod config;
pub mod output;
pub mod sweep;

use std::fmt::Write as _;

use carpetdim::assouad::{default_k_list, default_n_max, estimate_assouad_two_scale_seeded};
use carpetdim::boxcount::{box_count_series, fit_box_dimension, Target};
use carpetdim::csv::{g17, Table};
use carpetdim::json::carpet_to_json;
use carpetdim::measure::{
    bin_projected_measure, build_ladder, default_q_grid, estimate_s_from_tau, min_bin_from_ladder, tail_q_grid, tau_from_ladder,
    MeasureLadder, Schedule, DEFAULT_TAIL,
};
use carpetdim::preset::preset_info;
use carpetdim::symbolic::{equivalence_classes, h_lower_bound, CLASS_WORD_LIMIT, MEMBER_LIST_MAX_K};
use carpetdim::theorem::{dimension_report, Flags, ReportRequest};
use carpetdim::{Budget, CarpetIfs, EndpointLevel, Error, FieldElement, Result};
use serde_json::json;

pub use config::{BoxTarget, Budgets, RunConfig, SMethod, Task};
use output::OutputDir;

pub const DEFAULT_MEASURE_DEPTH: usize = 12;
pub const DEFAULT_MEASURE_BINS: usize = 1024;
pub const DEFAULT_SCALES: &str = "2^-4..2^-14";
pub const DEFAULT_SWEEP_ALPHA: &str = "1/2";

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::InvariantViolation(_) => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// One line of the stdout summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub task: Task,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Default)]
pub struct RunOutcome {
    pub summary: Vec<SummaryRow>,
    pub files: Vec<output::FileEntry>,
}

pub fn render_summary(rows: &[SummaryRow]) -> String {
    let tw = rows.iter().map(|r| format!("{:?}", r.task).len()).max().unwrap_or(4).max(4);
    let kw = rows.iter().map(|r| r.key.len()).max().unwrap_or(3).max(3);
    let mut s = format!("{:<tw$}  {:<kw$}  value\n", "task", "key");
    for r in rows {
        let _ = writeln!(s, "{:<tw$}  {:<kw$}  {}", format!("{:?}", r.task).to_lowercase(), r.key, r.value);
    }
    s
}

/// Check everything that can be checked before any work starts.
pub fn validate_config(cfg: &RunConfig) -> Result<Vec<Task>> {
    let mut tasks = cfg.ordered_tasks();
    if tasks.is_empty() {
        tasks.push(Task::Validate);
    }
    cfg.budgets.budget()?;
    if let Some(name) = &cfg.preset {
        preset_info(name)?;
    }
    cfg.alpha_value()?;
    for t in &tasks {
        match t {
            Task::Classes | Task::H if cfg.kmax == 0 => return Err(Error::Parse("kmax must be at least 1".into())),
            Task::Measure if cfg.depth == Some(0) || cfg.bins == Some(0) => {
                return Err(Error::Parse("measure needs positive depth and bins".into()))
            }
            Task::Tau | Task::S => {
                if cfg.qs.as_ref().is_some_and(Vec::is_empty) || cfg.depths.as_ref().is_some_and(Vec::is_empty) {
                    return Err(Error::Parse("empty q grid or depth list".into()));
                }
            }
            Task::Boxdim => {
                config::parse_scales(cfg.scales.as_deref().unwrap_or(&[DEFAULT_SCALES.to_string()]))?;
            }
            Task::Assouad if cfg.ks.as_ref().is_some_and(Vec::is_empty) => return Err(Error::Parse("empty k list".into())),
            Task::Sweep => {
                let betas = cfg.betas.as_deref().unwrap_or(&[]);
                if betas.is_empty() {
                    return Err(Error::Parse("sweep needs a nonempty --betas grid".into()));
                }
                for b in betas {
                    config::parse_beta(b)?;
                }
            }
            _ => {}
        }
    }
    Ok(tasks)
}

struct Context<'a> {
    cfg: &'a RunConfig,
    budget: Budget,
    ifs: Option<CarpetIfs>,
    ladder: Option<MeasureLadder>,
    out: OutputDir,
    summary: Vec<SummaryRow>,
}

impl Context<'_> {
    fn ifs(&self) -> &CarpetIfs {
        self.ifs.as_ref().expect("carpet loaded for carpet tasks")
    }

    fn note(&mut self, task: Task, key: &str, value: impl Into<String>) {
        self.summary.push(SummaryRow { task, key: key.into(), value: value.into() });
    }

    fn ladder(&mut self) -> Result<&MeasureLadder> {
        if self.ladder.is_none() {
            let schedule = match &self.cfg.depths {
                Some(d) => Schedule::Depths(d.clone()),
                None => Schedule::Auto,
            };
            self.ladder = Some(build_ladder(self.ifs(), &schedule, &self.budget)?);
        }
        Ok(self.ladder.as_ref().unwrap())
    }
}

/// Execute the configured tasks. On failure the manifest is still written,
/// marked incomplete, and earlier artifacts stay on disk.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let tasks = validate_config(cfg)?;
    let budget = cfg.budgets.budget()?;
    let ifs = if tasks.iter().any(|t| t.needs_carpet()) { Some(cfg.load_carpet()?) } else { None };
    let out = OutputDir::create(&cfg.out)?;
    let mut ctx = Context { cfg, budget, ifs, ladder: None, out, summary: Vec::new() };
    let mut result = Ok(());
    for &t in &tasks {
        result = run_task(&mut ctx, t);
        if result.is_err() {
            break;
        }
    }
    ctx.out.write_manifest(cfg, &tasks, result.as_ref().err())?;
    result.map(|_| RunOutcome { summary: ctx.summary, files: ctx.out.files().to_vec() })
}

fn run_task(ctx: &mut Context, task: Task) -> Result<()> {
    match task {
        Task::Validate => validate(ctx),
        Task::Classes => classes(ctx),
        Task::H => h(ctx),
        Task::Measure => measure(ctx),
        Task::Tau => tau(ctx),
        Task::S => s(ctx),
        Task::Boxdim => boxdim(ctx),
        Task::Assouad => assouad(ctx),
        Task::Report => report(ctx),
        Task::Sweep => sweep_task(ctx),
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn validate(ctx: &mut Context) -> Result<()> {
    let ifs = ctx.ifs();
    let doc = json!({
        "carpet": carpet_to_json(ifs),
        "m": ifs.m(),
        "alpha": ifs.alpha_f64(),
        "beta": ifs.beta_f64(),
        "degenerate": ifs.is_degenerate(),
        "projection_osc": ifs.projection_osc(),
    });
    let (m, a, b) = (ifs.m(), ifs.alpha_f64(), ifs.beta_f64());
    ctx.out.write("carpet.json", &pretty(&doc)?)?;
    ctx.note(Task::Validate, "maps", m.to_string());
    ctx.note(Task::Validate, "alpha, beta", format!("{}, {}", g17(a), g17(b)));
    Ok(())
}

fn classes(ctx: &mut Context) -> Result<()> {
    let k_max = ctx.cfg.kmax;
    let ifs = ctx.ifs().clone();
    let limit = ctx.budget.max_words.min(CLASS_WORD_LIMIT);
    Budget { max_words: limit, ..ctx.budget }.check_words(ifs.m(), k_max)?;
    let open = Budget { max_words: u128::MAX, ..ctx.budget };
    let mut t = Table::new(&["k", "class_count", "max_class_size"]);
    let mut level = EndpointLevel::root(&ifs);
    for k in 1..=k_max {
        level = level.extend(&ifs, &open)?;
        t.push(vec![k.to_string(), level.distinct().to_string(), level.max_multiplicity().to_string()]);
    }
    ctx.out.write("classes.csv", t.render().as_bytes())?;
    ctx.note(Task::Classes, &format!("classes at k={k_max}"), level.distinct().to_string());
    ctx.note(Task::Classes, &format!("max class at k={k_max}"), level.max_multiplicity().to_string());
    if k_max < MEMBER_LIST_MAX_K {
        let table = equivalence_classes(&ifs, k_max, &ctx.budget)?;
        let mut m = Table::new(&["class", "size", "left_endpoint", "members"]);
        for (i, ((e, n), ws)) in table.classes.iter().zip(table.members.iter().flatten()).enumerate() {
            let words: Vec<String> = ws.iter().map(ToString::to_string).collect();
            m.push(vec![(i + 1).to_string(), n.to_string(), g17(e.to_f64()), words.join(" ")]);
        }
        ctx.out.write("classes_members.csv", m.render().as_bytes())?;
    }
    Ok(())
}

fn h(ctx: &mut Context) -> Result<()> {
    let est = h_lower_bound(ctx.ifs(), ctx.cfg.kmax, &ctx.budget)?;
    ctx.out.write("h.csv", est.to_csv().as_bytes())?;
    ctx.note(Task::H, "H_lower", format!("{} (k={})", g17(est.h_lower), est.best_k));
    ctx.note(Task::H, "symbolic_min_dim", g17(est.symbolic_min_dim));
    Ok(())
}

fn measure(ctx: &mut Context) -> Result<()> {
    let depth = ctx.cfg.depth.unwrap_or(DEFAULT_MEASURE_DEPTH);
    let bins = ctx.cfg.bins.unwrap_or(DEFAULT_MEASURE_BINS);
    if depth > ctx.budget.max_depth {
        return Err(Error::BudgetExceeded { what: "measure depth".into(), needed: depth as u128, limit: ctx.budget.max_depth as u128 });
    }
    let bm = bin_projected_measure(ctx.ifs(), depth, bins, &ctx.budget)?;
    let w = bm.bin_width().clone();
    let mut t = Table::new(&["bin", "left", "mass"]);
    let mut left = FieldElement::zero(w.field());
    for (i, mass) in bm.masses_f64().iter().enumerate() {
        t.push(vec![i.to_string(), g17(left.to_f64()), g17(*mass)]);
        left = &left + &w;
    }
    let mut bin = Vec::new();
    bm.write_binary(&mut bin)?;
    ctx.out.write("measure.csv", t.render().as_bytes())?;
    ctx.out.write("measure.bin", &bin)?;
    let top = bm.masses_f64().iter().cloned().fold(0.0, f64::max);
    ctx.note(Task::Measure, "bins", bm.len().to_string());
    ctx.note(Task::Measure, "max mass", g17(top));
    Ok(())
}

fn tau(ctx: &mut Context) -> Result<()> {
    let qs = ctx.cfg.qs.clone().unwrap_or_else(default_q_grid);
    let spectrum = tau_from_ladder(ctx.ladder()?, &qs)?;
    ctx.out.write("tau.csv", spectrum.to_csv().as_bytes())?;
    let depths: Vec<String> = spectrum.depths.iter().map(ToString::to_string).collect();
    ctx.note(Task::Tau, "depths", depths.join(","));
    if let Some(t2) = spectrum.tau_at(2.0) {
        ctx.note(Task::Tau, "tau(2)", g17(t2));
    }
    Ok(())
}

fn s(ctx: &mut Context) -> Result<()> {
    let method = ctx.cfg.s_method;
    let mut t = Table::new(&["method", "s", "intercept", "r_squared", "points"]);
    if method != SMethod::Minbin {
        let spectrum = tau_from_ladder(ctx.ladder()?, &tail_q_grid(DEFAULT_TAIL))?;
        let fit = estimate_s_from_tau(&spectrum, DEFAULT_TAIL)?;
        t.push(vec!["tau".into(), g17(fit.slope), g17(fit.intercept), g17(fit.r_squared), fit.points.to_string()]);
        ctx.note(Task::S, "s (tau fit)", g17(fit.slope));
    }
    if method != SMethod::Tau {
        let mb = min_bin_from_ladder(ctx.ladder()?)?;
        t.push(vec!["minbin".into(), g17(mb.fit.slope), g17(mb.fit.intercept), g17(mb.fit.r_squared), mb.fit.points.to_string()]);
        t.push(vec!["minbin-last".into(), g17(mb.last), String::new(), String::new(), "1".into()]);
        ctx.out.write("minbin.csv", mb.to_csv().as_bytes())?;
        ctx.note(Task::S, "s (min bin)", g17(mb.fit.slope));
    }
    ctx.out.write("s.csv", t.render().as_bytes())?;
    Ok(())
}

fn boxdim(ctx: &mut Context) -> Result<()> {
    let default = [DEFAULT_SCALES.to_string()];
    let scales = config::parse_scales(ctx.cfg.scales.as_deref().unwrap_or(&default))?;
    let (target, tag) = match ctx.cfg.target {
        BoxTarget::F => (Target::Attractor, "f"),
        BoxTarget::Pif => (Target::Projection, "pif"),
    };
    let series = box_count_series(ctx.ifs(), target, &scales, &ctx.budget)?;
    ctx.out.write(&format!("boxdim_{tag}.csv"), series.to_csv().as_bytes())?;
    let fit = fit_box_dimension(&series)?;
    ctx.out.write(&format!("boxdim_{tag}_fit.json"), &pretty(&fit)?)?;
    ctx.note(Task::Boxdim, &format!("box dimension ({tag})"), g17(fit.slope));
    Ok(())
}

fn assouad(ctx: &mut Context) -> Result<()> {
    let ks = match &ctx.cfg.ks {
        Some(ks) => ks.clone(),
        None => default_k_list(ctx.ifs(), default_n_max(ctx.ifs().m()))?,
    };
    let est = estimate_assouad_two_scale_seeded(ctx.ifs(), &ks, &ctx.budget, ctx.cfg.seed)?;
    ctx.out.write("assouad.csv", est.to_csv().as_bytes())?;
    ctx.out.write("assouad.json", &pretty(&est)?)?;
    ctx.note(Task::Assouad, "two-scale exponent", g17(est.exponent()));
    Ok(())
}

fn report(ctx: &mut Context) -> Result<()> {
    let req = ReportRequest {
        preset: ctx.cfg.preset.clone(),
        flags: Flags { wsp: ctx.cfg.wsp },
        ad_pif: ctx.cfg.ad_pif,
        s: ctx.cfg.s_user,
        dim_nu_beta: ctx.cfg.dim_nu_beta,
        h_kmax: Some(ctx.cfg.kmax),
    };
    let rep = dimension_report(ctx.ifs(), &req, &ctx.budget)?;
    ctx.out.write("report.json", rep.to_json_pretty().as_bytes())?;
    ctx.note(Task::Report, "case", rep.case.map_or("none".into(), |c| c.to_string()));
    ctx.note(Task::Report, "bd_F", g17(rep.bd_f));
    let ad = match rep.ad_f {
        Some(v) => g17(v),
        None => format!("[{}, {}]", g17(rep.ad_f_bracket[0]), g17(rep.ad_f_bracket[1])),
    };
    ctx.note(Task::Report, "ad_F", ad);
    Ok(())
}

fn sweep_task(ctx: &mut Context) -> Result<()> {
    let alpha = match ctx.cfg.alpha_value()? {
        Some(a) => a,
        None => FieldElement::from_rational(&carpetdim::NumberField::rationals(), config::parse_rational(DEFAULT_SWEEP_ALPHA)?),
    };
    let betas = ctx.cfg.betas.as_deref().unwrap_or(&[]).iter().map(|b| config::parse_beta(b)).collect::<Result<Vec<_>>>()?;
    let rows = sweep::sweep(&alpha, &betas, ctx.cfg.kmax, &ctx.budget)?;
    ctx.out.write("sweep.csv", sweep::sweep_csv(&rows).as_bytes())?;
    ctx.note(Task::Sweep, "rows", rows.len().to_string());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::BudgetExceeded { what: "x".into(), needed: 2, limit: 1 }), 3);
        assert_eq!(exit_code(&Error::InvariantViolation("x".into())), 4);
        assert_eq!(exit_code(&Error::Io("x".into())), 1);
        assert_eq!(exit_code(&Error::OrderViolation { alpha: 0.6, beta: 0.5 }), 2);
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
    }

    #[test]
    fn config_checks() {
        let cfg = RunConfig { tasks: vec![Task::Sweep], ..Default::default() };
        assert!(matches!(validate_config(&cfg), Err(Error::Parse(_))));
        let cfg = RunConfig { tasks: vec![Task::H], kmax: 0, ..Default::default() };
        assert!(validate_config(&cfg).is_err());
        let cfg = RunConfig { preset: Some("nope".into()), ..Default::default() };
        assert!(validate_config(&cfg).is_err());
        let cfg = RunConfig::default();
        assert_eq!(validate_config(&cfg).unwrap(), vec![Task::Validate]);
    }

    #[test]
    fn budget_failure_keeps_partial_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            preset: Some("pu-golden".into()),
            tasks: vec![Task::Validate, Task::Classes],
            kmax: 30,
            out: dir.path().to_path_buf(),
            ..Default::default()
        };
        let err = run(&cfg).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        assert!(dir.path().join("carpet.json").exists());
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(output::MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["complete"], false);
        assert_eq!(m["files"].as_array().unwrap().len(), 1);
        assert!(m["error"].as_str().unwrap().contains("budget"));
    }
}
