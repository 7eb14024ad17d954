//! Run configuration and the small value grammars used on the command line.

use std::path::PathBuf;
use std::str::FromStr;

use carpetdim::json::carpet_from_str;
use carpetdim::preset::{preset, preset_info, preset_with_alpha};
use carpetdim::{Budget, CarpetIfs, Error, FieldElement, NumberField, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Validate,
    Classes,
    H,
    Measure,
    Tau,
    S,
    Boxdim,
    Assouad,
    Report,
    Sweep,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        Ok(match s.trim() {
            "validate" => Task::Validate,
            "classes" => Task::Classes,
            "h" => Task::H,
            "measure" => Task::Measure,
            "tau" => Task::Tau,
            "s" => Task::S,
            "boxdim" => Task::Boxdim,
            "assouad" => Task::Assouad,
            "report" => Task::Report,
            "sweep" => Task::Sweep,
            other => return Err(Error::Parse(format!("unknown task {other:?}"))),
        })
    }
}

impl Task {
    pub fn needs_carpet(self) -> bool {
        self != Task::Sweep
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SMethod {
    Tau,
    Minbin,
    #[default]
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoxTarget {
    #[default]
    F,
    Pif,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    pub max_words: u64,
    pub max_bins: usize,
    pub max_depth: usize,
    pub max_points: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        let b = Budget::default();
        Budgets { max_words: 1 << 28, max_bins: b.max_bins, max_depth: b.max_depth, max_points: b.max_points }
    }
}

impl Budgets {
    pub fn budget(&self) -> Result<Budget> {
        if self.max_words == 0 || self.max_bins == 0 || self.max_depth == 0 || self.max_points == 0 {
            return Err(Error::Parse("budgets must be positive".into()));
        }
        Ok(Budget { max_words: self.max_words as u128, max_bins: self.max_bins, max_depth: self.max_depth, max_points: self.max_points })
    }
}

/// Everything a run needs. Also the shape of `--config` files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    /// Inline JSON (starting with `{`) or a path to a carpet file.
    pub carpet: Option<String>,
    /// Override of the vertical ratio, e.g. `1/2`.
    pub alpha: Option<String>,
    pub tasks: Vec<Task>,
    pub budgets: Budgets,
    pub kmax: usize,
    pub depth: Option<usize>,
    pub bins: Option<usize>,
    pub qs: Option<Vec<f64>>,
    pub depths: Option<Vec<usize>>,
    pub s_method: SMethod,
    pub target: BoxTarget,
    pub scales: Option<Vec<String>>,
    pub ks: Option<Vec<usize>>,
    pub betas: Option<Vec<String>>,
    pub out: PathBuf,
    pub seed: u64,
    pub wsp: Option<bool>,
    pub ad_pif: Option<f64>,
    pub dim_nu_beta: Option<f64>,
    pub s_user: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            carpet: None,
            alpha: None,
            tasks: Vec::new(),
            budgets: Budgets::default(),
            kmax: 12,
            depth: None,
            bins: None,
            qs: None,
            depths: None,
            s_method: SMethod::Both,
            target: BoxTarget::F,
            scales: None,
            ks: None,
            betas: None,
            out: PathBuf::from("out"),
            seed: 0,
            wsp: None,
            ad_pif: None,
            dim_nu_beta: None,
            s_user: None,
        }
    }
}

impl RunConfig {
    /// Tasks deduplicated in dependency order.
    pub fn ordered_tasks(&self) -> Vec<Task> {
        let mut t = self.tasks.clone();
        t.sort();
        t.dedup();
        t
    }

    pub fn alpha_value(&self) -> Result<Option<FieldElement>> {
        self.alpha.as_deref().map(|a| parse_rational(a).map(|q| FieldElement::from_rational(&NumberField::rationals(), q))).transpose()
    }

    /// Resolve the carpet source and apply the `alpha` override.
    pub fn load_carpet(&self) -> Result<CarpetIfs> {
        let alpha = self.alpha_value()?;
        match (&self.preset, &self.carpet) {
            (Some(_), Some(_)) => Err(Error::Parse("give either --preset or --carpet, not both".into())),
            (Some(name), None) => {
                preset_info(name)?;
                match alpha {
                    Some(a) => preset_with_alpha(name, &a),
                    None => preset(name),
                }
            }
            (None, Some(src)) => {
                let text = if src.trim_start().starts_with('{') {
                    src.clone()
                } else {
                    std::fs::read_to_string(src).map_err(|e| Error::Parse(format!("cannot read carpet file {src}: {e}")))?
                };
                let ifs = carpet_from_str(&text)?;
                match alpha {
                    Some(a) => ifs.with_alpha(&a),
                    None => Ok(ifs),
                }
            }
            (None, None) => Err(Error::MissingInput("a carpet: --preset NAME or --carpet FILE|JSON".into())),
        }
    }
}

fn bad(s: &str, what: &str) -> Error {
    Error::Parse(format!("cannot parse {s:?} as {what}"))
}

fn pow2(e: i64) -> BigRational {
    let one = BigInt::one();
    if e >= 0 {
        BigRational::from_integer(one << e as usize)
    } else {
        BigRational::new(one.clone(), one << (-e) as usize)
    }
}

/// `n`, `n/d`, a decimal such as `0.55`, or `2^e`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if let Some(e) = t.strip_prefix("2^") {
        let e: i64 = e.parse().map_err(|_| bad(s, "a power of two"))?;
        if e.abs() > 4096 {
            return Err(bad(s, "a power of two with |exponent| <= 4096"));
        }
        return Ok(pow2(e));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad(s, "a rational"))?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad(s, "a rational"))?;
        if d.is_zero() {
            return Err(bad(s, "a rational with nonzero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad(s, "a number"));
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(&digits).map_err(|_| bad(s, "a number"))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let q = BigRational::new(num, den);
    Ok(if neg { -q } else { q })
}

/// A horizontal ratio: any rational form, or `2^-1/n` for the exact
/// `n`-th root of 1/2.
pub fn parse_beta(s: &str) -> Result<FieldElement> {
    let t = s.trim();
    if let Some(n) = t.strip_prefix("2^-1/") {
        let n: usize = n.parse().map_err(|_| bad(s, "2^-1/n"))?;
        if !(1..=16).contains(&n) {
            return Err(bad(s, "2^-1/n with 1 <= n <= 16"));
        }
        if n == 1 {
            return Ok(FieldElement::rational(1, 2));
        }
        // θ^n = 2, 2^{-1/n} = θ^{n-1}/2
        let mut minpoly = vec![BigInt::zero(); n + 1];
        minpoly[0] = BigInt::from(-2);
        minpoly[n] = BigInt::one();
        let field = NumberField::new(minpoly, BigRational::one(), BigRational::from_integer(2.into()))?;
        let theta = FieldElement::generator(&field);
        return Ok(theta.pow(n as u32 - 1).mul_rational(&BigRational::new(1.into(), 2.into())));
    }
    Ok(FieldElement::from_rational(&NumberField::rationals(), parse_rational(t)?))
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Comma-separated integers; `a..b` is an inclusive range.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in split_list(s) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad(item, "an integer range"))?;
            let b: usize = b.trim().parse().map_err(|_| bad(item, "an integer range"))?;
            if b < a {
                return Err(bad(item, "an increasing range"));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| bad(item, "an integer"))?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    Ok(out)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = split_list(s).map(|x| x.parse::<f64>().map_err(|_| bad(x, "a number"))).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    Ok(out)
}

pub fn parse_string_list(s: &str) -> Vec<String> {
    split_list(s).map(String::from).collect()
}

/// Scales: rationals, plus `2^a..2^b` for every power of two in between.
pub fn parse_scales(items: &[String]) -> Result<Vec<BigRational>> {
    let mut out = Vec::new();
    for item in items {
        if let Some((a, b)) = item.split_once("..") {
            let ea: i64 = a.trim().strip_prefix("2^").and_then(|e| e.parse().ok()).ok_or_else(|| bad(item, "2^a..2^b"))?;
            let eb: i64 = b.trim().strip_prefix("2^").and_then(|e| e.parse().ok()).ok_or_else(|| bad(item, "2^a..2^b"))?;
            let (lo, hi) = (ea.min(eb), ea.max(eb));
            out.extend((lo..=hi).rev().map(pow2));
        } else {
            out.push(parse_rational(item)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty scale list".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/3").unwrap(), q(1, 3));
        assert_eq!(parse_rational("0.55").unwrap(), q(11, 20));
        assert_eq!(parse_rational("-2.5").unwrap(), q(-5, 2));
        assert_eq!(parse_rational("2^-6").unwrap(), q(1, 64));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        for s in ["", "x", "1/0", "1.2.3", "2^x"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn betas() {
        let b = parse_beta("2^-1/2").unwrap();
        assert!((b.to_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let b3 = parse_beta("2^-1/3").unwrap();
        assert!((b3.to_f64() - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(parse_beta("0.6").unwrap(), FieldElement::rational(3, 5));
    }

    #[test]
    fn lists() {
        assert_eq!(parse_usize_list("8..11, 14").unwrap(), vec![8, 9, 10, 11, 14]);
        assert!(parse_usize_list("").is_err());
        assert_eq!(parse_f64_list("0.5,2").unwrap(), vec![0.5, 2.0]);
        let s = parse_scales(&["2^-2..2^-4".into(), "1/3".into()]).unwrap();
        assert_eq!(s, vec![q(1, 4), q(1, 8), q(1, 16), q(1, 3)]);
    }

    #[test]
    fn task_order() {
        let c = RunConfig { tasks: vec![Task::Report, Task::S, Task::Measure, Task::S], ..Default::default() };
        assert_eq!(c.ordered_tasks(), vec![Task::Measure, Task::S, Task::Report]);
    }

    #[test]
    fn config_file_shape() {
        let c: RunConfig = serde_json::from_str(r#"{"preset": "pu-golden", "tasks": ["h"], "kmax": 5}"#).unwrap();
        assert_eq!(c.kmax, 5);
        assert!(serde_json::from_str::<RunConfig>(r#"{"nope": 1}"#).is_err());
    }
}
