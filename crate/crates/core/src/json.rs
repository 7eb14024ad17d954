//! JSON forms of exact scalars and carpet descriptions.
//!
//! A scalar is `{"rat": [num, den]}` or
//! `{"field": {"minpoly": [c0, .., cd], "coeffs": [[num, den], ..], "approx": x}}`.
//! Integers may be JSON numbers or decimal strings. `approx` locates the
//! value of the scalar itself and selects which real root of `minpoly` is
//! meant.

use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::carpet::{validate_carpet, CarpetIfs, RawCarpet};
use crate::error::{Error, Result};
use crate::exact::{FieldElement, NumberField};

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_int(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(perr(format!("expected an integer, got {n}")))
            }
        }
        Value::String(s) => BigInt::from_str(s.trim()).map_err(|_| perr(format!("bad integer string {s:?}"))),
        other => Err(perr(format!("expected an integer, got {other}"))),
    }
}

fn parse_ratio(v: &Value) -> Result<BigRational> {
    let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| perr("a rational is a pair [num, den]"))?;
    let num = parse_int(&arr[0])?;
    let den = parse_int(&arr[1])?;
    if den.is_zero() {
        return Err(perr("zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

fn int_value(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(i) if i.unsigned_abs() < (1u64 << 53) => json!(i),
        _ => Value::String(n.to_string()),
    }
}

fn ratio_value(q: &BigRational) -> Value {
    json!([int_value(q.numer()), int_value(q.denom())])
}

/// Parses scalars, sharing one field per minimal polynomial and root.
#[derive(Default)]
pub struct ScalarParser {
    fields: Vec<Arc<NumberField>>,
}

impl ScalarParser {
    pub fn new() -> Self {
        ScalarParser::default()
    }

    pub fn parse(&mut self, v: &Value) -> Result<FieldElement> {
        let obj = v.as_object().ok_or_else(|| perr("a scalar must be an object"))?;
        if let Some(r) = obj.get("rat") {
            return Ok(FieldElement::from_rational(&NumberField::rationals(), parse_ratio(r)?));
        }
        let f = obj.get("field").ok_or_else(|| perr("a scalar needs a \"rat\" or \"field\" key"))?;
        let minpoly: Vec<BigInt> = f
            .get("minpoly")
            .and_then(Value::as_array)
            .ok_or_else(|| perr("field scalar needs \"minpoly\""))?
            .iter()
            .map(parse_int)
            .collect::<Result<_>>()?;
        let coeffs: Vec<BigRational> = f
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| perr("field scalar needs \"coeffs\""))?
            .iter()
            .map(parse_ratio)
            .collect::<Result<_>>()?;
        let approx = f.get("approx").and_then(Value::as_f64).ok_or_else(|| perr("field scalar needs a numeric \"approx\""))?;
        if coeffs.len() + 1 > minpoly.len() {
            return Err(perr("more coefficients than the field degree"));
        }
        self.resolve(minpoly, coeffs, approx)
    }

    fn resolve(&mut self, minpoly: Vec<BigInt>, coeffs: Vec<BigRational>, approx: f64) -> Result<FieldElement> {
        let poly = crate::exact::QPoly::from_ints(&minpoly);
        if minpoly.last().map(|c| c != &BigInt::from(1)).unwrap_or(true) || minpoly.len() < 2 {
            return Err(Error::InvalidMinpoly("minimal polynomial must be monic of degree at least 1".into()));
        }
        let mut candidates: Vec<Arc<NumberField>> = Vec::new();
        if minpoly.len() == 2 {
            let r = -BigRational::from_integer(minpoly[0].clone());
            let one = BigRational::from_integer(1.into());
            candidates.push(NumberField::new(minpoly.clone(), &r - &one, &r + &one)?);
        } else {
            for (lo, hi) in poly.isolate_real_roots() {
                let known = self
                    .fields
                    .iter()
                    .find(|k| k.minpoly() == minpoly.as_slice() && k.root_interval().lo <= hi && lo <= k.root_interval().hi);
                match known {
                    Some(k) => candidates.push(k.clone()),
                    None => candidates.push(NumberField::new(minpoly.clone(), lo, hi)?),
                }
            }
        }
        if candidates.is_empty() {
            return Err(Error::RootIsolation("minimal polynomial has no real root".into()));
        }
        let mut best: Option<(f64, FieldElement)> = None;
        for k in candidates {
            let e = FieldElement::from_coeffs(&k, coeffs.clone());
            let dist = (e.to_f64() - approx).abs();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, e));
            }
        }
        let (_, e) = best.unwrap();
        if !self.fields.iter().any(|k| Arc::ptr_eq(k, e.field())) {
            self.fields.push(e.field().clone());
        }
        Ok(e)
    }
}

pub fn scalar_from_json(v: &Value) -> Result<FieldElement> {
    ScalarParser::new().parse(v)
}

pub fn scalar_to_json(x: &FieldElement) -> Value {
    if let Some(q) = x.as_rational() {
        return json!({ "rat": ratio_value(q) });
    }
    json!({
        "field": {
            "minpoly": x.field().minpoly().iter().map(int_value).collect::<Vec<_>>(),
            "coeffs": x.coeffs().iter().map(ratio_value).collect::<Vec<_>>(),
            "approx": x.to_f64(),
        }
    })
}

pub fn raw_carpet_from_json(v: &Value) -> Result<RawCarpet> {
    let mut p = ScalarParser::new();
    let alpha = p.parse(v.get("alpha").ok_or_else(|| perr("carpet needs \"alpha\""))?)?;
    let beta = p.parse(v.get("beta").ok_or_else(|| perr("carpet needs \"beta\""))?)?;
    let maps_v = v.get("maps").and_then(Value::as_array).ok_or_else(|| perr("carpet needs a \"maps\" array"))?;
    let mut maps = Vec::with_capacity(maps_v.len());
    for (i, m) in maps_v.iter().enumerate() {
        let tx = m.get("tx").ok_or_else(|| perr(format!("map {} lacks \"tx\"", i + 1)))?;
        let ty = m.get("ty").ok_or_else(|| perr(format!("map {} lacks \"ty\"", i + 1)))?;
        maps.push((p.parse(tx)?, p.parse(ty)?));
    }
    Ok(RawCarpet { alpha, beta, maps })
}

/// Parse and validate a carpet document.
pub fn carpet_from_json(v: &Value) -> Result<CarpetIfs> {
    validate_carpet(&raw_carpet_from_json(v)?)
}

pub fn carpet_from_str(s: &str) -> Result<CarpetIfs> {
    let v: Value = serde_json::from_str(s)?;
    carpet_from_json(&v)
}

pub fn carpet_to_json(c: &CarpetIfs) -> Value {
    json!({
        "alpha": scalar_to_json(c.alpha()),
        "beta": scalar_to_json(c.beta()),
        "maps": c.maps().iter().map(|t| json!({
            "tx": scalar_to_json(&t.tx),
            "ty": scalar_to_json(&t.ty),
        })).collect::<Vec<_>>(),
    })
}
