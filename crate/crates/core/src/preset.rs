//! Shipped carpets: Przytycki-Urbański systems over special `β` and
//! separated controls.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::carpet::{pu_carpet, validate_carpet, CarpetIfs, RawCarpet};
use crate::error::{Error, Result};
use crate::exact::{FieldElement, NumberField};

/// Arithmetic type of `β^{-1}` for PU presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaClass {
    /// Norm ±2, conjugates outside the unit circle: absolutely continuous
    /// projection with bounded density.
    Garsia,
    Pisot,
    Salem,
    Generic,
    /// Not a PU carpet; projected cylinders satisfy the open set condition.
    Separated,
}

#[derive(Clone, Debug, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub class: BetaClass,
    pub pu: bool,
    /// Defining polynomial of the generator, low degree first.
    pub minpoly: Vec<i64>,
    pub default_alpha: (i64, i64),
    /// Multinacci order when `β^{-1}` is a multinacci number.
    pub multinacci: Option<u32>,
    pub summary: &'static str,
}

pub const PRESET_NAMES: [&str; 7] =
    ["pu-golden", "pu-tribonacci", "pu-garsia-sqrt2", "pu-salem-4", "cantor-third", "bm-two-column", "lebesgue-half"];

pub fn preset_info(name: &str) -> Result<PresetInfo> {
    let info = match name {
        "pu-golden" => PresetInfo {
            name: "pu-golden",
            class: BetaClass::Pisot,
            pu: true,
            minpoly: vec![-1, 1, 1],
            default_alpha: (1, 2),
            multinacci: Some(2),
            summary: "beta = 1/phi, root of x^2 + x - 1",
        },
        "pu-tribonacci" => PresetInfo {
            name: "pu-tribonacci",
            class: BetaClass::Pisot,
            pu: true,
            minpoly: vec![-1, 1, 1, 1],
            default_alpha: (1, 2),
            multinacci: Some(3),
            summary: "beta = tribonacci reciprocal, root of x^3 + x^2 + x - 1",
        },
        "pu-garsia-sqrt2" => PresetInfo {
            name: "pu-garsia-sqrt2",
            class: BetaClass::Garsia,
            pu: true,
            minpoly: vec![-2, 0, 1],
            default_alpha: (1, 3),
            multinacci: None,
            summary: "beta = 2^(-1/2) = theta/2 with theta^2 = 2",
        },
        "pu-salem-4" => PresetInfo {
            name: "pu-salem-4",
            class: BetaClass::Salem,
            pu: true,
            minpoly: salem_minpoly(4)?,
            default_alpha: (1, 2),
            multinacci: None,
            summary: "beta = reciprocal of the Salem root of x^4 - x^3 - x^2 - x + 1",
        },
        "cantor-third" => PresetInfo {
            name: "cantor-third",
            class: BetaClass::Separated,
            pu: false,
            minpoly: vec![0, 1],
            default_alpha: (1, 4),
            multinacci: None,
            summary: "columns at 0 and 2/3 with beta = 1/3",
        },
        "bm-two-column" => PresetInfo {
            name: "bm-two-column",
            class: BetaClass::Separated,
            pu: false,
            minpoly: vec![0, 1],
            default_alpha: (1, 4),
            multinacci: None,
            summary: "columns at 0 and 1/2 with beta = 1/2",
        },
        "lebesgue-half" => PresetInfo {
            name: "lebesgue-half",
            class: BetaClass::Separated,
            pu: false,
            minpoly: vec![0, 1],
            default_alpha: (1, 3),
            multinacci: None,
            summary: "columns at 0 and 1/2 with beta = 1/2, alpha = 1/3",
        },
        other => return Err(Error::Parse(format!("unknown preset {other:?}; known presets: {}", PRESET_NAMES.join(", ")))),
    };
    Ok(info)
}

/// Irreducible factor of `x^n − x^{n−1} − … − x + 1` carrying its root in
/// `(1/2, 1)`, for `n = 4..=6`.
pub fn salem_minpoly(n: u32) -> Result<Vec<i64>> {
    match n {
        4 => Ok(vec![1, -1, -1, -1, 1]),
        // x^5 - x^4 - x^3 - x^2 - x + 1 = (x + 1)(x^4 - 2x^3 + x^2 - 2x + 1)
        5 => Ok(vec![1, -2, 1, -2, 1]),
        6 => Ok(vec![1, -1, -1, -1, -1, -1, 1]),
        _ => Err(Error::ParameterOutOfRange(format!("Salem family defined for n = 4..=6, got {n}"))),
    }
}

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&c| BigInt::from(c)).collect()
}

fn field_in(minpoly: &[i64], lo: (i64, i64), hi: (i64, i64)) -> Result<Arc<NumberField>> {
    NumberField::new(big(minpoly), BigRational::new(lo.0.into(), lo.1.into()), BigRational::new(hi.0.into(), hi.1.into()))
}

/// The horizontal ratio of a PU preset as an exact field element.
pub fn preset_beta(name: &str) -> Result<FieldElement> {
    let info = preset_info(name)?;
    match name {
        "pu-garsia-sqrt2" => {
            let k = field_in(&info.minpoly, (1, 1), (2, 1))?;
            Ok(FieldElement::generator(&k).mul_rational(&BigRational::new(1.into(), 2.into())))
        }
        "pu-golden" | "pu-tribonacci" | "pu-salem-4" => {
            let k = field_in(&info.minpoly, (1, 2), (1, 1))?;
            Ok(FieldElement::generator(&k))
        }
        "cantor-third" => Ok(FieldElement::rational(1, 3)),
        _ => Ok(FieldElement::rational(1, 2)),
    }
}

pub fn preset(name: &str) -> Result<CarpetIfs> {
    let info = preset_info(name)?;
    let (n, d) = info.default_alpha;
    preset_with_alpha(name, &FieldElement::rational(n, d))
}

/// A preset with a different vertical ratio.
pub fn preset_with_alpha(name: &str, alpha: &FieldElement) -> Result<CarpetIfs> {
    let info = preset_info(name)?;
    let beta = preset_beta(name)?;
    if info.pu {
        return pu_carpet(alpha, &beta);
    }
    let r = FieldElement::rational;
    let tx = if name == "cantor-third" { r(2, 3) } else { r(1, 2) };
    let one = FieldElement::one(alpha.field());
    validate_carpet(&RawCarpet { alpha: alpha.clone(), beta, maps: vec![(r(0, 1), r(0, 1)), (tx, &one - alpha)] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::modp::irreducibility_witness;

    #[test]
    fn all_presets_validate() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert_eq!(c.m(), 2, "{name}");
            let info = preset_info(name).unwrap();
            assert_eq!(info.pu, !c.projection_osc(), "{name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn preset_minpolys_are_irreducible() {
        for name in PRESET_NAMES {
            let info = preset_info(name).unwrap();
            assert!(irreducibility_witness(&info.minpoly).is_some(), "{name}");
        }
        for n in 4..=6 {
            assert!(irreducibility_witness(&salem_minpoly(n).unwrap()).is_some(), "salem {n}");
        }
        // the unfactored n = 5 polynomial has the root -1
        assert_eq!(irreducibility_witness(&[1, -1, -1, -1, -1, 1]), None);
    }

    #[test]
    fn beta_values() {
        let approx = |n: &str| preset_beta(n).unwrap().to_f64();
        assert!((approx("pu-golden") - 0.6180339887498949).abs() < 1e-15);
        assert!((approx("pu-tribonacci") - 0.5436890126920764).abs() < 1e-15);
        assert!((approx("pu-garsia-sqrt2") - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((approx("pu-salem-4") - 0.580691831).abs() < 1e-8);
    }

    #[test]
    fn alpha_override() {
        let c = preset_with_alpha("pu-garsia-sqrt2", &FieldElement::rational(1, 2)).unwrap();
        assert_eq!(c.alpha_f64(), 0.5);
        assert!(preset_with_alpha("pu-golden", &FieldElement::rational(3, 5)).is_err());
    }
}
