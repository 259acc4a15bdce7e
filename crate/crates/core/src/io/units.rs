//! Unit-tagged quantities such as "20 cm" or "6.9458 GHz", converted to SI.

use std::f64::consts::PI;

use crate::constants::{ATOMIC_DIPOLE, ATOMIC_MASS_UNIT, DEBYE, TWO_PI};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    /// Stored in rad/s; Hz inputs are multiplied by 2π.
    AngularFrequency,
    /// Stored in Hz.
    Frequency,
    Power,
    FieldStrength,
    Temperature,
    /// Stored in rad.
    Angle,
    InverseLength,
    /// dχ/dΩ, stored in m⁻¹·(rad/s)⁻¹.
    ChiSlope,
    Dipole,
    Mass,
    Density,
}

impl Dimension {
    /// Canonical SI unit written by the config dump.
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Time => "s",
            Dimension::AngularFrequency => "rad/s",
            Dimension::Frequency => "Hz",
            Dimension::Power => "W",
            Dimension::FieldStrength => "V/m",
            Dimension::Temperature => "K",
            Dimension::Angle => "rad",
            Dimension::InverseLength => "1/m",
            Dimension::ChiSlope => "1/m/(rad/s)",
            Dimension::Dipole => "C*m",
            Dimension::Mass => "kg",
            Dimension::Density => "1/m^3",
        }
    }
}

/// Decimal exponent of an SI prefix.
fn prefix(p: &str) -> Option<i32> {
    Some(match p {
        "" => 0,
        "p" => -12,
        "n" => -9,
        "u" | "µ" | "μ" => -6,
        "m" => -3,
        "c" => -2,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        "T" => 12,
        _ => return None,
    })
}

/// Conversion from a unit to SI: a decimal exponent applied exactly, then a base factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale {
    pub exponent: i32,
    pub factor: f64,
}

impl UnitScale {
    fn base(factor: f64) -> Self {
        UnitScale {
            exponent: 0,
            factor,
        }
    }

    /// Combined multiplier, subject to one rounding of 10^exponent.
    pub fn multiplier(self) -> f64 {
        10f64.powi(self.exponent) * self.factor
    }
}

/// Splits `unit` into an SI prefix and one of `bases`.
fn prefixed(unit: &str, bases: &[(&str, f64)]) -> Option<UnitScale> {
    for &(base, factor) in bases {
        if unit == base {
            return Some(UnitScale::base(factor));
        }
    }
    for &(base, factor) in bases {
        if let Some(p) = unit.strip_suffix(base) {
            if let Some(exponent) = prefix(p) {
                return Some(UnitScale { exponent, factor });
            }
        }
    }
    None
}

/// Scale converting one `unit` into the SI storage unit of `dim`.
pub fn unit_scale(unit: &str, dim: Dimension) -> Option<UnitScale> {
    let plain = |f: Option<f64>| f.map(UnitScale::base);
    match dim {
        Dimension::Length => prefixed(unit, &[("m", 1.0)]),
        Dimension::Time => prefixed(unit, &[("s", 1.0)]),
        Dimension::AngularFrequency => prefixed(unit, &[("rad/s", 1.0), ("Hz", TWO_PI)]),
        Dimension::Frequency => prefixed(unit, &[("Hz", 1.0)]),
        Dimension::Power => prefixed(unit, &[("W", 1.0)]),
        Dimension::FieldStrength => prefixed(unit, &[("V/m", 1.0)]),
        Dimension::Temperature => plain((unit == "K").then_some(1.0)),
        Dimension::Angle => plain(match unit {
            "rad" => Some(1.0),
            "deg" | "°" => Some(PI / 180.0),
            _ => None,
        }),
        Dimension::InverseLength => plain(match unit {
            "1/m" | "m^-1" => Some(1.0),
            "1/cm" | "cm^-1" => Some(1e2),
            "1/mm" | "mm^-1" => Some(1e3),
            _ => None,
        }),
        Dimension::ChiSlope => plain(match unit {
            "1/m/(rad/s)" | "m^-1/(rad/s)" => Some(1.0),
            "1/m/Hz" | "m^-1/Hz" => Some(1.0 / TWO_PI),
            _ => None,
        }),
        Dimension::Dipole => plain(match unit {
            "C*m" | "C·m" => Some(1.0),
            "e*a0" | "e·a0" => Some(ATOMIC_DIPOLE),
            "D" => Some(DEBYE),
            _ => None,
        }),
        Dimension::Mass => plain(match unit {
            "kg" => Some(1.0),
            "u" | "amu" => Some(ATOMIC_MASS_UNIT),
            _ => None,
        }),
        Dimension::Density => plain(match unit {
            "1/m^3" | "m^-3" => Some(1.0),
            "1/cm^3" | "cm^-3" => Some(1e6),
            _ => None,
        }),
    }
}

/// Parses "<number> <unit>" at config path `field` into SI.
pub fn parse_quantity(field: &str, text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let (number, unit) = match text.split_once(char::is_whitespace) {
        Some((n, u)) => (n, u.trim()),
        None => {
            return Err(Error::config(
                field,
                format!(
                    "missing unit in \"{text}\"; expected a value such as \"1.0 {}\"",
                    dim.si_unit()
                ),
            ))
        }
    };
    let scale = unit_scale(unit, dim).ok_or_else(|| {
        Error::config(
            field,
            format!(
                "unit \"{unit}\" does not match the expected dimension ({})",
                dim.si_unit()
            ),
        )
    })?;
    let value = parse_scaled(number, scale.exponent)
        .ok_or_else(|| Error::config(field, format!("\"{number}\" is not a number")))?;
    let value = value * scale.factor;
    if !value.is_finite() {
        return Err(Error::config(field, "value must be finite"));
    }
    Ok(value)
}

/// Parses a decimal literal times 10^shift with a single rounding, so "120 uW" is exactly 120e-6.
fn parse_scaled(number: &str, shift: i32) -> Option<f64> {
    if shift == 0 || number.contains(['i', 'I', 'n', 'N']) {
        return number.parse().ok();
    }
    let (mantissa, exponent) = match number.find(['e', 'E']) {
        Some(i) => (&number[..i], number[i + 1..].parse::<i32>().ok()?),
        None => (number, 0),
    };
    mantissa.parse::<f64>().ok()?;
    format!("{mantissa}e{}", exponent.checked_add(shift)?)
        .parse()
        .ok()
}

/// SI value with its canonical unit, formatted to round-trip exactly.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.si_unit())
}
