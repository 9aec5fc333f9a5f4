//! Quantities in config files: plain numbers in SI base units, or strings
//! with a unit suffix such as `"36.5kHz"` or `"100 us"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Number(f64),
    Text(String),
}

fn split(s: &str) -> (&str, &str) {
    let s = s.trim();
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        // an `e` followed by a digit or sign is an exponent, not a unit
        let exponent = matches!(c, 'e' | 'E') && chars.get(k + 1).is_some_and(|&(_, n)| n.is_ascii_digit() || n == '-' || n == '+');
        if c.is_alphabetic() && !exponent {
            return (s[..i].trim(), s[i..].trim());
        }
    }
    (s, "")
}

fn parse_with(s: &str, units: &[(&str, i32)], kind: &str) -> Result<f64, String> {
    let (num, unit) = split(s);
    let value: f64 = num.parse().map_err(|_| format!("`{s}` is not a {kind}"))?;
    let scale = units.iter().find(|(u, _)| *u == unit).map(|(_, f)| *f).ok_or_else(|| {
        let known: Vec<&str> = units.iter().map(|(u, _)| *u).filter(|u| !u.is_empty()).collect();
        format!("unknown {kind} unit `{unit}` in `{s}` (expected one of {})", known.join(", "))
    })?;
    // dividing by an exact power of ten keeps "100us" equal to 100e-6
    let v = if scale >= 0 { value * 10f64.powi(scale) } else { value / 10f64.powi(-scale) };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Unit suffixes with their power-of-ten scale.
const FREQ_UNITS: &[(&str, i32)] = &[("", 0), ("Hz", 0), ("kHz", 3), ("MHz", 6), ("GHz", 9)];
const TIME_UNITS: &[(&str, i32)] = &[("", 0), ("s", 0), ("ms", -3), ("us", -6), ("µs", -6), ("μs", -6), ("ns", -9)];

macro_rules! quantity {
    ($name:ident, $units:expr, $kind:literal, $suffix:literal) => {
        #[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(try_from = "Raw", into = "f64")]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<Raw> for $name {
            type Error = String;
            fn try_from(raw: Raw) -> Result<Self, String> {
                match raw {
                    Raw::Number(v) if v.is_finite() => Ok($name(v)),
                    Raw::Number(v) => Err(format!("{v} is not finite")),
                    Raw::Text(s) => s.parse(),
                }
            }
        }

        impl From<$name> for f64 {
            fn from(q: $name) -> f64 {
                q.0
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                parse_with(s, $units, $kind).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $suffix)
            }
        }
    };
}

quantity!(Hertz, FREQ_UNITS, "frequency", "Hz");
quantity!(Seconds, TIME_UNITS, "time", "s");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_table() {
        let f = |s: &str| s.parse::<Hertz>().map(|h| h.0);
        let t = |s: &str| s.parse::<Seconds>().map(|h| h.0);
        assert_eq!(f("36.5kHz"), Ok(36_500.0));
        assert_eq!(f("36.5 kHz"), Ok(36_500.0));
        assert_eq!(f("12.6528121GHz").unwrap(), 12.6528121e9);
        assert_eq!(f("144.4"), Ok(144.4));
        assert_eq!(f("1e3 Hz"), Ok(1000.0));
        assert_eq!(t("5.3ms"), Ok(5.3e-3));
        assert_eq!(t("20ms"), Ok(0.02));
        assert_eq!(t("100us"), Ok(100e-6));
        assert_eq!(t("100µs"), Ok(100e-6));
        assert_eq!(t("2.5e-3 s"), Ok(2.5e-3));
        assert!(f("3 parsecs").is_err());
        assert!(t("5 kHz").is_err());
        assert!(t("fast").is_err());
    }
}
