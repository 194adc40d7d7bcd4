//! Frequencies and durations as written in config files.
//!
//! A frequency is either a plain number of cyclic Hz or a string such as
//! `"2pi*20MHz"`, `"-2pi*4 MHz"`, `"70kHz"` or `"1.2e8 rad/s"`. Values are
//! held in rad/s. A duration is a number of seconds or a string like `"6ms"`.

use std::f64::consts::TAU;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency(pub f64);

impl Frequency {
    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    pub fn from_hz(hz: f64) -> Self {
        Self(TAU * hz)
    }

    pub fn hz(self) -> f64 {
        self.0 / TAU
    }
}

fn split_number(s: &str) -> (&str, &str) {
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && s[i + 1..]
                        .starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')))
        })
        .map_or(s.len(), |(i, _)| i);
    (&s[..end], s[end..].trim())
}

/// Reads `num × 10^exp` as one decimal literal, so "2.5us" is exactly 2.5e-6.
fn scaled(num: &str, exp: i32) -> Option<f64> {
    if num.contains(['e', 'E']) {
        let v: f64 = num.parse().ok()?;
        Some(if exp < 0 {
            v / 10f64.powi(-exp)
        } else {
            v * 10f64.powi(exp)
        })
    } else {
        format!("{num}e{exp}").parse().ok()
    }
}

pub fn parse_frequency(text: &str) -> Result<Frequency, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, rest) = match compact.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, compact.strip_prefix('+').unwrap_or(&compact)),
    };
    let (angular, rest) = match rest
        .strip_prefix("2pi*")
        .or_else(|| rest.strip_prefix("2π*"))
    {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let (num, unit) = split_number(rest);
    let exp = match unit {
        "Hz" => 0,
        "kHz" => 3,
        "MHz" => 6,
        "GHz" => 9,
        "rad/s" if !angular => 0,
        _ => {
            return Err(format!(
                "unknown frequency unit {unit:?} in {text:?} (use Hz, kHz, MHz, GHz or rad/s)"
            ))
        }
    };
    let value =
        scaled(num, exp).ok_or_else(|| format!("cannot read a number in frequency {text:?}"))?;
    if unit == "rad/s" {
        return Ok(Frequency(sign * value));
    }
    // "2pi*X Hz" and "X Hz" both denote the cyclic frequency X.
    Ok(Frequency::from_hz(sign * value))
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let hz = self.hz();
        if TAU * hz == self.0 {
            s.serialize_str(&format!("2pi*{hz:?}Hz"))
        } else {
            s.serialize_str(&format!("{:?}rad/s", self.0))
        }
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Frequency;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a frequency in Hz or a string like \"2pi*20MHz\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Frequency, E> {
                Ok(Frequency::from_hz(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Frequency, E> {
                Ok(Frequency::from_hz(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Frequency, E> {
                Ok(Frequency::from_hz(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Frequency, E> {
                parse_frequency(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Physical time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Duration(pub f64);

pub fn parse_duration(text: &str) -> Result<Duration, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (num, unit) = split_number(&compact);
    let exp = match unit {
        "s" => 0,
        "ms" => -3,
        "us" | "µs" => -6,
        "ns" => -9,
        _ => {
            return Err(format!(
                "unknown time unit {unit:?} in {text:?} (use s, ms, us, ns)"
            ))
        }
    };
    scaled(num, exp)
        .map(Duration)
        .ok_or_else(|| format!("cannot read a number in duration {text:?}"))
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Duration;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a duration in seconds or a string like \"6ms\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Duration, E> {
                Ok(Duration(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Duration, E> {
                Ok(Duration(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Duration, E> {
                Ok(Duration(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Duration, E> {
                parse_duration(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}
