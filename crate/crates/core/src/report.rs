//! Serialization helpers shared by all reports.
//!
//! Spectral values are written as decimal strings with 17 significant digits
//! so that they survive a JSON round trip bit-for-bit.

use serde::ser::{SerializeSeq, SerializeStruct, SerializeTuple};
use serde::{Serialize, Serializer};

/// Version of every JSON document emitted by the library and the CLI.
pub const SCHEMA_VERSION: &str = "1.0";

/// 17 significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

pub fn real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_real(*x))
}

pub fn real_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&format_real(*v)),
        None => s.serialize_none(),
    }
}

pub fn real_pair<S: Serializer>(x: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&format_real(x.0))?;
    t.serialize_element(&format_real(x.1))?;
    t.end()
}

pub fn real_pairs<S: Serializer>(xs: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&[format_real(x.0), format_real(x.1)])?;
    }
    seq.end()
}

pub fn real_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&format_real(*x))?;
    }
    seq.end()
}

/// A closed interval known to contain exactly one point of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Self {
        Enclosure { lo: lo.min(hi), hi: lo.max(hi) }
    }

    pub fn point(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    pub fn value(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn negated(&self) -> Self {
        Enclosure { lo: -self.hi, hi: -self.lo }
    }

    /// Whether the two enclosures are within `slack` of each other.
    pub fn touches(&self, other: &Enclosure, slack: f64) -> bool {
        self.lo <= other.hi + slack && other.lo <= self.hi + slack
    }
}

impl Serialize for Enclosure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Enclosure", 4)?;
        st.serialize_field("value", &format_real(self.value()))?;
        st.serialize_field("lo", &format_real(self.lo))?;
        st.serialize_field("hi", &format_real(self.hi))?;
        st.serialize_field("radius", &format_real(self.radius()))?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 5.000000000000001, -8.0e-300, 1.7976931348623157e308, 0.0] {
            let s = format_real(x);
            assert_eq!(parse_real(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert!(parse_real("nan").unwrap().is_nan());
    }

    #[test]
    fn enclosure_json() {
        let e = Enclosure::new(5.0, 5.0 + 1e-12);
        let v = serde_json::to_value(e).unwrap();
        assert_eq!(parse_real(v["lo"].as_str().unwrap()), Some(5.0));
        assert!(e.contains(5.0) && !e.contains(5.1));
        assert!(e.touches(&Enclosure::point(5.0 + 2e-12), 1e-12));
    }
}
