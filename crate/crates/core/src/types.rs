//! Shared numeric and configuration types: system parameters, states, orbit
//! configuration, and the complex-literal grammar used by parameter documents,
//! scenario files, and CLI flags.
//!
//! Complex literals are written `re+imi` / `re-imi` (`0.5497+0.9172i`), pure
//! reals as plain decimals, pure imaginaries as `9i` / `-4i`. Fractions such
//! as `8/3` are accepted for real values. The sign of a nonzero imaginary
//! part is mandatory.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Complex double-precision scalar; the atom of all state and parameters.
pub type ComplexScalar = Complex64;

/// The parameter tuple of the map: `a` (Prandtl number), `b`, `r` (Rayleigh
/// number) — all complex — plus the positive real time step `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub a: ComplexScalar,
    pub b: ComplexScalar,
    pub r: ComplexScalar,
    pub dt: f64,
}

impl SystemParams {
    pub fn new(a: ComplexScalar, b: ComplexScalar, r: ComplexScalar, dt: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("r", r)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive and finite, got {dt}"
            )));
        }
        Ok(Self { a, b, r, dt })
    }

    /// True when every parameter is purely real (used by the real-restricted map).
    pub fn is_real(&self) -> bool {
        self.a.im == 0.0 && self.b.im == 0.0 && self.r.im == 0.0
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a={}, b={}, r={}, dt={}",
            format_complex(self.a),
            format_complex(self.b),
            format_complex(self.r),
            self.dt
        )
    }
}

/// One point (x, y, z) in complex 3-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State3 {
    pub x: ComplexScalar,
    pub y: ComplexScalar,
    pub z: ComplexScalar,
}

impl State3 {
    pub const fn new(x: ComplexScalar, y: ComplexScalar, z: ComplexScalar) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn from_reals(x: f64, y: f64, z: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0), Complex64::new(z, 0.0))
    }

    /// Largest absolute value among the six real components (max-norm).
    pub fn max_abs_component(&self) -> f64 {
        let parts = [
            self.x.re, self.x.im, self.y.re, self.y.im, self.z.re, self.z.im,
        ];
        parts.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Max-norm of the componentwise difference.
    pub fn max_abs_diff(&self, other: &State3) -> f64 {
        State3::new(self.x - other.x, self.y - other.y, self.z - other.z).max_abs_component()
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// True when all imaginary parts are exactly zero.
    pub fn is_real(&self) -> bool {
        self.x.im == 0.0 && self.y.im == 0.0 && self.z.im == 0.0
    }
}

impl fmt::Display for State3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            format_complex(self.x),
            format_complex(self.y),
            format_complex(self.z)
        )
    }
}

/// How an orbit run is driven: where it starts, how long it runs, what gets
/// recorded, and when it counts as divergent.
#[derive(Debug, Clone, Copy)]
pub struct OrbitConfig {
    pub initial: State3,
    pub steps: u64,
    pub record_stride: u64,
    pub divergence_threshold: f64,
}

/// Default cap on the max absolute component before an orbit is flagged
/// divergent. Separates gradually divergent runs from bounded chaos without
/// clipping any bounded regime observed in the shipped suites.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

impl OrbitConfig {
    pub fn new(initial: State3, steps: u64, record_stride: u64) -> Result<Self> {
        Self::with_threshold(initial, steps, record_stride, DEFAULT_DIVERGENCE_THRESHOLD)
    }

    pub fn with_threshold(
        initial: State3,
        steps: u64,
        record_stride: u64,
        divergence_threshold: f64,
    ) -> Result<Self> {
        if !initial.is_finite() {
            return Err(Error::InvalidConfig("initial state must be finite".into()));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive".into()));
        }
        if record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be positive".into()));
        }
        if record_stride > steps {
            return Err(Error::InvalidConfig(format!(
                "record_stride ({record_stride}) must not exceed steps ({steps})"
            )));
        }
        if !(divergence_threshold > 0.0) || !divergence_threshold.is_finite() {
            return Err(Error::InvalidConfig(
                "divergence_threshold must be positive and finite".into(),
            ));
        }
        Ok(Self {
            initial,
            steps,
            record_stride,
            divergence_threshold,
        })
    }
}

/// Formats a complex scalar in the literal grammar. `im == 0` collapses to the
/// plain real form; a negative-zero imaginary part keeps its sign so that
/// formatting round-trips bit-identically.
pub fn format_complex(v: ComplexScalar) -> String {
    if v.im == 0.0 && v.im.is_sign_positive() {
        return format!("{}", v.re);
    }
    let (sign, mag) = if v.im.is_sign_negative() {
        ('-', -v.im)
    } else {
        ('+', v.im)
    };
    format!("{}{}{}i", v.re, sign, mag)
}

fn parse_f64(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses a real literal: a plain decimal or a fraction `n/d`.
pub fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_f64(num)?;
        let d = parse_f64(den)?;
        if d == 0.0 {
            return None;
        }
        let v = n / d;
        return v.is_finite().then_some(v);
    }
    parse_f64(t)
}

/// Parses a complex literal: `re`, `imi`, `re+imi`, or `re-imi`; fractions
/// are accepted for the pure-real form.
pub fn parse_complex(s: &str) -> Option<ComplexScalar> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    let body = match t.strip_suffix(['i', 'I']) {
        Some(b) => b,
        None => return parse_real(t).map(|re| Complex64::new(re, 0.0)),
    };
    // Split at the sign of the imaginary part: the last '+'/'-' that is
    // neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for idx in (1..bytes.len()).rev() {
        let c = bytes[idx];
        if (c == b'+' || c == b'-') && bytes[idx - 1] != b'e' && bytes[idx - 1] != b'E' {
            split = Some(idx);
            break;
        }
    }
    match split {
        Some(idx) => {
            let re = parse_f64(&body[..idx])?;
            let sign = if bytes[idx] == b'-' { -1.0 } else { 1.0 };
            let mag_text = &body[idx + 1..];
            let mag = if mag_text.is_empty() {
                1.0
            } else {
                parse_f64(mag_text)?
            };
            Some(Complex64::new(re, sign * mag))
        }
        None => {
            // Pure imaginary: "9i", "-4i", "+i", "i".
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => parse_f64(body)?,
            };
            Some(Complex64::new(0.0, im))
        }
    }
}

/// Splits a key-value document into ordered (key, value) pairs. Entries are
/// separated by newlines or commas; `#` starts a comment line.
pub fn parse_kv_document(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for piece in line.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let (k, v) = piece.split_once('=').ok_or_else(|| Error::InvalidValue {
                key: piece.to_string(),
                text: piece.to_string(),
                reason: "expected key=value".into(),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(pairs)
}

fn kv_map(pairs: Vec<(String, String)>) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, v) in pairs {
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::DuplicateKey(k));
        }
    }
    Ok(map)
}

pub(crate) fn complex_value(map: &BTreeMap<String, String>, key: &str) -> Result<ComplexScalar> {
    let text = map
        .get(key)
        .ok_or_else(|| Error::MissingKey(key.to_string()))?;
    parse_complex(text).ok_or_else(|| Error::InvalidValue {
        key: key.to_string(),
        text: text.clone(),
        reason: "malformed complex literal".into(),
    })
}

pub(crate) fn real_value(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let text = map
        .get(key)
        .ok_or_else(|| Error::MissingKey(key.to_string()))?;
    parse_real(text).ok_or_else(|| Error::InvalidValue {
        key: key.to_string(),
        text: text.clone(),
        reason: "malformed real literal".into(),
    })
}

/// Parses a `a=…, b=…, r=…, dt=…` document into validated parameters.
pub fn parse_params(text: &str) -> Result<SystemParams> {
    let map = kv_map(parse_kv_document(text)?)?;
    for key in map.keys() {
        if !matches!(key.as_str(), "a" | "b" | "r" | "dt") {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    let a = complex_value(&map, "a")?;
    let b = complex_value(&map, "b")?;
    let r = complex_value(&map, "r")?;
    let dt = real_value(&map, "dt")?;
    if !(dt > 0.0) {
        return Err(Error::InvalidValue {
            key: "dt".into(),
            text: map["dt"].clone(),
            reason: "dt must be positive".into(),
        });
    }
    SystemParams::new(a, b, r, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_paper_parameter_documents() {
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        assert_eq!(p.a, Complex64::new(10.0, 0.0));
        assert_eq!(p.b, Complex64::new(8.0 / 3.0, 0.0));
        assert_eq!(p.r, Complex64::new(5.0, 0.0));
        assert_eq!(p.dt, 0.005);

        let p = parse_params("a=10, b=8/3, r=4+9i, dt=0.0005").unwrap();
        assert_eq!(p.r, Complex64::new(4.0, 9.0));
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let err = parse_params("a=1, b=1, r=1, dt=-0.1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dt"), "unexpected error: {msg}");
    }

    #[test]
    fn rejects_missing_and_unknown_keys() {
        assert!(matches!(
            parse_params("a=1, b=1, dt=0.1"),
            Err(Error::MissingKey(k)) if k == "r"
        ));
        assert!(matches!(
            parse_params("a=1, b=1, r=1, dt=0.1, q=2"),
            Err(Error::UnknownKey(k)) if k == "q"
        ));
    }

    #[test]
    fn complex_literal_forms() {
        assert_eq!(parse_complex("0.5497+0.9172i").unwrap(), Complex64::new(0.5497, 0.9172));
        assert_eq!(parse_complex("4-9i").unwrap(), Complex64::new(4.0, -9.0));
        assert_eq!(parse_complex("-4i").unwrap(), Complex64::new(0.0, -4.0));
        assert_eq!(parse_complex("9i").unwrap(), Complex64::new(0.0, 9.0));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("-1-5i").unwrap(), Complex64::new(-1.0, -5.0));
        assert_eq!(parse_complex("1e-3+2e-4i").unwrap(), Complex64::new(1e-3, 2e-4));
        assert_eq!(parse_complex("1e-5i").unwrap(), Complex64::new(0.0, 1e-5));
        assert_eq!(parse_complex("-99.554+9i").unwrap(), Complex64::new(-99.554, 9.0));
        assert!(parse_complex("4+9").is_none());
        assert!(parse_complex("abc").is_none());
        assert!(parse_complex("").is_none());
        assert!(parse_complex("1/0").is_none());
    }

    #[test]
    fn fraction_matches_decimal_expansion() {
        let frac = parse_real("8/3").unwrap();
        let decimal: f64 = "2.6666666666666665".parse().unwrap();
        assert_eq!(frac, decimal);
    }

    #[test]
    fn orbit_config_validation() {
        let s = State3::zero();
        assert!(OrbitConfig::new(s, 10, 11).is_err());
        assert!(OrbitConfig::new(s, 0, 1).is_err());
        assert!(OrbitConfig::new(s, 10, 0).is_err());
        assert!(OrbitConfig::with_threshold(s, 10, 1, -1.0).is_err());
        assert!(OrbitConfig::new(s, 10, 10).is_ok());
    }

    proptest! {
        #[test]
        fn params_format_parse_round_trip(
            are in -1e6_f64..1e6, aim in -1e6_f64..1e6,
            bre in -1e6_f64..1e6, bim in -1e6_f64..1e6,
            rre in -1e6_f64..1e6, rim in -1e6_f64..1e6,
            dt in 1e-9_f64..1e3,
        ) {
            let p = SystemParams::new(
                Complex64::new(are, aim),
                Complex64::new(bre, bim),
                Complex64::new(rre, rim),
                dt,
            ).unwrap();
            let q = parse_params(&p.to_string()).unwrap();
            prop_assert_eq!(p.a.re.to_bits(), q.a.re.to_bits());
            prop_assert_eq!(p.a.im.to_bits(), q.a.im.to_bits());
            prop_assert_eq!(p.b.re.to_bits(), q.b.re.to_bits());
            prop_assert_eq!(p.b.im.to_bits(), q.b.im.to_bits());
            prop_assert_eq!(p.r.re.to_bits(), q.r.re.to_bits());
            prop_assert_eq!(p.r.im.to_bits(), q.r.im.to_bits());
            prop_assert_eq!(p.dt.to_bits(), q.dt.to_bits());
        }

        #[test]
        fn complex_format_parse_round_trip(re in proptest::num::f64::NORMAL, im in proptest::num::f64::NORMAL) {
            let v = Complex64::new(re, im);
            let parsed = parse_complex(&format_complex(v)).unwrap();
            prop_assert_eq!(v.re.to_bits(), parsed.re.to_bits());
            prop_assert_eq!(v.im.to_bits(), parsed.im.to_bits());
        }
    }
}
