//! Scenario files: line-oriented `key=value` stanzas, one scenario per
//! stanza, separated by blank lines. `#` starts a comment. Values use the
//! same complex-literal grammar as parameter documents; `target` takes a
//! semicolon-separated complex triple.
//!
//! Recognized keys: `id`, `label`, `a`, `b`, `r`, `dt`, `x0`, `y0`, `z0`,
//! `steps`, `stride`, `expected`, `expected_alt`, `target`, `target_tol`,
//! `ensemble`, `expected_groups`, `real`, `basin_sensitive`,
//! `reference_only`, `known_mismatch`, `conv_tol`, `divergence_threshold`,
//! `note`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::map::apply_symmetry;
use crate::types::{
    parse_complex, parse_real, ComplexScalar, State3, SystemParams, DEFAULT_DIVERGENCE_THRESHOLD,
};

const KNOWN_KEYS: &[&str] = &[
    "id",
    "label",
    "a",
    "b",
    "r",
    "dt",
    "x0",
    "y0",
    "z0",
    "steps",
    "stride",
    "expected",
    "expected_alt",
    "target",
    "target_tol",
    "ensemble",
    "expected_groups",
    "real",
    "basin_sensitive",
    "reference_only",
    "known_mismatch",
    "conv_tol",
    "transient_min_windows",
    "divergence_threshold",
    "note",
];

pub const REGIME_TAGS: &[&str] = &[
    "converges_to",
    "periodic",
    "quasi_periodic",
    "transient_chaos",
    "chaotic",
    "divergent",
];

/// What the source tables claim for a scenario, normalized for scoring.
#[derive(Debug, Clone)]
pub struct Expected {
    /// Coarse regime tag.
    pub kind: String,
    /// Second acceptable tag (e.g. very-high-period rows may legitimately
    /// resolve to either `periodic` or `quasi_periodic`).
    pub alt_kind: Option<String>,
    pub target: Option<State3>,
    pub target_tol: f64,
    pub groups: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub label: String,
    pub params: SystemParams,
    pub initial: State3,
    pub steps: u64,
    pub record_stride: u64,
    pub expected: Option<Expected>,
    pub paper_note: Option<String>,
    /// Literature metadata only; never run, never scored.
    pub reference_only: bool,
    /// The source omits the initial value; a label mismatch downgrades to a
    /// warning.
    pub basin_sensitive: bool,
    /// Documented conflict between the source's label and what the map
    /// produces: the computed tag that is expected instead (or `target` for
    /// a convergence-target mismatch). Scored as a warning when it occurs.
    pub known_mismatch: Option<String>,
    /// Run the real-restricted map.
    pub real_restriction: bool,
    /// Run this many initial conditions and group terminal behaviors.
    pub ensemble: Option<usize>,
    pub convergence_tol: Option<f64>,
    /// Override for the sustained-positive-window requirement of the
    /// transient-chaos signature.
    pub transient_min_windows: Option<usize>,
    pub divergence_threshold: f64,
}

impl Scenario {
    /// Deterministic ensemble initial conditions: the scenario's own initial
    /// value, its mirror under the (x,y,z) -> (-x,-y,z) symmetry, then
    /// fixed pseudo-random points with components in (-0.7, 0.7).
    pub fn ensemble_initials(&self) -> Vec<State3> {
        let count = self.ensemble.unwrap_or(0);
        let mut out = Vec::with_capacity(count);
        if count >= 1 {
            out.push(self.initial);
        }
        if count >= 2 {
            out.push(apply_symmetry(&self.initial));
        }
        let mut k = 0u64;
        while out.len() < count {
            let mut comps = [0.0f64; 6];
            for (j, c) in comps.iter_mut().enumerate() {
                *c = (splitmix64(0x5EED + k * 6 + j as u64) as f64 / u64::MAX as f64) * 1.4 - 0.7;
            }
            out.push(State3::new(
                ComplexScalar::new(comps[0], comps[1]),
                ComplexScalar::new(comps[2], comps[3]),
                ComplexScalar::new(comps[4], comps[5]),
            ));
            k += 1;
        }
        out
    }
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn stanza_error(id: &str, reason: impl Into<String>) -> Error {
    Error::Suite {
        path: id.to_string(),
        reason: reason.into(),
    }
}

fn get_complex(map: &BTreeMap<String, String>, key: &str, id: &str) -> Result<ComplexScalar> {
    let text = map
        .get(key)
        .ok_or_else(|| stanza_error(id, format!("missing key `{key}`")))?;
    parse_complex(text)
        .ok_or_else(|| stanza_error(id, format!("bad complex literal for `{key}`: `{text}`")))
}

fn get_bool(map: &BTreeMap<String, String>, key: &str, id: &str) -> Result<bool> {
    match map.get(key).map(String::as_str) {
        None => Ok(false),
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        Some(other) => Err(stanza_error(id, format!("bad boolean for `{key}`: `{other}`"))),
    }
}

fn parse_state_triple(text: &str) -> Option<State3> {
    let mut parts = text.split(';');
    let x = parse_complex(parts.next()?)?;
    let y = parse_complex(parts.next()?)?;
    let z = parse_complex(parts.next()?)?;
    parts.next().is_none().then(|| State3::new(x, y, z))
}

fn parse_stanza(block: &str, index: usize) -> Result<Scenario> {
    let pairs = crate::types::parse_kv_document(block)?;
    let mut map = BTreeMap::new();
    for (k, v) in pairs {
        if !KNOWN_KEYS.contains(&k.as_str()) {
            return Err(Error::Suite {
                path: format!("stanza {index}"),
                reason: format!("unknown key `{k}`"),
            });
        }
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::Suite {
                path: format!("stanza {index}"),
                reason: format!("duplicate key `{k}`"),
            });
        }
    }
    let id = map
        .get("id")
        .cloned()
        .ok_or_else(|| stanza_error(&format!("stanza {index}"), "missing key `id`"))?;

    let reference_only = get_bool(&map, "reference_only", &id)?;

    let a = get_complex(&map, "a", &id)?;
    let b = get_complex(&map, "b", &id)?;
    let r = get_complex(&map, "r", &id)?;
    let dt = map
        .get("dt")
        .and_then(|t| parse_real(t))
        .ok_or_else(|| stanza_error(&id, "missing or bad `dt`"))?;
    let params = SystemParams::new(a, b, r, dt)
        .map_err(|e| stanza_error(&id, e.to_string()))?;

    let initial = if map.contains_key("x0") || !reference_only {
        State3::new(
            get_complex(&map, "x0", &id)?,
            get_complex(&map, "y0", &id)?,
            get_complex(&map, "z0", &id)?,
        )
    } else {
        State3::zero()
    };

    let steps: u64 = match map.get("steps") {
        Some(t) => t
            .parse()
            .map_err(|_| stanza_error(&id, format!("bad `steps`: `{t}`")))?,
        None if reference_only => 1,
        None => return Err(stanza_error(&id, "missing key `steps`")),
    };
    let record_stride: u64 = match map.get("stride") {
        Some(t) => t
            .parse()
            .map_err(|_| stanza_error(&id, format!("bad `stride`: `{t}`")))?,
        None => (steps / 10_000).max(1),
    };

    let expected = match map.get("expected") {
        Some(kind) => {
            if !REGIME_TAGS.contains(&kind.as_str()) {
                return Err(stanza_error(&id, format!("unknown expected kind `{kind}`")));
            }
            let alt_kind = match map.get("expected_alt") {
                Some(alt) => {
                    if !REGIME_TAGS.contains(&alt.as_str()) {
                        return Err(stanza_error(&id, format!("unknown expected_alt `{alt}`")));
                    }
                    Some(alt.clone())
                }
                None => None,
            };
            let target = match map.get("target") {
                Some(t) => Some(parse_state_triple(t).ok_or_else(|| {
                    stanza_error(&id, format!("bad `target` (want `x; y; z`): `{t}`"))
                })?),
                None => None,
            };
            let target_tol = match map.get("target_tol") {
                Some(t) => parse_real(t)
                    .ok_or_else(|| stanza_error(&id, format!("bad `target_tol`: `{t}`")))?,
                None => 1e-2,
            };
            let groups = match map.get("expected_groups") {
                Some(t) => Some(
                    t.parse()
                        .map_err(|_| stanza_error(&id, format!("bad `expected_groups`: `{t}`")))?,
                ),
                None => None,
            };
            Some(Expected {
                kind: kind.clone(),
                alt_kind,
                target,
                target_tol,
                groups,
            })
        }
        None => None,
    };

    let known_mismatch = map.get("known_mismatch").cloned();
    if let Some(km) = &known_mismatch {
        if km != "target" && !REGIME_TAGS.contains(&km.as_str()) {
            return Err(stanza_error(&id, format!("unknown known_mismatch `{km}`")));
        }
    }

    let ensemble = match map.get("ensemble") {
        Some(t) => {
            let n: usize = t
                .parse()
                .map_err(|_| stanza_error(&id, format!("bad `ensemble`: `{t}`")))?;
            if n < 2 {
                return Err(stanza_error(&id, "ensemble must be at least 2"));
            }
            Some(n)
        }
        None => None,
    };

    let convergence_tol = match map.get("conv_tol") {
        Some(t) => {
            Some(parse_real(t).ok_or_else(|| stanza_error(&id, format!("bad `conv_tol`: `{t}`")))?)
        }
        None => None,
    };
    let transient_min_windows = match map.get("transient_min_windows") {
        Some(t) => Some(
            t.parse()
                .map_err(|_| stanza_error(&id, format!("bad `transient_min_windows`: `{t}`")))?,
        ),
        None => None,
    };
    let divergence_threshold = match map.get("divergence_threshold") {
        Some(t) => parse_real(t)
            .ok_or_else(|| stanza_error(&id, format!("bad `divergence_threshold`: `{t}`")))?,
        None => DEFAULT_DIVERGENCE_THRESHOLD,
    };

    Ok(Scenario {
        label: map.get("label").cloned().unwrap_or_else(|| id.clone()),
        id,
        params,
        initial,
        steps,
        record_stride,
        expected,
        paper_note: map.get("note").cloned(),
        reference_only,
        basin_sensitive: get_bool(&map, "basin_sensitive", &map["id"])?,
        known_mismatch,
        real_restriction: get_bool(&map, "real", &map["id"])?,
        ensemble,
        convergence_tol,
        transient_min_windows,
        divergence_threshold,
    })
}

/// Parses a whole suite. Scenario ids must be unique.
pub fn parse_suite(text: &str) -> Result<Vec<Scenario>> {
    let mut scenarios = Vec::new();
    for (index, block) in text.split("\n\n").enumerate() {
        let meaningful = block
            .lines()
            .any(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        if !meaningful {
            continue;
        }
        scenarios.push(parse_stanza(block, index)?);
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &scenarios {
        if !seen.insert(s.id.clone()) {
            return Err(Error::Suite {
                path: s.id.clone(),
                reason: "duplicate scenario id".into(),
            });
        }
    }
    Ok(scenarios)
}

pub fn load_suite(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Suite {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_suite(&text).map_err(|e| match e {
        Error::Suite { path: inner, reason } => Error::Suite {
            path: format!("{}: {inner}", path.display()),
            reason,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    const SUITE: &str = "\
# demo suite
id=row1
label=first row
a=10, b=8/3, r=10, dt=0.0005
x0=0.1+0.2i, y0=0.3+0.4i, z0=1+2i
steps=2000000
expected=converges_to
target=4.899; 4.899; 9
note=stated sink

id=row2
a=10, b=8/3, r=-1-5i, dt=0.0005
x0=0.1, y0=0.3, z0=1
steps=100000
stride=10
expected=divergent
basin_sensitive=true

id=ref1
reference_only=true
a=10, b=8/3, r=2, dt=0.0005
label=literature column
note=fixed point per cited study
";

    #[test]
    fn parses_suite_with_three_stanzas() {
        let s = parse_suite(SUITE).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].id, "row1");
        assert_eq!(s[0].steps, 2_000_000);
        assert_eq!(s[0].record_stride, 200);
        let e = s[0].expected.as_ref().unwrap();
        assert_eq!(e.kind, "converges_to");
        let t = e.target.unwrap();
        assert_eq!(t.x, Complex64::new(4.899, 0.0));
        assert_eq!(e.target_tol, 1e-2);

        assert_eq!(s[1].record_stride, 10);
        assert!(s[1].basin_sensitive);
        assert!(s[2].reference_only);
        assert_eq!(s[2].steps, 1);
    }

    #[test]
    fn rejects_unknown_keys_and_duplicate_ids() {
        assert!(parse_suite("id=x\na=1, b=1, r=1, dt=0.1\nx0=0, y0=0, z0=0\nsteps=10\nbogus=1")
            .is_err());
        let dup = "id=x\na=1, b=1, r=1, dt=0.1\nx0=0, y0=0, z0=0\nsteps=10\n\nid=x\na=1, b=1, r=1, dt=0.1\nx0=0, y0=0, z0=0\nsteps=10";
        assert!(parse_suite(dup).is_err());
    }

    #[test]
    fn ensemble_initials_are_deterministic_and_straddle_symmetry() {
        let text = "id=e\na=1, b=1, r=1, dt=0.1\nx0=0.2+0.1i, y0=-0.1, z0=0.3\nsteps=100\nensemble=5";
        let s = &parse_suite(text).unwrap()[0];
        let ics = s.ensemble_initials();
        assert_eq!(ics.len(), 5);
        assert_eq!(ics[0], s.initial);
        assert_eq!(ics[1], crate::map::apply_symmetry(&s.initial));
        assert_eq!(ics, s.ensemble_initials());
        for ic in &ics[2..] {
            assert!(ic.max_abs_component() < 0.7);
        }
    }
}
