//! Maps an orbit (plus optional Lyapunov evidence) to a regime label, and
//! detects coexisting attractors across ensembles of initial conditions.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::{LyapunovEstimate, SignVerdict, SIGN_THRESHOLD};
use crate::map::{iterate, step, Orbit, Termination};
use crate::types::{OrbitConfig, State3, SystemParams};

/// The classifier's verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeKind {
    ConvergesTo(State3),
    /// Period in steps (detected on the full-resolution tail).
    Periodic(u64),
    QuasiPeriodic,
    TransientChaos,
    Chaotic,
    Divergent(u64),
}

impl RegimeKind {
    pub fn tag(&self) -> &'static str {
        match self {
            RegimeKind::ConvergesTo(_) => "converges_to",
            RegimeKind::Periodic(_) => "periodic",
            RegimeKind::QuasiPeriodic => "quasi_periodic",
            RegimeKind::TransientChaos => "transient_chaos",
            RegimeKind::Chaotic => "chaotic",
            RegimeKind::Divergent(_) => "divergent",
        }
    }
}

/// Numbers backing the verdict.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Evidence {
    /// Max deviation from the final state over the tail window.
    pub tail_deviation: Option<f64>,
    /// Map residual |step(final) - final| of the final state.
    pub final_residual: Option<f64>,
    pub detected_period: Option<u64>,
    pub largest_exponent: Option<f64>,
    pub exponent_verdict: Option<SignVerdict>,
    /// (start step, window count) of the longest sustained positive run in
    /// the finite-time series.
    pub positive_run: Option<(u64, usize)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RegimeLabel {
    pub kind: RegimeKind,
    pub evidence: Evidence,
}

/// Tolerances and windows of the decision cascade. Defaults reproduce the
/// shipped suites; every field is overridable for sensitivity studies.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierConfig {
    /// Relative tail-convergence tolerance.
    pub convergence_tol: f64,
    /// Relative recurrence tolerance for period detection.
    pub recurrence_tol: f64,
    /// Absolute grouping tolerance for sinks in ensembles.
    pub sink_group_tol: f64,
    /// Cell edge length per real axis for attractor fingerprints.
    pub cell_size: f64,
    /// Largest period, in recorded tail samples, that detection will scan.
    pub p_max: usize,
    /// Minimum recorded samples classify requires.
    pub min_recorded_samples: usize,
    /// Fraction of the run treated as the convergence tail.
    pub tail_fraction: f64,
    /// Consecutive positive finite-time windows required for a transient
    /// chaos signature. Separates a long chaotic phase from the brief
    /// escape every orbit makes when it leaves an unstable equilibrium.
    pub min_positive_windows: usize,
    /// Full-resolution tail samples fingerprints are built from.
    pub fingerprint_window: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            convergence_tol: 1e-6,
            recurrence_tol: 1e-6,
            sink_group_tol: 1e-4,
            cell_size: 0.5,
            p_max: 50_000,
            min_recorded_samples: 10_000,
            tail_fraction: 0.10,
            min_positive_windows: 3,
            fingerprint_window: 50_000,
        }
    }
}

/// Decision cascade. Divergence wins; then a transient-chaos signature
/// (sustained positive finite-time windows that die out, with a convergent or
/// periodic tail) takes precedence over plain convergence; then convergence,
/// periodicity, a positive largest exponent, and finally the quasi-periodic
/// residual class.
pub fn classify(
    orbit: &Orbit,
    lyap: Option<&LyapunovEstimate>,
    cfg: &ClassifierConfig,
) -> Result<RegimeLabel> {
    if let Termination::Diverged(k) = orbit.terminated_by {
        return Ok(RegimeLabel {
            kind: RegimeKind::Divergent(k),
            evidence: Evidence {
                notes: vec![format!("component exceeded threshold at step {k}")],
                ..Evidence::default()
            },
        });
    }
    if orbit.samples.len() < cfg.min_recorded_samples {
        return Err(Error::InsufficientData {
            got: orbit.samples.len(),
            need: cfg.min_recorded_samples,
        });
    }

    let final_state = orbit.final_state;
    let conv_tol = cfg.convergence_tol * (1.0 + final_state.max_abs_component());
    let tail_start_step =
        orbit.final_step - (orbit.final_step as f64 * cfg.tail_fraction) as u64;
    let tail_deviation = orbit
        .samples
        .iter()
        .filter(|(k, _)| *k >= tail_start_step)
        .map(|(_, s)| s.max_abs_diff(&final_state))
        .fold(0.0_f64, f64::max);
    let converged = tail_deviation < conv_tol;

    let p_max = cfg.p_max.min(orbit.tail.len() / 3);
    let period = detect_period_with(&orbit.tail, p_max, cfg.recurrence_tol);

    let mut evidence = Evidence {
        tail_deviation: Some(tail_deviation),
        final_residual: Some(step(&orbit.params, &final_state).max_abs_diff(&final_state)),
        detected_period: period,
        largest_exponent: lyap.map(|l| l.largest),
        exponent_verdict: lyap.map(|l| l.verdict),
        positive_run: None,
        notes: Vec::new(),
    };

    if let Some(l) = lyap {
        let signature = transient_signature(&l.finite_time_series, cfg.min_positive_windows);
        evidence.positive_run = signature;
        if signature.is_some() && (converged || period.is_some()) {
            evidence
                .notes
                .push("positive-then-negative finite-time signature with settling tail".into());
            return Ok(RegimeLabel {
                kind: RegimeKind::TransientChaos,
                evidence,
            });
        }
    }

    if converged {
        return Ok(RegimeLabel {
            kind: RegimeKind::ConvergesTo(final_state),
            evidence,
        });
    }

    if let Some(p) = period {
        if p > 1 {
            return Ok(RegimeLabel {
                kind: RegimeKind::Periodic(p),
                evidence,
            });
        }
        // A period-1 recurrence on a non-converged tail is a slow drift;
        // fall through to the residual classes.
        evidence
            .notes
            .push("period-1 recurrence without tail convergence; treated as drift".into());
    }

    match lyap.map(|l| l.verdict) {
        Some(SignVerdict::Positive) => Ok(RegimeLabel {
            kind: RegimeKind::Chaotic,
            evidence,
        }),
        Some(SignVerdict::Negative) => {
            evidence
                .notes
                .push("negative largest exponent on a non-converged tail (slow contraction)".into());
            Ok(RegimeLabel {
                kind: RegimeKind::QuasiPeriodic,
                evidence,
            })
        }
        Some(SignVerdict::Neutral) => Ok(RegimeLabel {
            kind: RegimeKind::QuasiPeriodic,
            evidence,
        }),
        None => {
            evidence
                .notes
                .push("no exponent evidence supplied; bounded non-convergent orbit".into());
            Ok(RegimeLabel {
                kind: RegimeKind::QuasiPeriodic,
                evidence,
            })
        }
    }
}

/// Longest run of consecutive finite-time windows above the positive
/// threshold, provided the run ends before the final quarter and the final
/// quarter is itself negative on average. Returns (start step, run length).
fn transient_signature(
    series: &[(u64, f64)],
    min_positive_windows: usize,
) -> Option<(u64, usize)> {
    if series.len() < 8 {
        return None;
    }
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for (i, (_, v)) in series.iter().enumerate() {
        if *v > SIGN_THRESHOLD {
            run_start.get_or_insert(i);
        } else if let Some(s) = run_start.take() {
            let len = i - s;
            if best.map_or(true, |(_, bl)| len > bl) {
                best = Some((s, len));
            }
        }
    }
    if let Some(s) = run_start {
        let len = series.len() - s;
        if best.map_or(true, |(_, bl)| len > bl) {
            best = Some((s, len));
        }
    }
    let (start, len) = best?;
    if len < min_positive_windows {
        return None;
    }
    // The positive phase must die out: it ends before the last quarter and
    // the last quarter no longer reads positive. (A tail with a neutral
    // direction, e.g. b = 0, settles to ~0 rather than clearly negative.)
    let q = series.len() - series.len() / 4;
    if start + len > q {
        return None;
    }
    let last_quarter: Vec<f64> = series[q..].iter().map(|(_, v)| *v).collect();
    let mean = last_quarter.iter().sum::<f64>() / last_quarter.len() as f64;
    if mean < SIGN_THRESHOLD {
        Some((series[start].0, len))
    } else {
        None
    }
}

/// Smallest period p (in samples) whose recurrence residual stays below the
/// relative tolerance over the verification window, or None. The tail must
/// be at least 3x `p_max` long for the full scan.
pub fn detect_period(tail: &[State3], p_max: usize, recurrence_tol: f64) -> Result<Option<u64>> {
    if tail.len() < 3 * p_max {
        return Err(Error::InsufficientData {
            got: tail.len(),
            need: 3 * p_max,
        });
    }
    Ok(detect_period_with(tail, p_max, recurrence_tol))
}

fn detect_period_with(tail: &[State3], p_max: usize, recurrence_tol: f64) -> Option<u64> {
    let n = tail.len();
    if n < 4 || p_max == 0 {
        return None;
    }
    let p_max = p_max.min(n / 3).max(1);
    let scale = tail
        .iter()
        .map(State3::max_abs_component)
        .fold(0.0_f64, f64::max);
    let tol = recurrence_tol * (1.0 + scale);
    let last = tail[n - 1];

    'candidates: for p in 1..=p_max {
        if tail[n - 1 - p].max_abs_diff(&last) >= tol {
            continue;
        }
        // Straddle check: a slow drift passes adjacent-lag comparisons but
        // accumulates over multiples of p; a true period does not.
        let m = (n - 1) / p;
        if tail[n - 1 - m * p].max_abs_diff(&last) >= tol {
            continue;
        }
        let window = p_max.min(n - p);
        for k in (n - window)..n {
            if tail[k].max_abs_diff(&tail[k - p]) >= tol {
                continue 'candidates;
            }
        }
        return Some(p as u64);
    }
    None
}

/// Terminal behavior fingerprint used for ensemble grouping.
#[derive(Debug, Clone)]
pub enum AttractorFingerprint {
    Divergent,
    Sink { representative: State3 },
    /// Coarse-grained cells visited over the final full-resolution window,
    /// with a stable content hash for reporting.
    BoundedSet {
        cells: BTreeSet<[i64; 6]>,
        cell_hash: u64,
    },
}

impl AttractorFingerprint {
    pub fn describe(&self) -> String {
        match self {
            AttractorFingerprint::Divergent => "divergent".into(),
            AttractorFingerprint::Sink { representative } => format!("sink {representative}"),
            AttractorFingerprint::BoundedSet { cells, cell_hash } => {
                format!("bounded set ({} cells, hash {cell_hash:016x})", cells.len())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttractorGroup {
    pub fingerprint: AttractorFingerprint,
    /// Ensemble indices, in input order.
    pub members: Vec<usize>,
    /// Per-member terminal kinds (divergent step or final state context).
    pub kinds: Vec<String>,
}

fn fnv1a(bytes: impl Iterator<Item = u8>) -> u64 {
    let mut h = 0xcbf29ce484222325_u64;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn cell_of(s: &State3, cell_size: f64) -> [i64; 6] {
    let q = |v: f64| (v / cell_size).floor() as i64;
    [
        q(s.x.re),
        q(s.x.im),
        q(s.y.re),
        q(s.y.im),
        q(s.z.re),
        q(s.z.im),
    ]
}

fn fingerprint_orbit(orbit: &Orbit, cfg: &ClassifierConfig) -> (AttractorFingerprint, String) {
    if let Termination::Diverged(k) = orbit.terminated_by {
        return (AttractorFingerprint::Divergent, format!("divergent({k})"));
    }
    let final_state = orbit.final_state;
    let conv_tol = cfg.convergence_tol * (1.0 + final_state.max_abs_component());
    let tail_start_step =
        orbit.final_step - (orbit.final_step as f64 * cfg.tail_fraction) as u64;
    let tail_deviation = orbit
        .samples
        .iter()
        .filter(|(k, _)| *k >= tail_start_step)
        .map(|(_, s)| s.max_abs_diff(&final_state))
        .fold(0.0_f64, f64::max);
    if tail_deviation < conv_tol {
        return (
            AttractorFingerprint::Sink {
                representative: final_state,
            },
            format!("converges_to {final_state}"),
        );
    }
    let window = cfg.fingerprint_window.min(orbit.tail.len());
    let cells: BTreeSet<[i64; 6]> = orbit.tail[orbit.tail.len() - window..]
        .iter()
        .map(|s| cell_of(s, cfg.cell_size))
        .collect();
    let cell_hash = fnv1a(
        cells
            .iter()
            .flat_map(|c| c.iter().flat_map(|v| v.to_le_bytes())),
    );
    (
        AttractorFingerprint::BoundedSet { cells, cell_hash },
        "bounded".into(),
    )
}

fn jaccard(a: &BTreeSet<[i64; 6]>, b: &BTreeSet<[i64; 6]>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

fn same_attractor(
    a: &AttractorFingerprint,
    b: &AttractorFingerprint,
    cfg: &ClassifierConfig,
) -> bool {
    match (a, b) {
        (AttractorFingerprint::Divergent, AttractorFingerprint::Divergent) => true,
        (
            AttractorFingerprint::Sink { representative: ra },
            AttractorFingerprint::Sink { representative: rb },
        ) => ra.max_abs_diff(rb) < cfg.sink_group_tol,
        (
            AttractorFingerprint::BoundedSet { cells: ca, .. },
            AttractorFingerprint::BoundedSet { cells: cb, .. },
        ) => jaccard(ca, cb) >= 0.5,
        _ => false,
    }
}

/// Runs every ensemble member, fingerprints its terminal behavior, and
/// groups members with matching fingerprints. Sinks group by terminal state
/// within `sink_group_tol`; bounded non-convergent orbits by coarse cell-set
/// overlap; divergent members form their own group. Groups are ordered by
/// first member index.
pub fn coexisting_attractors(
    params: &SystemParams,
    ensemble: &[State3],
    steps: u64,
    record_stride: u64,
    cfg: &ClassifierConfig,
) -> Result<Vec<AttractorGroup>> {
    if ensemble.len() < 2 {
        return Err(Error::InvalidConfig(
            "ensemble must have at least 2 members".into(),
        ));
    }
    let orbits: Vec<Orbit> = ensemble
        .par_iter()
        .map(|ic| {
            let cfg_orbit = OrbitConfig::new(*ic, steps, record_stride)?;
            Ok(iterate(params, &cfg_orbit))
        })
        .collect::<Result<_>>()?;

    let mut groups: Vec<AttractorGroup> = Vec::new();
    for (idx, orbit) in orbits.iter().enumerate() {
        let (fp, kind) = fingerprint_orbit(orbit, cfg);
        match groups
            .iter_mut()
            .find(|g| same_attractor(&g.fingerprint, &fp, cfg))
        {
            Some(g) => {
                g.members.push(idx);
                g.kinds.push(kind);
            }
            None => groups.push(AttractorGroup {
                fingerprint: fp,
                members: vec![idx],
                kinds: vec![kind],
            }),
        }
    }
    Ok(groups)
}
