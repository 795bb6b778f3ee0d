//! Scenario harness: runs suite files end to end, compares computed labels
//! against expected labels, and emits reproduction reports plus plot-ready
//! exports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{classify, coexisting_attractors, ClassifierConfig, RegimeKind};
use crate::error::{Error, Result};
use crate::lyapunov::{spectrum, LyapunovEstimate, SpectrumSettings};
use crate::map::{iterate, iterate_real, Orbit};
use crate::scenario::{load_suite, Scenario};
use crate::types::{OrbitConfig, State3};

/// How a scored scenario came out. Warnings cover documented conflicts and
/// basin-sensitive mismatches; they do not fail a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Matched,
    Warning,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComputedSummary {
    pub kind: Option<String>,
    pub final_state: Option<String>,
    pub divergence_step: Option<u64>,
    pub detected_period: Option<u64>,
    pub largest_exponent: Option<f64>,
    pub exponent_verdict: Option<String>,
    pub groups: Option<usize>,
    pub group_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub id: String,
    pub label: String,
    pub outcome: Outcome,
    pub expected: Option<String>,
    pub computed: ComputedSummary,
    pub reason: Option<String>,
    pub basin_sensitive: bool,
    pub paper_note: Option<String>,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproductionReport {
    pub suite: String,
    pub matched: usize,
    pub warnings: usize,
    pub failed: usize,
    pub skipped: usize,
    pub results: Vec<ScenarioResult>,
}

impl ReproductionReport {
    pub fn total_scored(&self) -> usize {
        self.matched + self.warnings + self.failed
    }

    /// Plain-text summary table; the first line carries the timestamp and is
    /// the only non-reproducible byte of the report pair.
    pub fn summary_text(&self, timestamp: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# generated_at {timestamp}\n"));
        out.push_str(&format!("suite: {}\n", self.suite));
        out.push_str(&format!(
            "matched {}/{} ({} warnings, {} failed, {} skipped)\n",
            self.matched,
            self.total_scored(),
            self.warnings,
            self.failed,
            self.skipped
        ));
        out.push_str(&format!(
            "{:<28} {:<8} {:<16} {:<44} {}\n",
            "id", "outcome", "expected", "computed", "note"
        ));
        for r in &self.results {
            let computed = match (&r.computed.kind, r.computed.divergence_step) {
                (Some(k), Some(step)) => format!("{k}({step})"),
                (Some(k), None) => match &r.computed.final_state {
                    Some(f) if k == "converges_to" => format!("{k} {f}"),
                    _ => k.clone(),
                },
                _ => "-".into(),
            };
            let mut computed = computed;
            if let Some(g) = r.computed.groups {
                computed.push_str(&format!(" [{g} groups]"));
            }
            out.push_str(&format!(
                "{:<28} {:<8} {:<16} {:<44} {}\n",
                r.id,
                format!("{:?}", r.outcome).to_lowercase(),
                r.expected.as_deref().unwrap_or("-"),
                computed,
                r.reason.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions<'a> {
    pub workers: Option<usize>,
    pub write_orbit_csv: bool,
    pub out_dir: Option<&'a Path>,
}

impl Default for SuiteOptions<'_> {
    fn default() -> Self {
        Self {
            workers: None,
            write_orbit_csv: false,
            out_dir: None,
        }
    }
}

/// Worker count: explicit option, then `LORENZ_DCX_WORKERS`, then rayon's
/// default.
fn worker_count(options: &SuiteOptions) -> Option<usize> {
    options.workers.or_else(|| {
        std::env::var("LORENZ_DCX_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn format_state(s: &State3) -> String {
    format!(
        "({:.4}, {:.4}, {:.4})",
        ComplexDisplay(s.x),
        ComplexDisplay(s.y),
        ComplexDisplay(s.z)
    )
}

struct ComplexDisplay(crate::types::ComplexScalar);

impl std::fmt::Display for ComplexDisplay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let prec = f.precision().unwrap_or(6);
        if self.0.im == 0.0 {
            write!(f, "{:.*}", prec, self.0.re)
        } else if self.0.im < 0.0 {
            write!(f, "{:.*}{:.*}i", prec, self.0.re, prec, self.0.im)
        } else {
            write!(f, "{:.*}+{:.*}i", prec, self.0.re, prec, self.0.im)
        }
    }
}

/// Lyapunov driver settings used for suite classification: no burn-in so the
/// finite-time series covers the early transient.
fn suite_spectrum_settings(steps: u64) -> SpectrumSettings {
    SpectrumSettings {
        burn_in: 0,
        total: steps,
        reorthonormalize_interval: 10,
        window: 10_000,
    }
}

fn run_one(scenario: &Scenario, options: &SuiteOptions) -> ScenarioResult {
    let mut result = ScenarioResult {
        id: scenario.id.clone(),
        label: scenario.label.clone(),
        outcome: Outcome::Skipped,
        expected: scenario.expected.as_ref().map(|e| e.kind.clone()),
        computed: ComputedSummary {
            kind: None,
            final_state: None,
            divergence_step: None,
            detected_period: None,
            largest_exponent: None,
            exponent_verdict: None,
            groups: None,
            group_sizes: None,
        },
        reason: None,
        basin_sensitive: scenario.basin_sensitive,
        paper_note: scenario.paper_note.clone(),
        csv: None,
    };

    if scenario.reference_only {
        result.reason = Some("reference metadata; not scored".into());
        return result;
    }

    let orbit_cfg = match OrbitConfig::with_threshold(
        scenario.initial,
        scenario.steps,
        scenario.record_stride,
        scenario.divergence_threshold,
    ) {
        Ok(c) => c,
        Err(e) => {
            result.outcome = Outcome::Failed;
            result.reason = Some(e.to_string());
            return result;
        }
    };

    let orbit = if scenario.real_restriction {
        match iterate_real(&scenario.params, &orbit_cfg) {
            Ok(o) => o,
            Err(e) => {
                result.outcome = Outcome::Failed;
                result.reason = Some(e.to_string());
                return result;
            }
        }
    } else {
        iterate(&scenario.params, &orbit_cfg)
    };

    let lyap: Option<LyapunovEstimate> = if orbit.diverged() {
        None
    } else {
        spectrum(
            &scenario.params,
            &orbit_cfg,
            &suite_spectrum_settings(scenario.steps),
        )
        .ok()
    };

    let mut ccfg = ClassifierConfig::default();
    if let Some(tol) = scenario.convergence_tol {
        ccfg.convergence_tol = tol;
    }
    if let Some(w) = scenario.transient_min_windows {
        ccfg.min_positive_windows = w;
    }

    let label = match classify(&orbit, lyap.as_ref(), &ccfg) {
        Ok(l) => l,
        Err(e) => {
            result.outcome = Outcome::Failed;
            result.reason = Some(e.to_string());
            return result;
        }
    };

    result.computed.kind = Some(label.kind.tag().to_string());
    result.computed.final_state = Some(format_state(&orbit.final_state));
    if let RegimeKind::Divergent(k) = label.kind {
        result.computed.divergence_step = Some(k);
    }
    result.computed.detected_period = label.evidence.detected_period;
    result.computed.largest_exponent = label.evidence.largest_exponent;
    result.computed.exponent_verdict = label
        .evidence
        .exponent_verdict
        .map(|v| format!("{v:?}").to_lowercase());

    if let Some(count) = scenario.ensemble {
        match coexisting_attractors(
            &scenario.params,
            &scenario.ensemble_initials(),
            scenario.steps,
            scenario.record_stride,
            &ccfg,
        ) {
            Ok(groups) => {
                result.computed.groups = Some(groups.len());
                result.computed.group_sizes =
                    Some(groups.iter().map(|g| g.members.len()).collect());
                let _ = count;
            }
            Err(e) => {
                result.outcome = Outcome::Failed;
                result.reason = Some(e.to_string());
                return result;
            }
        }
    }

    if options.write_orbit_csv {
        if let Some(dir) = options.out_dir {
            let csv_dir = dir.join("csv");
            if fs::create_dir_all(&csv_dir).is_ok() {
                let path = csv_dir.join(format!("{}.csv", scenario.id));
                if let Ok(mut f) = fs::File::create(&path) {
                    if orbit.write_csv(&mut f).is_ok() {
                        result.csv = Some(path.display().to_string());
                    }
                }
            }
        }
    }

    score(scenario, &label.kind, &orbit, &mut result);
    result
}

fn score(scenario: &Scenario, kind: &RegimeKind, orbit: &Orbit, result: &mut ScenarioResult) {
    let expected = match &scenario.expected {
        Some(e) => e,
        None => {
            result.outcome = Outcome::Matched;
            result.reason = Some("no expectation recorded".into());
            return;
        }
    };

    let tag = kind.tag();
    let kind_ok = expected.kind == tag || expected.alt_kind.as_deref() == Some(tag);
    let target_miss = expected.target.and_then(|t| {
        let dev = orbit.final_state.max_abs_diff(&t);
        (!(dev < expected.target_tol)).then_some(dev)
    });
    let groups_ok = match (expected.groups, result.computed.groups) {
        (Some(want), got) => got == Some(want),
        (None, _) => true,
    };

    if kind_ok && target_miss.is_none() && groups_ok {
        result.outcome = Outcome::Matched;
        return;
    }

    let mut reasons = Vec::new();
    if !kind_ok {
        reasons.push(format!("label {tag} != expected {}", expected.kind));
    }
    if let Some(dev) = target_miss {
        reasons.push(format!(
            "target deviation {dev:.3e} exceeds {:.1e}",
            expected.target_tol
        ));
    }
    if !groups_ok {
        reasons.push(format!(
            "{:?} groups != expected {:?}",
            result.computed.groups, expected.groups
        ));
    }
    let detail = reasons.join("; ");

    match scenario.known_mismatch.as_deref() {
        Some("target") if kind_ok && groups_ok && target_miss.is_some() => {
            result.outcome = Outcome::Warning;
            result.reason = Some(format!("documented conflict with source value: {detail}"));
        }
        Some(km) if km == tag && target_miss.is_none() && groups_ok => {
            result.outcome = Outcome::Warning;
            result.reason = Some(format!(
                "documented conflict: map produces `{tag}` where source claims `{}`",
                expected.kind
            ));
        }
        Some(km) => {
            result.outcome = Outcome::Failed;
            result.reason = Some(format!(
                "{detail}; regression: recorded outcome `{km}` not reproduced either"
            ));
        }
        None if scenario.basin_sensitive => {
            result.outcome = Outcome::Warning;
            result.reason = Some(format!("basin-sensitive mismatch: {detail}"));
        }
        None => {
            result.outcome = Outcome::Failed;
            result.reason = Some(detail);
        }
    }
}

/// Runs every scenario of a suite file (concurrently up to the configured
/// worker count), scores them, and writes `report.json` plus `summary.txt`
/// under the output directory when one is given. Per-scenario failures are
/// recorded, never abort the suite.
pub fn run_suite(suite_path: &Path, options: &SuiteOptions) -> Result<ReproductionReport> {
    let scenarios = load_suite(suite_path)?;
    let run_all = || -> Vec<ScenarioResult> {
        scenarios
            .par_iter()
            .map(|s| run_one(s, options))
            .collect()
    };
    let mut results = match worker_count(options) {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run_all),
        _ => run_all(),
    };
    results.sort_by(|a, b| a.id.cmp(&b.id));

    let count = |o: Outcome| results.iter().filter(|r| r.outcome == o).count();
    let report = ReproductionReport {
        suite: suite_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| suite_path.display().to_string()),
        matched: count(Outcome::Matched),
        warnings: count(Outcome::Warning),
        failed: count(Outcome::Failed),
        skipped: count(Outcome::Skipped),
        results,
    };

    if let Some(dir) = options.out_dir {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(dir.join("report.json"), json + "\n")?;
        let timestamp = chrono::Utc::now().to_rfc3339();
        fs::write(dir.join("summary.txt"), report.summary_text(&timestamp))?;
    }
    Ok(report)
}

/// Plot-data flavors: per-variable complex-plane pairs, per-variable
/// component series, or 3-D real-part/imaginary-part curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMode {
    ComplexPlane,
    Components,
    ThreeD,
}

/// Writes plot-ready CSVs for an orbit under `dir`, returning the paths.
pub fn export_plot_data(orbit: &Orbit, mode: PlotMode, dir: &Path) -> Result<Vec<PathBuf>> {
    if orbit.samples.is_empty() {
        return Err(Error::InvalidConfig("orbit has no samples".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match mode {
        PlotMode::ComplexPlane => {
            for (name, get) in VARS {
                let path = dir.join(format!("{name}.csv"));
                let mut f = fs::File::create(&path)?;
                writeln!(f, "re,im")?;
                for (_, s) in &orbit.samples {
                    let v = get(s);
                    writeln!(f, "{:.16e},{:.16e}", v.re, v.im)?;
                }
                written.push(path);
            }
        }
        PlotMode::Components => {
            for (name, get) in VARS {
                let path = dir.join(format!("{name}_components.csv"));
                let mut f = fs::File::create(&path)?;
                writeln!(f, "k,re,im")?;
                for (k, s) in &orbit.samples {
                    let v = get(s);
                    writeln!(f, "{k},{:.16e},{:.16e}", v.re, v.im)?;
                }
                written.push(path);
            }
        }
        PlotMode::ThreeD => {
            let real_path = dir.join("real.csv");
            let mut f = fs::File::create(&real_path)?;
            writeln!(f, "re_x,re_y,re_z")?;
            for (_, s) in &orbit.samples {
                writeln!(f, "{:.16e},{:.16e},{:.16e}", s.x.re, s.y.re, s.z.re)?;
            }
            written.push(real_path);
            let imag_path = dir.join("imag.csv");
            let mut f = fs::File::create(&imag_path)?;
            writeln!(f, "im_x,im_y,im_z")?;
            for (_, s) in &orbit.samples {
                writeln!(f, "{:.16e},{:.16e},{:.16e}", s.x.im, s.y.im, s.z.im)?;
            }
            written.push(imag_path);
        }
    }
    Ok(written)
}

const VARS: [(&str, fn(&State3) -> crate::types::ComplexScalar); 3] = [
    ("x", |s| s.x),
    ("y", |s| s.y),
    ("z", |s| s.z),
];

pub fn parse_workers_env() -> Option<usize> {
    std::env::var("LORENZ_DCX_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
}
