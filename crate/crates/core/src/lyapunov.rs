//! Lyapunov spectrum estimation for the map, viewed as a 6-real-dimensional
//! system: the complexified tangent dynamics is evolved alongside the orbit
//! with periodic orthonormalization of a 6-vector frame, accumulating log
//! growth rates in nats per iteration.
//!
//! Exponents of the complex system come in near-equal pairs (each complex
//! eigenvalue of modulus m contributes two real exponents log m); the real
//! lift is the unambiguous construction, and the estimate reports all six.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::step;
use crate::types::{ComplexScalar, OrbitConfig, State3, SystemParams};

/// Largest exponent counts as positive only above this (nats/iteration) and
/// only when it clears 3x its last-quarter standard error; negative below the
/// mirrored threshold; neutral in between. Per-iteration exponents are O(dt),
/// so an absolute-plus-significance test prevents noise flips.
pub const SIGN_THRESHOLD: f64 = 5e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignVerdict {
    Positive,
    Negative,
    Neutral,
}

/// Driver settings for a spectrum run. `total` counts all steps including
/// the state-only burn-in; tangent growth is accumulated over the remaining
/// `total - burn_in` steps.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumSettings {
    pub burn_in: u64,
    pub total: u64,
    pub reorthonormalize_interval: u64,
    /// Width (in steps) of the finite-time largest-exponent windows.
    pub window: u64,
}

impl SpectrumSettings {
    /// Defaults: 20% burn-in, orthonormalization every 10 steps, 10k-step
    /// windows.
    pub fn for_total(total: u64) -> Self {
        Self {
            burn_in: total / 5,
            total,
            reorthonormalize_interval: 10,
            window: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total == 0 || self.reorthonormalize_interval == 0 || self.window == 0 {
            return Err(Error::InvalidConfig(
                "spectrum settings must be positive".into(),
            ));
        }
        if self.burn_in >= self.total {
            return Err(Error::InvalidConfig(
                "burn_in must be smaller than total".into(),
            ));
        }
        if self.total < 10 * self.reorthonormalize_interval {
            return Err(Error::InvalidConfig(
                "total must be at least 10 reorthonormalization intervals".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a spectrum run.
#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    /// Six per-iteration log growth rates, sorted descending.
    pub exponents: [f64; 6],
    pub largest: f64,
    /// (window start step, windowed largest exponent) for consecutive
    /// complete windows after burn-in.
    pub finite_time_series: Vec<(u64, f64)>,
    pub settings: SpectrumSettings,
    pub verdict: SignVerdict,
    /// Standard error of the last-quarter windowed largest exponents.
    pub last_quarter_stderr: f64,
    /// Orbit-average of per-step log |det| of the 6-real-dimensional tangent
    /// map (twice the log-modulus of the complex determinant).
    pub mean_log_det: f64,
}

/// A 6-real tangent vector paired with the complex state: components are
/// (Re x, Im x, Re y, Im y, Re z, Im z).
pub type TangentVector = [f64; 6];

#[inline]
fn to_complex(v: &TangentVector) -> [ComplexScalar; 3] {
    [
        ComplexScalar::new(v[0], v[1]),
        ComplexScalar::new(v[2], v[3]),
        ComplexScalar::new(v[4], v[5]),
    ]
}

#[inline]
fn from_complex(w: [ComplexScalar; 3]) -> TangentVector {
    [w[0].re, w[0].im, w[1].re, w[1].im, w[2].re, w[2].im]
}

/// Applies the exact map derivative at `s` to a 6-real tangent vector. Each
/// complex entry acts as its 2x2 real rotation-scaling block, which is
/// exactly complex multiplication on the paired components.
#[inline]
pub fn tangent_step(params: &SystemParams, s: &State3, v: &TangentVector) -> TangentVector {
    let SystemParams { a, b, r, dt } = *params;
    let [vx, vy, vz] = to_complex(v);
    let wx = vx + (a * (vy - vx)) * dt;
    let wy = vy + ((r - s.z) * vx - vy - s.x * vz) * dt;
    let wz = vz + (s.y * vx + s.x * vy - b * vz) * dt;
    from_complex([wx, wy, wz])
}

#[inline]
fn dot6(a: &TangentVector, b: &TangentVector) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt; returns the log of each vector's residual norm.
fn orthonormalize(frame: &mut [TangentVector; 6]) -> [f64; 6] {
    let mut logs = [0.0; 6];
    for i in 0..6 {
        for j in 0..i {
            let proj = dot6(&frame[i], &frame[j]);
            let fj = frame[j];
            for (c, fj_c) in frame[i].iter_mut().zip(fj) {
                *c -= proj * fj_c;
            }
        }
        let norm = dot6(&frame[i], &frame[i]).sqrt();
        logs[i] = norm.ln();
        for c in frame[i].iter_mut() {
            *c /= norm;
        }
    }
    logs
}

#[inline]
fn log_det6(params: &SystemParams, s: &State3) -> f64 {
    2.0 * crate::equilibria::map_jacobian_at(params, s).det().norm().ln()
}

/// Runs the orbit and six tangent vectors jointly, orthonormalizing the frame
/// every `reorthonormalize_interval` steps and accumulating log norms.
/// Divergence at any point aborts with the divergence step.
pub fn spectrum(
    params: &SystemParams,
    cfg: &OrbitConfig,
    settings: &SpectrumSettings,
) -> Result<LyapunovEstimate> {
    settings.validate()?;
    let mut s = cfg.initial;
    if !s.is_finite() {
        return Err(Error::InvalidConfig("initial state must be finite".into()));
    }

    for k in 1..=settings.burn_in {
        s = step(params, &s);
        if !s.is_finite() || s.max_abs_component() > cfg.divergence_threshold {
            return Err(Error::DivergentOrbit { step: k });
        }
    }

    let mut frame: [TangentVector; 6] = [[0.0; 6]; 6];
    for (i, v) in frame.iter_mut().enumerate() {
        v[i] = 1.0;
    }

    let span = settings.total - settings.burn_in;
    let mut logs = [0.0_f64; 6];
    let mut since_ortho = 0u64;
    let mut window_acc = 0.0_f64;
    let mut window_start = settings.burn_in;
    let mut series = Vec::with_capacity((span / settings.window) as usize);
    let mut sum_log_det = 0.0_f64;

    for n in 1..=span {
        let k = settings.burn_in + n;
        sum_log_det += log_det6(params, &s);
        for v in frame.iter_mut() {
            *v = tangent_step(params, &s, v);
        }
        s = step(params, &s);
        if !s.is_finite() || s.max_abs_component() > cfg.divergence_threshold {
            return Err(Error::DivergentOrbit { step: k });
        }
        since_ortho += 1;
        if since_ortho == settings.reorthonormalize_interval || n == span {
            let grown = orthonormalize(&mut frame);
            for (acc, g) in logs.iter_mut().zip(grown) {
                *acc += g;
            }
            window_acc += grown[0];
            since_ortho = 0;
        }
        if n % settings.window == 0 {
            series.push((window_start, window_acc / settings.window as f64));
            window_acc = 0.0;
            window_start = k;
        }
    }

    let mut exponents = logs.map(|l| l / span as f64);
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let largest = exponents[0];

    let last_quarter = &series[series.len() - series.len() / 4..];
    let last_quarter_stderr = stderr(last_quarter.iter().map(|(_, v)| *v));
    let verdict = sign_verdict(largest, last_quarter_stderr);

    Ok(LyapunovEstimate {
        exponents,
        largest,
        finite_time_series: series,
        settings: *settings,
        verdict,
        last_quarter_stderr,
        mean_log_det: sum_log_det / span as f64,
    })
}

/// The windowed largest-exponent series used for transient-chaos detection:
/// no burn-in, so the early phase is visible.
pub fn finite_time_largest(
    params: &SystemParams,
    cfg: &OrbitConfig,
    window: u64,
) -> Result<Vec<(u64, f64)>> {
    if window < 1000 {
        return Err(Error::InvalidConfig("window must be at least 1000".into()));
    }
    let settings = SpectrumSettings {
        burn_in: 0,
        total: cfg.steps,
        reorthonormalize_interval: 10,
        window,
    };
    Ok(spectrum(params, cfg, &settings)?.finite_time_series)
}

pub fn sign_verdict(largest: f64, last_quarter_stderr: f64) -> SignVerdict {
    if largest > SIGN_THRESHOLD && largest > 3.0 * last_quarter_stderr {
        SignVerdict::Positive
    } else if largest < -SIGN_THRESHOLD {
        SignVerdict::Negative
    } else {
        SignVerdict::Neutral
    }
}

fn stderr(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return f64::INFINITY;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{eigenvalues3, fixed_points, map_jacobian_at, Matrix3};
    use crate::types::parse_params;
    use num_complex::Complex64;

    #[test]
    fn zero_vector_stays_zero() {
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let s = State3::from_reals(0.3, -0.2, 1.0);
        assert_eq!(tangent_step(&p, &s, &[0.0; 6]), [0.0; 6]);
    }

    #[test]
    fn a_zero_leaves_x_subspace_invariant() {
        // With a = 0 the x equation is x' = x, so pure-x tangent vectors are
        // carried with factor exactly 1... in their x components.
        let p = parse_params("a=0, b=0.8491+0.9340i, r=7+1i, dt=0.00005").unwrap();
        let s = State3::new(
            Complex64::new(0.6787, 0.7577),
            Complex64::new(0.7431, 0.3922),
            Complex64::new(0.6555, 0.1712),
        );
        let w = tangent_step(&p, &s, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(w[0], 1.0);
        let w = tangent_step(&p, &s, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(w[1], 1.0);
    }

    /// Null vector of (J - λI) from the formal cross product of two rows.
    fn eigenvector(j: &Matrix3, lambda: Complex64) -> [Complex64; 3] {
        let m = j.0;
        let rows: Vec<[Complex64; 3]> = (0..3)
            .map(|i| {
                let mut r = m[i];
                r[i] -= lambda;
                r
            })
            .collect();
        let cross = |u: &[Complex64; 3], v: &[Complex64; 3]| {
            [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ]
        };
        let mut best = [Complex64::new(0.0, 0.0); 3];
        let mut best_norm = 0.0;
        for (i, jdx) in [(0, 1), (0, 2), (1, 2)] {
            let c = cross(&rows[i], &rows[jdx]);
            let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            if n > best_norm {
                best_norm = n;
                best = c;
            }
        }
        best
    }

    #[test]
    fn eigenvector_growth_matches_eigenvalue_modulus() {
        let p = parse_params("a=10, b=8/3, r=7, dt=0.005").unwrap();
        let fp = fixed_points(&p)[2];
        let j = map_jacobian_at(&p, &fp);
        for lambda in eigenvalues3(&j) {
            let v = eigenvector(&j, lambda);
            let tangent = [v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im];
            let norm_before = dot6(&tangent, &tangent).sqrt();
            let w = tangent_step(&p, &fp, &tangent);
            let norm_after = dot6(&w, &w).sqrt();
            assert!(
                (norm_after / norm_before - lambda.norm()).abs() < 1e-9,
                "growth {} vs |lambda| {}",
                norm_after / norm_before,
                lambda.norm()
            );
        }
    }

    #[test]
    fn sink_regime_has_negative_largest_and_paired_exponents() {
        // r=10 converges to a sink; the spectrum pairs up by construction.
        let p = parse_params("a=10, b=8/3, r=10, dt=0.0005").unwrap();
        let ic = State3::new(
            Complex64::new(0.1, 0.2),
            Complex64::new(0.3, 0.4),
            Complex64::new(1.0, 2.0),
        );
        let cfg = OrbitConfig::new(ic, 400_000, 100).unwrap();
        let est = spectrum(&p, &cfg, &SpectrumSettings::for_total(400_000)).unwrap();
        assert!(est.largest < 0.0, "largest = {}", est.largest);
        assert_eq!(est.verdict, SignVerdict::Negative);
        // Once on the sink, exponents pair to the log-moduli of the true
        // Jacobian eigenvalues there.
        let fp = fixed_points(&p)[2];
        let eig = eigenvalues3(&map_jacobian_at(&p, &fp));
        let mut want: Vec<f64> = eig.iter().flat_map(|l| [l.norm().ln(); 2]).collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in est.exponents.iter().zip(want) {
            assert!((got - want).abs() < 1e-4, "{:?}", est.exponents);
        }
    }

    #[test]
    fn divergent_orbit_is_an_error() {
        let p = parse_params("a=10, b=8/3, r=-1-5i, dt=0.0005").unwrap();
        let ic = State3::new(
            Complex64::new(0.1, 0.2),
            Complex64::new(0.3, 0.4),
            Complex64::new(1.0, 2.0),
        );
        let cfg = OrbitConfig::new(ic, 2_000_000, 100).unwrap();
        let err = spectrum(&p, &cfg, &SpectrumSettings::for_total(2_000_000)).unwrap_err();
        assert!(matches!(err, Error::DivergentOrbit { .. }));
    }

    #[test]
    fn settings_validation() {
        assert!(SpectrumSettings {
            burn_in: 10,
            total: 10,
            reorthonormalize_interval: 1,
            window: 10
        }
        .validate()
        .is_err());
        assert!(SpectrumSettings {
            burn_in: 0,
            total: 50,
            reorthonormalize_interval: 10,
            window: 10
        }
        .validate()
        .is_err());
        assert!(SpectrumSettings::for_total(100_000).validate().is_ok());
    }
}
