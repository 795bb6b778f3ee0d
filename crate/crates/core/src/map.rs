//! The one-step discrete complex Lorenz map and orbit generation, plus the
//! real-variable restriction used for side-by-side comparisons.
//!
//! One step maps (x, y, z) to
//!
//! ```text
//! x' = x + a(y - x) dt
//! y' = y + (-xz + rx - y) dt
//! z' = z + (xy - bz) dt
//! ```
//!
//! Each component is evaluated exactly in this form, multiplying by `dt`
//! last, so runs are bit-reproducible across implementations.

use std::io::Write;

use crate::error::{Error, Result};
use crate::types::{OrbitConfig, State3, SystemParams};

/// Why an orbit run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// First step index at which a component exceeded the divergence
    /// threshold or became non-finite.
    Diverged(u64),
}

/// A generated orbit: stride-spaced samples for export plus a full-resolution
/// tail window for convergence and recurrence analysis.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub params: SystemParams,
    /// (step index, state), spaced `record_stride` apart, starting at k = 0.
    pub samples: Vec<(u64, State3)>,
    pub terminated_by: Termination,
    /// Last states at stride 1, ending at `final_state`.
    pub tail: Vec<State3>,
    /// Last finite state reached.
    pub final_state: State3,
    /// Step index of `final_state`.
    pub final_step: u64,
    pub record_stride: u64,
}

impl Orbit {
    pub fn diverged(&self) -> bool {
        matches!(self.terminated_by, Termination::Diverged(_))
    }

    /// Writes the recorded samples as CSV: `k,re_x,im_x,re_y,im_y,re_z,im_z`,
    /// 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,re_x,im_x,re_y,im_y,re_z,im_z")?;
        for (k, s) in &self.samples {
            writeln!(
                w,
                "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.x.re, s.x.im, s.y.re, s.y.im, s.z.re, s.z.im
            )?;
        }
        Ok(())
    }
}

/// One step of the map in complex arithmetic. Pure; overflow surfaces as
/// non-finite output and is caught by the orbit driver.
#[inline]
pub fn step(params: &SystemParams, s: &State3) -> State3 {
    let SystemParams { a, b, r, dt } = *params;
    State3 {
        x: s.x + (a * (s.y - s.x)) * dt,
        y: s.y + (-s.x * s.z + r * s.x - s.y) * dt,
        z: s.z + (s.x * s.y - b * s.z) * dt,
    }
}

/// One step of the real-restricted map. Agrees with [`step`] to the last bit
/// on real inputs; inputs with any nonzero imaginary part are rejected.
pub fn step_real(params: &SystemParams, s: [f64; 3]) -> Result<[f64; 3]> {
    if !params.is_real() {
        return Err(Error::InvalidConfig(
            "real-restricted step requires purely real parameters".into(),
        ));
    }
    Ok(step_real_unchecked(params, s))
}

#[inline]
fn step_real_unchecked(params: &SystemParams, [x, y, z]: [f64; 3]) -> [f64; 3] {
    let (a, b, r, dt) = (params.a.re, params.b.re, params.r.re, params.dt);
    [
        x + (a * (y - x)) * dt,
        y + (-x * z + r * x - y) * dt,
        z + (x * y - b * z) * dt,
    ]
}

/// The coordinate transformation (x, y, z) -> (-x, -y, z) that leaves the map
/// equivariant.
#[inline]
pub fn apply_symmetry(s: &State3) -> State3 {
    State3::new(-s.x, -s.y, s.z)
}

/// Full-resolution states kept at the end of every orbit, independent of the
/// recording stride. Sized so recurrence detection can scan periods up to
/// 50 000 samples with the required 3x verification window.
pub const TAIL_CAPACITY: usize = 200_000;

/// Runs the map for `cfg.steps` steps, recording every `record_stride`-th
/// state, stopping early when any component exceeds the divergence threshold
/// or becomes non-finite.
pub fn iterate(params: &SystemParams, cfg: &OrbitConfig) -> Orbit {
    iterate_with_tail(params, cfg, TAIL_CAPACITY)
}

/// As [`iterate`] with an explicit tail-window capacity.
pub fn iterate_with_tail(params: &SystemParams, cfg: &OrbitConfig, tail_capacity: usize) -> Orbit {
    let mut samples = Vec::with_capacity((cfg.steps / cfg.record_stride + 1) as usize);
    samples.push((0, cfg.initial));

    let cap = tail_capacity.max(1);
    let mut ring: Vec<State3> = Vec::with_capacity(cap.min(cfg.steps as usize + 1));
    let mut ring_at = 0usize;
    let mut push_tail = |s: State3, ring: &mut Vec<State3>| {
        if ring.len() < cap {
            ring.push(s);
        } else {
            ring[ring_at] = s;
            ring_at = (ring_at + 1) % cap;
        }
    };

    let mut s = cfg.initial;
    push_tail(s, &mut ring);
    let mut terminated = Termination::Completed;
    let mut final_step = 0;

    for k in 1..=cfg.steps {
        let next = step(params, &s);
        if !next.is_finite() || next.max_abs_component() > cfg.divergence_threshold {
            terminated = Termination::Diverged(k);
            break;
        }
        s = next;
        final_step = k;
        push_tail(s, &mut ring);
        if k % cfg.record_stride == 0 {
            samples.push((k, s));
        }
    }

    ring.rotate_left(ring_at);
    Orbit {
        params: *params,
        samples,
        terminated_by: terminated,
        tail: ring,
        final_state: s,
        final_step,
        record_stride: cfg.record_stride,
    }
}

/// Real-restricted orbit run; the resulting states carry exact zero imaginary
/// parts.
pub fn iterate_real(params: &SystemParams, cfg: &OrbitConfig) -> Result<Orbit> {
    if !params.is_real() {
        return Err(Error::InvalidConfig(
            "real-restricted run requires purely real parameters".into(),
        ));
    }
    if !cfg.initial.is_real() {
        return Err(Error::InvalidConfig(
            "real-restricted run requires a purely real initial state".into(),
        ));
    }
    Ok(iterate(params, cfg))
}
