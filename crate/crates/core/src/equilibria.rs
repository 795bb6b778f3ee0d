//! Closed-form fixed points, Jacobians, a 3x3 complex eigensolver, and
//! stability verdicts under two criteria.
//!
//! Two Jacobian conventions are exposed deliberately:
//!
//! * [`jacobian_at`] is the stability matrix the equilibrium reports are
//!   defined against (the published reference convention this tool replays);
//! * [`map_jacobian_at`] is the exact derivative of [`crate::map::step`] and
//!   drives the tangent dynamics behind Lyapunov estimation.
//!
//! They differ in the sign pattern of the x-row and of the z-coupling in the
//! y-row; both have a structural zero at entry (0,2).

use num_complex::Complex64;
use serde::Serialize;

use crate::cubic::{eval_monic_cubic, solve_monic_cubic};
use crate::error::{Error, Result};
use crate::map::step;
use crate::types::{ComplexScalar, State3, SystemParams};

/// Relative residual tolerance for accepting a state as an equilibrium.
pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-9;

/// Row-major 3x3 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3(pub [[ComplexScalar; 3]; 3]);

impl Matrix3 {
    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Sum of the three principal 2x2 minors.
    pub fn second_invariant(&self) -> Complex64 {
        let m = &self.0;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0])
            + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
            + (m[1][1] * m[2][2] - m[1][2] * m[2][1])
    }

    pub fn mul_vec(&self, v: [Complex64; 3]) -> [Complex64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, e| acc.max(e.re.abs()).max(e.im.abs()))
    }
}

/// The three closed-form fixed points: (0,0,0) and (±s, ±s, r-1) with
/// s = sqrt(b)·sqrt(r-1), each square root on the principal branch and taken
/// sequentially (not as sqrt(b(r-1)); the two differ by sign for some complex
/// inputs). At r = 1 the three points coincide at the origin.
pub fn fixed_points(params: &SystemParams) -> [State3; 3] {
    let s = params.b.sqrt() * (params.r - 1.0).sqrt();
    let z = params.r - 1.0;
    [
        State3::zero(),
        State3::new(-s, -s, z),
        State3::new(s, s, z),
    ]
}

/// Stability matrix used by the equilibrium reports:
///
/// ```text
/// [ 1+a·dt   -a·dt    0      ]
/// [ (r+z)dt  1-dt     x·dt   ]
/// [ y·dt     x·dt     1-b·dt ]
/// ```
pub fn jacobian_at(params: &SystemParams, s: &State3) -> Matrix3 {
    let SystemParams { a, b, r, dt } = *params;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Matrix3([
        [one + a * dt, -a * dt, zero],
        [(r + s.z) * dt, one - dt, s.x * dt],
        [s.y * dt, s.x * dt, one - b * dt],
    ])
}

/// Exact derivative of the one-step map; the tangent map for Lyapunov
/// estimation:
///
/// ```text
/// [ 1-a·dt   a·dt     0      ]
/// [ (r-z)dt  1-dt    -x·dt   ]
/// [ y·dt     x·dt     1-b·dt ]
/// ```
pub fn map_jacobian_at(params: &SystemParams, s: &State3) -> Matrix3 {
    let SystemParams { a, b, r, dt } = *params;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Matrix3([
        [one - a * dt, a * dt, zero],
        [(r - s.z) * dt, one - dt, -s.x * dt],
        [s.y * dt, s.x * dt, one - b * dt],
    ])
}

/// Sorts eigenvalues by descending modulus, ties by descending real part,
/// then descending imaginary part.
pub fn sort_eigenvalues(e: &mut [Complex64]) {
    e.sort_by(|p, q| {
        q.norm()
            .partial_cmp(&p.norm())
            .unwrap()
            .then(q.re.partial_cmp(&p.re).unwrap())
            .then(q.im.partial_cmp(&p.im).unwrap())
    });
}

/// The three eigenvalues of a 3x3 complex matrix: roots of the analytically
/// extracted characteristic cubic, each polished by one Newton step, sorted
/// with [`sort_eigenvalues`].
pub fn eigenvalues3(m: &Matrix3) -> [Complex64; 3] {
    // det(m - λI) = -(λ^3 - tr·λ^2 + inv2·λ - det)
    let c2 = -m.trace();
    let c1 = m.second_invariant();
    let c0 = -m.det();
    let mut roots = solve_monic_cubic(c2, c1, c0);
    sort_eigenvalues(&mut roots);
    roots
}

/// Residual |det(m - λI)| of a candidate eigenvalue.
pub fn characteristic_residual(m: &Matrix3, lambda: Complex64) -> f64 {
    eval_monic_cubic(lambda, -m.trace(), m.second_invariant(), -m.det()).norm()
}

/// Closed-form eigenvalues of the report Jacobian at the origin:
/// `1 - b·dt` and `(2 - dt + a·dt ∓ dt·sqrt(1 + 2a + a² - 4ar)) / 2`,
/// principal square root. Serves as the oracle for [`eigenvalues3`] at the
/// origin.
pub fn origin_eigenvalues_closed_form(params: &SystemParams) -> [Complex64; 3] {
    let SystemParams { a, b, r, dt } = *params;
    let one = Complex64::new(1.0, 0.0);
    let rad = (one + a * 2.0 + a * a - a * r * 4.0).sqrt();
    let base = Complex64::new(2.0 - dt, 0.0) + a * dt;
    let mut eigs = [
        one - b * dt,
        (base - rad * dt) * 0.5,
        (base + rad * dt) * 0.5,
    ];
    sort_eigenvalues(&mut eigs);
    eigs
}

/// One eigenvalue with its modulus, as reported by the `eigen` subcommand.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenvalueOut {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

/// A fixed point with its spectrum and stability verdicts under both the
/// positive-real-part criterion and the standard discrete-map modulus
/// criterion. Both are reported; neither is suppressed.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub point: State3,
    /// Sorted by descending modulus, ties by descending real part.
    pub eigenvalues: [Complex64; 3],
    /// All eigenvalue real parts positive.
    pub paper_stable: bool,
    /// All eigenvalue moduli strictly below 1.
    pub modulus_stable: bool,
    /// Max-component |step(point) - point|.
    pub residual: f64,
}

/// Fills both stability verdicts for an equilibrium candidate. The candidate
/// must actually be a fixed point: residual < 1e-9 relative.
pub fn classify_equilibrium(params: &SystemParams, p: &State3) -> Result<EquilibriumReport> {
    let residual = step(params, p).max_abs_diff(p);
    let tolerance = EQUILIBRIUM_RESIDUAL_TOL * (1.0 + p.max_abs_component());
    if !(residual < tolerance) {
        return Err(Error::NotAnEquilibrium {
            residual,
            tolerance,
        });
    }
    let eigenvalues = eigenvalues3(&jacobian_at(params, p));
    Ok(EquilibriumReport {
        point: *p,
        eigenvalues,
        paper_stable: eigenvalues.iter().all(|l| l.re > 0.0),
        modulus_stable: eigenvalues.iter().all(|l| l.norm() < 1.0),
        residual,
    })
}

/// The |r| < |a(a+b+3)/(a-b-1)| convergence condition: returns
/// (|r|, bound, holds). Errors when a - b - 1 = 0.
pub fn convergence_condition(params: &SystemParams) -> Result<(f64, f64, bool)> {
    let den = params.a - params.b - 1.0;
    if den.norm_sqr() == 0.0 {
        return Err(Error::DegenerateBound);
    }
    let bound = (params.a * (params.a + params.b + 3.0) / den).norm();
    let r_abs = params.r.norm();
    Ok((r_abs, bound, r_abs < bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::parse_params;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn fixed_points_real_case() {
        // Formula: s = sqrt(8/3)·sqrt(4), z = 4.
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let [origin, minus, plus] = fixed_points(&p);
        assert_eq!(origin, State3::zero());
        let s = (8.0_f64 / 3.0).sqrt() * 2.0;
        assert!(close(plus.x, Complex64::new(s, 0.0), 1e-12));
        assert!(close(plus.z, Complex64::new(4.0, 0.0), 1e-12));
        assert_eq!(minus.x, -plus.x);
        // Residual of the returned points under the map is at machine level.
        for fp in [minus, plus] {
            assert!(step(&p, &fp).max_abs_diff(&fp) < 1e-12 * (1.0 + fp.max_abs_component()));
        }
    }

    #[test]
    fn fixed_points_r7_gives_four_four_six_exactly() {
        let p = parse_params("a=10, b=8/3, r=7, dt=0.005").unwrap();
        let [_, minus, plus] = fixed_points(&p);
        assert!(close(plus.x, Complex64::new(4.0, 0.0), 1e-12));
        assert!(close(plus.z, Complex64::new(6.0, 0.0), 1e-12));
        assert!(close(minus.x, Complex64::new(-4.0, 0.0), 1e-12));
    }

    #[test]
    fn fixed_points_complex_case() {
        // Frozen from independent evaluation of sqrt(8/3)·sqrt(3+9i).
        let p = parse_params("a=10, b=8/3, r=4+9i, dt=0.0005").unwrap();
        let [_, minus, plus] = fixed_points(&p);
        let s = Complex64::new(4.080332172835138, 2.9409370344625736);
        assert!(close(plus.x, s, 1e-12));
        assert!(close(plus.y, s, 1e-12));
        assert!(close(plus.z, Complex64::new(3.0, 9.0), 1e-12));
        assert!(close(minus.x, -s, 1e-12));
        // The published value (4.51599+2.65722i, ..., 5+9i) corresponds to
        // this formula evaluated at r shifted by +2.
        let shifted = parse_params("a=10, b=8/3, r=6+9i, dt=0.0005").unwrap();
        let [_, _, pshift] = fixed_points(&shifted);
        assert!(close(pshift.x, Complex64::new(4.51599, 2.65722), 1e-4));
        assert!(close(pshift.z, Complex64::new(5.0, 9.0), 1e-12));
    }

    #[test]
    fn fixed_points_pitchfork_degeneracy() {
        let p = parse_params("a=3, b=1.7, r=1, dt=0.01").unwrap();
        let pts = fixed_points(&p);
        for fp in pts {
            assert_eq!(fp, State3::zero());
        }
    }

    #[test]
    fn jacobian_entries_at_origin() {
        // Direct evaluation: [[1.05, -0.05, 0], [0.025, 0.995, 0], [0, 0, 0.986667]].
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let j = jacobian_at(&p, &State3::zero());
        assert!(close(j.0[0][0], Complex64::new(1.05, 0.0), 1e-15));
        assert!(close(j.0[0][1], Complex64::new(-0.05, 0.0), 1e-15));
        assert_eq!(j.0[0][2], Complex64::new(0.0, 0.0));
        assert!(close(j.0[1][0], Complex64::new(0.025, 0.0), 1e-15));
        assert!(close(j.0[1][1], Complex64::new(0.995, 0.0), 1e-15));
        assert!(close(j.0[1][2], Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(j.0[2][2], Complex64::new(1.0 - 8.0 / 3.0 * 0.005, 0.0), 1e-15));
    }

    #[test]
    fn jacobian_structural_zero_and_y_entry() {
        let p = parse_params("a=2+1i, b=0.5-0.25i, r=3-2i, dt=0.001").unwrap();
        let s = State3::new(
            Complex64::new(4.0, 1.0),
            Complex64::new(4.0, -2.0),
            Complex64::new(6.0, 0.5),
        );
        assert_eq!(jacobian_at(&p, &s).0[0][2], Complex64::new(0.0, 0.0));
        assert_eq!(map_jacobian_at(&p, &s).0[0][2], Complex64::new(0.0, 0.0));
        // Entry (2,0) is y·dt: 4·0.005 = 0.02 in the worked example.
        let p2 = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let s2 = State3::from_reals(4.0, 4.0, 6.0);
        assert!(close(jacobian_at(&p2, &s2).0[2][0], Complex64::new(0.02, 0.0), 1e-15));
    }

    #[test]
    fn eigenvalues_match_published_real_case() {
        // {0.977399, 1.02713 ± 0.0402936i} at the nonzero fixed points,
        // a=10, b=8/3, r=5, dt=0.005.
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let [_, minus, plus] = fixed_points(&p);
        for fp in [plus, minus] {
            let e = eigenvalues3(&jacobian_at(&p, &fp));
            assert!(close(e[0], Complex64::new(1.02713, 0.0402936), 1e-5), "{e:?}");
            assert!(close(e[1], Complex64::new(1.02713, -0.0402936), 1e-5));
            assert!(close(e[2], Complex64::new(0.977399, 0.0), 1e-5));
        }
    }

    #[test]
    fn eigenvalues_match_published_complex_case() {
        // {0.973849-0.00410134i, 0.990298+0.0554783i, 1.06752-0.0513769i}
        // at the nonzero fixed points for r=4+9i with dt=0.005.
        let p = parse_params("a=10, b=8/3, r=4+9i, dt=0.005").unwrap();
        let [_, _, plus] = fixed_points(&p);
        let e = eigenvalues3(&jacobian_at(&p, &plus));
        assert!(close(e[0], Complex64::new(1.06752, -0.0513769), 1e-5), "{e:?}");
        assert!(close(e[1], Complex64::new(0.990298, 0.0554783), 1e-5));
        assert!(close(e[2], Complex64::new(0.973849, -0.00410134), 1e-5));
    }

    #[test]
    fn origin_closed_form_examples() {
        // a=10, b=8/3, r=5, dt=0.005: sqrt(121-200) = sqrt(-79).
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let e = origin_eigenvalues_closed_form(&p);
        let im = 0.005 * 79.0_f64.sqrt() / 2.0;
        assert!(close(e[0], Complex64::new(1.0225, im), 1e-12), "{e:?}");
        assert!(close(e[1], Complex64::new(1.0225, -im), 1e-12));
        assert!(close(e[2], Complex64::new(1.0 - 8.0 / 3.0 * 0.005, 0.0), 1e-12));

        // a=0: the radical collapses to sqrt(1) = 1.
        let p = parse_params("a=0, b=2, r=3, dt=0.01").unwrap();
        let e = origin_eigenvalues_closed_form(&p);
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 - 0.01, 0.0),
            Complex64::new(1.0 - 2.0 * 0.01, 0.0),
        ];
        for (g, w) in e.iter().zip(want) {
            assert!(close(*g, w, 1e-14), "{e:?}");
        }

        // r=0: sqrt((1+a)^2) = 1+a on the principal branch for Re(a) > -1.
        let p = parse_params("a=3, b=2, r=0, dt=0.01").unwrap();
        let e = origin_eigenvalues_closed_form(&p);
        let want = [
            Complex64::new(1.0 + 3.0 * 0.01, 0.0),
            Complex64::new(1.0 - 0.01, 0.0),
            Complex64::new(1.0 - 2.0 * 0.01, 0.0),
        ];
        for (g, w) in e.iter().zip(want) {
            assert!(close(*g, w, 1e-14), "{e:?}");
        }
    }

    #[test]
    fn eigensolver_matches_origin_closed_form() {
        let mut seed = 42_u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 20.0 - 10.0
        };
        for _ in 0..200 {
            let p = SystemParams::new(
                Complex64::new(next(), next()),
                Complex64::new(next(), next()),
                Complex64::new(next(), next()),
                0.002,
            )
            .unwrap();
            let direct = eigenvalues3(&jacobian_at(&p, &State3::zero()));
            let closed = origin_eigenvalues_closed_form(&p);
            for (d, c) in direct.iter().zip(closed) {
                assert!(close(*d, c, 1e-10), "{direct:?} vs {closed:?}");
            }
        }
    }

    #[test]
    fn eigenvalue_residuals_are_small() {
        let p = parse_params("a=10, b=8/3, r=4+9i, dt=0.005").unwrap();
        let [_, _, plus] = fixed_points(&p);
        let j = jacobian_at(&p, &plus);
        let scale = 1.0 + j.max_abs_entry();
        for l in eigenvalues3(&j) {
            assert!(characteristic_residual(&j, l) < 1e-9 * scale.powi(3));
        }
    }

    #[test]
    fn spectra_of_paired_fixed_points_agree() {
        let p = parse_params("a=0.5497+0.9172i, b=0.7572+0.7537i, r=-4i, dt=0.0005").unwrap();
        let [_, minus, plus] = fixed_points(&p);
        let em = eigenvalues3(&jacobian_at(&p, &minus));
        let ep = eigenvalues3(&jacobian_at(&p, &plus));
        for (a, b) in em.iter().zip(ep) {
            assert!(close(*a, b, 1e-10));
        }
    }

    #[test]
    fn classify_equilibrium_verdicts() {
        let p = parse_params("a=10, b=8/3, r=5, dt=0.005").unwrap();
        let [_, _, plus] = fixed_points(&p);
        let report = classify_equilibrium(&p, &plus).unwrap();
        assert!(report.paper_stable);
        // |1.02713 ± 0.0402936i| > 1: not stable under the modulus criterion.
        assert!(!report.modulus_stable);
        assert!(report.residual < 1e-12);

        let err = classify_equilibrium(&p, &State3::from_reals(1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NotAnEquilibrium { .. }));
    }

    #[test]
    fn convergence_condition_examples() {
        let p = parse_params("a=10, b=8/3, r=4+9i, dt=0.0005").unwrap();
        let (r_abs, bound, holds) = convergence_condition(&p).unwrap();
        assert!((r_abs - 97.0_f64.sqrt()).abs() < 1e-12);
        assert!((bound - 10.0 * (10.0 + 8.0 / 3.0 + 3.0) / (10.0 - 8.0 / 3.0 - 1.0)).abs() < 1e-9);
        assert!(holds);

        let p = parse_params("a=0.5497+0.9172i, b=0.7572+0.7537i, r=-4i, dt=0.0005").unwrap();
        let (_, _, holds) = convergence_condition(&p).unwrap();
        assert!(holds);

        let p = parse_params("a=0.6557+0.0357i, b=0.8491+0.9340i, r=-99.554+9i, dt=0.00005").unwrap();
        let (_, _, holds) = convergence_condition(&p).unwrap();
        assert!(!holds);

        let p = parse_params("a=2.5, b=1.5, r=1, dt=0.01").unwrap();
        assert!(matches!(convergence_condition(&p), Err(Error::DegenerateBound)));
    }
}
