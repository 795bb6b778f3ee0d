//! Closed-form roots of monic complex cubics, each polished with one Newton
//! step. The closed form avoids iteration-count nondeterminism; the polish
//! restores accuracy near discriminant zeros.

use num_complex::Complex64;

/// Roots of z^3 + c2 z^2 + c1 z + c0 = 0, unordered.
pub fn solve_monic_cubic(c2: Complex64, c1: Complex64, c0: Complex64) -> [Complex64; 3] {
    let one_third = 1.0 / 3.0;
    let shift = c2 * one_third;

    // Depressed form t^3 + p t + q with z = t - c2/3.
    let p = c1 - c2 * c2 * one_third;
    let q = c0 - c2 * c1 * one_third + c2 * c2 * c2 * (2.0 / 27.0);

    let roots_t = depressed_roots(p, q);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    for (i, t) in roots_t.into_iter().enumerate() {
        roots[i] = polish(t - shift, c2, c1, c0);
    }
    roots
}

fn depressed_roots(p: Complex64, q: Complex64) -> [Complex64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    if p == zero && q == zero {
        return [zero; 3];
    }
    // u^3 = -q/2 ± sqrt((q/2)^2 + (p/3)^3); take the branch with the larger
    // magnitude to avoid cancellation, then v = -p/(3u).
    let half_q = q * 0.5;
    let disc = half_q * half_q + (p * (1.0 / 3.0)).powu(3);
    let s = disc.sqrt();
    let w1 = -half_q + s;
    let w2 = -half_q - s;
    let w = if w1.norm_sqr() >= w2.norm_sqr() { w1 } else { w2 };
    let u = w.cbrt();
    let v = if u == zero { zero } else { -p / (u * 3.0) };

    // The three cube roots pair with v rotated the opposite way.
    let omega = Complex64::new(-0.5, 0.75_f64.sqrt());
    let omega2 = Complex64::new(-0.5, -(0.75_f64.sqrt()));
    [u + v, u * omega + v * omega2, u * omega2 + v * omega]
}

fn polish(z: Complex64, c2: Complex64, c1: Complex64, c0: Complex64) -> Complex64 {
    let f = ((z + c2) * z + c1) * z + c0;
    let df = (z * 3.0 + c2 * 2.0) * z + c1;
    if df.norm_sqr() > 0.0 {
        let step = f / df;
        if step.re.is_finite() && step.im.is_finite() {
            return z - step;
        }
    }
    z
}

/// Evaluates z^3 + c2 z^2 + c1 z + c0.
pub fn eval_monic_cubic(z: Complex64, c2: Complex64, c1: Complex64, c0: Complex64) -> Complex64 {
    ((z + c2) * z + c1) * z + c0
}
