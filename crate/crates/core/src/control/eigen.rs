//! Closed-form eigenvalues of 3×3 real matrices.
//!
//! The characteristic polynomial `λ³ - tr(M) λ² + m₂ λ - det(M)` is shifted to
//! the depressed cubic `t³ + p t + r` and solved with Cardano's formula in
//! complex arithmetic. Roots are then cleaned up using the fact that the
//! coefficients are real (one real root and a conjugate pair, or three real
//! roots), refined with a guarded Newton step, and sorted by
//! `(re, im)`.

use num_complex::Complex64;

use crate::matrix::{self, Matrix3};

struct Cubic {
    c2: f64,
    c1: f64,
    c0: f64,
}

impl Cubic {
    fn eval(&self, z: Complex64) -> Complex64 {
        ((z + self.c2) * z + self.c1) * z + self.c0
    }

    fn deriv(&self, z: Complex64) -> Complex64 {
        (z * 3.0 + 2.0 * self.c2) * z + self.c1
    }

    fn polish(&self, mut z: Complex64) -> Complex64 {
        for _ in 0..3 {
            let d = self.deriv(z);
            if d.norm() == 0.0 {
                break;
            }
            let next = z - self.eval(z) / d;
            if next.is_finite() && self.eval(next).norm() < self.eval(z).norm() {
                z = next;
            } else {
                break;
            }
        }
        z
    }
}

fn principal_cbrt(z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

/// The three eigenvalues of `m`, with multiplicity, sorted by real then
/// imaginary part.
pub fn eigen3(m: &Matrix3) -> [Complex64; 3] {
    let cubic = Cubic {
        c2: -matrix::trace(m),
        c1: matrix::principal_minor_sum(m),
        c0: -matrix::det(m),
    };
    let shift = -cubic.c2 / 3.0;
    let p = cubic.c1 - cubic.c2 * cubic.c2 / 3.0;
    let r = 2.0 * cubic.c2.powi(3) / 27.0 - cubic.c2 * cubic.c1 / 3.0 + cubic.c0;

    // t = u - p / (3u), u³ = -r/2 ± sqrt(r²/4 + p³/27)
    let disc = r * r / 4.0 + p * p * p / 27.0;
    let sq = Complex64::new(disc, 0.0).sqrt();
    let half_r = Complex64::new(-r / 2.0, 0.0);
    let cand = if (half_r + sq).norm() >= (half_r - sq).norm() { half_r + sq } else { half_r - sq };
    let u = principal_cbrt(cand);

    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    if u.norm() == 0.0 {
        roots = [Complex64::new(shift, 0.0); 3];
    } else {
        let mut rot = Complex64::new(1.0, 0.0);
        for root in roots.iter_mut() {
            let uk = u * rot;
            *root = uk - p / (uk * 3.0) + shift;
            rot *= omega;
        }
    }

    if disc <= 0.0 {
        // three real roots
        for z in roots.iter_mut() {
            *z = Complex64::new(cubic.polish(Complex64::new(z.re, 0.0)).re, 0.0);
        }
    } else {
        // one real root and a conjugate pair
        let real_idx = (0..3)
            .min_by(|&a, &b| roots[a].im.abs().total_cmp(&roots[b].im.abs()))
            .unwrap();
        let real = cubic.polish(Complex64::new(roots[real_idx].re, 0.0)).re;
        let others: Vec<Complex64> = (0..3).filter(|&i| i != real_idx).map(|i| roots[i]).collect();
        let mut pair = (others[0] + others[1].conj()) / 2.0;
        pair = cubic.polish(pair);
        let pair = Complex64::new(pair.re, pair.im.abs());
        roots = [Complex64::new(real, 0.0), pair, pair.conj()];
    }

    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// `det(M - λI)` in complex arithmetic.
pub fn characteristic_residual(m: &Matrix3, lambda: Complex64) -> f64 {
    let a = |i: usize, j: usize| {
        let v = Complex64::new(m[i][j], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    };
    let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
        - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    det.norm()
}
