//! Fixed 3×3 real matrices as plain row-major arrays.

pub type Matrix3 = [[f64; 3]; 3];

pub const ZERO: Matrix3 = [[0.0; 3]; 3];

pub fn identity() -> Matrix3 {
    diag([1.0, 1.0, 1.0])
}

pub fn diag(d: [f64; 3]) -> Matrix3 {
    let mut m = ZERO;
    for i in 0..3 {
        m[i][i] = d[i];
    }
    m
}

pub fn add(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut m = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][j] + b[i][j];
        }
    }
    m
}

pub fn scale(a: &Matrix3, s: f64) -> Matrix3 {
    let mut m = *a;
    m.iter_mut().flatten().for_each(|v| *v *= s);
    m
}

pub fn mul_vec(a: &Matrix3, v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub fn trace(a: &Matrix3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn det(a: &Matrix3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Sum of the three principal 2×2 minors (second invariant).
pub fn principal_minor_sum(a: &Matrix3) -> f64 {
    (a[0][0] * a[1][1] - a[0][1] * a[1][0])
        + (a[0][0] * a[2][2] - a[0][2] * a[2][0])
        + (a[1][1] * a[2][2] - a[1][2] * a[2][1])
}

/// Largest absolute entry.
pub fn max_abs(a: &Matrix3) -> f64 {
    a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn is_finite(a: &Matrix3) -> bool {
    a.iter().flatten().all(|v| v.is_finite())
}
