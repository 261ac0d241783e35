//! Product-integration weights of the fractional Adams predictor–corrector.
//!
//! Both weight families depend on `(j, n)` only through the lag `k = n - j`,
//! except for the corrector weight at `j = 0`. A [`WeightTable`] therefore
//! caches one lag-indexed row per order and grows it as the step index
//! advances.
//!
//! The textbook expressions subtract nearly equal powers once the lag is
//! large (`k^(q+1)` can be ~1e10 while the weight is O(1)). Beyond a small
//! lag the weights are evaluated through `expm1`/`ln1p` or a binomial series
//! in `1/k`, which keeps them accurate to a few ulps.

use super::SolveError;

/// Lags below this use the direct power formulas.
const SERIES_CUTOVER: usize = 8;

pub(crate) fn validate_order(q: f64) -> Result<(), SolveError> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(SolveError::InvalidOrder { index: 0, value: q })
    }
}

/// Predictor weight at lag `k`: `(k+1)^q - k^q`.
pub(crate) fn predictor_lag(q: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kp1 = (k + 1) as f64;
    if k < SERIES_CUTOVER {
        return kp1.powf(q) - (k as f64).powf(q);
    }
    // (k+1)^q * (1 - (1 - x)^q), x = 1/(k+1)
    let x = 1.0 / kp1;
    -kp1.powf(q) * (q * (-x).ln_1p()).exp_m1()
}

/// Corrector weight at lag `k >= 0` for `1 <= j <= n`:
/// `(k+2)^p + k^p - 2(k+1)^p` with `p = q + 1`.
pub(crate) fn corrector_lag(q: f64, k: usize) -> f64 {
    let p = q + 1.0;
    if k < SERIES_CUTOVER {
        let k = k as f64;
        return (k + 2.0).powf(p) + k.powf(p) - 2.0 * (k + 1.0).powf(p);
    }
    // (k+1)^p * [(1+x)^p + (1-x)^p - 2] = (k+1)^p * 2 Σ_{m>=1} C(p, 2m) x^{2m}
    let kp1 = (k + 1) as f64;
    let x = 1.0 / kp1;
    let x2 = x * x;
    let mut binom = 1.0; // C(p, m)
    let mut xpow = 1.0;
    let mut sum = 0.0;
    let mut m = 0usize;
    loop {
        m += 1;
        binom *= (p - (m as f64) + 1.0) / m as f64;
        m += 1;
        binom *= (p - (m as f64) + 1.0) / m as f64;
        xpow *= x2;
        let term = binom * xpow;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || m > 200 {
            break;
        }
    }
    2.0 * kp1.powf(p) * sum
}

/// Corrector weight for the initial value, `a_{0,n+1} = n^p - (n - q)(n+1)^q`.
pub(crate) fn corrector_first(q: f64, n: usize) -> f64 {
    let p = q + 1.0;
    if n < SERIES_CUTOVER {
        let n = n as f64;
        return n.powf(p) - (n - q) * (n + 1.0).powf(q);
    }
    // n^p * [1 - (1 - q x)(1 + x)^q], x = 1/n
    //   = -n^p * Σ_{m>=2} [C(q, m) - q C(q, m-1)] x^m
    let nf = n as f64;
    let x = 1.0 / nf;
    let mut prev = q; // C(q, 1)
    let mut xpow = x;
    let mut sum = 0.0;
    for m in 2..400 {
        let cur = prev * (q - (m as f64) + 1.0) / m as f64;
        xpow *= x;
        let term = (cur - q * prev) * xpow;
        sum += term;
        prev = cur;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    -nf.powf(p) * sum
}

/// Predictor weights `b_{j,n+1}` for `j = 0..=n`.
pub fn weights_b(q: f64, n: usize) -> Result<Vec<f64>, SolveError> {
    validate_order(q)?;
    Ok((0..=n).map(|j| predictor_lag(q, n - j)).collect())
}

/// Corrector weights `a_{j,n+1}` for `j = 0..=n+1`.
pub fn weights_a(q: f64, n: usize) -> Result<Vec<f64>, SolveError> {
    validate_order(q)?;
    let mut out = Vec::with_capacity(n + 2);
    out.push(corrector_first(q, n));
    out.extend((1..=n).map(|j| corrector_lag(q, n - j)));
    out.push(1.0);
    Ok(out)
}

/// Lag-indexed weight rows for a single order, grown on demand.
#[derive(Debug, Clone)]
pub(crate) struct WeightTable {
    pub(crate) q: f64,
    pub(crate) b: Vec<f64>,
    pub(crate) a: Vec<f64>,
}

impl WeightTable {
    pub(crate) fn new(q: f64) -> Self {
        Self { q, b: Vec::new(), a: Vec::new() }
    }

    /// Makes lags `0..=max_lag` available.
    pub(crate) fn ensure(&mut self, max_lag: usize) {
        while self.b.len() <= max_lag {
            let k = self.b.len();
            self.b.push(predictor_lag(self.q, k));
            self.a.push(corrector_lag(self.q, k));
        }
    }
}
