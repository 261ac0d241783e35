//! One-parameter Mittag-Leffler function on a bounded real domain.

use super::AnalysisError;
use crate::special::ln_gamma;

/// Largest `|z|` accepted by [`mittag_leffler`].
pub const ML_DOMAIN: f64 = 30.0;

/// Largest acceptable ratio of estimated rounding error to `|E_q(z)|`.
const ML_RELATIVE_BUDGET: f64 = 1e-6;

const MAX_TERMS: usize = 20_000;

/// `E_q(z) = Σ_k z^k / Γ(qk + 1)` for `q ∈ (0, 1]`, `|z| ≤ 30`.
///
/// Terms are formed as `exp(k ln|z| - ln Γ(qk+1))` and accumulated with
/// Neumaier compensation. Each term carries a relative error proportional
/// to the size of its exponent, so for large negative `z` the estimated
/// absolute error `Σ |t_k| · δ_k` is tracked and the call fails with
/// [`AnalysisError::PrecisionLoss`] once it exceeds `1e-6 · |E_q(z)|`.
pub fn mittag_leffler(q: f64, z: f64) -> Result<f64, AnalysisError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(AnalysisError::InvalidOrder { value: q });
    }
    if !z.is_finite() || z.abs() > ML_DOMAIN {
        return Err(AnalysisError::DomainExceeded { z });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let ln_abs_z = z.abs().ln();
    let negative = z < 0.0;

    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
    let mut err_est = 0.0f64;
    let mut prev = 1.0f64;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let expo = kf * ln_abs_z - ln_gamma(q * kf + 1.0);
        let mag = expo.exp();
        let term = if negative && k % 2 == 1 { -mag } else { mag };

        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        err_est += mag * (4.0 + expo.abs() + (kf * ln_abs_z).abs()) * f64::EPSILON;

        if mag < 1e-16 && mag <= prev {
            break;
        }
        prev = mag;
    }
    let value = sum + comp;
    if !value.is_finite() || err_est > ML_RELATIVE_BUDGET * value.abs() {
        return Err(AnalysisError::PrecisionLoss { q, z, estimate: err_est, value });
    }
    Ok(value)
}

/// Solution `e_i(t) = e0_i · E_{q_i}(-t^{q_i})` of `D^{q_i} e_i = -e_i`.
pub fn predicted_error(e0: [f64; 3], orders: [f64; 3], t: f64) -> Result<[f64; 3], AnalysisError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = e0[i] * mittag_leffler(orders[i], -t.powf(orders[i]))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::erf::erfc;

    #[test]
    fn zero_argument() {
        for q in [0.01, 0.3, 0.99, 1.0] {
            assert_eq!(mittag_leffler(q, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn unit_order_is_exponential() {
        assert!((mittag_leffler(1.0, -1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        for z in [-7.5, -0.3] {
            let got = mittag_leffler(1.0, z).unwrap();
            assert!((got - z.exp()).abs() < 1e-11, "z={z}: {got}");
        }
        for z in [0.4, 3.0, 12.0, 30.0] {
            let got = mittag_leffler(1.0, z).unwrap();
            assert!(((got - z.exp()) / z.exp()).abs() < 1e-13, "z={z}: {got}");
        }
    }

    #[test]
    fn half_order_matches_erfc_identity() {
        // E_{1/2}(-x) = exp(x²) erfc(x)
        for x in [0.1f64, 0.5, 1.0, 2.0, 3.5] {
            let want = (x * x).exp() * erfc(x);
            let got = mittag_leffler(0.5, -x).unwrap();
            assert!(((got - want) / want).abs() < 1e-9, "x={x}: {got} vs {want}");
        }
        assert!((mittag_leffler(0.5, -1.0).unwrap() - 0.4275836).abs() < 1e-7);
    }

    #[test]
    fn domain_and_order_checks() {
        assert!(matches!(mittag_leffler(0.5, 30.5), Err(AnalysisError::DomainExceeded { .. })));
        assert!(matches!(mittag_leffler(0.5, -31.0), Err(AnalysisError::DomainExceeded { .. })));
        assert!(matches!(mittag_leffler(0.5, f64::NAN), Err(AnalysisError::DomainExceeded { .. })));
        assert!(matches!(mittag_leffler(0.0, 1.0), Err(AnalysisError::InvalidOrder { .. })));
        assert!(matches!(mittag_leffler(1.2, 1.0), Err(AnalysisError::InvalidOrder { .. })));
    }

    #[test]
    fn cancellation_is_reported_not_returned() {
        // E_1(-30) = 9.4e-14 while the largest term is ~8e11.
        assert!(matches!(mittag_leffler(1.0, -30.0), Err(AnalysisError::PrecisionLoss { .. })));
        assert!(matches!(mittag_leffler(0.99, -28.0), Err(AnalysisError::PrecisionLoss { .. })));
    }

    #[test]
    fn predicted_error_examples() {
        let e0 = [6.0, 3.0, 2.0];
        assert_eq!(predicted_error(e0, [0.99; 3], 0.0).unwrap(), e0);
        let p = predicted_error(e0, [1.0; 3], 1.0).unwrap();
        let em1 = (-1f64).exp();
        for i in 0..3 {
            assert!((p[i] - e0[i] * em1).abs() < 1e-14);
        }
        assert!((p[0] - 2.2073).abs() < 1e-4 && (p[1] - 1.1036).abs() < 1e-4);
        assert!((p[2] - 0.7358).abs() < 1e-4);

        let p = predicted_error(e0, [0.99; 3], 1.0).unwrap();
        let series = direct_series(0.99, -1.0);
        for i in 0..3 {
            assert!((p[i] - e0[i] * series).abs() < 1e-13);
        }
        assert!(predicted_error(e0, [0.99; 3], -1.0).is_err());
    }

    /// Plain 60-term partial sum with `statrs` Γ, for moderate arguments.
    fn direct_series(q: f64, z: f64) -> f64 {
        (0..60)
            .map(|k| z.powi(k) / statrs::function::gamma::gamma(q * k as f64 + 1.0))
            .sum()
    }

    proptest! {
        #[test]
        fn agrees_with_plain_series_on_small_arguments(q in 0.6..=1.0f64, z in -2.0..2.0f64) {
            let got = mittag_leffler(q, z).unwrap();
            let want = direct_series(q, z);
            prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
        }

        #[test]
        fn decreasing_on_negative_axis(q in 0.5..=1.0f64, x in 0.0..3.0f64) {
            let a = mittag_leffler(q, -x).unwrap();
            let b = mittag_leffler(q, -x - 0.25).unwrap();
            prop_assert!(b < a && b > 0.0);
        }
    }
}
