//! Special functions behind every parametric p-value.
//!
//! Everything here is implemented directly on `f64` without external
//! numerical crates: the error function, the log-gamma function, the
//! regularized incomplete beta and gamma functions, and the distribution
//! tails built on top of them (standard normal, Student t, chi-squared).
//!
//! The checked public functions validate their domain and wrap results in
//! [`Probability`]; the `*_raw` variants skip validation and are used in the
//! hot loops of the resampling and Monte Carlo code.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FPMIN: f64 = 1e-300;
const CF_EPS: f64 = 1e-16;
const CF_MAX_ITER: usize = 20_000;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::invalid(format!("probability out of range: {value}")))
        }
    }

    /// Clamps into `[0, 1]`. Used for values that are probabilities by
    /// construction but may drift by an ulp.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

// ---------------------------------------------------------------------------
// Gamma and error functions
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// erf(x) for x >= 0 via the all-positive series
/// erf x = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1)).
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// erfc(x) for x > 0 via the Laplace continued fraction, modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..CF_MAX_ITER {
        let a = n as f64 * 0.5;
        d = x + a * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = x + a / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        1.0 - erf_series(x)
    } else if x > 27.3 {
        0.0
    } else {
        erfc_cf(x)
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.abs() < 2.5 {
        x.signum() * erf_series(x.abs())
    } else {
        1.0 - erfc(x)
    }
}

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

pub(crate) fn std_normal_cdf_raw(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub(crate) fn std_normal_sf_raw(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Standard normal CDF, Φ(z).
pub fn std_normal_cdf(z: f64) -> Result<Probability> {
    if !z.is_finite() {
        return Err(Error::invalid(format!("z must be finite, got {z}")));
    }
    Ok(Probability::clamped(std_normal_cdf_raw(z)))
}

/// Standard normal survival function, 1 − Φ(z), without cancellation.
pub fn std_normal_sf(z: f64) -> Result<Probability> {
    if !z.is_finite() {
        return Err(Error::invalid(format!("z must be finite, got {z}")));
    }
    Ok(Probability::clamped(std_normal_sf_raw(z)))
}

// ---------------------------------------------------------------------------
// Incomplete beta
// ---------------------------------------------------------------------------

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// I_x(a, b) where the caller also supplies `y = 1 - x` computed without
/// cancellation.
fn inc_beta_xy(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta_xy(b, a, y, x);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    ln_front.exp() * beta_cf(a, b, x) / a
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!(
            "incomplete beta needs a, b > 0, got a={a}, b={b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!(
            "incomplete beta needs 0 <= x <= 1, got {x}"
        )));
    }
    Ok(inc_beta_xy(a, b, x, 1.0 - x).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Student t
// ---------------------------------------------------------------------------

pub(crate) fn student_t_sf_raw(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let t2 = t * t;
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    let tail = 0.5 * inc_beta_xy(0.5 * df, 0.5, x, y);
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Upper tail P(T > t) of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: u64) -> Result<Probability> {
    if df < 1 {
        return Err(Error::invalid("t distribution needs df >= 1"));
    }
    if t.is_nan() {
        return Err(Error::invalid("t statistic is NaN"));
    }
    Ok(Probability::clamped(student_t_sf_raw(t, df as f64)))
}

/// CDF P(T <= t) of Student's t.
pub fn student_t_cdf(t: f64, df: u64) -> Result<Probability> {
    student_t_sf(-t, df)
}

// ---------------------------------------------------------------------------
// Incomplete gamma / chi-squared
// ---------------------------------------------------------------------------

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..CF_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * CF_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn reg_upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

pub(crate) fn chi2_sf_raw(x: f64, k: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    match k {
        1 => erfc((0.5 * x).sqrt()),
        2 => (-0.5 * x).exp(),
        _ => reg_upper_gamma(0.5 * k as f64, 0.5 * x),
    }
}

/// Chi-squared survival function with `k` degrees of freedom.
pub fn chi2_sf(x: f64, k: u32) -> Result<Probability> {
    if k < 1 {
        return Err(Error::invalid("chi-squared needs k >= 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("chi-squared needs x >= 0, got {x}")));
    }
    Ok(Probability::clamped(chi2_sf_raw(x, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-0.1).is_err());
        assert!(Probability::new(1.0 + 1e-12).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(0.25).unwrap().value(), 0.25);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), 0.5 * PI.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(101.0), 363.739_375_555_563_5, epsilon = 1e-10);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap().value(), 0.5);
        // 40-digit reference value
        assert_abs_diff_eq!(
            std_normal_cdf(1.96).unwrap().value(),
            0.975_002_104_851_779_563_787,
            epsilon = 1e-15
        );
        assert_eq!(std_normal_cdf(-40.0).unwrap().value(), 0.0);
        assert_eq!(std_normal_cdf(40.0).unwrap().value(), 1.0);
        assert!(std_normal_cdf(f64::INFINITY).is_err());
        assert!(std_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn normal_tail_keeps_relative_precision() {
        // Φ(-10) = 7.619853024160527e-24
        let p = std_normal_cdf(-10.0).unwrap().value();
        assert!((p / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erf_matches_reference() {
        assert_abs_diff_eq!(erf(0.5), 0.520_499_877_813_046_5, epsilon = 1e-15);
        assert_abs_diff_eq!(erf(-1.5), -0.966_105_146_475_310_7, epsilon = 1e-15);
        assert_abs_diff_eq!(erfc(3.0), 2.209_049_699_858_544e-5, epsilon = 1e-18);
    }

    #[test]
    fn inc_beta_examples() {
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert_abs_diff_eq!(reg_inc_beta(1.0, 1.0, x).unwrap(), x, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(reg_inc_beta(2.0, 2.0, 0.5).unwrap(), 0.5, epsilon = 1e-14);
        // polynomial integral: 105 * (0.4^5/5 - 0.4^6/3 + 0.4^7/7)
        assert_abs_diff_eq!(reg_inc_beta(5.0, 3.0, 0.4).unwrap(), 0.096256, epsilon = 1e-13);
        assert!(reg_inc_beta(0.0, 1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn student_t_examples() {
        assert_eq!(student_t_sf(0.0, 7).unwrap().value(), 0.5);
        assert_abs_diff_eq!(student_t_sf(1.0, 1).unwrap().value(), 0.25, epsilon = 1e-14);
        let t = 3.0 / 0.5f64.sqrt();
        assert_abs_diff_eq!(
            student_t_sf(t, 4).unwrap().value(),
            0.006_617_799_781_841_344_8,
            epsilon = 1e-12
        );
        assert!(student_t_sf(1.0, 0).is_err());
    }

    #[test]
    fn student_t_approaches_normal() {
        for &t in &[-2.0, -0.5, 0.3, 1.0, 2.5] {
            let diff = student_t_sf(t, 1_000_000).unwrap().value() - std_normal_sf_raw(t);
            assert!(diff.abs() < 1e-6, "t={t} diff={diff}");
        }
    }

    #[test]
    fn chi2_examples() {
        assert_eq!(chi2_sf(0.0, 2).unwrap().value(), 1.0);
        for &x in &[1.0, 2.0, 5.0] {
            assert_abs_diff_eq!(chi2_sf(x, 2).unwrap().value(), (-x / 2.0).exp(), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            chi2_sf(3.841, 1).unwrap().value(),
            0.050_013_683_763_956_7,
            epsilon = 1e-12
        );
        assert!(chi2_sf(-1.0, 1).is_err());
        assert!(chi2_sf(1.0, 0).is_err());
    }

    #[test]
    fn chi2_general_k_matches_closed_forms() {
        // k = 4: exp(-x/2) (1 + x/2)
        for &x in &[0.5f64, 3.0, 9.0, 20.0] {
            let expected = (-x / 2.0).exp() * (1.0 + x / 2.0);
            assert_abs_diff_eq!(chi2_sf(x, 4).unwrap().value(), expected, epsilon = 1e-13);
        }
        // k = 3: erfc(sqrt(x/2)) + sqrt(2x/pi) exp(-x/2)
        for &x in &[0.5f64, 3.0, 9.0, 20.0] {
            let expected = erfc((x / 2.0).sqrt()) + (2.0 * x / PI).sqrt() * (-x / 2.0).exp();
            assert_abs_diff_eq!(chi2_sf(x, 3).unwrap().value(), expected, epsilon = 1e-13);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn normal_symmetry(z in -38.0f64..38.0) {
            let s = std_normal_cdf(z).unwrap().value() + std_normal_cdf(-z).unwrap().value();
            prop_assert!((s - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn normal_monotone(z in -10.0f64..10.0, dz in 0.0f64..1.0) {
            prop_assert!(std_normal_cdf(z + dz).unwrap() >= std_normal_cdf(z).unwrap());
        }

        #[test]
        fn inc_beta_reflection(a in 0.1f64..40.0, b in 0.1f64..40.0, x in 0.0f64..=1.0) {
            let lhs = reg_inc_beta(a, b, x).unwrap();
            let rhs = 1.0 - reg_inc_beta(b, a, 1.0 - x).unwrap();
            prop_assert!((0.0..=1.0).contains(&lhs));
            prop_assert!((lhs - rhs).abs() <= 1e-13, "a={} b={} x={} {} {}", a, b, x, lhs, rhs);
        }

        #[test]
        fn student_t_in_unit_interval_and_decreasing(t in -50.0f64..50.0, dt in 0.0f64..2.0, df in 1u64..500) {
            let p0 = student_t_sf(t, df).unwrap().value();
            let p1 = student_t_sf(t + dt, df).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&p0));
            prop_assert!(p1 <= p0 + 1e-15);
        }

        #[test]
        fn student_t_symmetry(t in -20.0f64..20.0, df in 1u64..200) {
            let s = student_t_sf(t, df).unwrap().value() + student_t_sf(-t, df).unwrap().value();
            prop_assert!((s - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn chi2_in_unit_interval_and_decreasing(x in 0.0f64..200.0, dx in 0.0f64..5.0, k in 1u32..60) {
            let p0 = chi2_sf(x, k).unwrap().value();
            let p1 = chi2_sf(x + dx, k).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&p0));
            prop_assert!(p1 <= p0 + 1e-14);
        }
    }
}
