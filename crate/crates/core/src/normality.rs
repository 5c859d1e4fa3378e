//! D'Agostino–Pearson K² omnibus normality test.
//!
//! Gates the parametric branch: when per-example deltas fail this test the
//! recommendation falls back to a nonparametric test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{chi2_sf_raw, Probability};

/// Smallest sample the K² transforms are used on.
pub const MIN_NORMALITY_N: usize = 20;
pub const DEFAULT_ALPHA_NORM: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub statistic: f64,
    pub p_value: Probability,
    pub n: usize,
    pub method: String,
    /// `p_value > alpha_norm`.
    pub pass: bool,
}

/// Skewness z-score from the sample skewness `g1` (D'Agostino 1970).
fn skewness_z(g1: f64, n: f64) -> f64 {
    let y = g1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    delta * (y / alpha).asinh()
}

/// Kurtosis z-score from the Pearson kurtosis `b2` (Anscombe–Glynn).
fn kurtosis_z(b2: f64, n: f64) -> f64 {
    let mean = 3.0 * (n - 1.0) / (n + 1.0);
    let var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    let x = (b2 - mean) / var.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let denom = 1.0 + x * (2.0 / (a - 4.0)).sqrt();
    let term2 = denom.signum() * ((1.0 - 2.0 / a) / denom.abs()).cbrt();
    (term1 - term2) / (2.0 / (9.0 * a)).sqrt()
}

/// Sample skewness and Pearson kurtosis from central moments. `None` on
/// zero variance.
fn moments(sample: &[f64]) -> Option<(f64, f64)> {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // relative guard: constant samples leave rounding residue in m2
    let scale = sample.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m2 <= (scale * 1e-12).powi(2) {
        return None;
    }
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2)))
}

/// Raw K² statistic and its chi-squared(2) p-value; used by Monte Carlo code.
pub(crate) fn k2_raw(sample: &[f64]) -> Option<(f64, f64)> {
    let n = sample.len() as f64;
    let (g1, b2) = moments(sample)?;
    let z1 = skewness_z(g1, n);
    let z2 = kurtosis_z(b2, n);
    let k2 = z1 * z1 + z2 * z2;
    Some((k2, chi2_sf_raw(k2, 2)))
}

/// D'Agostino–Pearson K² test: `K² = Z₁(√b₁)² + Z₂(b₂)²`, referred to a
/// chi-squared distribution with 2 degrees of freedom.
pub fn dagostino_k2(sample: &[f64], alpha_norm: f64) -> Result<NormalityReport> {
    if !(alpha_norm > 0.0 && alpha_norm < 1.0) {
        return Err(Error::invalid(format!("alpha_norm must lie in (0, 1), got {alpha_norm}")));
    }
    if sample.len() < MIN_NORMALITY_N {
        return Err(Error::InsufficientData {
            needed: MIN_NORMALITY_N,
            got: sample.len(),
        });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("sample contains non-finite values"));
    }
    let (k2, p) = k2_raw(sample).ok_or_else(|| Error::degenerate("sample has zero variance"))?;
    Ok(NormalityReport {
        statistic: k2,
        p_value: Probability::clamped(p),
        n: sample.len(),
        method: "dagostino_pearson_k2".to_string(),
        pass: p > alpha_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, Exp, Normal};

    fn reference_sample() -> Vec<f64> {
        (0..40)
            .map(|i| ((i * 37) % 101) as f64 / 10.0 + ((i * i) % 7) as f64 * 0.3)
            .collect()
    }

    #[test]
    fn matches_reference_values() {
        // reference values from scipy.stats (skewtest, kurtosistest, normaltest)
        let x = reference_sample();
        let (g1, b2) = moments(&x).unwrap();
        assert_abs_diff_eq!(skewness_z(g1, 40.0), 0.117_119_995_292_439_72, epsilon = 1e-10);
        assert_abs_diff_eq!(kurtosis_z(b2, 40.0), -2.363_063_762_616_167, epsilon = 1e-10);
        let r = dagostino_k2(&x, 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 5.597_787_439_486_978, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value.value(), 0.060_877_372_822_003_485, epsilon = 1e-10);
        assert!(r.pass);

        let y: Vec<f64> = (0..30).map(|i| (-2.0 + 4.0 * i as f64 / 29.0).exp()).collect();
        let r = dagostino_k2(&y, 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 9.930_922_173_522_898, epsilon = 1e-9);
        assert!(!r.pass);
    }

    #[test]
    fn symmetric_sample_has_zero_skew_z() {
        let half: Vec<f64> = (1..=15).map(|i| (i as f64).sqrt()).collect();
        let x: Vec<f64> = half.iter().flat_map(|&v| [v, -v]).collect();
        let (g1, _) = moments(&x).unwrap();
        assert_eq!(g1, 0.0);
        assert_eq!(skewness_z(g1, x.len() as f64), 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            dagostino_k2(&[1.0; 19], 0.05),
            Err(Error::InsufficientData { needed: 20, got: 19 })
        );
        assert!(matches!(dagostino_k2(&[0.1; 25], 0.05), Err(Error::DegenerateSample(_))));
        assert!(dagostino_k2(&reference_sample(), 0.0).is_err());
    }

    #[test]
    fn affine_invariance() {
        let x = reference_sample();
        let base = dagostino_k2(&x, 0.05).unwrap();
        for (scale, shift) in [(2.0, 0.0), (-0.5, 3.0), (1e3, -7.0)] {
            let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let r = dagostino_k2(&y, 0.05).unwrap();
            assert_abs_diff_eq!(r.statistic, base.statistic, epsilon = 1e-9);
            assert_abs_diff_eq!(r.p_value.value(), base.p_value.value(), epsilon = 1e-10);
        }
    }

    #[test]
    fn large_samples() {
        let mut rng = stream(11, 0);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        assert!(dagostino_k2(&x, 0.05).unwrap().p_value.value() > 1e-3);
        let exp = Exp::new(1.0).unwrap();
        let y: Vec<f64> = (0..10_000).map(|_| exp.sample(&mut rng)).collect();
        assert!(dagostino_k2(&y, 0.05).unwrap().p_value.value() < 1e-3);
    }

    #[test]
    fn null_rejection_rate_is_calibrated() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let trials = 10_000;
        let rejections = (0..trials)
            .filter(|&t| {
                let mut rng = stream(2024, t);
                let x: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
                !dagostino_k2(&x, 0.05).unwrap().pass
            })
            .count();
        let rate = rejections as f64 / trials as f64;
        assert!((0.035..=0.065).contains(&rate), "rate {rate}");
    }
}
