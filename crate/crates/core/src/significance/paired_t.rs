use super::{check_alpha, symmetric_p, Tail, TestId, TestResult};
use crate::error::{Error, Result};
use crate::measures::PairedScores;
use crate::numerics::student_t_sf_raw;

/// Matched-pair t-test on per-example deltas `a_i - b_i`.
pub fn paired_t(scores: &PairedScores, tail: Tail, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = scores.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let deltas = scores.deltas();
    t_from_deltas(&deltas, tail, alpha)
}

pub(crate) fn t_from_deltas(deltas: &[f64], tail: Tail, alpha: f64) -> Result<TestResult> {
    let n = deltas.len();
    if deltas.iter().all(|&d| d == deltas[0]) {
        return Err(Error::degenerate("per-example deltas have zero variance"));
    }
    let nf = n as f64;
    let mean = deltas.iter().sum::<f64>() / nf;
    let ss: f64 = deltas.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (nf - 1.0)).sqrt();
    let t = mean / (sd / nf.sqrt());
    let df = nf - 1.0;
    let p = symmetric_p(t, tail, |x| student_t_sf_raw(x, df));
    Ok(TestResult::new(TestId::PairedT, t, p, tail, n, alpha).note(format!("df={}", n - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scores(a: &[f64], b: &[f64]) -> PairedScores {
        PairedScores::from_vecs(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_example() {
        let s = scores(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]);
        let r = paired_t(&s, Tail::TwoSided, 0.05).unwrap();
        // mean 3, sd sqrt(2.5), t = 3 / sqrt(0.5)
        assert_abs_diff_eq!(r.statistic, 4.242_640_687_119_285, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value.value(), 0.013_235_599_563_682_69, epsilon = 1e-12);
        assert!(r.reject);
        assert_eq!(r.n, 5);
        let one = paired_t(&s, Tail::Greater, 0.05).unwrap();
        assert_abs_diff_eq!(one.p_value.value() * 2.0, r.p_value.value(), epsilon = 1e-15);
    }

    #[test]
    fn identical_systems_are_degenerate() {
        let s = scores(&[0.3, 0.9, 0.1], &[0.3, 0.9, 0.1]);
        assert!(matches!(paired_t(&s, Tail::TwoSided, 0.05), Err(Error::DegenerateSample(_))));
        let s = scores(&[1.0, 2.0], &[0.0, 1.0]);
        assert!(matches!(paired_t(&s, Tail::TwoSided, 0.05), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn needs_two_pairs() {
        let s = scores(&[1.0], &[0.0]);
        assert_eq!(
            paired_t(&s, Tail::TwoSided, 0.05),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        );
    }

    #[test]
    fn shift_invariance() {
        let a = [0.25, 0.5, 1.75, 0.0, 2.5, 1.0];
        let b = [0.5, 0.25, 1.0, 0.25, 1.5, 1.25];
        let base = paired_t(&scores(&a, &b), Tail::TwoSided, 0.05).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| v + 8.0).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + 8.0).collect();
        assert_eq!(paired_t(&scores(&a2, &b2), Tail::TwoSided, 0.05).unwrap(), base);
    }

    #[test]
    fn scale_and_label_swap() {
        let a = [0.31, 0.77, 0.12, 0.95, 0.44, 0.68, 0.59];
        let b = [0.22, 0.70, 0.20, 0.81, 0.41, 0.52, 0.61];
        let s = scores(&a, &b);
        let base = paired_t(&s, Tail::Greater, 0.05).unwrap();
        let a3: Vec<f64> = a.iter().map(|v| v * 3.7).collect();
        let b3: Vec<f64> = b.iter().map(|v| v * 3.7).collect();
        let scaled = paired_t(&scores(&a3, &b3), Tail::Greater, 0.05).unwrap();
        assert_abs_diff_eq!(scaled.statistic, base.statistic, epsilon = 1e-12);
        let swapped = paired_t(&s.swapped(), Tail::Less, 0.05).unwrap();
        assert_eq!(swapped.p_value, base.p_value);
        assert_eq!(swapped.statistic, -base.statistic);
    }
}
