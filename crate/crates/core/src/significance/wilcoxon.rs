use serde::{Deserialize, Serialize};

use super::{check_alpha, Tail, TestId, TestResult};
use crate::error::{Error, Result};
use crate::measures::{average_ranks, PairedScores};
use crate::numerics::{std_normal_cdf_raw, std_normal_sf_raw, Probability};

/// Largest number of nonzero deltas for which `Auto` picks the exact null.
pub const WILCOXON_EXACT_AUTO_MAX: usize = 20;
/// Largest number of nonzero deltas accepted by a forced exact run.
pub const WILCOXON_EXACT_MAX: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMode {
    Exact,
    Approx,
    #[default]
    Auto,
}

pub(crate) struct SignedRanks {
    /// Twice the average rank of each nonzero |delta|, so ties stay integral.
    pub doubled_ranks: Vec<u64>,
    pub positive: Vec<bool>,
    pub zeros_dropped: usize,
    /// Sizes of tie groups with more than one member.
    pub tie_groups: Vec<usize>,
}

impl SignedRanks {
    pub fn from_deltas(deltas: &[f64]) -> Self {
        let nonzero: Vec<f64> = deltas.iter().copied().filter(|&d| d != 0.0).collect();
        let zeros_dropped = deltas.len() - nonzero.len();
        let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
        let ranks = average_ranks(&magnitudes);
        let doubled_ranks = ranks.iter().map(|r| (2.0 * r) as u64).collect();

        let mut sorted = magnitudes;
        sorted.sort_by(f64::total_cmp);
        let mut tie_groups = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            if j - i > 1 {
                tie_groups.push(j - i);
            }
            i = j;
        }

        SignedRanks {
            doubled_ranks,
            positive: nonzero.iter().map(|&d| d > 0.0).collect(),
            zeros_dropped,
            tie_groups,
        }
    }

    pub fn m(&self) -> usize {
        self.doubled_ranks.len()
    }

    /// Twice W+.
    pub fn doubled_w_plus(&self) -> u64 {
        self.doubled_ranks
            .iter()
            .zip(&self.positive)
            .filter(|(_, &pos)| pos)
            .map(|(r, _)| r)
            .sum()
    }
}

/// Null distribution of 2·W+ over all 2^m equally likely sign assignments,
/// as probabilities indexed by the doubled statistic.
fn exact_null(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut dist = vec![0.0f64; total as usize + 1];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        reach += r;
        for w in (0..=reach).rev() {
            let with = if w >= r { dist[w - r] } else { 0.0 };
            dist[w] = 0.5 * dist[w] + 0.5 * with;
        }
    }
    dist
}

fn exact_p(ranks: &SignedRanks, tail: Tail) -> f64 {
    let dist = exact_null(&ranks.doubled_ranks);
    let w = ranks.doubled_w_plus() as usize;
    let upper: f64 = dist[w..].iter().sum();
    let lower: f64 = dist[..=w].iter().sum();
    match tail {
        Tail::TwoSided => (2.0 * upper.min(lower)).min(1.0),
        Tail::Greater => upper,
        Tail::Less => lower,
    }
}

fn approx_p(ranks: &SignedRanks, tail: Tail) -> (f64, f64) {
    let m = ranks.m() as f64;
    let w = ranks.doubled_w_plus() as f64 / 2.0;
    let mean = m * (m + 1.0) / 4.0;
    let tie_adj: f64 = ranks
        .tie_groups
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let sd = (m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_adj).sqrt();
    let d = w - mean;
    match tail {
        Tail::TwoSided => {
            let z = (d.abs() - 0.5).max(0.0) / sd;
            (z, (2.0 * std_normal_sf_raw(z)).min(1.0))
        }
        Tail::Greater => {
            let z = (d - 0.5) / sd;
            (z, std_normal_sf_raw(z))
        }
        Tail::Less => {
            let z = (d + 0.5) / sd;
            (z, std_normal_cdf_raw(z))
        }
    }
}

/// Wilcoxon signed-rank test on per-example deltas.
///
/// Zero deltas are dropped and tied magnitudes share average ranks. The
/// exact null is the distribution of W+ over all sign assignments of the
/// observed ranks (conditional on ties when present); the approximation is
/// the tie-corrected normal with a 0.5 continuity correction.
pub fn wilcoxon_signed_rank(
    scores: &PairedScores,
    tail: Tail,
    alpha: f64,
    mode: WilcoxonMode,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    wilcoxon_from_deltas(&scores.deltas(), tail, alpha, mode)
}

pub(crate) fn wilcoxon_from_deltas(
    deltas: &[f64],
    tail: Tail,
    alpha: f64,
    mode: WilcoxonMode,
) -> Result<TestResult> {
    let ranks = SignedRanks::from_deltas(deltas);
    let m = ranks.m();
    if m == 0 {
        return Err(Error::degenerate("all per-example deltas are zero"));
    }
    let ties = !ranks.tie_groups.is_empty();
    let exact = match mode {
        WilcoxonMode::Exact => {
            if m > WILCOXON_EXACT_MAX {
                return Err(Error::invalid(format!(
                    "exact Wilcoxon supports at most {WILCOXON_EXACT_MAX} nonzero deltas, got {m}"
                )));
            }
            true
        }
        WilcoxonMode::Approx => false,
        WilcoxonMode::Auto => m <= WILCOXON_EXACT_AUTO_MAX && !ties,
    };

    let w_plus = ranks.doubled_w_plus() as f64 / 2.0;
    let mut result = if exact {
        let p = exact_p(&ranks, tail);
        TestResult::new(TestId::Wilcoxon, w_plus, Probability::clamped(p), tail, deltas.len(), alpha)
            .note("exact")
    } else {
        let (z, p) = approx_p(&ranks, tail);
        TestResult::new(TestId::Wilcoxon, w_plus, Probability::clamped(p), tail, deltas.len(), alpha)
            .note("approximate")
            .note("continuity_corrected")
            .note(format!("z={z}"))
    };
    if ties {
        result = result.note("tie_corrected");
    }
    Ok(result.note(format!("zeros_dropped={}", ranks.zeros_dropped)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force enumeration of all 2^m sign vectors.
    fn enumerate_p(doubled: &[u64], w_obs: u64, tail: Tail) -> f64 {
        let m = doubled.len();
        let (mut ge, mut le) = (0u64, 0u64);
        for mask in 0u64..(1 << m) {
            let w: u64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| doubled[i]).sum();
            if w >= w_obs {
                ge += 1;
            }
            if w <= w_obs {
                le += 1;
            }
        }
        let total = (m as f64).exp2();
        let (ge, le) = (ge as f64 / total, le as f64 / total);
        match tail {
            Tail::TwoSided => (2.0 * ge.min(le)).min(1.0),
            Tail::Greater => ge,
            Tail::Less => le,
        }
    }

    fn run(deltas: &[f64], tail: Tail, mode: WilcoxonMode) -> TestResult {
        let s = PairedScores::from_vecs(deltas.to_vec(), vec![0.0; deltas.len()]).unwrap();
        wilcoxon_signed_rank(&s, tail, 0.05, mode).unwrap()
    }

    #[test]
    fn three_positive_deltas() {
        let r = run(&[0.5, 1.5, 3.0], Tail::Greater, WilcoxonMode::Auto);
        assert_eq!(r.p_value.value(), 0.125);
        assert_eq!(r.statistic, 6.0);
        assert!(r.notes.contains(&"exact".to_string()));
        assert_eq!(run(&[0.5, 1.5, 3.0], Tail::TwoSided, WilcoxonMode::Exact).p_value.value(), 0.25);
    }

    #[test]
    fn symmetric_deltas_give_p_one() {
        let r = run(&[1.0, -1.0, 2.5, -2.5, 4.0, -4.0], Tail::TwoSided, WilcoxonMode::Exact);
        assert_eq!(r.p_value.value(), 1.0);
        let r = run(&[0.3, -0.7, 1.1, -0.3, 0.7, -1.1], Tail::TwoSided, WilcoxonMode::Exact);
        assert_eq!(r.p_value.value(), 1.0);
    }

    #[test]
    fn zeros_are_dropped_and_reported() {
        let r = run(&[0.0, 0.5, 0.0, 1.5, 3.0], Tail::Greater, WilcoxonMode::Auto);
        assert_eq!(r.p_value.value(), 0.125);
        assert!(r.notes.contains(&"zeros_dropped=2".to_string()));
        assert_eq!(r.n, 5);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let s = PairedScores::from_vecs(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            wilcoxon_signed_rank(&s, Tail::TwoSided, 0.05, WilcoxonMode::Auto),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn exact_matches_enumeration_with_and_without_ties() {
        let cases: [&[f64]; 4] = [
            &[0.4, -1.2, 2.2, 0.9, -0.1, 3.3, 1.7],
            &[1.0, 1.0, -2.0, 3.0, -3.0, 3.0, 0.5, 4.0],
            &[-0.2, -0.9, -1.4, 0.3, -2.2, -0.6],
            &[2.0, -2.0, 2.0, 2.0, -1.0, 5.0, 6.0, -7.0, 8.0, 9.0, 10.0],
        ];
        for deltas in cases {
            let ranks = SignedRanks::from_deltas(deltas);
            for tail in [Tail::TwoSided, Tail::Greater, Tail::Less] {
                let r = run(deltas, tail, WilcoxonMode::Exact);
                let oracle = enumerate_p(&ranks.doubled_ranks, ranks.doubled_w_plus(), tail);
                assert_eq!(r.p_value.value(), oracle, "{deltas:?} {tail}");
            }
        }
    }

    #[test]
    fn ties_switch_auto_to_approx() {
        let r = run(&[1.0, 1.0, 2.0, 3.0, -0.5], Tail::TwoSided, WilcoxonMode::Auto);
        assert!(r.notes.contains(&"approximate".to_string()));
        assert!(r.notes.contains(&"tie_corrected".to_string()));
    }

    #[test]
    fn approx_hand_computed() {
        // m = 4, W+ = 1 + 3 + 4 = 8, mean 5, var 4*5*9/24 = 7.5
        let r = run(&[1.0, -2.0, 3.0, 4.0], Tail::Greater, WilcoxonMode::Approx);
        let z = (8.0 - 5.0 - 0.5) / 7.5f64.sqrt();
        assert_eq!(r.p_value.value(), std_normal_sf_raw(z));
    }

    #[test]
    fn exact_and_approx_agree_for_moderate_m() {
        // deterministic pseudo-random deltas, no ties
        let deltas: Vec<f64> = (0..50)
            .map(|i| {
                let x = ((i * 7919 + 13) % 101) as f64 / 101.0 + i as f64 * 1e-4;
                x - 0.45
            })
            .collect();
        for tail in [Tail::TwoSided, Tail::Greater, Tail::Less] {
            let e = run(&deltas, tail, WilcoxonMode::Exact).p_value.value();
            let a = run(&deltas, tail, WilcoxonMode::Approx).p_value.value();
            assert!((e - a).abs() < 0.02, "{tail}: exact {e} approx {a}");
        }
        // enumeration oracle on a 15-element subsample
        let sub = &deltas[..15];
        let ranks = SignedRanks::from_deltas(sub);
        let e = run(sub, Tail::TwoSided, WilcoxonMode::Exact).p_value.value();
        assert_eq!(e, enumerate_p(&ranks.doubled_ranks, ranks.doubled_w_plus(), Tail::TwoSided));
        let a = run(sub, Tail::TwoSided, WilcoxonMode::Approx).p_value.value();
        assert!((e - a).abs() < 0.02);
    }

    #[test]
    fn scale_and_swap_invariance() {
        let d = [0.3, -0.8, 1.9, 0.05, 2.2, -0.4, 1.1];
        let base = run(&d, Tail::Greater, WilcoxonMode::Exact);
        let scaled: Vec<f64> = d.iter().map(|v| v * 12.5).collect();
        let s = run(&scaled, Tail::Greater, WilcoxonMode::Exact);
        assert_eq!(s.statistic, base.statistic);
        assert_eq!(s.p_value, base.p_value);
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        assert_eq!(run(&neg, Tail::Less, WilcoxonMode::Exact).p_value, base.p_value);
        assert_eq!(
            run(&neg, Tail::TwoSided, WilcoxonMode::Exact).p_value,
            run(&d, Tail::TwoSided, WilcoxonMode::Exact).p_value
        );
    }

    #[test]
    fn forced_exact_limit() {
        let d: Vec<f64> = (1..=401).map(|i| i as f64).collect();
        let s = PairedScores::from_vecs(d, vec![0.0; 401]).unwrap();
        assert!(wilcoxon_signed_rank(&s, Tail::TwoSided, 0.05, WilcoxonMode::Exact).is_err());
    }
}
