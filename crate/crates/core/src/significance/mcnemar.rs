use serde::{Deserialize, Serialize};

use super::{check_alpha, Tail, TestId, TestResult};
use crate::error::{Error, Result};
use crate::measures::PairedScores;
use crate::numerics::{chi2_sf_raw, std_normal_cdf_raw, std_normal_sf_raw, Probability};

/// Largest discordant count handled by the exact binomial test.
pub const MCNEMAR_EXACT_MAX: u64 = 25;

/// Cross-classification of per-example correctness of A and B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedOutcomeTable {
    /// Both correct.
    pub n11: u64,
    /// Only A correct.
    pub n10: u64,
    /// Only B correct.
    pub n01: u64,
    /// Both wrong.
    pub n00: u64,
}

impl PairedOutcomeTable {
    pub fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Result<Self> {
        let t = PairedOutcomeTable { n11, n10, n01, n00 };
        if t.total() == 0 {
            return Err(Error::EmptySample);
        }
        Ok(t)
    }

    /// Tallies paired 0/1 correctness values.
    pub fn from_correctness(a: &[bool], b: &[bool]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::invalid("correctness vectors differ in length"));
        }
        let (mut n11, mut n10, mut n01, mut n00) = (0, 0, 0, 0);
        for (&x, &y) in a.iter().zip(b) {
            match (x, y) {
                (true, true) => n11 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
                (false, false) => n00 += 1,
            }
        }
        Self::new(n11, n10, n01, n00)
    }

    /// Tallies paired scores that must all be exactly 0 or 1.
    pub fn from_scores(scores: &PairedScores) -> Result<Self> {
        let as_bool = |v: f64| -> Result<bool> {
            if v == 1.0 {
                Ok(true)
            } else if v == 0.0 {
                Ok(false)
            } else {
                Err(Error::invalid(format!("correctness values must be 0 or 1, got {v}")))
            }
        };
        let a = scores.a().iter().map(|&v| as_bool(v)).collect::<Result<Vec<_>>>()?;
        let b = scores.b().iter().map(|&v| as_bool(v)).collect::<Result<Vec<_>>>()?;
        Self::from_correctness(&a, &b)
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn discordant(&self) -> u64 {
        self.n10 + self.n01
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut c = 1u64;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// P[Bin(d, 1/2) <= k], exact for d <= 63.
fn half_binomial_cdf(d: u64, k: u64) -> f64 {
    let hits: u64 = (0..=k.min(d)).map(|i| binomial(d, i)).sum();
    hits as f64 / (d as f64).exp2()
}

/// McNemar's test on the discordant cells of a paired outcome table.
///
/// Uses the exact binomial test while the discordant count is at most
/// [`MCNEMAR_EXACT_MAX`], and the continuity-corrected chi-squared
/// approximation above it.
pub fn mcnemar(table: &PairedOutcomeTable, tail: Tail, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let d = table.discordant();
    if d == 0 {
        return Err(Error::degenerate("no discordant pairs: the systems never disagree"));
    }
    let n = table.total() as usize;
    let (b, c) = (table.n10, table.n01);

    if d <= MCNEMAR_EXACT_MAX {
        let p = match tail {
            Tail::TwoSided => (2.0 * half_binomial_cdf(d, b.min(c))).min(1.0),
            // P[X >= b] = P[X <= c] by symmetry
            Tail::Greater => half_binomial_cdf(d, c),
            Tail::Less => half_binomial_cdf(d, b),
        };
        return Ok(TestResult::new(
            TestId::Mcnemar,
            b.min(c) as f64,
            Probability::clamped(p),
            tail,
            n,
            alpha,
        )
        .note("exact"));
    }

    let diff = b as f64 - c as f64;
    let result = match tail {
        Tail::TwoSided => {
            let corrected = (diff.abs() - 1.0).max(0.0);
            let stat = corrected * corrected / d as f64;
            TestResult::new(
                TestId::Mcnemar,
                stat,
                Probability::clamped(chi2_sf_raw(stat, 1)),
                tail,
                n,
                alpha,
            )
        }
        Tail::Greater => {
            let z = (diff - 1.0) / (d as f64).sqrt();
            TestResult::new(TestId::Mcnemar, z, Probability::clamped(std_normal_sf_raw(z)), tail, n, alpha)
        }
        Tail::Less => {
            let z = (diff + 1.0) / (d as f64).sqrt();
            TestResult::new(TestId::Mcnemar, z, Probability::clamped(std_normal_cdf_raw(z)), tail, n, alpha)
        }
    };
    Ok(result.note("chi2_continuity_corrected").note("approximate"))
}
