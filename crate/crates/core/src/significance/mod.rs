//! Paired significance tests.
//!
//! Every test compares system A against system B on the same examples. The
//! direction convention is `delta = A - B`: [`Tail::Greater`] is the
//! alternative that A scores higher, [`Tail::Less`] that B does.

mod correlation;
mod mcnemar;
mod paired_t;
mod resampling;
mod wilcoxon;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Probability;

pub use correlation::{
    correlation_bootstrap, correlation_permutation, correlation_z_test,
    correlation_z_test_independent, fisher_transform, CorrelationKind,
};
pub use mcnemar::{mcnemar, PairedOutcomeTable};
pub use paired_t::paired_t;
pub(crate) use paired_t::t_from_deltas;
pub use resampling::{
    bootstrap_indices, bootstrap_replicates, paired_bootstrap, permutation_test, PairedData,
    PermutationMode,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMode};
pub(crate) use wilcoxon::wilcoxon_from_deltas;

/// Alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    /// A > B.
    Greater,
    /// A < B.
    Less,
}

impl Tail {
    /// The tail that tests the same hypothesis after exchanging A and B.
    pub fn mirrored(self) -> Tail {
        match self {
            Tail::TwoSided => Tail::TwoSided,
            Tail::Greater => Tail::Less,
            Tail::Less => Tail::Greater,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tail::TwoSided => "two_sided",
            Tail::Greater => "greater",
            Tail::Less => "less",
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sided" | "two-sided" | "both" => Ok(Tail::TwoSided),
            "greater" => Ok(Tail::Greater),
            "less" => Ok(Tail::Less),
            _ => Err(Error::invalid(format!("unknown tail {s:?}"))),
        }
    }
}

/// Identifies a test family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Mcnemar,
    PairedT,
    Wilcoxon,
    Bootstrap,
    Permutation,
    ZTest,
    CorrelationBootstrap,
    CorrelationPermutation,
}

impl TestId {
    pub fn as_str(self) -> &'static str {
        match self {
            TestId::Mcnemar => "mcnemar",
            TestId::PairedT => "paired_t",
            TestId::Wilcoxon => "wilcoxon",
            TestId::Bootstrap => "bootstrap",
            TestId::Permutation => "permutation",
            TestId::ZTest => "z_test",
            TestId::CorrelationBootstrap => "correlation_bootstrap",
            TestId::CorrelationPermutation => "correlation_permutation",
        }
    }

    /// Whether the test is parametric (assumes a distributional form).
    pub fn is_parametric(self) -> bool {
        matches!(self, TestId::PairedT | TestId::ZTest)
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mcnemar" => TestId::Mcnemar,
            "paired_t" | "t_test" | "t-test" | "t" => TestId::PairedT,
            "wilcoxon" => TestId::Wilcoxon,
            "bootstrap" => TestId::Bootstrap,
            "permutation" | "approximate_randomization" => TestId::Permutation,
            "z_test" | "z-test" | "z" => TestId::ZTest,
            "correlation_bootstrap" => TestId::CorrelationBootstrap,
            "correlation_permutation" => TestId::CorrelationPermutation,
            _ => return Err(Error::invalid(format!("unknown test {s:?}"))),
        })
    }
}

/// Outcome of one significance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestId,
    pub statistic: f64,
    pub p_value: Probability,
    pub tail: Tail,
    pub n: usize,
    pub alpha: f64,
    /// `p_value <= alpha`.
    pub reject: bool,
    /// Number of resamples; present only for sampling-based runs.
    pub resamples: Option<u64>,
    /// Seed; present only for sampling-based runs.
    pub seed: Option<u64>,
    pub notes: Vec<String>,
}

impl TestResult {
    pub(crate) fn new(
        test: TestId,
        statistic: f64,
        p_value: Probability,
        tail: Tail,
        n: usize,
        alpha: f64,
    ) -> Self {
        TestResult {
            test,
            statistic,
            p_value,
            tail,
            n,
            alpha,
            reject: p_value.value() <= alpha,
            resamples: None,
            seed: None,
            notes: Vec::new(),
        }
    }

    pub(crate) fn sampled(mut self, resamples: u64, seed: u64) -> Self {
        self.resamples = Some(resamples);
        self.seed = Some(seed);
        self
    }

    pub(crate) fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// p-value of a statistic whose null distribution is symmetric about 0 with
/// survival function `sf`.
pub(crate) fn symmetric_p(stat: f64, tail: Tail, sf: impl Fn(f64) -> f64) -> Probability {
    let p = match tail {
        Tail::TwoSided => (2.0 * sf(stat.abs())).min(1.0),
        Tail::Greater => sf(stat),
        Tail::Less => sf(-stat),
    };
    Probability::clamped(p)
}

const TIE_RTOL: f64 = 1e-12;

/// `x >= threshold`, treating values within a relative 1e-12 of the
/// threshold as ties (which count as at least as extreme).
#[inline]
pub(crate) fn at_least(x: f64, threshold: f64) -> bool {
    x >= threshold - TIE_RTOL * threshold.abs()
}
