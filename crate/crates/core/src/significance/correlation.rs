//! Significance tests for correlation measures.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{at_least, check_alpha, symmetric_p, Tail, TestId, TestResult};
use crate::error::{Error, Result};
use crate::measures::{pearson_slices, spearman_slices, CorrelationSample};
use crate::numerics::{std_normal_sf_raw, Probability};
use crate::rng::{derive_seed, stream};

/// Variance inflation for the Fisher-transformed Spearman coefficient.
pub const SPEARMAN_VARIANCE_FACTOR: f64 = 1.06;
/// Redraws allowed for a bootstrap resample with zero variance.
pub const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

impl CorrelationKind {
    pub(crate) fn compute(self, x: &[f64], y: &[f64]) -> Option<f64> {
        match self {
            CorrelationKind::Pearson => pearson_slices(x, y),
            CorrelationKind::Spearman => spearman_slices(x, y),
        }
    }

    fn variance_factor(self) -> f64 {
        match self {
            CorrelationKind::Pearson => 1.0,
            CorrelationKind::Spearman => SPEARMAN_VARIANCE_FACTOR,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationKind::Pearson => "pearson",
            CorrelationKind::Spearman => "spearman",
        }
    }
}

impl std::str::FromStr for CorrelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(CorrelationKind::Pearson),
            "spearman" => Ok(CorrelationKind::Spearman),
            _ => Err(Error::invalid(format!("unknown correlation kind {s:?}"))),
        }
    }
}

/// Fisher transformation `F(r) = ½ ln((1 + r) / (1 − r))`.
pub fn fisher_transform(r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::invalid(format!("Fisher transform needs |r| < 1, got {r}")));
    }
    Ok(r.signum() * r.abs().atanh())
}

fn check_n(n: usize) -> Result<()> {
    if n <= 3 {
        Err(Error::InsufficientData { needed: 4, got: n })
    } else {
        Ok(())
    }
}

/// z-test for a single correlation coefficient.
///
/// Pearson: `z = (F(r) − F(r0))·√(n − 3)`. Spearman supports only `r0 = 0`:
/// `z = √((n − 3)/1.06)·F(r)`.
pub fn correlation_z_test(
    kind: CorrelationKind,
    r: f64,
    n: usize,
    tail: Tail,
    alpha: f64,
    r0: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_n(n)?;
    let fr = fisher_transform(r)?;
    let f0 = fisher_transform(r0)?;
    if kind == CorrelationKind::Spearman && r0 != 0.0 {
        return Err(Error::invalid("the Spearman z-test only supports r0 = 0"));
    }
    let z = (fr - f0) * ((n as f64 - 3.0) / kind.variance_factor()).sqrt();
    let p = symmetric_p(z, tail, std_normal_sf_raw);
    Ok(TestResult::new(TestId::ZTest, z, p, tail, n, alpha).note(kind.as_str()))
}

/// z-test for the difference of two correlations from independent samples
/// of equal size: `z = (F(r_a) − F(r_b)) / √(2·v/(n − 3))` with `v = 1`
/// (Pearson) or 1.06 (Spearman).
pub fn correlation_z_test_independent(
    kind: CorrelationKind,
    r_a: f64,
    r_b: f64,
    n: usize,
    tail: Tail,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_n(n)?;
    let diff = fisher_transform(r_a)? - fisher_transform(r_b)?;
    let z = diff / (2.0 * kind.variance_factor() / (n as f64 - 3.0)).sqrt();
    let p = symmetric_p(z, tail, std_normal_sf_raw);
    Ok(TestResult::new(TestId::ZTest, z, p, tail, n, alpha)
        .note(kind.as_str())
        .note("independence_assumed"))
}

fn check_pair(a: &CorrelationSample, b: &CorrelationSample) -> Result<()> {
    if a.len() != b.len() || a.gold() != b.gold() {
        return Err(Error::invalid(
            "both correlation samples must share the same gold vector",
        ));
    }
    Ok(())
}

fn observed_delta(kind: CorrelationKind, a: &CorrelationSample, b: &CorrelationSample) -> Result<f64> {
    let ca = kind
        .compute(a.predictions(), a.gold())
        .ok_or_else(|| Error::degenerate("system A's predictions or the gold values have zero variance"))?;
    let cb = kind
        .compute(b.predictions(), b.gold())
        .ok_or_else(|| Error::degenerate("system B's predictions have zero variance"))?;
    Ok(ca - cb)
}

/// Paired bootstrap on `corr(A, gold) − corr(B, gold)`, resampling examples
/// jointly. A resample with zero variance is redrawn up to
/// [`MAX_REDRAWS`] times.
pub fn correlation_bootstrap(
    sample_a: &CorrelationSample,
    sample_b: &CorrelationSample,
    kind: CorrelationKind,
    resamples: u64,
    seed: u64,
    tail: Tail,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_pair(sample_a, sample_b)?;
    if resamples < super::resampling::MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::invalid(format!(
            "bootstrap needs at least {} resamples, got {resamples}",
            super::resampling::MIN_BOOTSTRAP_RESAMPLES
        )));
    }
    let n = sample_a.len();
    let observed = observed_delta(kind, sample_a, sample_b)?;

    let outcomes: Vec<Option<(bool, u64)>> = (0..resamples)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(pa, pb, g), r| {
                for attempt in 0..=MAX_REDRAWS {
                    let mut rng = if attempt == 0 {
                        stream(seed, r)
                    } else {
                        stream(derive_seed(seed, r), attempt)
                    };
                    for j in 0..n {
                        let i = rng.random_range(0..n);
                        pa[j] = sample_a.predictions()[i];
                        pb[j] = sample_b.predictions()[i];
                        g[j] = sample_a.gold()[i];
                    }
                    if let (Some(ca), Some(cb)) = (kind.compute(pa, g), kind.compute(pb, g)) {
                        let centred = ca - cb - observed;
                        let extreme = match tail {
                            Tail::TwoSided => at_least(centred.abs(), observed.abs()),
                            Tail::Greater => at_least(centred, observed),
                            Tail::Less => at_least(-centred, -observed),
                        };
                        return Some((extreme, attempt));
                    }
                }
                None
            },
        )
        .collect();

    if outcomes.iter().any(Option::is_none) {
        return Err(Error::degenerate(format!(
            "a bootstrap resample kept zero variance after {MAX_REDRAWS} redraws"
        )));
    }
    let extreme = outcomes.iter().flatten().filter(|o| o.0).count() as u64;
    let redrawn = outcomes.iter().flatten().filter(|o| o.1 > 0).count();

    let p = (extreme + 1) as f64 / (resamples + 1) as f64;
    let mut result = TestResult::new(
        TestId::CorrelationBootstrap,
        observed,
        Probability::clamped(p),
        tail,
        n,
        alpha,
    )
    .sampled(resamples, seed)
    .note(kind.as_str());
    if redrawn > 0 {
        result = result.note(format!("redrawn_resamples={redrawn}"));
    }
    Ok(result)
}

/// Paired permutation test on `corr(A, gold) − corr(B, gold)`: each
/// resample swaps the two systems' predictions on a random subset of
/// examples. Permuted samples with zero variance count as delta 0.
pub fn correlation_permutation(
    sample_a: &CorrelationSample,
    sample_b: &CorrelationSample,
    kind: CorrelationKind,
    resamples: u64,
    seed: u64,
    tail: Tail,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_pair(sample_a, sample_b)?;
    if resamples == 0 {
        return Err(Error::invalid("permutation needs at least one resample"));
    }
    let n = sample_a.len();
    let observed = observed_delta(kind, sample_a, sample_b)?;
    let gold = sample_a.gold();

    let (extreme, degenerate) = (0..resamples)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(pa, pb), r| {
                let mut rng = stream(seed, r);
                let mut word = 0u64;
                for i in 0..n {
                    if i % 64 == 0 {
                        word = rng.next_u64();
                    }
                    let (x, y) = (sample_a.predictions()[i], sample_b.predictions()[i]);
                    if (word >> (i % 64)) & 1 == 1 {
                        pa[i] = y;
                        pb[i] = x;
                    } else {
                        pa[i] = x;
                        pb[i] = y;
                    }
                }
                let (delta, degenerate) = match (kind.compute(pa, gold), kind.compute(pb, gold)) {
                    (Some(ca), Some(cb)) => (ca - cb, false),
                    _ => (0.0, true),
                };
                let extreme = match tail {
                    Tail::TwoSided => at_least(delta.abs(), observed.abs()),
                    Tail::Greater => at_least(delta, observed),
                    Tail::Less => at_least(-delta, -observed),
                };
                (extreme as u64, degenerate as u64)
            },
        )
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));

    let p = (extreme + 1) as f64 / (resamples + 1) as f64;
    let mut result = TestResult::new(
        TestId::CorrelationPermutation,
        observed,
        Probability::clamped(p),
        tail,
        n,
        alpha,
    )
    .sampled(resamples, seed)
    .note(kind.as_str());
    if degenerate > 0 {
        result = result.note(format!("degenerate_resamples={degenerate}"));
    }
    Ok(result)
}
