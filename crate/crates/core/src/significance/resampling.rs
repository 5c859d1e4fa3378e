//! Paired bootstrap and paired permutation (approximate randomization) tests.
//!
//! Resample `r` draws only from `rng::stream(seed, r)`, and tallies are
//! integer counts, so p-values are identical for any thread count.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{at_least, check_alpha, Tail, TestId, TestResult};
use crate::error::{Error, Result};
use crate::measures::{combine_totals, PairedScores, Side, SufficientStats};
use crate::numerics::Probability;
use crate::rng::{stream, StreamRng};

/// Smallest bootstrap size accepted.
pub const MIN_BOOTSTRAP_RESAMPLES: u64 = 100;
/// Largest n for which every swap mask is enumerated.
pub const PERMUTATION_EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    Exact,
    Sampled,
    #[default]
    Auto,
}

/// Input to the resampling tests.
#[derive(Debug, Clone, Copy)]
pub enum PairedData<'a> {
    /// Per-example scores; the corpus statistic is the mean.
    Scores(&'a PairedScores),
    /// Per-example count vectors re-aggregated by their combiner.
    Counts(&'a SufficientStats),
}

impl<'a> From<&'a PairedScores> for PairedData<'a> {
    fn from(s: &'a PairedScores) -> Self {
        PairedData::Scores(s)
    }
}

impl<'a> From<&'a SufficientStats> for PairedData<'a> {
    fn from(s: &'a SufficientStats) -> Self {
        PairedData::Counts(s)
    }
}

impl PairedData<'_> {
    pub fn len(&self) -> usize {
        match self {
            PairedData::Scores(s) => s.len(),
            PairedData::Counts(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Default)]
struct Scratch {
    totals: Vec<u64>,
    words: Vec<u64>,
}

enum Prepared<'a> {
    Scores { deltas: Vec<f64> },
    Counts(&'a SufficientStats),
}

impl<'a> Prepared<'a> {
    fn new(data: PairedData<'a>) -> Self {
        match data {
            PairedData::Scores(s) => Prepared::Scores { deltas: s.deltas() },
            PairedData::Counts(c) => Prepared::Counts(c),
        }
    }

    fn n(&self) -> usize {
        match self {
            Prepared::Scores { deltas } => deltas.len(),
            Prepared::Counts(c) => c.len(),
        }
    }

    fn scratch(&self) -> Scratch {
        let k = match self {
            Prepared::Scores { .. } => 0,
            Prepared::Counts(c) => c.arity(),
        };
        Scratch {
            totals: vec![0; 2 * k],
            words: vec![0; self.n().div_ceil(64)],
        }
    }

    /// Observed delta on the full data, computed exactly as the identity
    /// swap mask would compute it.
    fn observed(&self) -> Result<f64> {
        let mut scratch = self.scratch();
        scratch.words.iter_mut().for_each(|w| *w = 0);
        let (delta, degenerate) = self.swapped_delta(&mut scratch);
        if degenerate {
            return Err(Error::degenerate(
                "corpus statistic is undefined on the full data (zero denominator)",
            ));
        }
        Ok(delta)
    }

    fn combine_sides(stats: &SufficientStats, totals: &[u64], examples: usize) -> (f64, bool) {
        let k = stats.arity();
        let a = combine_totals(&totals[..k], examples, stats.combiner());
        let b = combine_totals(&totals[k..], examples, stats.combiner());
        (a.value - b.value, a.degenerate || b.degenerate)
    }

    /// Delta on one bootstrap multiset drawn from `rng`.
    fn bootstrap_delta(&self, rng: &mut StreamRng, scratch: &mut Scratch) -> (f64, bool) {
        let n = self.n();
        match self {
            Prepared::Scores { deltas } => {
                // independent partial sums keep the add chain short
                let mut acc = [0.0f64; 4];
                for j in 0..n {
                    acc[j & 3] += deltas[draw_index(rng, n)];
                }
                (((acc[0] + acc[1]) + (acc[2] + acc[3])) / n as f64, false)
            }
            Prepared::Counts(stats) => {
                let k = stats.arity();
                scratch.totals.iter_mut().for_each(|t| *t = 0);
                for _ in 0..n {
                    let i = draw_index(rng, n);
                    let (ta, tb) = scratch.totals.split_at_mut(k);
                    for (t, c) in ta.iter_mut().zip(stats.row(Side::A, i)) {
                        *t += c;
                    }
                    for (t, c) in tb.iter_mut().zip(stats.row(Side::B, i)) {
                        *t += c;
                    }
                }
                Self::combine_sides(stats, &scratch.totals, n)
            }
        }
    }

    /// Delta after exchanging A and B on every example whose bit is set in
    /// `scratch.words`.
    fn swapped_delta(&self, scratch: &mut Scratch) -> (f64, bool) {
        let words = &scratch.words;
        let swapped = |i: usize| (words[i >> 6] >> (i & 63)) & 1 == 1;
        match self {
            Prepared::Scores { deltas } => {
                let mut sum = 0.0;
                for (i, &d) in deltas.iter().enumerate() {
                    sum += if swapped(i) { -d } else { d };
                }
                (sum / deltas.len() as f64, false)
            }
            Prepared::Counts(stats) => {
                let k = stats.arity();
                let mut totals = std::mem::take(&mut scratch.totals);
                totals.iter_mut().for_each(|t| *t = 0);
                for i in 0..stats.len() {
                    let (ra, rb) = if swapped(i) {
                        (stats.row(Side::B, i), stats.row(Side::A, i))
                    } else {
                        (stats.row(Side::A, i), stats.row(Side::B, i))
                    };
                    for j in 0..k {
                        totals[j] += ra[j];
                        totals[k + j] += rb[j];
                    }
                }
                let out = Self::combine_sides(stats, &totals, stats.len());
                scratch.totals = totals;
                out
            }
        }
    }
}

/// Sums `(extreme, degenerate)` indicators over `count` independent
/// resamples in parallel.
fn tally<F>(prep: &Prepared<'_>, count: u64, f: F) -> (u64, u64)
where
    F: Fn(u64, &mut Scratch) -> (bool, bool) + Sync,
{
    (0..count)
        .into_par_iter()
        .map_init(
            || prep.scratch(),
            |scratch, r| {
                let (extreme, degenerate) = f(r, scratch);
                (extreme as u64, degenerate as u64)
            },
        )
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1))
}

fn bootstrap_extreme(delta: f64, observed: f64, tail: Tail) -> bool {
    let centred = delta - observed;
    match tail {
        Tail::TwoSided => at_least(centred.abs(), observed.abs()),
        Tail::Greater => at_least(centred, observed),
        Tail::Less => at_least(-centred, -observed),
    }
}

fn permutation_extreme(delta: f64, observed: f64, tail: Tail) -> bool {
    match tail {
        Tail::TwoSided => at_least(delta.abs(), observed.abs()),
        Tail::Greater => at_least(delta, observed),
        Tail::Less => at_least(-delta, -observed),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InsufficientData { needed: 2, got: n })
    } else {
        Ok(())
    }
}

/// The index multiset of bootstrap resample `r`.
pub fn bootstrap_indices(seed: u64, r: u64, n: usize) -> Vec<usize> {
    let mut rng = stream(seed, r);
    (0..n).map(|_| draw_index(&mut rng, n)).collect()
}

/// Uniform index in `0..n`. Every bootstrap consumer draws through here so
/// that index sequences agree.
#[inline]
fn draw_index(rng: &mut StreamRng, n: usize) -> usize {
    match u32::try_from(n) {
        Ok(m) => rng.random_range(0..m) as usize,
        Err(_) => rng.random_range(0..n),
    }
}

/// Bootstrap replicate deltas `δ*_r` for `r in 0..resamples`. Degenerate
/// replicates use the zero-denominator convention (value 0).
pub fn bootstrap_replicates<'a>(
    data: impl Into<PairedData<'a>>,
    resamples: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let prep = Prepared::new(data.into());
    check_n(prep.n())?;
    Ok((0..resamples)
        .into_par_iter()
        .map_init(
            || prep.scratch(),
            |scratch, r| prep.bootstrap_delta(&mut stream(seed, r), scratch).0,
        )
        .collect())
}

/// Paired bootstrap test with the shift (recentred) null.
///
/// `δ_obs = stat(A) − stat(B)`; each resample draws `n` examples with
/// replacement, and `p = (#{extreme δ*} + 1) / (B + 1)` where a replicate is
/// extreme when `|δ* − δ_obs| >= |δ_obs|` (two-sided) or the signed analogue.
pub fn paired_bootstrap<'a>(
    data: impl Into<PairedData<'a>>,
    resamples: u64,
    seed: u64,
    tail: Tail,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::invalid(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let prep = Prepared::new(data.into());
    let n = prep.n();
    check_n(n)?;
    let observed = prep.observed()?;

    let (extreme, degenerate) = tally(&prep, resamples, |r, scratch| {
        let (delta, degenerate) = prep.bootstrap_delta(&mut stream(seed, r), scratch);
        (bootstrap_extreme(delta, observed, tail), degenerate)
    });

    let p = (extreme + 1) as f64 / (resamples + 1) as f64;
    let mut result = TestResult::new(TestId::Bootstrap, observed, Probability::clamped(p), tail, n, alpha)
        .sampled(resamples, seed);
    if degenerate > 0 {
        result = result.note(format!("degenerate_resamples={degenerate}"));
    }
    Ok(result)
}

/// Paired permutation test: the null swaps A and B independently within
/// each pair.
///
/// `Exact` enumerates all `2^n` swap masks (n <= 20) and reports the
/// fraction at least as extreme as observed; `Sampled` draws `resamples`
/// masks and reports `(#{extreme} + 1) / (R + 1)`. `Auto` enumerates when
/// it can.
pub fn permutation_test<'a>(
    data: impl Into<PairedData<'a>>,
    resamples: u64,
    seed: u64,
    tail: Tail,
    alpha: f64,
    mode: PermutationMode,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let prep = Prepared::new(data.into());
    let n = prep.n();
    check_n(n)?;
    let exact = match mode {
        PermutationMode::Exact => {
            if n > PERMUTATION_EXACT_MAX_N {
                return Err(Error::invalid(format!(
                    "exact permutation enumerates at most 2^{PERMUTATION_EXACT_MAX_N} masks; n = {n}"
                )));
            }
            true
        }
        PermutationMode::Sampled => false,
        PermutationMode::Auto => n <= PERMUTATION_EXACT_MAX_N,
    };
    if !exact && resamples == 0 {
        return Err(Error::invalid("sampled permutation needs at least one resample"));
    }
    let observed = prep.observed()?;

    if exact {
        let masks = 1u64 << n;
        let (extreme, degenerate) = tally(&prep, masks, |mask, scratch| {
            scratch.words[0] = mask;
            let (delta, degenerate) = prep.swapped_delta(scratch);
            (permutation_extreme(delta, observed, tail), degenerate)
        });
        let p = extreme as f64 / masks as f64;
        let mut result =
            TestResult::new(TestId::Permutation, observed, Probability::clamped(p), tail, n, alpha)
                .note("exact");
        if degenerate > 0 {
            result = result.note(format!("degenerate_resamples={degenerate}"));
        }
        return Ok(result);
    }

    let (extreme, degenerate) = tally(&prep, resamples, |r, scratch| {
        let mut rng = stream(seed, r);
        for w in scratch.words.iter_mut() {
            *w = rng.next_u64();
        }
        let (delta, degenerate) = prep.swapped_delta(scratch);
        (permutation_extreme(delta, observed, tail), degenerate)
    });
    let p = (extreme + 1) as f64 / (resamples + 1) as f64;
    let mut result =
        TestResult::new(TestId::Permutation, observed, Probability::clamped(p), tail, n, alpha)
            .sampled(resamples, seed);
    if degenerate > 0 {
        result = result.note(format!("degenerate_resamples={degenerate}"));
    }
    Ok(result)
}
