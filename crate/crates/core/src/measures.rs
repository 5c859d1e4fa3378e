//! Evaluation measures over paired per-example data.
//!
//! Decomposable measures (accuracy, exact match, sentence-level UAS/LAS) are
//! plain means of per-example scores. Non-decomposable ones (precision,
//! recall, F-score) are computed from summed per-example count vectors, so
//! that a resample recomputes the corpus statistic from its own totals
//! instead of averaging per-example values.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unique_ids(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::invalid(format!("duplicate example id {id:?}")));
        }
    }
    Ok(())
}

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Id-aligned per-example scores of systems A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    ids: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedScores {
    pub fn new(ids: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() != ids.len() {
            return Err(Error::invalid(format!(
                "misaligned paired scores: {} ids, {} a-scores, {} b-scores",
                ids.len(),
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::EmptySample);
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("scores must be finite"));
        }
        check_unique_ids(&ids)?;
        Ok(PairedScores { ids, a, b })
    }

    /// Builds paired scores with positional ids `"0"`, `"1"`, ...
    pub fn from_vecs(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(default_ids(a.len()), a, b)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Per-example differences `a_i - b_i`.
    pub fn deltas(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| a - b).collect()
    }

    /// The same data with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        PairedScores {
            ids: self.ids.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

/// How summed count vectors turn into a corpus-level measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// Arity 1; summed value divided by the number of examples.
    Mean,
    /// Arity 2 as `(correct, total)`.
    Accuracy,
    /// Arity 3 as `(tp, fp, fn)`.
    Precision,
    /// Arity 3 as `(tp, fp, fn)`.
    Recall,
    /// Arity 3 as `(tp, fp, fn)`.
    FBeta(f64),
    /// `counts[num] / counts[den]`.
    Ratio { num: usize, den: usize },
}

impl Combiner {
    /// Checks that count vectors of length `arity` can feed this combiner.
    pub fn check_arity(&self, arity: usize) -> Result<()> {
        let ok = match *self {
            Combiner::Mean => arity == 1,
            Combiner::Accuracy => arity == 2,
            Combiner::Precision | Combiner::Recall => arity == 3,
            Combiner::FBeta(beta) => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid(format!("f_beta needs beta > 0, got {beta}")));
                }
                arity == 3
            }
            Combiner::Ratio { num, den } => num < arity && den < arity,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "combiner {self} does not accept count vectors of arity {arity}"
            )))
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Combiner::Mean => write!(f, "mean"),
            Combiner::Accuracy => write!(f, "accuracy"),
            Combiner::Precision => write!(f, "precision"),
            Combiner::Recall => write!(f, "recall"),
            Combiner::FBeta(b) if *b == 1.0 => write!(f, "f1"),
            Combiner::FBeta(b) => write!(f, "f_beta:{b}"),
            Combiner::Ratio { num, den } => write!(f, "ratio:{num}/{den}"),
        }
    }
}

impl FromStr for Combiner {
    type Err = Error;

    /// Accepts `mean`, `accuracy`, `precision`, `recall`, `f1`,
    /// `f_beta:<beta>` and `ratio:<num>/<den>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "mean" => return Ok(Combiner::Mean),
            "accuracy" => return Ok(Combiner::Accuracy),
            "precision" => return Ok(Combiner::Precision),
            "recall" => return Ok(Combiner::Recall),
            "f1" | "f_score" => return Ok(Combiner::FBeta(1.0)),
            _ => {}
        }
        if let Some(beta) = s.strip_prefix("f_beta:") {
            let beta: f64 = beta
                .parse()
                .map_err(|_| Error::invalid(format!("bad beta in {s:?}")))?;
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::invalid(format!("f_beta needs beta > 0, got {beta}")));
            }
            return Ok(Combiner::FBeta(beta));
        }
        if let Some(rest) = s.strip_prefix("ratio:") {
            let (num, den) = rest
                .split_once('/')
                .ok_or_else(|| Error::invalid(format!("expected ratio:<num>/<den>, got {s:?}")))?;
            let num = num
                .parse()
                .map_err(|_| Error::invalid(format!("bad ratio index in {s:?}")))?;
            let den = den
                .parse()
                .map_err(|_| Error::invalid(format!("bad ratio index in {s:?}")))?;
            return Ok(Combiner::Ratio { num, den });
        }
        Err(Error::invalid(format!("unknown combiner {s:?}")))
    }
}

/// A combined corpus value. `degenerate` marks a zero denominator, in which
/// case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combined {
    pub value: f64,
    pub degenerate: bool,
}

impl Combined {
    fn ok(value: f64) -> Self {
        Combined {
            value,
            degenerate: false,
        }
    }

    fn degenerate() -> Self {
        Combined {
            value: 0.0,
            degenerate: true,
        }
    }
}

fn ratio(num: u64, den: u64) -> Combined {
    if den == 0 {
        Combined::degenerate()
    } else {
        Combined::ok(num as f64 / den as f64)
    }
}

/// Arithmetic mean of per-example scores.
pub fn mean_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Applies `combiner` to arity-checked totals. `examples` is the number of
/// examples summed into `totals` (used by [`Combiner::Mean`]).
pub(crate) fn combine_totals(totals: &[u64], examples: usize, combiner: Combiner) -> Combined {
    match combiner {
        Combiner::Mean => ratio(totals[0], examples as u64),
        Combiner::Accuracy => ratio(totals[0], totals[1]),
        Combiner::Precision => ratio(totals[0], totals[0] + totals[1]),
        Combiner::Recall => ratio(totals[0], totals[0] + totals[2]),
        Combiner::FBeta(beta) => {
            let p = ratio(totals[0], totals[0] + totals[1]);
            let r = ratio(totals[0], totals[0] + totals[2]);
            if p.degenerate || r.degenerate {
                return Combined::degenerate();
            }
            Combined::ok(f_beta(p.value, r.value, beta))
        }
        Combiner::Ratio { num, den } => ratio(totals[num], totals[den]),
    }
}

/// `(1 + β²)·P·R / (β²·P + R)`, with 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * (precision * recall) / den
    }
}

/// Combines summed counts into a corpus-level value.
pub fn combine(totals: &[u64], examples: usize, combiner: Combiner) -> Result<Combined> {
    combiner.check_arity(totals.len())?;
    Ok(combine_totals(totals, examples, combiner))
}

/// Which system of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Per-example count vectors for both systems plus the combiner that turns
/// their sums into a corpus measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    ids: Vec<String>,
    arity: usize,
    // row-major n x arity
    a: Vec<u64>,
    b: Vec<u64>,
    combiner: Combiner,
}

impl SufficientStats {
    pub fn new(
        ids: Vec<String>,
        a_counts: Vec<Vec<u64>>,
        b_counts: Vec<Vec<u64>>,
        combiner: Combiner,
    ) -> Result<Self> {
        if a_counts.len() != b_counts.len() || a_counts.len() != ids.len() {
            return Err(Error::invalid("misaligned count vectors"));
        }
        if a_counts.is_empty() {
            return Err(Error::EmptySample);
        }
        let arity = a_counts[0].len();
        if arity == 0 {
            return Err(Error::invalid("count vectors must be non-empty"));
        }
        if a_counts.iter().chain(&b_counts).any(|v| v.len() != arity) {
            return Err(Error::invalid("count vectors must share one arity"));
        }
        combiner.check_arity(arity)?;
        check_unique_ids(&ids)?;
        Ok(SufficientStats {
            ids,
            arity,
            a: a_counts.into_iter().flatten().collect(),
            b: b_counts.into_iter().flatten().collect(),
            combiner,
        })
    }

    pub fn from_vecs(
        a_counts: Vec<Vec<u64>>,
        b_counts: Vec<Vec<u64>>,
        combiner: Combiner,
    ) -> Result<Self> {
        Self::new(default_ids(a_counts.len()), a_counts, b_counts, combiner)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn row(&self, side: Side, i: usize) -> &[u64] {
        let k = self.arity;
        match side {
            Side::A => &self.a[i * k..(i + 1) * k],
            Side::B => &self.b[i * k..(i + 1) * k],
        }
    }

    /// The same data with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        SufficientStats {
            ids: self.ids.clone(),
            arity: self.arity,
            a: self.b.clone(),
            b: self.a.clone(),
            combiner: self.combiner,
        }
    }

    /// Per-example measure values for one side (each example combined on
    /// its own; degenerate examples contribute 0).
    pub fn per_example(&self, side: Side) -> Vec<f64> {
        (0..self.len())
            .map(|i| combine_totals(self.row(side, i), 1, self.combiner).value)
            .collect()
    }

    /// Corpus statistic over every example once.
    pub fn corpus(&self, side: Side) -> Combined {
        let mut totals = vec![0u64; self.arity];
        for i in 0..self.len() {
            for (t, c) in totals.iter_mut().zip(self.row(side, i)) {
                *t += c;
            }
        }
        combine_totals(&totals, self.len(), self.combiner)
    }
}

/// Sums the count vectors of `subset` (a multiset of example indices) and
/// applies the combiner.
pub fn corpus_statistic(stats: &SufficientStats, side: Side, subset: &[usize]) -> Result<Combined> {
    if subset.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut totals = vec![0u64; stats.arity];
    for &i in subset {
        if i >= stats.len() {
            return Err(Error::invalid(format!(
                "subset index {i} out of range for {} examples",
                stats.len()
            )));
        }
        for (t, c) in totals.iter_mut().zip(stats.row(side, i)) {
            *t += c;
        }
    }
    Ok(combine_totals(&totals, subset.len(), stats.combiner))
}

/// System predictions paired with gold values for a correlation measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSample {
    predictions: Vec<f64>,
    gold: Vec<f64>,
}

impl CorrelationSample {
    pub fn new(predictions: Vec<f64>, gold: Vec<f64>) -> Result<Self> {
        if predictions.len() != gold.len() {
            return Err(Error::invalid(format!(
                "correlation sample lengths differ: {} vs {}",
                predictions.len(),
                gold.len()
            )));
        }
        if predictions.len() < 4 {
            return Err(Error::InsufficientData {
                needed: 4,
                got: predictions.len(),
            });
        }
        if predictions.iter().chain(&gold).any(|v| !v.is_finite()) {
            return Err(Error::invalid("correlation values must be finite"));
        }
        Ok(CorrelationSample { predictions, gold })
    }

    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    pub fn gold(&self) -> &[f64] {
        &self.gold
    }
}

/// Pearson correlation of two equal-length slices; `None` on zero variance.
pub(crate) fn pearson_slices(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

pub(crate) fn spearman_slices(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson_slices(&average_ranks(x), &average_ranks(y))
}

/// Pearson's r between predictions and gold.
pub fn pearson_r(s: &CorrelationSample) -> Result<f64> {
    pearson_slices(&s.predictions, &s.gold)
        .ok_or_else(|| Error::degenerate("zero variance in correlation sample"))
}

/// Spearman's ρ between predictions and gold (average ranks for ties).
pub fn spearman_rho(s: &CorrelationSample) -> Result<f64> {
    spearman_slices(&s.predictions, &s.gold)
        .ok_or_else(|| Error::degenerate("zero variance in correlation sample"))
}
