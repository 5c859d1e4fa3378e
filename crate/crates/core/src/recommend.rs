//! Measure-to-test recommendations.
//!
//! Each evaluation measure maps to an optional parametric test and a set of
//! nonparametric tests. The parametric test is chosen only when the
//! per-example deltas pass a normality check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normality::{dagostino_k2, NormalityReport, MIN_NORMALITY_N};
use crate::significance::TestId;

/// Shape of the input a measure is tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestionForm {
    /// Per-example real-valued scores for both systems.
    Scores,
    /// Per-example sufficient-statistic count vectors.
    Counts,
    /// Per-example 0/1 correctness for both systems.
    Correctness,
    /// Per-example predictions for both systems plus a shared gold vector.
    Correlation,
}

impl IngestionForm {
    pub fn as_str(self) -> &'static str {
        match self {
            IngestionForm::Scores => "scores",
            IngestionForm::Counts => "counts",
            IngestionForm::Correctness => "correctness",
            IngestionForm::Correlation => "correlation",
        }
    }
}

impl fmt::Display for IngestionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IngestionForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scores" => Ok(IngestionForm::Scores),
            "counts" => Ok(IngestionForm::Counts),
            "correctness" => Ok(IngestionForm::Correctness),
            "correlation" => Ok(IngestionForm::Correlation),
            _ => Err(Error::invalid(format!("unknown input form {s:?}"))),
        }
    }
}

/// One row of the measure table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureSpec {
    pub measure_id: &'static str,
    pub parametric: Option<TestId>,
    pub nonparametric: &'static [TestId],
    pub ingestion_form: IngestionForm,
    /// Keys into the numbered assumptions and comments.
    pub comment_keys: &'static [u8],
}

const RESAMPLING: &[TestId] = &[TestId::Bootstrap, TestId::Permutation];

const fn row(
    measure_id: &'static str,
    parametric: Option<TestId>,
    nonparametric: &'static [TestId],
    ingestion_form: IngestionForm,
    comment_keys: &'static [u8],
) -> MeasureSpec {
    MeasureSpec {
        measure_id,
        parametric,
        nonparametric,
        ingestion_form,
        comment_keys,
    }
}

use IngestionForm::{Correctness, Correlation, Counts, Scores};

static REGISTRY: [MeasureSpec; 19] = [
    row("contingency_table", None, &[TestId::Mcnemar], Correctness, &[]),
    row("exact_match", Some(TestId::PairedT), RESAMPLING, Correctness, &[1, 2]),
    row("accuracy", Some(TestId::PairedT), RESAMPLING, Correctness, &[1, 2]),
    row("recall", Some(TestId::PairedT), RESAMPLING, Counts, &[1, 2, 6]),
    row("precision", None, RESAMPLING, Counts, &[2, 6]),
    row("f_score", None, RESAMPLING, Counts, &[2, 6]),
    row("perplexity", None, &[TestId::Wilcoxon], Scores, &[5]),
    row("spearman", Some(TestId::ZTest), RESAMPLING, Correlation, &[2, 3]),
    row("pearson", Some(TestId::ZTest), RESAMPLING, Correlation, &[2, 3]),
    row("uas", Some(TestId::PairedT), RESAMPLING, Scores, &[1, 2, 4]),
    row("las", Some(TestId::PairedT), RESAMPLING, Scores, &[1, 2, 4]),
    row("rouge", None, RESAMPLING, Scores, &[2]),
    row("bleu", None, RESAMPLING, Scores, &[2]),
    row("meteor", None, RESAMPLING, Scores, &[2]),
    row("pinc", None, RESAMPLING, Scores, &[2]),
    row("cider", None, RESAMPLING, Scores, &[2]),
    row("coref_family", None, RESAMPLING, Scores, &[2, 7]),
    row("agreement_family", None, RESAMPLING, Scores, &[2]),
    row("mrr", None, RESAMPLING, Scores, &[2]),
];

/// All 19 measure specs, in table order.
pub fn registry() -> &'static [MeasureSpec] {
    &REGISTRY
}

/// Looks up one measure by id.
pub fn lookup(measure_id: &str) -> Result<&'static MeasureSpec> {
    REGISTRY
        .iter()
        .find(|s| s.measure_id == measure_id)
        .ok_or_else(|| Error::invalid(format!("unknown measure {measure_id:?}")))
}

/// Why a test was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    TableParametricOk,
    NormalityFailed,
    NoParametricExists,
    InsufficientDataForNormality,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::TableParametricOk => "table_parametric_ok",
            Basis::NormalityFailed => "normality_failed",
            Basis::NoParametricExists => "no_parametric_exists",
            Basis::InsufficientDataForNormality => "insufficient_data_for_normality",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub test: TestId,
    pub basis: Basis,
    pub normality: Option<NormalityReport>,
}

/// Test used when a row lists both bootstrap and permutation.
pub const DEFAULT_NONPARAMETRIC: TestId = TestId::Permutation;

/// Recommends a test for `measure_id`, preferring permutation among
/// resampling tests.
pub fn recommend(measure_id: &str, deltas: Option<&[f64]>, alpha_norm: f64) -> Result<Recommendation> {
    recommend_with(measure_id, deltas, alpha_norm, DEFAULT_NONPARAMETRIC)
}

/// As [`recommend`], with `prefer` picking among the row's nonparametric
/// tests. A preference the row does not list falls back to the row's first.
pub fn recommend_with(
    measure_id: &str,
    deltas: Option<&[f64]>,
    alpha_norm: f64,
    prefer: TestId,
) -> Result<Recommendation> {
    let spec = lookup(measure_id)?;
    let fallback = if spec.nonparametric.contains(&prefer) {
        prefer
    } else {
        spec.nonparametric[0]
    };
    let nonparametric = |basis, normality| Recommendation {
        test: fallback,
        basis,
        normality,
    };

    let Some(parametric) = spec.parametric else {
        return Ok(nonparametric(Basis::NoParametricExists, None));
    };
    let deltas = deltas.ok_or_else(|| {
        Error::invalid(format!(
            "measure {measure_id:?} has a parametric option; per-example deltas are required"
        ))
    })?;
    if deltas.len() < MIN_NORMALITY_N {
        return Ok(nonparametric(Basis::InsufficientDataForNormality, None));
    }
    match dagostino_k2(deltas, alpha_norm) {
        Ok(report) if report.pass => Ok(Recommendation {
            test: parametric,
            basis: Basis::TableParametricOk,
            normality: Some(report),
        }),
        Ok(report) => Ok(nonparametric(Basis::NormalityFailed, Some(report))),
        // constant deltas: no normal law fits
        Err(Error::DegenerateSample(_)) => Ok(nonparametric(Basis::NormalityFailed, None)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Exp, Normal};

    const TABLE: &str = include_str!("../tests/data/measure_table.tsv");

    fn parse_nonparametric(cell: &str) -> Vec<TestId> {
        match cell {
            "mcnemar" => vec![TestId::Mcnemar],
            "wilcoxon" => vec![TestId::Wilcoxon],
            "bootstrap/permutation" => vec![TestId::Bootstrap, TestId::Permutation],
            other => panic!("unexpected cell {other}"),
        }
    }

    #[test]
    fn registry_matches_transcription() {
        let rows: Vec<Vec<&str>> = TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split('\t').collect())
            .collect();
        assert_eq!(rows.len(), 19);
        assert_eq!(registry().len(), 19);
        for (spec, cells) in registry().iter().zip(&rows) {
            assert_eq!(spec.measure_id, cells[0]);
            let parametric = match cells[1] {
                "---" => None,
                "t-test" => Some(TestId::PairedT),
                "z-test" => Some(TestId::ZTest),
                other => panic!("unexpected cell {other}"),
            };
            assert_eq!(spec.parametric, parametric, "{}", spec.measure_id);
            assert_eq!(spec.nonparametric, parse_nonparametric(cells[2]).as_slice());
            let keys: Vec<u8> = cells
                .get(3)
                .unwrap_or(&"")
                .split(',')
                .filter(|k| !k.is_empty())
                .map(|k| k.parse().unwrap())
                .collect();
            assert_eq!(spec.comment_keys, keys.as_slice(), "{}", spec.measure_id);
        }
    }

    #[test]
    fn spot_rows() {
        assert_eq!(lookup("precision").unwrap().parametric, None);
        assert_eq!(lookup("perplexity").unwrap().nonparametric, &[TestId::Wilcoxon]);
        assert_eq!(lookup("coref_family").unwrap().parametric, None);
        assert_eq!(lookup("contingency_table").unwrap().nonparametric, &[TestId::Mcnemar]);
        assert!(registry().iter().all(|s| !s.nonparametric.is_empty()));
        assert!(lookup("wer").is_err());
    }

    fn sample<D: Distribution<f64>>(dist: D, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0);
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    #[test]
    fn normal_deltas_choose_t_test() {
        let deltas = sample(Normal::new(0.1, 1.0).unwrap(), 200, 5);
        let r = recommend("recall", Some(&deltas), 0.05).unwrap();
        assert_eq!(r.test, TestId::PairedT);
        assert_eq!(r.basis, Basis::TableParametricOk);
        assert!(r.normality.unwrap().pass);
    }

    #[test]
    fn skewed_deltas_fall_back() {
        let deltas = sample(Exp::new(1.0).unwrap(), 200, 5);
        let r = recommend("recall", Some(&deltas), 0.05).unwrap();
        assert_eq!(r.test, TestId::Permutation);
        assert_eq!(r.basis, Basis::NormalityFailed);
        let r = recommend_with("recall", Some(&deltas), 0.05, TestId::Bootstrap).unwrap();
        assert_eq!(r.test, TestId::Bootstrap);
    }

    #[test]
    fn other_bases() {
        let r = recommend("bleu", None, 0.05).unwrap();
        assert_eq!((r.test, r.basis), (TestId::Permutation, Basis::NoParametricExists));
        let r = recommend("perplexity", None, 0.05).unwrap();
        assert_eq!((r.test, r.basis), (TestId::Wilcoxon, Basis::NoParametricExists));
        let r = recommend("accuracy", Some(&[0.0, 1.0, -1.0]), 0.05).unwrap();
        assert_eq!(r.basis, Basis::InsufficientDataForNormality);
        assert!(r.normality.is_none());
        let r = recommend("accuracy", Some(&[0.0; 40]), 0.05).unwrap();
        assert_eq!((r.test, r.basis), (TestId::Permutation, Basis::NormalityFailed));
        assert!(recommend("accuracy", None, 0.05).is_err());
        assert!(recommend("nope", None, 0.05).is_err());
    }

    proptest! {
        #[test]
        fn never_parametric_without_table_entry(
            idx in 0usize..19,
            deltas in proptest::option::of(proptest::collection::vec(-5.0f64..5.0, 0..60)),
            alpha_norm in 0.001f64..0.999,
        ) {
            let spec = &registry()[idx];
            if let Ok(r) = recommend(spec.measure_id, deltas.as_deref(), alpha_norm) {
                if spec.parametric.is_none() {
                    prop_assert!(!r.test.is_parametric());
                    prop_assert_eq!(r.basis, Basis::NoParametricExists);
                }
                prop_assert_eq!(r.test.is_parametric(), r.basis == Basis::TableParametricOk);
            }
        }
    }
}
