//! TSV ingestion and report rendering.
//!
//! Every input file is UTF-8, tab-separated, and starts with a header row:
//!
//! - scores: `id  score_a  score_b`
//! - correctness: `id  a  b` with values in {0, 1}
//! - counts: `id  a1..ak  b1..bk`, with `k` fixed by the header
//! - correlation: two `id  pred` files plus one `id  gold` file, joined on id

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measures::{Combiner, CorrelationSample, PairedScores, SufficientStats};
use crate::normality::NormalityReport;
use crate::numerics::Probability;
use crate::recommend::{Basis, IngestionForm};
use crate::significance::{PairedOutcomeTable, Tail, TestId, TestResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where to read an input from.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub form: IngestionForm,
    /// The paired file, or system A's predictions for the correlation form.
    pub path: PathBuf,
    /// System B's predictions (correlation form only).
    pub path_b: Option<PathBuf>,
    /// Gold values (correlation form only).
    pub gold: Option<PathBuf>,
    /// Required for the counts form.
    pub combiner: Option<Combiner>,
}

impl InputSpec {
    pub fn new(form: IngestionForm, path: impl Into<PathBuf>) -> Self {
        InputSpec {
            form,
            path: path.into(),
            path_b: None,
            gold: None,
            combiner: None,
        }
    }

    pub fn with_correlation_files(mut self, path_b: impl Into<PathBuf>, gold: impl Into<PathBuf>) -> Self {
        self.path_b = Some(path_b.into());
        self.gold = Some(gold.into());
        self
    }

    pub fn with_combiner(mut self, combiner: Combiner) -> Self {
        self.combiner = Some(combiner);
        self
    }
}

/// Validated input data.
#[derive(Debug, Clone, PartialEq)]
pub enum InputData {
    Scores(PairedScores),
    /// 0/1 correctness, kept per example so that score-based tests can run
    /// on it too.
    Correctness(PairedScores),
    Counts(SufficientStats),
    Correlation { a: CorrelationSample, b: CorrelationSample },
}

impl InputData {
    pub fn len(&self) -> usize {
        match self {
            InputData::Scores(s) | InputData::Correctness(s) => s.len(),
            InputData::Counts(c) => c.len(),
            InputData::Correlation { a, .. } => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn form(&self) -> IngestionForm {
        match self {
            InputData::Scores(_) => IngestionForm::Scores,
            InputData::Correctness(_) => IngestionForm::Correctness,
            InputData::Counts(_) => IngestionForm::Counts,
            InputData::Correlation { .. } => IngestionForm::Correlation,
        }
    }

    /// The 2×2 outcome table of correctness data.
    pub fn outcome_table(&self) -> Result<PairedOutcomeTable> {
        match self {
            InputData::Correctness(s) => PairedOutcomeTable::from_scores(s),
            _ => Err(Error::invalid("an outcome table needs correctness input")),
        }
    }
}

/// Size and checksum of the ingested files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub n: usize,
    /// Hex SHA-256 over the raw bytes of every input file, in read order.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedInput {
    pub data: InputData,
    pub digest: InputDigest,
}

struct Row<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

/// Splits a TSV text into its header width and data rows. Blank lines are
/// skipped; line numbers are 1-based.
fn tsv_rows(text: &str) -> Result<(usize, Vec<Row<'_>>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::EmptySample);
    };
    let width = header.split('\t').count();
    let rows: Vec<Row> = lines
        .map(|(line, l)| Row {
            line,
            fields: l.split('\t').map(str::trim).collect(),
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    for row in &rows {
        if row.fields.len() != width {
            return Err(Error::data(
                row.line,
                format!("expected {width} fields, got {}", row.fields.len()),
            ));
        }
    }
    Ok((width, rows))
}

fn check_width(width: usize, expected: usize, schema: &str) -> Result<()> {
    if width != expected {
        return Err(Error::data(
            1,
            format!("header has {width} columns; the {schema} schema needs {expected}"),
        ));
    }
    Ok(())
}

fn parse_real(row: &Row, col: usize) -> Result<f64> {
    let s = row.fields[col];
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::data(row.line, format!("column {}: {s:?} is not a finite number", col + 1))),
    }
}

fn parse_count(row: &Row, col: usize) -> Result<u64> {
    let s = row.fields[col];
    s.parse::<u64>().map_err(|_| {
        Error::data(row.line, format!("column {}: {s:?} is not a non-negative integer", col + 1))
    })
}

fn parse_binary(row: &Row, col: usize) -> Result<f64> {
    match row.fields[col] {
        "0" => Ok(0.0),
        "1" => Ok(1.0),
        s => Err(Error::data(row.line, format!("column {}: {s:?} is not 0 or 1", col + 1))),
    }
}

fn collect_ids(rows: &[Row<'_>]) -> Result<Vec<String>> {
    let mut seen = HashMap::with_capacity(rows.len());
    for row in rows {
        let id = row.fields[0];
        if id.is_empty() {
            return Err(Error::data(row.line, "empty id"));
        }
        if let Some(first) = seen.insert(id, row.line) {
            return Err(Error::data(row.line, format!("duplicate id {id:?} (first seen on line {first})")));
        }
    }
    Ok(rows.iter().map(|r| r.fields[0].to_string()).collect())
}

/// Parses the scores schema.
pub fn parse_scores(text: &str) -> Result<PairedScores> {
    parse_pairs(text, "scores", parse_real)
}

/// Parses the correctness schema.
pub fn parse_correctness(text: &str) -> Result<PairedScores> {
    parse_pairs(text, "correctness", parse_binary)
}

fn parse_pairs(text: &str, schema: &str, parse: fn(&Row, usize) -> Result<f64>) -> Result<PairedScores> {
    let (width, rows) = tsv_rows(text)?;
    check_width(width, 3, schema)?;
    let ids = collect_ids(&rows)?;
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    for row in &rows {
        a.push(parse(row, 1)?);
        b.push(parse(row, 2)?);
    }
    PairedScores::new(ids, a, b)
}

/// Parses the counts schema.
pub fn parse_counts(text: &str, combiner: Combiner) -> Result<SufficientStats> {
    let (width, rows) = tsv_rows(text)?;
    if width < 3 || width % 2 == 0 {
        return Err(Error::data(
            1,
            format!("header has {width} columns; the counts schema needs 1 + 2k"),
        ));
    }
    let k = (width - 1) / 2;
    combiner
        .check_arity(k)
        .map_err(|e| Error::data(1, format!("{k} count columns per system: {e}")))?;
    let ids = collect_ids(&rows)?;
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    for row in &rows {
        a.push((1..=k).map(|c| parse_count(row, c)).collect::<Result<Vec<_>>>()?);
        b.push((k + 1..=2 * k).map(|c| parse_count(row, c)).collect::<Result<Vec<_>>>()?);
    }
    SufficientStats::new(ids, a, b, combiner)
}

/// Parses one `id  value` file into (id, value, line) triples.
fn parse_column(text: &str, schema: &str) -> Result<Vec<(String, f64, usize)>> {
    let (width, rows) = tsv_rows(text)?;
    check_width(width, 2, schema)?;
    let ids = collect_ids(&rows)?;
    rows.iter()
        .zip(ids)
        .map(|(row, id)| Ok((id, parse_real(row, 1)?, row.line)))
        .collect()
}

/// Joins two prediction files with a gold file on id, in gold order.
pub fn parse_correlation(a: &str, b: &str, gold: &str) -> Result<(CorrelationSample, CorrelationSample)> {
    let gold = parse_column(gold, "gold").map_err(in_file("gold file"))?;
    let mut sides = Vec::with_capacity(2);
    for (name, text) in [("A", a), ("B", b)] {
        let rows = parse_column(text, "prediction").map_err(in_file(format!("system {name} file")))?;
        let mut by_id: HashMap<&str, (f64, usize)> =
            rows.iter().map(|(id, v, line)| (id.as_str(), (*v, *line))).collect();
        let mut values = Vec::with_capacity(gold.len());
        for (id, _, line) in &gold {
            let (v, _) = by_id.remove(id.as_str()).ok_or_else(|| {
                Error::data(*line, format!("gold id {id:?} is missing from system {name}'s predictions"))
            })?;
            values.push(v);
        }
        if let Some((id, (_, line))) = by_id.into_iter().min_by_key(|(_, (_, line))| *line) {
            return Err(Error::data(line, format!("system {name}'s id {id:?} has no gold value")));
        }
        sides.push(values);
    }
    let gold: Vec<f64> = gold.into_iter().map(|(_, v, _)| v).collect();
    let b = sides.pop().expect("two sides");
    let a = sides.pop().expect("two sides");
    Ok((CorrelationSample::new(a, gold.clone())?, CorrelationSample::new(b, gold)?))
}

fn read(path: &Path, hasher: &mut Sha256) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    hasher.update(&bytes);
    String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
        Error::data(line, format!("{}: not valid UTF-8", path.display()))
    })
}

/// Prefixes data errors with the name of the file they came from.
fn in_file(name: impl fmt::Display) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Data { line, message } => Error::Data {
            line,
            message: format!("{name}: {message}"),
        },
        other => other,
    }
}

/// Reads and validates an input. Nothing partial is returned on error.
pub fn load_input(spec: &InputSpec) -> Result<LoadedInput> {
    let mut hasher = Sha256::new();
    let text = read(&spec.path, &mut hasher)?;
    let data = match spec.form {
        IngestionForm::Scores => InputData::Scores(parse_scores(&text).map_err(in_file(spec.path.display()))?),
        IngestionForm::Correctness => {
            InputData::Correctness(parse_correctness(&text).map_err(in_file(spec.path.display()))?)
        }
        IngestionForm::Counts => {
            let combiner = spec
                .combiner
                .ok_or_else(|| Error::invalid("the counts form needs a combiner"))?;
            InputData::Counts(parse_counts(&text, combiner).map_err(in_file(spec.path.display()))?)
        }
        IngestionForm::Correlation => {
            let (Some(path_b), Some(gold)) = (&spec.path_b, &spec.gold) else {
                return Err(Error::invalid(
                    "the correlation form needs predictions for both systems and a gold file",
                ));
            };
            let text_b = read(path_b, &mut hasher)?;
            let text_gold = read(gold, &mut hasher)?;
            let (a, b) = parse_correlation(&text, &text_b, &text_gold)?;
            InputData::Correlation { a, b }
        }
    };
    let sha256 = hasher
        .finalize()
        .iter()
        .fold(String::with_capacity(64), |mut s, byte| {
            let _ = write!(s, "{byte:02x}");
            s
        });
    Ok(LoadedInput {
        digest: InputDigest { n: data.len(), sha256 },
        data,
    })
}

/// The normality fields carried in a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalitySummary {
    pub statistic: f64,
    pub p_value: Probability,
    pub pass: bool,
}

impl From<&NormalityReport> for NormalitySummary {
    fn from(r: &NormalityReport) -> Self {
        NormalitySummary {
            statistic: r.statistic,
            p_value: r.p_value,
            pass: r.pass,
        }
    }
}

/// Result of a CLI run. The input digest travels in `notes` as
/// `input_sha256=<hex>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub test: TestId,
    pub measure: Option<String>,
    pub statistic: f64,
    pub p_value: Probability,
    pub alpha: f64,
    pub reject: bool,
    pub tail: Tail,
    pub n: usize,
    pub resamples: Option<u64>,
    pub seed: Option<u64>,
    pub basis: Option<Basis>,
    pub normality: Option<NormalitySummary>,
    pub notes: Vec<String>,
    pub version: String,
}

impl Report {
    pub fn new(
        result: TestResult,
        measure: Option<String>,
        basis: Option<Basis>,
        normality: Option<&NormalityReport>,
        digest: Option<&InputDigest>,
    ) -> Self {
        let mut notes = result.notes;
        if let Some(d) = digest {
            notes.push(format!("input_sha256={}", d.sha256));
        }
        Report {
            test: result.test,
            measure,
            statistic: result.statistic,
            p_value: result.p_value,
            alpha: result.alpha,
            reject: result.reject,
            tail: result.tail,
            n: result.n,
            resamples: result.resamples,
            seed: result.seed,
            basis,
            normality: normality.map(NormalitySummary::from),
            notes,
            version: VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(Error::invalid(format!("unknown format {s:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Text => "text",
        })
    }
}

/// Renders a report. JSON output is a single line ending in a newline.
pub fn render_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec(report).expect("reports serialize");
            out.push(b'\n');
            out
        }
        Format::Text => render_text(report).into_bytes(),
    }
}

/// Parses a JSON report.
pub fn parse_report(bytes: &[u8]) -> Result<Report> {
    serde_json::from_slice(bytes).map_err(|e| Error::data(e.line(), e.to_string()))
}

fn render_text(r: &Report) -> String {
    let mut s = String::new();
    let verdict = if r.reject { "reject H0" } else { "do not reject H0" };
    let _ = writeln!(s, "test        {}", r.test);
    if let Some(m) = &r.measure {
        let _ = writeln!(s, "measure     {m}");
    }
    let _ = writeln!(s, "statistic   {}", r.statistic);
    let _ = writeln!(s, "p-value     {}", r.p_value.value());
    let _ = writeln!(s, "alpha       {} ({verdict})", r.alpha);
    let _ = writeln!(s, "tail        {}", r.tail);
    let _ = writeln!(s, "n           {}", r.n);
    if let (Some(b), Some(seed)) = (r.resamples, r.seed) {
        let _ = writeln!(s, "resamples   {b} (seed {seed})");
    }
    if let Some(b) = r.basis {
        let _ = writeln!(s, "basis       {b}");
    }
    if let Some(nr) = &r.normality {
        let _ = writeln!(
            s,
            "normality   K2 = {}, p = {} ({})",
            nr.statistic,
            nr.p_value.value(),
            if nr.pass { "pass" } else { "fail" }
        );
    }
    if !r.notes.is_empty() {
        let _ = writeln!(s, "notes       {}", r.notes.join(", "));
    }
    let _ = writeln!(s, "version     {}", r.version);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::significance::mcnemar;
    use std::io::Write;

    fn data_line(e: Error) -> usize {
        match e {
            Error::Data { line, .. } => line,
            other => panic!("expected a data error, got {other:?}"),
        }
    }

    #[test]
    fn scores() {
        let s = parse_scores("id\ta\tb\nx\t0.5\t0.25\ny\t1\t0\nz\t-2e-1\t3\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.ids(), ["x", "y", "z"]);
        assert_eq!(s.a(), [0.5, 1.0, -0.2]);
        assert_eq!(s.b(), [0.25, 0.0, 3.0]);
        let crlf = parse_scores("id\ta\tb\r\nx\t1\t2\r\n\r\n").unwrap();
        assert_eq!(crlf.a(), [1.0]);
    }

    #[test]
    fn malformed_rows_report_lines() {
        assert_eq!(data_line(parse_scores("id\ta\tb\nx\t1\t2\ny\t1\n").unwrap_err()), 3);
        assert_eq!(data_line(parse_scores("id\ta\tb\nx\t1\tfoo\n").unwrap_err()), 2);
        assert_eq!(data_line(parse_scores("id\ta\tb\nx\t1\tNaN\n").unwrap_err()), 2);
        assert_eq!(data_line(parse_scores("id\ta\nx\t1\n").unwrap_err()), 1);
        assert_eq!(data_line(parse_scores("id\ta\tb\nx\t1\t2\n\nx\t3\t4\n").unwrap_err()), 4);
        assert_eq!(data_line(parse_correctness("id\ta\tb\nx\t1\t0\ny\t2\t0\n").unwrap_err()), 3);
        assert_eq!(data_line(parse_correctness("id\ta\tb\nx\t0.5\t0\n").unwrap_err()), 2);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse_scores(""), Err(Error::EmptySample));
        assert_eq!(parse_scores("\n\n"), Err(Error::EmptySample));
        assert_eq!(parse_scores("id\ta\tb\n"), Err(Error::EmptySample));
    }

    #[test]
    fn counts() {
        let text = "id\ttp_a\tfp_a\tfn_a\ttp_b\tfp_b\tfn_b\ns1\t3\t1\t0\t2\t0\t1\ns2\t0\t0\t2\t1\t1\t1\n";
        let c = parse_counts(text, Combiner::FBeta(1.0)).unwrap();
        assert_eq!(c.arity(), 3);
        assert_eq!(c.len(), 2);
        assert_eq!(c.row(crate::measures::Side::B, 1), [1, 1, 1]);
        assert_eq!(data_line(parse_counts(text, Combiner::Accuracy).unwrap_err()), 1);
        assert_eq!(data_line(parse_counts("id\ta\tb\tc\tx\ns\t1\t1\t1\t1\n", Combiner::Mean).unwrap_err()), 1);
        let bad = "id\ta\tb\ns1\t1\t-1\n";
        assert_eq!(data_line(parse_counts(bad, Combiner::Mean).unwrap_err()), 2);
    }

    #[test]
    fn correctness_table() {
        let s = parse_correctness("id\ta\tb\n1\t1\t1\n2\t1\t0\n3\t0\t1\n4\t1\t0\n5\t0\t0\n").unwrap();
        let t = InputData::Correctness(s).outcome_table().unwrap();
        assert_eq!((t.n11, t.n10, t.n01, t.n00), (1, 2, 1, 1));
        assert!(mcnemar(&t, Tail::TwoSided, 0.05).is_ok());
    }

    #[test]
    fn correlation_join() {
        let a = "id\tpred\nw1\t0.1\nw2\t0.4\nw3\t0.2\nw4\t0.9\n";
        let b = "id\tpred\nw4\t1\nw3\t2\nw2\t3\nw1\t4\n";
        let gold = "id\tgold\nw1\t1\nw2\t2\nw3\t3\nw4\t4\n";
        let (sa, sb) = parse_correlation(a, b, gold).unwrap();
        assert_eq!(sa.predictions(), [0.1, 0.4, 0.2, 0.9]);
        assert_eq!(sb.predictions(), [4.0, 3.0, 2.0, 1.0]);
        assert_eq!(sa.gold(), sb.gold());

        let missing = "id\tpred\nw1\t0.1\nw2\t0.4\nw3\t0.2\n";
        assert_eq!(data_line(parse_correlation(missing, b, gold).unwrap_err()), 5);
        let extra = "id\tpred\nw1\t0.1\nw2\t0.4\nw3\t0.2\nw4\t0.9\nw5\t1\n";
        assert_eq!(data_line(parse_correlation(a, extra, gold).unwrap_err()), 6);
    }

    #[test]
    fn load_and_digest() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "id\ta\tb\nx\t1\t0.5\n").unwrap();
        let loaded = load_input(&InputSpec::new(IngestionForm::Scores, f.path())).unwrap();
        assert_eq!(loaded.digest.n, 1);
        assert_eq!(loaded.digest.sha256.len(), 64);
        let again = load_input(&InputSpec::new(IngestionForm::Scores, f.path())).unwrap();
        assert_eq!(loaded, again);

        let err = load_input(&InputSpec::new(IngestionForm::Counts, f.path())).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let err = load_input(&InputSpec::new(IngestionForm::Scores, "/nonexistent/x.tsv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        let err = load_input(&InputSpec::new(IngestionForm::Correctness, f.path())).unwrap_err();
        match err {
            Error::Data { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains(&f.path().display().to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    fn sample_report() -> Report {
        let t = PairedOutcomeTable::new(0, 2, 8, 0).unwrap();
        let result = mcnemar(&t, Tail::TwoSided, 0.05).unwrap();
        let digest = InputDigest {
            n: 10,
            sha256: "ab".repeat(32),
        };
        Report::new(result, Some("contingency_table".into()), Some(Basis::NoParametricExists), None, Some(&digest))
    }

    #[test]
    fn json_has_exact_keys_and_full_precision() {
        let r = sample_report();
        let bytes = render_report(&r, Format::Json);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut expected = [
            "test", "measure", "statistic", "p_value", "alpha", "reject", "tail", "n", "resamples",
            "seed", "basis", "normality", "notes", "version",
        ];
        expected.sort_unstable();
        assert_eq!(keys, expected);
        assert_eq!(v["p_value"], serde_json::json!(0.109375));
        assert!(String::from_utf8(bytes).unwrap().contains("\"p_value\":0.109375"));
        assert_eq!(v["normality"], serde_json::Value::Null);
        assert_eq!(v["test"], "mcnemar");
        assert_eq!(v["basis"], "no_parametric_exists");
    }

    #[test]
    fn json_round_trip() {
        let mut r = sample_report();
        assert_eq!(parse_report(&render_report(&r, Format::Json)).unwrap(), r);
        r.normality = Some(NormalitySummary {
            statistic: 5.597_787_439_486_978,
            p_value: Probability::new(0.060_877_372_822_003_485).unwrap(),
            pass: true,
        });
        r.statistic = 0.1 + 0.2;
        r.resamples = Some(10_000);
        r.seed = Some(u64::MAX);
        assert_eq!(parse_report(&render_report(&r, Format::Json)).unwrap(), r);
        assert!(parse_report(b"{\"test\":\"mcnemar\"}").is_err());
    }

    #[test]
    fn text_summary() {
        let text = String::from_utf8(render_report(&sample_report(), Format::Text)).unwrap();
        assert!(text.contains("p-value     0.109375"));
        assert!(text.contains("do not reject H0"));
        assert!(text.lines().count() < 20);
    }
}
