//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate sample.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{load_input, render_report, Format, InputData, InputSpec, LoadedInput, Report};
use crate::measures::{average_ranks, Combiner, CorrelationSample, Side};
use crate::normality::DEFAULT_ALPHA_NORM;
use crate::recommend::{lookup, recommend_with, IngestionForm, Recommendation, DEFAULT_NONPARAMETRIC};
use crate::rng::DEFAULT_SEED;
use crate::significance::{
    correlation_bootstrap, correlation_permutation, correlation_z_test_independent, mcnemar,
    paired_bootstrap, permutation_test, CorrelationKind, PermutationMode, Tail, TestId, TestResult,
    WilcoxonMode,
};
use crate::validity::{power_rate, type1_error_rate, GeneratorFamily, NullGenerator, TrialTest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

const DEFAULT_RESAMPLES: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(name = "sigkit", version, about = "Paired significance tests for NLP evaluation measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a named or recommended test on one input.
    Run(RunArgs),
    /// Print the recommended test for a measure.
    Recommend(RecommendArgs),
    /// Estimate type-I error (or power) by Monte Carlo and print CSV.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input schema.
    #[arg(long, value_parser = parse_form)]
    form: Option<IngestionForm>,
    /// Paired TSV file, or system A's predictions for the correlation form.
    #[arg(long)]
    input: Option<PathBuf>,
    /// System B's predictions (correlation form).
    #[arg(long)]
    input_b: Option<PathBuf>,
    /// Gold values (correlation form).
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Corpus combiner for the counts form, e.g. recall, f1, f_beta:0.5, ratio:0/1.
    #[arg(long, value_parser = parse_combiner)]
    combiner: Option<Combiner>,
    /// Correlation coefficient for the correlation form.
    #[arg(long, value_parser = parse_kind)]
    correlation: Option<CorrelationKind>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Measure id from the registry.
    #[arg(long)]
    measure: Option<String>,
    /// Test to run; omit (or pass --auto) to use the recommendation.
    #[arg(long, value_parser = parse_test, conflicts_with = "auto")]
    test: Option<TestId>,
    /// Choose the test from the measure's recommendation.
    #[arg(long)]
    auto: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "two_sided", value_parser = parse_tail)]
    tail: Tail,
    /// Bootstrap or permutation resamples.
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: u64,
    #[arg(long, env = "SIGKIT_SEED")]
    seed: Option<u64>,
    /// Significance level of the normality check.
    #[arg(long, default_value_t = DEFAULT_ALPHA_NORM)]
    alpha_norm: f64,
    /// Nonparametric test preferred when a measure lists several.
    #[arg(long, value_parser = parse_test)]
    prefer: Option<TestId>,
    #[arg(long, value_enum, default_value = "auto")]
    wilcoxon_mode: WilcoxonModeArg,
    #[arg(long, value_enum, default_value = "auto")]
    permutation_mode: PermutationModeArg,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    #[arg(long)]
    measure: String,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_ALPHA_NORM)]
    alpha_norm: f64,
    #[arg(long, value_parser = parse_test)]
    prefer: Option<TestId>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Tests to evaluate (repeatable).
    #[arg(long = "test", required = true, value_parser = parse_test)]
    tests: Vec<TestId>,
    /// Generator families (repeatable).
    #[arg(long = "generator", required = true, value_parser = parse_generator)]
    generators: Vec<GeneratorFamily>,
    /// Sample sizes (repeatable).
    #[arg(long = "n", default_values_t = [100usize])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, env = "SIGKIT_SEED")]
    seed: Option<u64>,
    /// Effect size; a non-zero value estimates power instead of type-I error.
    #[arg(long, default_value_t = 0.0)]
    effect: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.5)]
    base_rate: f64,
    /// Resamples per trial for sampling-based tests.
    #[arg(long, default_value_t = crate::validity::DEFAULT_TRIAL_RESAMPLES)]
    resamples: u64,
    #[arg(long, value_enum, default_value = "auto")]
    wilcoxon_mode: WilcoxonModeArg,
    #[arg(long, value_parser = parse_kind, default_value = "pearson")]
    correlation: CorrelationKind,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum WilcoxonModeArg {
    Exact,
    Approx,
    Auto,
}

impl From<WilcoxonModeArg> for WilcoxonMode {
    fn from(m: WilcoxonModeArg) -> Self {
        match m {
            WilcoxonModeArg::Exact => WilcoxonMode::Exact,
            WilcoxonModeArg::Approx => WilcoxonMode::Approx,
            WilcoxonModeArg::Auto => WilcoxonMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum PermutationModeArg {
    Exact,
    Sampled,
    Auto,
}

impl From<PermutationModeArg> for PermutationMode {
    fn from(m: PermutationModeArg) -> Self {
        match m {
            PermutationModeArg::Exact => PermutationMode::Exact,
            PermutationModeArg::Sampled => PermutationMode::Sampled,
            PermutationModeArg::Auto => PermutationMode::Auto,
        }
    }
}

fn parse_form(s: &str) -> Result<IngestionForm> {
    s.parse()
}

fn parse_combiner(s: &str) -> Result<Combiner> {
    s.parse()
}

fn parse_kind(s: &str) -> Result<CorrelationKind> {
    s.parse()
}

fn parse_test(s: &str) -> Result<TestId> {
    s.parse()
}

fn parse_tail(s: &str) -> Result<Tail> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format> {
    s.parse()
}

fn parse_generator(s: &str) -> Result<GeneratorFamily> {
    s.parse()
}

/// Maps a library error to an exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Data { .. } | Error::Io(_) | Error::EmptySample => EXIT_DATA,
        Error::DegenerateSample(_) | Error::InsufficientData { .. } => EXIT_DEGENERATE,
    }
}

/// Runs the CLI with process stdout and stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI, writing results to `out` and diagnostics to `err`.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(&args),
        Command::Recommend(args) => recommend_cmd(&args),
        Command::Validate(args) => validate(&args),
    };
    match outcome {
        Ok(bytes) => {
            if out.write_all(&bytes).and_then(|_| out.flush()).is_err() {
                return EXIT_DATA;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "sigkit: {e}");
            exit_code(&e)
        }
    }
}

fn load(args: &InputArgs) -> Result<LoadedInput> {
    let form = args.form.ok_or_else(|| Error::invalid("--form is required"))?;
    let path = args.input.clone().ok_or_else(|| Error::invalid("--input is required"))?;
    let mut spec = InputSpec::new(form, path);
    if form == IngestionForm::Correlation {
        let (Some(b), Some(gold)) = (&args.input_b, &args.gold) else {
            return Err(Error::invalid("the correlation form needs --input-b and --gold"));
        };
        spec = spec.with_correlation_files(b, gold);
    } else if args.input_b.is_some() || args.gold.is_some() {
        return Err(Error::invalid("--input-b and --gold apply only to the correlation form"));
    }
    if form == IngestionForm::Counts {
        let combiner = args
            .combiner
            .ok_or_else(|| Error::invalid("the counts form needs --combiner"))?;
        spec = spec.with_combiner(combiner);
    } else if args.combiner.is_some() {
        return Err(Error::invalid("--combiner applies only to the counts form"));
    }
    load_input(&spec)
}

/// Correlation kind from the flag, else the measure id, else Pearson.
fn correlation_kind(flag: Option<CorrelationKind>, measure: Option<&str>) -> CorrelationKind {
    flag.or_else(|| measure.and_then(|m| m.parse().ok()))
        .unwrap_or(CorrelationKind::Pearson)
}

fn standardized(values: &[f64]) -> Option<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return None;
    }
    Some(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Per-example contributions `zA_i·zg_i − zB_i·zg_i`, whose mean is
/// `corr(A, gold) − corr(B, gold)`. Spearman works on ranks.
fn correlation_deltas(kind: CorrelationKind, a: &CorrelationSample, b: &CorrelationSample) -> Option<Vec<f64>> {
    let prep = |v: &[f64]| match kind {
        CorrelationKind::Pearson => standardized(v),
        CorrelationKind::Spearman => standardized(&average_ranks(v)),
    };
    let zg = prep(a.gold())?;
    let za = prep(a.predictions())?;
    let zb = prep(b.predictions())?;
    Some(zg.iter().zip(za.iter().zip(&zb)).map(|(g, (x, y))| g * (x - y)).collect())
}

/// Per-example deltas used by the normality check and the score-based tests.
fn deltas(data: &InputData, kind: CorrelationKind) -> Result<Vec<f64>> {
    match data {
        InputData::Scores(s) | InputData::Correctness(s) => Ok(s.deltas()),
        InputData::Counts(c) => {
            let a = c.per_example(Side::A);
            let b = c.per_example(Side::B);
            Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
        }
        InputData::Correlation { a, b } => correlation_deltas(kind, a, b)
            .ok_or_else(|| Error::degenerate("a prediction or gold vector has zero variance")),
    }
}

fn choose(
    measure: &str,
    data: &InputData,
    kind: CorrelationKind,
    alpha_norm: f64,
    prefer: Option<TestId>,
) -> Result<Recommendation> {
    let spec = lookup(measure)?;
    let d = if spec.parametric.is_some() {
        Some(deltas(data, kind)?)
    } else {
        None
    };
    recommend_with(measure, d.as_deref(), alpha_norm, prefer.unwrap_or(DEFAULT_NONPARAMETRIC))
}

fn mismatch(test: TestId, form: IngestionForm) -> Error {
    Error::invalid(format!("{test} cannot run on {form} input"))
}

fn execute(test: TestId, data: &InputData, kind: CorrelationKind, args: &RunArgs, seed: u64) -> Result<TestResult> {
    let (tail, alpha, b) = (args.tail, args.alpha, args.resamples);
    match (test, data) {
        (TestId::Mcnemar, InputData::Correctness(_)) => mcnemar(&data.outcome_table()?, tail, alpha),
        (TestId::PairedT, InputData::Scores(s) | InputData::Correctness(s)) => {
            crate::significance::paired_t(s, tail, alpha)
        }
        (TestId::PairedT, InputData::Counts(_)) => {
            let d = deltas(data, kind)?;
            if d.len() < 2 {
                return Err(Error::InsufficientData { needed: 2, got: d.len() });
            }
            crate::significance::check_alpha(alpha)?;
            crate::significance::t_from_deltas(&d, tail, alpha)
        }
        (TestId::Wilcoxon, InputData::Scores(_) | InputData::Correctness(_) | InputData::Counts(_)) => {
            crate::significance::check_alpha(alpha)?;
            crate::significance::wilcoxon_from_deltas(&deltas(data, kind)?, tail, alpha, args.wilcoxon_mode.into())
        }
        (TestId::Bootstrap, InputData::Scores(s) | InputData::Correctness(s)) => {
            paired_bootstrap(s, b, seed, tail, alpha)
        }
        (TestId::Bootstrap, InputData::Counts(c)) => paired_bootstrap(c, b, seed, tail, alpha),
        (TestId::Permutation, InputData::Scores(s) | InputData::Correctness(s)) => {
            permutation_test(s, b, seed, tail, alpha, args.permutation_mode.into())
        }
        (TestId::Permutation, InputData::Counts(c)) => {
            permutation_test(c, b, seed, tail, alpha, args.permutation_mode.into())
        }
        (TestId::Bootstrap | TestId::CorrelationBootstrap, InputData::Correlation { a, b: sb }) => {
            correlation_bootstrap(a, sb, kind, b, seed, tail, alpha)
        }
        (TestId::Permutation | TestId::CorrelationPermutation, InputData::Correlation { a, b: sb }) => {
            correlation_permutation(a, sb, kind, b, seed, tail, alpha)
        }
        (TestId::ZTest, InputData::Correlation { a, b: sb }) => {
            let r = |s: &CorrelationSample| {
                kind.compute(s.predictions(), s.gold())
                    .ok_or_else(|| Error::degenerate("a prediction or gold vector has zero variance"))
            };
            correlation_z_test_independent(kind, r(a)?, r(sb)?, a.len(), tail, alpha)
        }
        _ => Err(mismatch(test, data.form())),
    }
}

fn run(args: &RunArgs) -> Result<Vec<u8>> {
    if args.test.is_none() && args.measure.is_none() {
        return Err(Error::invalid("give --test, or --measure with --auto"));
    }
    if let Some(m) = &args.measure {
        lookup(m)?;
    }
    let loaded = load(&args.input)?;
    let kind = correlation_kind(args.input.correlation, args.measure.as_deref());
    let seed = args.seed.unwrap_or(DEFAULT_SEED);

    let (test, recommendation) = match args.test {
        Some(t) => (t, None),
        None => {
            let measure = args.measure.as_deref().expect("checked above");
            let rec = choose(measure, &loaded.data, kind, args.alpha_norm, args.prefer)?;
            (rec.test, Some(rec))
        }
    };
    let result = execute(test, &loaded.data, kind, args, seed)?;
    let report = Report::new(
        result,
        args.measure.clone(),
        recommendation.as_ref().map(|r| r.basis),
        recommendation.as_ref().and_then(|r| r.normality.as_ref()),
        Some(&loaded.digest),
    );
    Ok(render_report(&report, args.format))
}

#[derive(Serialize)]
struct RecommendOutput<'a> {
    measure: &'a str,
    test: TestId,
    basis: crate::recommend::Basis,
    parametric: Option<TestId>,
    nonparametric: &'a [TestId],
    ingestion_form: IngestionForm,
    normality: Option<crate::normality::NormalityReport>,
}

fn recommend_cmd(args: &RecommendArgs) -> Result<Vec<u8>> {
    let spec = lookup(&args.measure)?;
    let rec = if args.input.input.is_some() {
        let loaded = load(&args.input)?;
        let kind = correlation_kind(args.input.correlation, Some(args.measure.as_str()));
        choose(&args.measure, &loaded.data, kind, args.alpha_norm, args.prefer)?
    } else {
        recommend_with(&args.measure, None, args.alpha_norm, args.prefer.unwrap_or(DEFAULT_NONPARAMETRIC))?
    };
    let out = RecommendOutput {
        measure: spec.measure_id,
        test: rec.test,
        basis: rec.basis,
        parametric: spec.parametric,
        nonparametric: spec.nonparametric,
        ingestion_form: spec.ingestion_form,
        normality: rec.normality.clone(),
    };
    Ok(match args.format {
        Format::Json => {
            let mut v = serde_json::to_vec(&out).expect("serializable");
            v.push(b'\n');
            v
        }
        Format::Text => {
            let nonparametric: Vec<&str> = spec.nonparametric.iter().map(|t| t.as_str()).collect();
            let mut s = format!(
                "measure     {}\ntest        {}\nbasis       {}\nparametric  {}\nnonparam.   {}\nform        {}\n",
                spec.measure_id,
                rec.test,
                rec.basis,
                spec.parametric.map_or("---", TestId::as_str),
                nonparametric.join(", "),
                spec.ingestion_form,
            );
            if let Some(n) = &rec.normality {
                s.push_str(&format!(
                    "normality   K2 = {}, p = {} ({})\n",
                    n.statistic,
                    n.p_value.value(),
                    if n.pass { "pass" } else { "fail" }
                ));
            }
            s.into_bytes()
        }
    })
}

fn validate(args: &ValidateArgs) -> Result<Vec<u8>> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let mut csv = String::from("test,generator,n,alpha,rate,ci_low,ci_high\n");
    for &test in &args.tests {
        let trial = TrialTest::new(test)
            .with_resamples(args.resamples)
            .with_wilcoxon_mode(args.wilcoxon_mode.into())
            .with_kind(args.correlation);
        for &family in &args.generators {
            for &n in &args.sizes {
                let generator = NullGenerator::new(family, n)
                    .with_scale(args.scale)
                    .with_base_rate(args.base_rate)
                    .with_effect(args.effect);
                let est = if args.effect == 0.0 {
                    type1_error_rate(trial, &generator, args.trials, args.alpha, seed)?
                } else {
                    power_rate(trial, &generator, args.trials, args.alpha, seed)?
                };
                csv.push_str(&format!(
                    "{test},{family},{n},{},{},{},{}\n",
                    args.alpha, est.rate, est.ci_low, est.ci_high
                ));
            }
        }
    }
    Ok(csv.into_bytes())
}
