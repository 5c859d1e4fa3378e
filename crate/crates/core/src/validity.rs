//! Monte Carlo estimates of type-I error and power.
//!
//! Each trial draws a fresh sample from a [`NullGenerator`] and runs one
//! test on it. Trial `t` uses the seed `derive_seed(seed, t)`, so results do
//! not depend on how trials are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Combiner, CorrelationSample, PairedScores, SufficientStats};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::significance::{
    correlation_bootstrap, correlation_permutation, correlation_z_test, mcnemar, paired_bootstrap,
    paired_t, permutation_test, wilcoxon_signed_rank, CorrelationKind, PairedOutcomeTable,
    PermutationMode, Tail, TestId, TestResult, WilcoxonMode,
};

/// Smallest number of trials accepted by the harness.
pub const MIN_TRIALS: u64 = 1000;
/// Resamples per trial for sampling-based tests.
pub const DEFAULT_TRIAL_RESAMPLES: u64 = 1000;
/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorFamily {
    /// Scores with a shared per-example difficulty plus independent normal noise.
    PairedNormal,
    /// As `PairedNormal` with Laplace noise.
    PairedLaplace,
    /// Independent 0/1 correctness for each system.
    PairedBernoulliCorrectness,
    /// Per-example (tp, fp, fn) drawn independently for both systems.
    ExchangeableCounts,
    /// Gold values and two prediction vectors, all independent Gaussians.
    IndependentGaussiansForCorrelation,
}

impl GeneratorFamily {
    pub const ALL: [GeneratorFamily; 5] = [
        GeneratorFamily::PairedNormal,
        GeneratorFamily::PairedLaplace,
        GeneratorFamily::PairedBernoulliCorrectness,
        GeneratorFamily::ExchangeableCounts,
        GeneratorFamily::IndependentGaussiansForCorrelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorFamily::PairedNormal => "paired_normal",
            GeneratorFamily::PairedLaplace => "paired_laplace",
            GeneratorFamily::PairedBernoulliCorrectness => "paired_bernoulli_correctness",
            GeneratorFamily::ExchangeableCounts => "exchangeable_counts",
            GeneratorFamily::IndependentGaussiansForCorrelation => {
                "independent_gaussians_for_correlation"
            }
        }
    }
}

impl fmt::Display for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorFamily::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown generator {s:?}")))
    }
}

/// Sample generator. With `effect = 0` every family satisfies the null
/// hypothesis of equal performance; a positive effect favours system A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullGenerator {
    pub family: GeneratorFamily,
    pub n: usize,
    /// Noise standard deviation for score families.
    pub scale: f64,
    /// Success rate of system B for correctness and count families.
    pub base_rate: f64,
    /// Score families: mean delta in units of the delta standard deviation.
    /// Correctness and counts: added to A's success rate. Correlation: slope
    /// of A's predictions on gold.
    pub effect: f64,
}

impl NullGenerator {
    pub fn new(family: GeneratorFamily, n: usize) -> Self {
        NullGenerator {
            family,
            n,
            scale: 1.0,
            base_rate: 0.5,
            effect: 0.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_base_rate(mut self, base_rate: f64) -> Self {
        self.base_rate = base_rate;
        self
    }

    pub fn with_effect(mut self, effect: f64) -> Self {
        self.effect = effect;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::invalid(format!("generator needs n >= 4, got {}", self.n)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {}", self.scale)));
        }
        if !(0.0..=1.0).contains(&self.base_rate) {
            return Err(Error::invalid(format!("base rate must lie in [0, 1], got {}", self.base_rate)));
        }
        if !self.effect.is_finite() {
            return Err(Error::invalid("effect must be finite"));
        }
        Ok(())
    }

    /// Draws the sample for one trial seed.
    pub fn generate(&self, seed: u64) -> Result<Sample> {
        self.validate()?;
        let mut rng = stream(seed, 0);
        let n = self.n;
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        match self.family {
            GeneratorFamily::PairedNormal | GeneratorFamily::PairedLaplace => {
                let laplace = self.family == GeneratorFamily::PairedLaplace;
                // Laplace with scale b has variance 2b²
                let exp = Exp::new(std::f64::consts::SQRT_2 / self.scale).expect("rate");
                let noise = |rng: &mut StreamRng| {
                    if laplace {
                        let e = exp.sample(rng);
                        if rng.random::<bool>() {
                            e
                        } else {
                            -e
                        }
                    } else {
                        self.scale * unit.sample(rng)
                    }
                };
                let shift = self.effect * self.scale * std::f64::consts::SQRT_2;
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for _ in 0..n {
                    let difficulty = unit.sample(&mut rng);
                    a.push(difficulty + noise(&mut rng) + shift);
                    b.push(difficulty + noise(&mut rng));
                }
                Ok(Sample::Scores(PairedScores::from_vecs(a, b)?))
            }
            GeneratorFamily::PairedBernoulliCorrectness => {
                let rate_a = (self.base_rate + self.effect).clamp(0.0, 1.0);
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for _ in 0..n {
                    a.push(f64::from(u8::from(rng.random_bool(rate_a))));
                    b.push(f64::from(u8::from(rng.random_bool(self.base_rate))));
                }
                Ok(Sample::Correctness(PairedScores::from_vecs(a, b)?))
            }
            GeneratorFamily::ExchangeableCounts => {
                let rate_a = (self.base_rate + self.effect).clamp(0.0, 1.0);
                let counts = |rng: &mut StreamRng, gold: u64, rate: f64| {
                    let tp = Binomial::new(gold, rate).expect("rate in [0, 1]").sample(rng);
                    let fp = Binomial::new(2, 1.0 - rate).expect("rate in [0, 1]").sample(rng);
                    vec![tp, fp, gold - tp]
                };
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for _ in 0..n {
                    let gold = rng.random_range(1..=4);
                    a.push(counts(&mut rng, gold, rate_a));
                    b.push(counts(&mut rng, gold, self.base_rate));
                }
                Ok(Sample::Counts(SufficientStats::from_vecs(a, b, Combiner::FBeta(1.0))?))
            }
            GeneratorFamily::IndependentGaussiansForCorrelation => {
                let mut gold = Vec::with_capacity(n);
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for _ in 0..n {
                    let g = unit.sample(&mut rng);
                    gold.push(g);
                    a.push(self.effect * g + self.scale * unit.sample(&mut rng));
                    b.push(self.scale * unit.sample(&mut rng));
                }
                Ok(Sample::Correlation {
                    a: CorrelationSample::new(a, gold.clone())?,
                    b: CorrelationSample::new(b, gold)?,
                })
            }
        }
    }
}

/// One generated data set.
#[derive(Debug, Clone)]
pub enum Sample {
    Scores(PairedScores),
    Correctness(PairedScores),
    Counts(SufficientStats),
    Correlation { a: CorrelationSample, b: CorrelationSample },
}

/// A test together with the knobs the harness needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialTest {
    pub test: TestId,
    pub wilcoxon_mode: WilcoxonMode,
    pub resamples: u64,
    pub kind: CorrelationKind,
    pub tail: Tail,
}

impl TrialTest {
    pub fn new(test: TestId) -> Self {
        TrialTest {
            test,
            wilcoxon_mode: WilcoxonMode::Auto,
            resamples: DEFAULT_TRIAL_RESAMPLES,
            kind: CorrelationKind::Pearson,
            tail: Tail::TwoSided,
        }
    }

    pub fn with_wilcoxon_mode(mut self, mode: WilcoxonMode) -> Self {
        self.wilcoxon_mode = mode;
        self
    }

    pub fn with_resamples(mut self, resamples: u64) -> Self {
        self.resamples = resamples;
        self
    }

    pub fn with_kind(mut self, kind: CorrelationKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    /// Whether the test can run on samples from `family`.
    pub fn accepts(&self, family: GeneratorFamily) -> bool {
        use GeneratorFamily::*;
        match self.test {
            TestId::PairedT | TestId::Wilcoxon => {
                matches!(family, PairedNormal | PairedLaplace | PairedBernoulliCorrectness)
            }
            TestId::Mcnemar => family == PairedBernoulliCorrectness,
            TestId::Bootstrap | TestId::Permutation => family != IndependentGaussiansForCorrelation,
            TestId::ZTest | TestId::CorrelationBootstrap | TestId::CorrelationPermutation => {
                family == IndependentGaussiansForCorrelation
            }
        }
    }

    /// Runs the test on one sample. The z-test checks `corr(A, gold) = 0`.
    pub fn run(&self, sample: &Sample, alpha: f64, seed: u64) -> Result<TestResult> {
        let tail = self.tail;
        let mismatch = || Error::invalid(format!("{} cannot run on this sample", self.test));
        match (self.test, sample) {
            (TestId::PairedT, Sample::Scores(s) | Sample::Correctness(s)) => paired_t(s, tail, alpha),
            (TestId::Wilcoxon, Sample::Scores(s) | Sample::Correctness(s)) => {
                wilcoxon_signed_rank(s, tail, alpha, self.wilcoxon_mode)
            }
            (TestId::Mcnemar, Sample::Correctness(s)) => {
                mcnemar(&PairedOutcomeTable::from_scores(s)?, tail, alpha)
            }
            (TestId::Bootstrap, Sample::Scores(s) | Sample::Correctness(s)) => {
                paired_bootstrap(s, self.resamples, seed, tail, alpha)
            }
            (TestId::Bootstrap, Sample::Counts(c)) => {
                paired_bootstrap(c, self.resamples, seed, tail, alpha)
            }
            (TestId::Permutation, Sample::Scores(s) | Sample::Correctness(s)) => {
                permutation_test(s, self.resamples, seed, tail, alpha, PermutationMode::Sampled)
            }
            (TestId::Permutation, Sample::Counts(c)) => {
                permutation_test(c, self.resamples, seed, tail, alpha, PermutationMode::Sampled)
            }
            (TestId::ZTest, Sample::Correlation { a, .. }) => {
                let r = self
                    .kind
                    .compute(a.predictions(), a.gold())
                .ok_or_else(|| Error::degenerate("zero-variance correlation sample"))?;
                correlation_z_test(self.kind, r, a.len(), tail, alpha, 0.0)
            }
            (TestId::CorrelationBootstrap, Sample::Correlation { a, b }) => {
                correlation_bootstrap(a, b, self.kind, self.resamples, seed, tail, alpha)
            }
            (TestId::CorrelationPermutation, Sample::Correlation { a, b }) => {
                correlation_permutation(a, b, self.kind, self.resamples, seed, tail, alpha)
            }
            _ => Err(mismatch()),
        }
    }
}

impl From<TestId> for TrialTest {
    fn from(test: TestId) -> Self {
        TrialTest::new(test)
    }
}

/// Rejection rate with a 99% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub rejections: u64,
    /// Trials on which the test statistic was undefined; counted as
    /// non-rejections.
    pub degenerate: u64,
}

/// 99% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z_99 * Z_99;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = Z_99 / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn rejection_rate(
    test: TrialTest,
    generator: &NullGenerator,
    trials: u64,
    alpha: f64,
    seed: u64,
) -> Result<RateEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    if !test.accepts(generator.family) {
        return Err(Error::invalid(format!(
            "{} cannot run on samples from {}",
            test.test, generator.family
        )));
    }
    generator.validate()?;

    let outcomes: Vec<Result<Option<bool>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, t);
            let sample = generator.generate(trial_seed)?;
            match test.run(&sample, alpha, derive_seed(trial_seed, 1)) {
                Ok(r) => Ok(Some(r.reject)),
                Err(Error::DegenerateSample(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let (mut rejections, mut degenerate) = (0, 0);
    for outcome in outcomes {
        match outcome? {
            Some(true) => rejections += 1,
            Some(false) => {}
            None => degenerate += 1,
        }
    }
    let (ci_low, ci_high) = wilson_interval(rejections, trials);
    Ok(RateEstimate {
        rate: rejections as f64 / trials as f64,
        ci_low,
        ci_high,
        trials,
        rejections,
        degenerate,
    })
}

/// Empirical type-I error rate. The generator's effect must be zero.
pub fn type1_error_rate(
    test: impl Into<TrialTest>,
    generator: &NullGenerator,
    trials: u64,
    alpha: f64,
    seed: u64,
) -> Result<RateEstimate> {
    if generator.effect != 0.0 {
        return Err(Error::invalid("a null generator must have zero effect"));
    }
    rejection_rate(test.into(), generator, trials, alpha, seed)
}

/// Empirical power: the rejection rate under the generator's alternative.
/// Runs with the same seed share their samples trial by trial.
pub fn power_rate(
    test: impl Into<TrialTest>,
    generator: &NullGenerator,
    trials: u64,
    alpha: f64,
    seed: u64,
) -> Result<RateEstimate> {
    rejection_rate(test.into(), generator, trials, alpha, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_brackets_rate() {
        let (lo, hi) = wilson_interval(500, 10_000);
        assert!(lo < 0.05 && hi > 0.05);
        assert!((hi - lo) < 0.012);
        assert_eq!(wilson_interval(0, 1000).0, 0.0);
        let (lo, hi) = wilson_interval(1000, 1000);
        assert!(lo > 0.99 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generators_are_reproducible() {
        for family in GeneratorFamily::ALL {
            let g = NullGenerator::new(family, 12);
            let x = format!("{:?}", g.generate(7).unwrap());
            assert_eq!(x, format!("{:?}", g.generate(7).unwrap()));
            assert_ne!(x, format!("{:?}", g.generate(8).unwrap()));
            assert_eq!(family.as_str().parse::<GeneratorFamily>().unwrap(), family);
        }
    }

    #[test]
    fn laplace_noise_has_requested_scale() {
        let g = NullGenerator::new(GeneratorFamily::PairedLaplace, 200_000).with_scale(2.0);
        let Sample::Scores(s) = g.generate(3).unwrap() else { panic!() };
        let d = s.deltas();
        let var = d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64;
        // delta of two independent noises: variance 2·scale²
        assert!((var / 8.0 - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn mismatch_and_argument_errors() {
        let normal = NullGenerator::new(GeneratorFamily::PairedNormal, 50);
        assert!(type1_error_rate(TestId::Mcnemar, &normal, 1000, 0.05, 1).is_err());
        assert!(type1_error_rate(TestId::ZTest, &normal, 1000, 0.05, 1).is_err());
        assert!(type1_error_rate(TestId::PairedT, &normal, 999, 0.05, 1).is_err());
        let shifted = normal.with_effect(0.5);
        assert!(type1_error_rate(TestId::PairedT, &shifted, 1000, 0.05, 1).is_err());
        let sample = normal.generate(1).unwrap();
        assert!(TrialTest::new(TestId::Mcnemar).run(&sample, 0.05, 1).is_err());
    }

    #[test]
    fn zero_effect_power_equals_type1() {
        let g = NullGenerator::new(GeneratorFamily::PairedNormal, 30);
        let a = type1_error_rate(TestId::PairedT, &g, 2000, 0.05, 9).unwrap();
        let b = power_rate(TestId::PairedT, &g, 2000, 0.05, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn t_test_is_calibrated() {
        let g = NullGenerator::new(GeneratorFamily::PairedNormal, 50);
        let r = type1_error_rate(TestId::PairedT, &g, 4000, 0.05, 21).unwrap();
        assert!(r.ci_low < 0.05 && 0.05 < r.ci_high, "{r:?}");
    }

    #[test]
    fn mcnemar_exact_is_conservative() {
        let g = NullGenerator::new(GeneratorFamily::PairedBernoulliCorrectness, 30);
        let r = type1_error_rate(TestId::Mcnemar, &g, 4000, 0.05, 4).unwrap();
        assert!(r.rate <= 0.065, "{r:?}");
    }

    #[test]
    fn counts_permutation_is_calibrated() {
        let g = NullGenerator::new(GeneratorFamily::ExchangeableCounts, 60).with_base_rate(0.6);
        let test = TrialTest::new(TestId::Permutation).with_resamples(200);
        let r = type1_error_rate(test, &g, 2000, 0.05, 17).unwrap();
        assert!(r.ci_low < 0.05 && 0.05 < r.ci_high, "{r:?}");
    }

    #[test]
    fn power_grows_with_n() {
        let mut last = 0.0;
        for n in [20, 50, 100, 500] {
            let g = NullGenerator::new(GeneratorFamily::PairedNormal, n).with_effect(0.2);
            let r = power_rate(TestId::PairedT, &g, 2000, 0.05, 33).unwrap();
            assert!(r.rate >= last - 0.03, "n = {n}: {} < {last}", r.rate);
            last = r.rate;
        }
        assert!(last > 0.98);
    }
}
