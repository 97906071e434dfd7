// SPDX-License-Identifier: Apache-2.0

//! Runs the battery over a corpus and assembles the second-level report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::battery::{self, CusumMode, MIN_BITS};
use super::meta::{
    histogram_ranges, proportion_of_passing, pvalue_uniformity, ProportionReport,
    UniformityReport, DEFAULT_ALPHA,
};
use super::{BitSample, PValue, RandomnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    Frequency,
    BlockFrequency,
    Runs,
    CumulativeSums,
    Serial,
    ApproximateEntropy,
}

impl TestKind {
    pub const ALL: [TestKind; 6] = [
        TestKind::Frequency,
        TestKind::BlockFrequency,
        TestKind::Runs,
        TestKind::CumulativeSums,
        TestKind::Serial,
        TestKind::ApproximateEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Frequency => "frequency",
            TestKind::BlockFrequency => "block_frequency",
            TestKind::Runs => "runs",
            TestKind::CumulativeSums => "cumulative_sums",
            TestKind::Serial => "serial",
            TestKind::ApproximateEntropy => "approximate_entropy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn pvalues_per_sample(self) -> usize {
        match self {
            TestKind::CumulativeSums | TestKind::Serial => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub alpha: f64,
    pub block_len: usize,
    pub serial_m: usize,
    pub apen_m: usize,
    pub tests: Vec<TestKind>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            block_len: 128,
            serial_m: 16,
            apen_m: 10,
            tests: TestKind::ALL.to_vec(),
        }
    }
}

impl SuiteConfig {
    /// Checks every enabled test's preconditions for `n`-bit samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        for &t in &self.tests {
            match t {
                TestKind::Frequency | TestKind::Runs | TestKind::CumulativeSums => {
                    battery::check_len(n, MIN_BITS)?
                }
                TestKind::BlockFrequency => battery::check_block_frequency(n, self.block_len)?,
                TestKind::Serial => battery::check_serial(n, self.serial_m)?,
                TestKind::ApproximateEntropy => battery::check_apen(n, self.apen_m)?,
            }
        }
        Ok(())
    }
}

fn run_sample(bits: &[u8], kind: TestKind, config: &SuiteConfig) -> Result<Vec<f64>> {
    Ok(match kind {
        TestKind::Frequency => vec![battery::frequency(bits)],
        TestKind::BlockFrequency => vec![battery::block_frequency(bits, config.block_len)?],
        TestKind::Runs => vec![battery::runs(bits)],
        TestKind::CumulativeSums => vec![
            battery::cusum(bits, CusumMode::Forward),
            battery::cusum(bits, CusumMode::Backward),
        ],
        TestKind::Serial => {
            let (p1, p2) = battery::serial(bits, config.serial_m)?;
            vec![p1, p2]
        }
        TestKind::ApproximateEntropy => vec![battery::apen(bits, config.apen_m)?],
    })
}

/// Second-level results for one test (all P-values pooled).
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub builtin: bool,
    pub pvalues: Vec<PValue>,
    pub proportion: ProportionReport,
    pub uniformity: UniformityReport,
    pub histogram: [u64; 11],
}

impl TestReport {
    fn new(name: String, builtin: bool, pvalues: Vec<PValue>, alpha: f64) -> Result<Self> {
        let values: Vec<f64> = pvalues.iter().map(|p| p.value).collect();
        Ok(Self {
            proportion: proportion_of_passing(&values, alpha)?,
            uniformity: pvalue_uniformity(&values)?,
            histogram: histogram_ranges(&values),
            name,
            builtin,
            pvalues,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub samples: usize,
    pub alpha: f64,
    pub tests: Vec<TestReport>,
}

impl SuiteReport {
    pub fn get(&self, name: &str) -> Option<&TestReport> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.tests.iter().all(|t| t.proportion.passed)
    }

    pub fn all_uniform(&self) -> bool {
        self.tests.iter().all(|t| t.uniformity.uniform)
    }

    /// Plain-text report: the proportion/uniformity table followed by the
    /// P-value range histogram.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples={} alpha={}", self.samples, self.alpha);
        let _ = writeln!(
            out,
            "{:<22}{:>8}{:>12}{:>12}  {:<14}{:>14}  distribution",
            "test", "m", "expected", "observed", "proportion", "POP"
        );
        for t in &self.tests {
            let p = &t.proportion;
            let _ = writeln!(
                out,
                "{:<22}{:>8}{:>12.6}{:>12.6}  {:<14}{:>14}  {}",
                t.name,
                p.m,
                p.expected_lower,
                p.observed_f64(),
                if p.passed { "Successful" } else { "Unsuccessful" },
                scientific(t.uniformity.pop),
                if t.uniformity.uniform { "Uniform" } else { "Non-uniform" },
            );
        }
        out.push('\n');
        let _ = write!(out, "{:<22}", "test");
        for label in
            ["0-.01", ".01-.1", ".1-.2", ".2-.3", ".3-.4", ".4-.5", ".5-.6", ".6-.7", ".7-.8", ".8-.9", ".9-1"]
        {
            let _ = write!(out, "{label:>8}");
        }
        out.push('\n');
        for t in &self.tests {
            let _ = write!(out, "{:<22}", t.name);
            for c in t.histogram {
                let _ = write!(out, "{c:>8}");
            }
            out.push('\n');
        }
        if self.tests.iter().any(|t| t.proportion.m < 100) {
            out.push_str("\nnote: fewer than 100 P-values per test; second-level statistics are indicative only\n");
        }
        out
    }
}

/// `5.744434e-01` style: six decimals, signed two-digit exponent.
pub fn scientific(x: f64) -> String {
    let text = format!("{x:.6e}");
    let (mantissa, exp) = text.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Runs the enabled tests over `corpus` and folds in `external` P-values
/// (grouped by test name) for tests computed elsewhere.
pub fn run_suite(
    corpus: &[BitSample],
    config: &SuiteConfig,
    external: &[PValue],
) -> Result<SuiteReport> {
    if corpus.is_empty() && external.is_empty() {
        return Err(RandomnessError::Empty);
    }
    for s in corpus {
        config.validate(s.len())?;
    }

    // per sample, per enabled test, the sample's P-values
    let per_sample: Vec<Vec<Vec<f64>>> = corpus
        .par_iter()
        .map(|s| {
            let bits = s.unpack();
            config.tests.iter().map(|&t| run_sample(&bits, t, config)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut tests = Vec::new();
    if !corpus.is_empty() {
        for (k, &kind) in config.tests.iter().enumerate() {
            let pvalues = corpus
                .iter()
                .zip(&per_sample)
                .flat_map(|(s, results)| {
                    results[k].iter().map(move |&value| PValue {
                        value,
                        test_name: kind.name().to_string(),
                        sample_index: s.sample_index,
                    })
                })
                .collect();
            tests.push(TestReport::new(kind.name().to_string(), true, pvalues, config.alpha)?);
        }
    }

    let mut grouped: BTreeMap<&str, Vec<PValue>> = BTreeMap::new();
    for p in external {
        if TestKind::from_name(&p.test_name).is_some_and(|t| config.tests.contains(&t)) && !corpus.is_empty() {
            return Err(RandomnessError::InvalidArgument(format!(
                "external P-values supplied for built-in test {}",
                p.test_name
            )));
        }
        grouped.entry(&p.test_name).or_default().push(p.clone());
    }
    for (name, pvalues) in grouped {
        tests.push(TestReport::new(name.to_string(), false, pvalues, config.alpha)?);
    }

    let samples = corpus.len().max(
        external.iter().map(|p| p.sample_index + 1).max().unwrap_or(0),
    );
    Ok(SuiteReport { samples, alpha: config.alpha, tests })
}

fn valid_test_name(name: &str) -> bool {
    !name.is_empty()
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

/// Parses `test_name,sample_index,p_value` lines. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_pvalue_lines(text: &str) -> Result<Vec<PValue>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| RandomnessError::Parse { line: k + 1, reason };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [name, index, value] = fields[..] else {
            return Err(err("expected `test_name,sample_index,p_value`".into()));
        };
        if !valid_test_name(name) {
            return Err(err(format!("bad test name {name:?}")));
        }
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(format!("bad sample index {index:?}")));
        }
        let sample_index = index.parse().map_err(|e| err(format!("bad sample index: {e}")))?;
        let value: f64 = value.parse().map_err(|e| err(format!("bad P-value: {e}")))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(err(format!("P-value {value} outside [0, 1]")));
        }
        out.push(PValue { value, test_name: name.to_string(), sample_index });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::generate_corpus;

    fn small_config() -> SuiteConfig {
        SuiteConfig { block_len: 128, serial_m: 5, apen_m: 3, ..SuiteConfig::default() }
    }

    #[test]
    fn pop_formatting() {
        assert_eq!(scientific(0.5744434), "5.744434e-01");
        assert_eq!(scientific(1.0), "1.000000e+00");
        assert_eq!(scientific(2.5e-12), "2.500000e-12");
        assert_eq!(scientific(0.0), "0.000000e+00");
    }

    #[test]
    fn names_round_trip() {
        for t in TestKind::ALL {
            assert_eq!(TestKind::from_name(t.name()), Some(t));
        }
        assert_eq!(TestKind::from_name("rank"), None);
    }

    #[test]
    fn pooled_counts() {
        let corpus = generate_corpus(12, 4096).unwrap();
        let report = run_suite(&corpus, &small_config(), &[]).unwrap();
        assert_eq!(report.tests.len(), 6);
        for t in &report.tests {
            let kind = TestKind::from_name(&t.name).unwrap();
            assert_eq!(t.pvalues.len(), 12 * kind.pvalues_per_sample());
            assert_eq!(t.histogram.iter().sum::<u64>(), t.pvalues.len() as u64);
            assert!(t.pvalues.iter().all(|p| (0.0..=1.0).contains(&p.value)));
        }
        assert!(report.to_text().contains("note: fewer than 100"));
    }

    #[test]
    fn constant_corpus_fails_frequency() {
        let corpus: Vec<_> = (0..5).map(|i| BitSample::from_bytes(vec![0; 512], i)).collect();
        let config = SuiteConfig { tests: vec![TestKind::Frequency], ..small_config() };
        let report = run_suite(&corpus, &config, &[]).unwrap();
        let f = report.get("frequency").unwrap();
        assert_eq!(f.proportion.failures, 5);
        assert_eq!(*f.proportion.observed.numer(), 0);
        assert!(!f.proportion.passed);
        assert!(!report.all_passed());
    }

    #[test]
    fn short_samples_are_rejected() {
        let corpus = generate_corpus(2, 64).unwrap();
        assert!(matches!(
            run_suite(&corpus, &small_config(), &[]),
            Err(RandomnessError::TooShort { .. })
        ));
        let big = generate_corpus(1, 4096).unwrap();
        let bad = SuiteConfig { serial_m: 12, ..small_config() };
        assert!(matches!(run_suite(&big, &bad, &[]), Err(RandomnessError::InvalidArgument(_))));
    }

    #[test]
    fn external_pvalues() {
        let text = "# from another tool\nrank,0,0.5\nrank,1,0.004\n\nlinear_complexity,0,0.9\n";
        let ext = parse_pvalue_lines(text).unwrap();
        assert_eq!(ext.len(), 3);
        let report = run_suite(&[], &small_config(), &ext).unwrap();
        assert_eq!(report.tests.len(), 2);
        assert_eq!(report.tests[0].name, "linear_complexity");
        let rank = report.get("rank").unwrap();
        assert!(!rank.builtin);
        assert_eq!(rank.proportion.failures, 1);
        assert_eq!(report.samples, 2);

        let corpus = generate_corpus(2, 4096).unwrap();
        let clash = parse_pvalue_lines("runs,0,0.5").unwrap();
        assert!(run_suite(&corpus, &small_config(), &clash).is_err());
    }

    #[test]
    fn pvalue_line_errors() {
        for bad in ["rank,0", "rank,0,1.5", "rank,-1,0.5", "rank,0,abc", ",0,0.5", "ra nk,0,0.5", "rank,0,NaN"] {
            assert!(parse_pvalue_lines(bad).is_err(), "{bad:?}");
        }
        assert!(matches!(
            parse_pvalue_lines("a,0,0.5\nb,0,2"),
            Err(RandomnessError::Parse { line: 2, .. })
        ));
    }
}
