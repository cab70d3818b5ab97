//! Nine NIST SP 800-22 tests and their accept probabilities under bit correlation.
//!
//! Gaussian family: Frequency, Runs, DFT. Chi-square family: BlockFrequency,
//! LongestRun, NonOverlappingTemplate, ApproximateEntropy, Serial1, Serial2.

mod analytic;
mod montecarlo;
mod nist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{BitSequence, Probability};

pub use analytic::{
    accept_probability, longest_run_state_dist, markov_pattern_prob, template_hit_moments, template_overlaps,
    AcceptModel, AcceptShape,
};
pub use montecarlo::{empirical_accept_rate, empirical_p_values, MonteCarloEstimate};
pub use nist::{longest_run_table, LongestRunTable};

/// Aperiodic templates of length 9, one per line.
pub const TEMPLATES_9: &str = include_str!("../../data/templates9.txt");

/// NIST default template for the non-overlapping test.
pub const DEFAULT_TEMPLATE: &str = "000000001";
/// Number of blocks in the non-overlapping template test.
pub const TEMPLATE_BLOCKS: usize = 8;
pub const DEFAULT_BLOCK_FREQUENCY_SIZE: usize = 128;
pub const DEFAULT_APEN_ORDER: usize = 2;
pub const DEFAULT_SERIAL_ORDER: usize = 3;

/// The bundled aperiodic template set.
pub fn templates() -> Vec<BitSequence> {
    TEMPLATES_9
        .lines()
        .map(|l| l.parse().expect("bundled template"))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Frequency,
    BlockFrequency,
    Runs,
    LongestRun,
    Dft,
    NonOverlappingTemplate,
    ApproximateEntropy,
    Serial1,
    Serial2,
}

impl TestKind {
    pub const ALL: [TestKind; 9] = [
        TestKind::Frequency,
        TestKind::BlockFrequency,
        TestKind::Runs,
        TestKind::LongestRun,
        TestKind::Dft,
        TestKind::NonOverlappingTemplate,
        TestKind::ApproximateEntropy,
        TestKind::Serial1,
        TestKind::Serial2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Frequency => "frequency",
            TestKind::BlockFrequency => "block_frequency",
            TestKind::Runs => "runs",
            TestKind::LongestRun => "longest_run",
            TestKind::Dft => "dft",
            TestKind::NonOverlappingTemplate => "non_overlapping_template",
            TestKind::ApproximateEntropy => "approximate_entropy",
            TestKind::Serial1 => "serial1",
            TestKind::Serial2 => "serial2",
        }
    }

    pub fn is_chi_square(self) -> bool {
        !matches!(self, TestKind::Frequency | TestKind::Runs | TestKind::Dft)
    }

    /// NIST-recommended minimum sequence length.
    pub fn recommended_min_length(self, spec: &TestSpec) -> usize {
        match self {
            TestKind::Frequency | TestKind::BlockFrequency | TestKind::Runs => 100,
            TestKind::LongestRun => 128,
            TestKind::Dft => 1000,
            TestKind::NonOverlappingTemplate => 100,
            // m < log2(n) - 5.
            TestKind::ApproximateEntropy => (1usize << (spec.order() + 5)) + 1,
            // m < log2(n) - 2, and never below 100.
            TestKind::Serial1 | TestKind::Serial2 => (1usize << (spec.order() + 3)).max(100),
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "frequency" | "freq" | "monobit" => TestKind::Frequency,
            "blockfrequency" | "blockfreq" => TestKind::BlockFrequency,
            "runs" => TestKind::Runs,
            "longestrun" | "longrun" => TestKind::LongestRun,
            "dft" | "fft" | "spectral" => TestKind::Dft,
            "nonoverlappingtemplate" | "nonoverlapping" | "template" => TestKind::NonOverlappingTemplate,
            "approximateentropy" | "apen" => TestKind::ApproximateEntropy,
            "serial1" => TestKind::Serial1,
            "serial2" => TestKind::Serial2,
            _ => return Err(Error::Input(format!("unknown test kind {s:?}"))),
        })
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn default_true() -> bool {
    true
}

/// Which test to run and with which parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub kind: TestKind,
    /// BlockFrequency block length; LongestRun block length (8, 128 or 10000,
    /// chosen from the sequence length when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<BitSequence>,
    /// ApproximateEntropy and Serial order `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_order: Option<usize>,
    pub alpha: Probability,
    /// Permit a constant template.
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_degenerate_template: bool,
    /// Enforce the recommended minimum length.
    #[serde(default = "default_true")]
    pub check_min_length: bool,
}

impl TestSpec {
    /// Spec with NIST default parameters for `kind`.
    pub fn new(kind: TestKind, alpha: f64) -> Result<Self> {
        let alpha = Probability::new(alpha)?;
        let mut spec = TestSpec {
            kind,
            block_size: None,
            template: None,
            pattern_order: None,
            alpha,
            allow_degenerate_template: false,
            check_min_length: true,
        };
        match kind {
            TestKind::BlockFrequency => spec.block_size = Some(DEFAULT_BLOCK_FREQUENCY_SIZE),
            TestKind::NonOverlappingTemplate => {
                spec.template = Some(DEFAULT_TEMPLATE.parse().expect("default template"))
            }
            TestKind::ApproximateEntropy => spec.pattern_order = Some(DEFAULT_APEN_ORDER),
            TestKind::Serial1 | TestKind::Serial2 => spec.pattern_order = Some(DEFAULT_SERIAL_ORDER),
            _ => {}
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_alpha(&self, alpha: Probability) -> Self {
        TestSpec { alpha, ..self.clone() }
    }

    pub fn without_min_length(mut self) -> Self {
        self.check_min_length = false;
        self
    }

    fn order(&self) -> usize {
        self.pattern_order.unwrap_or(match self.kind {
            TestKind::ApproximateEntropy => DEFAULT_APEN_ORDER,
            _ => DEFAULT_SERIAL_ORDER,
        })
    }

    pub fn template_or_default(&self) -> BitSequence {
        self.template
            .clone()
            .unwrap_or_else(|| DEFAULT_TEMPLATE.parse().expect("default template"))
    }

    /// Checks that parameters are present exactly when the kind uses them.
    pub fn validate(&self) -> Result<()> {
        let a = self.alpha.value();
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("alpha {a} outside (0, 1)")));
        }
        let uses_block = matches!(self.kind, TestKind::BlockFrequency | TestKind::LongestRun);
        let uses_template = self.kind == TestKind::NonOverlappingTemplate;
        let uses_order = matches!(
            self.kind,
            TestKind::ApproximateEntropy | TestKind::Serial1 | TestKind::Serial2
        );
        if self.block_size.is_some() && !uses_block {
            return Err(Error::Domain(format!("{} takes no block_size", self.kind)));
        }
        if self.template.is_some() && !uses_template {
            return Err(Error::Domain(format!("{} takes no template", self.kind)));
        }
        if self.pattern_order.is_some() && !uses_order {
            return Err(Error::Domain(format!("{} takes no pattern_order", self.kind)));
        }
        match self.kind {
            TestKind::BlockFrequency => match self.block_size {
                Some(m) if m >= 1 => {}
                _ => return Err(Error::Domain("block_frequency needs block_size >= 1".into())),
            },
            TestKind::LongestRun => {
                if let Some(m) = self.block_size {
                    longest_run_table(m)?;
                }
            }
            TestKind::NonOverlappingTemplate => {
                let t = self
                    .template
                    .as_ref()
                    .ok_or_else(|| Error::Domain("non_overlapping_template needs a template".into()))?;
                if t.len() < 2 || t.len() > 30 {
                    return Err(Error::Domain(format!("template length {} outside 2..=30", t.len())));
                }
                let ones = t.count_ones();
                if !self.allow_degenerate_template && (ones == 0 || ones == t.len()) {
                    return Err(Error::Domain(format!("template {t} is constant")));
                }
            }
            TestKind::ApproximateEntropy => match self.pattern_order {
                Some(m) if (1..=20).contains(&m) => {}
                _ => {
                    return Err(Error::Domain(
                        "approximate_entropy needs pattern_order in 1..=20".into(),
                    ))
                }
            },
            TestKind::Serial1 | TestKind::Serial2 => match self.pattern_order {
                Some(m) if (2..=20).contains(&m) => {}
                _ => return Err(Error::Domain("serial needs pattern_order in 2..=20".into())),
            },
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Accept H0: the sequence looks random.
    Accept,
    /// Accept H1.
    Reject,
}

impl Verdict {
    /// Accept iff `p_value > alpha`.
    pub fn decide(p_value: Probability, alpha: Probability) -> Self {
        if p_value.value() > alpha.value() {
            Verdict::Accept
        } else {
            Verdict::Reject
        }
    }

    pub fn accepted(self) -> bool {
        self == Verdict::Accept
    }
}

/// Parameters as realized on a concrete sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub alpha: Probability,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<BitSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub kind: TestKind,
    pub params: TestParams,
    pub statistic: f64,
    pub p_value: Probability,
    pub verdict: Verdict,
    /// Set when a degenerate input forced the P-value to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Runs one test on `x`.
pub fn run_test(spec: &TestSpec, x: &BitSequence) -> Result<TestOutcome> {
    spec.validate()?;
    let n = x.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if spec.check_min_length {
        let needed = spec.kind.recommended_min_length(spec);
        if n < needed {
            return Err(Error::InsufficientData { needed, got: n });
        }
    }
    let raw = nist::evaluate(spec, x)?;
    Ok(TestOutcome {
        kind: spec.kind,
        verdict: Verdict::decide(raw.p_value, spec.alpha),
        statistic: raw.statistic,
        p_value: raw.p_value,
        note: raw.note,
        params: raw.params,
    })
}

/// Runs every kind with default parameters at one `alpha`.
pub fn run_all(alpha: Probability, x: &BitSequence, check_min_length: bool) -> Result<Vec<TestOutcome>> {
    TestKind::ALL
        .iter()
        .map(|&k| {
            let mut spec = TestSpec::new(k, alpha.value())?;
            spec.check_min_length = check_min_length;
            run_test(&spec, x)
        })
        .collect()
}
