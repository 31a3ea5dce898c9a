//! Slope homogeneity statistics.
//!
//! * Swamy's dispersion statistic and its standardized large-panel version Δ
//!   ([`dispersion`]);
//! * the residual-based LM statistic 𝒥 ([`residual_lm`]);
//! * the random-coefficient variance LM statistic ([`variance_lm`]).
//!
//! Each statistic treats its input as a no-intercept, K-regressor panel.
//! Intercepts are removed beforehand by a [`TransformKind`], which
//! [`run_suite`] applies per test.

pub mod dispersion;
pub mod residual_lm;
pub mod variance_lm;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::SigmaTildeDivisor;
use crate::numkern::{chisq_sf, std_normal_sf};
use crate::panel::PanelDataset;
use crate::transforms::TransformKind;

pub use dispersion::{delta_parts, delta_test, dispersion_statistic, swamy_statistic};
pub use residual_lm::{sc_components, sc_j_test, ScComponents};
pub use variance_lm::{brs_lm_test, lm_components, LmComponents};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    Swamy,
    Delta,
    ScJ,
    BrsLm,
}

impl TestName {
    pub const ALL: [TestName; 4] = [TestName::Swamy, TestName::Delta, TestName::ScJ, TestName::BrsLm];

    pub fn as_str(self) -> &'static str {
        match self {
            TestName::Swamy => "swamy",
            TestName::Delta => "delta",
            TestName::ScJ => "sc_j",
            TestName::BrsLm => "brs_lm",
        }
    }

    /// Intercept removal used for this test in the reference Monte Carlo
    /// design: within demeaning except forward orthogonal deviations for LM.
    pub fn default_transform(self) -> TransformKind {
        match self {
            TestName::BrsLm => TransformKind::ForwardOrthogonal,
            _ => TransformKind::Within,
        }
    }

    /// Whether the test's null limit requires `T → ∞`.
    pub fn needs_large_t(self) -> bool {
        !matches!(self, TestName::BrsLm)
    }

    pub fn run(self, data: &PanelDataset, opts: &TestOptions) -> Result<TestResult> {
        match self {
            TestName::Swamy => swamy_statistic(data, opts),
            TestName::Delta => delta_test(data, opts),
            TestName::ScJ => sc_j_test(data, opts),
            TestName::BrsLm => brs_lm_test(data, opts),
        }
    }
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "swamy" => Ok(TestName::Swamy),
            "delta" => Ok(TestName::Delta),
            "sc_j" | "j" => Ok(TestName::ScJ),
            "brs_lm" | "lm" => Ok(TestName::BrsLm),
            other => Err(Error::Config(format!("unknown test `{other}` (swamy|delta|sc_j|brs_lm)"))),
        }
    }
}

/// Reference distribution of a statistic under the null.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RefDist {
    /// One-sided upper tail of N(0, 1).
    StdNormalUpper,
    /// Upper tail of χ² with `df` degrees of freedom.
    ChiSquare { df: u32 },
}

impl RefDist {
    pub fn upper_tail(self, statistic: f64) -> f64 {
        let p = match self {
            RefDist::StdNormalUpper => std_normal_sf(statistic),
            RefDist::ChiSquare { df } => chisq_sf(statistic, df),
        };
        p.clamp(0.0, 1.0)
    }
}

impl fmt::Display for RefDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefDist::StdNormalUpper => f.write_str("std_normal_upper"),
            RefDist::ChiSquare { df } => write!(f, "chisq({df})"),
        }
    }
}

impl From<RefDist> for String {
    fn from(d: RefDist) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for RefDist {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        if s == "std_normal_upper" {
            return Ok(RefDist::StdNormalUpper);
        }
        s.strip_prefix("chisq(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|df| df.parse().ok())
            .map(|df| RefDist::ChiSquare { df })
            .ok_or_else(|| Error::Config(format!("unknown reference distribution `{s}`")))
    }
}

/// Outcome of one test on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestName,
    pub statistic: f64,
    pub p_value: f64,
    pub dist: RefDist,
    pub reject: bool,
    pub alpha: f64,
}

impl TestResult {
    /// Computes the p-value from `dist`; rejects iff `p < alpha`.
    pub fn new(test: TestName, statistic: f64, dist: RefDist, alpha: f64) -> Self {
        let p_value = dist.upper_tail(statistic);
        TestResult { test, statistic, p_value, dist, reject: p_value < alpha, alpha }
    }
}

/// How the inner WLS estimator of the dispersion kernel is weighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WlsWeighting {
    /// Same variances as the outer weights.
    #[default]
    Consistent,
    /// Always the unit-level OLS variances `σ̂²ᵢ`.
    SigmaHat,
}

impl FromStr for WlsWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "consistent" => Ok(WlsWeighting::Consistent),
            "sigma_hat" => Ok(WlsWeighting::SigmaHat),
            other => Err(Error::Config(format!("unknown WLS weighting `{other}` (consistent|sigma-hat)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestOptions {
    pub alpha: f64,
    pub wls_weights: WlsWeighting,
    pub sigma_tilde_divisor: SigmaTildeDivisor,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            alpha: 0.05,
            wls_weights: WlsWeighting::default(),
            sigma_tilde_divisor: SigmaTildeDivisor::default(),
        }
    }
}

impl TestOptions {
    pub fn with_alpha(alpha: f64) -> Self {
        TestOptions { alpha, ..Default::default() }
    }
}

/// Selection of tests, their transforms and shared options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlopeTestSuite {
    pub which: BTreeSet<TestName>,
    /// Transform per test; missing entries use [`TestName::default_transform`].
    pub transforms: BTreeMap<TestName, TransformKind>,
    pub options: TestOptions,
}

impl Default for SlopeTestSuite {
    fn default() -> Self {
        SlopeTestSuite { which: TestName::ALL.into_iter().collect(), transforms: BTreeMap::new(), options: TestOptions::default() }
    }
}

impl SlopeTestSuite {
    pub fn new(which: impl IntoIterator<Item = TestName>, options: TestOptions) -> Result<Self> {
        let suite = SlopeTestSuite { which: which.into_iter().collect(), transforms: BTreeMap::new(), options };
        suite.validate()?;
        Ok(suite)
    }

    pub fn with_transform(mut self, test: TestName, kind: TransformKind) -> Self {
        self.transforms.insert(test, kind);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.options.alpha
    }

    pub fn transform_for(&self, test: TestName) -> TransformKind {
        self.transforms.get(&test).copied().unwrap_or_else(|| test.default_transform())
    }

    /// Tests whose transform departs from the default pairing.
    pub fn nonstandard_pairings(&self) -> Vec<(TestName, TransformKind)> {
        self.which
            .iter()
            .map(|&t| (t, self.transform_for(t)))
            .filter(|&(t, k)| k != t.default_transform())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.options.alpha;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("alpha must lie strictly inside (0,1), got {a}")));
        }
        if self.which.is_empty() {
            return Err(Error::Config("no tests selected".into()));
        }
        Ok(())
    }
}

/// One slot of [`run_suite`] output.
#[derive(Debug)]
pub struct SuiteEntry {
    pub test: TestName,
    pub transform: TransformKind,
    pub outcome: Result<TestResult>,
}

/// Runs every selected test on its transformed copy of `data`, in the fixed
/// order swamy, delta, sc_j, brs_lm. A failing test does not stop the others.
pub fn run_suite(data: &PanelDataset, suite: &SlopeTestSuite) -> Result<Vec<SuiteEntry>> {
    suite.validate()?;
    let mut cache: BTreeMap<TransformKind, PanelDataset> = BTreeMap::new();
    let mut out = Vec::with_capacity(suite.which.len());
    for &test in &suite.which {
        let transform = suite.transform_for(test);
        let outcome = match cache.get(&transform) {
            Some(d) => test.run(d, &suite.options),
            None => match transform.apply(data) {
                Ok(d) => {
                    let r = test.run(&d, &suite.options);
                    cache.insert(transform, d);
                    r
                }
                Err(e) => Err(e),
            },
        };
        out.push(SuiteEntry { test, transform, outcome });
    }
    Ok(out)
}
