//! Monte Carlo experiments: rejection rates over replications and sweeps.
//!
//! Replication `r` of every design point draws from the streams keyed by
//! `(seed, r)`, so points along a sweep share their random numbers and the
//! counts do not depend on how replications are scheduled.

pub mod results;
pub mod summary;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dgp::{generate_panel, DgpConfig, GroupSizes};
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::homogeneity::{run_suite, SlopeTestSuite, SuiteEntry, TestName};
use crate::transforms::TransformKind;
pub use results::{read_results, write_results, PowerRow, ResultSink, RowKey};
pub use summary::{summarize, Summary};

/// File name of the results table inside the output directory.
pub const RESULTS_FILE: &str = "results.csv";
/// Marker present while an experiment is running or after it failed.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Size of the single alternative group (two-group designs).
    M2,
    Lambda,
    /// Total alternative size split at random over `P − 1` groups.
    TotalM,
    P,
    T,
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "m2" => Ok(SweepVariable::M2),
            "lambda" => Ok(SweepVariable::Lambda),
            "total_m" | "m_total" => Ok(SweepVariable::TotalM),
            "p" => Ok(SweepVariable::P),
            "t" => Ok(SweepVariable::T),
            other => Err(Error::Config(format!("unknown sweep variable `{other}` (m2|lambda|total_m|p|t)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{what} must be a nonnegative integer, got {v}")))
    }
}

impl Sweep {
    /// The design at one sweep value.
    pub fn apply(&self, base: &DgpConfig, value: f64) -> Result<DgpConfig> {
        let mut cfg = base.clone();
        match self.variable {
            SweepVariable::M2 => {
                if cfg.p != 2 {
                    return Err(Error::Config(format!("sweeping m2 needs p = 2, design has p = {}", cfg.p)));
                }
                cfg.group_sizes = GroupSizes::Fixed(vec![as_count(value, "m2")?]);
            }
            SweepVariable::Lambda => cfg.lambda = value,
            SweepVariable::TotalM => cfg.group_sizes = GroupSizes::RandomTotal { total: as_count(value, "total_m")? },
            SweepVariable::P => {
                if !matches!(cfg.group_sizes, GroupSizes::RandomTotal { .. }) {
                    return Err(Error::Config("sweeping p needs a random split of a total alternative size".into()));
                }
                cfg.p = as_count(value, "p")?;
            }
            SweepVariable::T => cfg.t = as_count(value, "t")?,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The sweep coordinate of a results row.
    pub fn coordinate(variable: SweepVariable, row: &PowerRow) -> f64 {
        match variable {
            SweepVariable::M2 | SweepVariable::TotalM => row.m_total as f64,
            SweepVariable::Lambda => row.lambda,
            SweepVariable::P => row.p as f64,
            SweepVariable::T => row.t as f64,
        }
    }
}

fn default_reps() -> usize {
    1000
}

fn default_alpha() -> f64 {
    0.05
}

/// Declarative description of a Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dgp: DgpConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Level of every test; overrides the level stored in `tests`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tests: SlopeTestSuite,
    /// Directory receiving the results table; nothing is written when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(dgp: DgpConfig, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            dgp,
            sweep: None,
            reps,
            alpha: default_alpha(),
            seed,
            tests: SlopeTestSuite::default(),
            output: None,
            workers: None,
            execution: Execution::default(),
        }
    }

    pub fn with_tests(mut self, which: impl IntoIterator<Item = TestName>) -> Self {
        self.tests.which = which.into_iter().collect();
        self
    }

    pub fn with_sweep(mut self, variable: SweepVariable, values: Vec<f64>) -> Self {
        self.sweep = Some(Sweep { variable, values });
        self
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The test suite with the experiment's level applied.
    pub fn suite(&self) -> SlopeTestSuite {
        let mut s = self.tests.clone();
        s.options.alpha = self.alpha;
        s
    }

    /// Designs to run, one per sweep value (or the base design alone).
    pub fn design_points(&self) -> Result<Vec<DgpConfig>> {
        match &self.sweep {
            None => Ok(vec![self.dgp.clone()]),
            Some(sw) => sw.values.iter().map(|&v| sw.apply(&self.dgp, v)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(Error::Config("sweep has no values".into()));
            }
        }
        self.suite().validate()?;
        self.dgp.validate()?;
        self.design_points()?;
        Ok(())
    }

    /// Tests that run on panels still carrying the design's intercepts.
    pub fn misspecified_tests(&self) -> Vec<TestName> {
        if !self.dgp.has_intercepts() {
            return Vec::new();
        }
        let suite = self.suite();
        suite.which.iter().copied().filter(|&t| suite.transform_for(t) == TransformKind::None).collect()
    }
}

/// Runs replication `rep` of the experiment's base design (the sweep is
/// ignored). Per-test failures are carried in the entries.
pub fn run_replication(cfg: &ExperimentConfig, rep: usize) -> Result<Vec<SuiteEntry>> {
    if rep >= cfg.reps {
        return Err(Error::Index { rep, reps: cfg.reps });
    }
    replicate(&cfg.dgp, &cfg.suite(), cfg.seed, rep as u64)
}

fn replicate(dgp: &DgpConfig, suite: &SlopeTestSuite, seed: u64, rep: u64) -> Result<Vec<SuiteEntry>> {
    let (panel, _, _) = generate_panel(dgp, seed, rep)?;
    run_suite(&panel, suite)
}

/// Rejection counts at one design point, one entry per selected test in
/// suite order: `(test, transform, n_reject, n_errors)`.
pub fn count_rejections(
    dgp: &DgpConfig,
    suite: &SlopeTestSuite,
    reps: usize,
    seed: u64,
    exec: Execution,
    workers: Option<usize>,
) -> Result<Vec<(TestName, TransformKind, usize, usize)>> {
    let outcomes = map_indices(reps as u64, exec, workers, |rep| {
        replicate(dgp, suite, seed, rep).map(|entries| {
            entries.into_iter().map(|e| (e.test, e.transform, e.outcome.map(|r| r.reject).ok())).collect::<Vec<_>>()
        })
    })?;
    let mut counts: Vec<(TestName, TransformKind, usize, usize)> =
        suite.which.iter().map(|&t| (t, suite.transform_for(t), 0, 0)).collect();
    for rep in outcomes {
        for (slot, (_, _, res)) in counts.iter_mut().zip(rep?) {
            match res {
                Some(true) => slot.2 += 1,
                Some(false) => {}
                None => slot.3 += 1,
            }
        }
    }
    Ok(counts)
}

fn rows_for_point(
    cfg: &ExperimentConfig,
    dgp: &DgpConfig,
    counts: Vec<(TestName, TransformKind, usize, usize)>,
    elapsed: f64,
) -> Vec<PowerRow> {
    counts
        .into_iter()
        .map(|(test, transform, n_reject, n_errors)| {
            let (rejection_rate, mc_std_err) = PowerRow::rate(n_reject, n_errors, cfg.reps);
            PowerRow {
                n: dgp.n,
                t: dgp.t,
                k: 1,
                p: dgp.p,
                m_total: dgp.group_sizes.total(),
                lambda: dgp.lambda,
                h: dgp.h,
                transform,
                test,
                reps: cfg.reps,
                n_reject,
                n_errors,
                rejection_rate,
                mc_std_err,
                seed: cfg.seed,
                elapsed_s: elapsed,
            }
        })
        .collect()
}

fn planned_keys(cfg: &ExperimentConfig, dgp: &DgpConfig, suite: &SlopeTestSuite) -> Vec<RowKey> {
    let counts = suite.which.iter().map(|&t| (t, suite.transform_for(t), 0, 0)).collect();
    rows_for_point(cfg, dgp, counts, 0.0).iter().map(PowerRow::key).collect()
}

/// Runs every design point and returns one row per (point, test).
///
/// With `output` set, rows go to `output/results.csv` as each point finishes.
/// Points whose rows are already in that file are not rerun. The
/// `INCOMPLETE` marker is removed only after every point has been written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PowerRow>> {
    cfg.validate()?;
    let suite = cfg.suite();
    let points = cfg.design_points()?;

    let mut existing: HashMap<RowKey, PowerRow> = HashMap::new();
    let mut sink = None;
    if let Some(dir) = &cfg.output {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(INCOMPLETE_MARKER), "experiment in progress or interrupted\n")?;
        let path = dir.join(RESULTS_FILE);
        if path.exists() {
            for row in read_results(&path)? {
                existing.insert(row.key(), row);
            }
        }
        sink = Some(ResultSink::open(&path)?);
    }

    let mut rows = Vec::new();
    for dgp in &points {
        let keys = planned_keys(cfg, dgp, &suite);
        if !keys.is_empty() && keys.iter().all(|k| existing.contains_key(k)) {
            rows.extend(keys.iter().map(|k| existing[k].clone()));
            continue;
        }
        let start = Instant::now();
        let counts = count_rejections(dgp, &suite, cfg.reps, cfg.seed, cfg.execution, cfg.workers)?;
        let point_rows = rows_for_point(cfg, dgp, counts, start.elapsed().as_secs_f64());
        for row in &point_rows {
            if existing.contains_key(&row.key()) {
                continue;
            }
            if let Some(s) = sink.as_mut() {
                s.push(row)?;
            }
        }
        rows.extend(point_rows);
    }
    if let Some(dir) = &cfg.output {
        std::fs::remove_file(dir.join(INCOMPLETE_MARKER))?;
    }
    Ok(rows)
}
