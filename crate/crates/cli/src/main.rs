//! `grouptest` command line: run the slope homogeneity tests on a panel file,
//! simulate rejection rates, and evaluate local power.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grouptest::dgp::{Design, DgpConfig, GroupSizes};
use grouptest::estimators::SigmaTildeDivisor;
use grouptest::exec::Execution;
use grouptest::homogeneity::WlsWeighting;
use grouptest::panel::load_panel_csv;
use grouptest::sim::{run_experiment, summarize, write_results, ExperimentConfig, PowerRow, SweepVariable, RESULTS_FILE};
use grouptest::theory::{
    asymptotic_power, boundary_gamma, estimate_moments, noncentrality_for, LocalAlternative, MomentBlock, MomentSpec,
    Regime,
};
use grouptest::{run_suite, SlopeTestSuite, TestName, TestOptions, TransformKind};
use serde::Serialize;

const SUMMARY_FILE: &str = "summary.json";

#[derive(Parser)]
#[command(name = "grouptest", version, about = "Slope homogeneity tests for grouped panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tests on a long-format panel CSV.
    Test(TestArgs),
    /// Rejection rates at one design point.
    Simulate(SimArgs),
    /// Rejection rates along one design axis.
    Sweep(SweepArgs),
    /// Detectability boundary, noncentralities and asymptotic power.
    Theory(TheoryArgs),
    /// Estimate the moment matrices of a design by simulation.
    Moments(MomentArgs),
}

#[derive(Args)]
struct SuiteArgs {
    /// Comma-separated tests (swamy, delta, sc_j, brs_lm); all by default.
    #[arg(long, value_delimiter = ',')]
    tests: Vec<TestName>,
    /// Transform per test as `test=kind`, or a bare kind for every test.
    #[arg(long, value_delimiter = ',')]
    transform: Vec<String>,
    /// Weights of the WLS estimator inside the dispersion statistics.
    #[arg(long, value_name = "consistent|sigma-hat")]
    py_wls_weights: Option<WlsWeighting>,
    /// Divisor of the pooled residual variances.
    #[arg(long, value_name = "pooled-dof|displayed")]
    sigma_tilde_divisor: Option<SigmaTildeDivisor>,
}

impl SuiteArgs {
    fn is_set(&self) -> bool {
        !self.tests.is_empty() || !self.transform.is_empty() || self.py_wls_weights.is_some() || self.sigma_tilde_divisor.is_some()
    }

    fn build(&self, alpha: f64) -> Result<SlopeTestSuite> {
        let which = if self.tests.is_empty() { TestName::ALL.to_vec() } else { self.tests.clone() };
        let mut options = TestOptions::with_alpha(alpha);
        if let Some(w) = self.py_wls_weights {
            options.wls_weights = w;
        }
        if let Some(d) = self.sigma_tilde_divisor {
            options.sigma_tilde_divisor = d;
        }
        let mut suite = SlopeTestSuite::new(which, options)?;
        for (test, kind) in parse_transforms(&self.transform)? {
            match test {
                Some(t) => suite = suite.with_transform(t, kind),
                None => {
                    let all: Vec<TestName> = suite.which.iter().copied().collect();
                    suite = all.into_iter().fold(suite, |s, t| s.with_transform(t, kind));
                }
            }
        }
        Ok(suite)
    }
}

fn parse_transforms(items: &[String]) -> Result<Vec<(Option<TestName>, TransformKind)>> {
    items
        .iter()
        .map(|item| match item.split_once('=') {
            Some((t, k)) => Ok((Some(t.parse()?), k.parse()?)),
            None => Ok((None, item.parse()?)),
        })
        .collect()
}

fn warn_pairings(suite: &SlopeTestSuite) {
    for (test, kind) in suite.nonstandard_pairings() {
        eprintln!(
            "warning: {test} runs with the `{kind}` transform instead of its usual `{}`",
            test.default_transform().as_str()
        );
    }
}

#[derive(Args)]
struct TestArgs {
    /// Panel CSV with columns unit,time,y,x1..xK.
    #[arg(long)]
    data: PathBuf,
    /// Number of regressors.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Serialize)]
struct TestRow {
    test: TestName,
    transform: TransformKind,
    statistic: Option<f64>,
    p_value: Option<f64>,
    dist: Option<String>,
    reject: Option<bool>,
    alpha: f64,
    error: Option<String>,
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let panel = load_panel_csv(&args.data, args.k).with_context(|| format!("reading {}", args.data.display()))?;
    let suite = args.suite.build(args.alpha)?;
    warn_pairings(&suite);
    let mut first_error = None;
    let rows: Vec<TestRow> = run_suite(&panel, &suite)?
        .into_iter()
        .map(|e| match e.outcome {
            Ok(r) => TestRow {
                test: e.test,
                transform: e.transform,
                statistic: Some(r.statistic),
                p_value: Some(r.p_value),
                dist: Some(r.dist.to_string()),
                reject: Some(r.reject),
                alpha: r.alpha,
                error: None,
            },
            Err(err) => {
                let msg = err.to_string();
                first_error.get_or_insert(err);
                TestRow {
                    test: e.test,
                    transform: e.transform,
                    statistic: None,
                    p_value: None,
                    dist: None,
                    reject: None,
                    alpha: suite.alpha(),
                    error: Some(msg),
                }
            }
        })
        .collect();

    let mut out = std::io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &rows)?;
        writeln!(out)?;
    } else if args.csv {
        writeln!(out, "test,transform,statistic,p_value,dist,reject,alpha,error")?;
        for r in &rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.test,
                r.transform.as_str(),
                opt(r.statistic),
                opt(r.p_value),
                r.dist.clone().unwrap_or_default(),
                r.reject.map(|b| b.to_string()).unwrap_or_default(),
                r.alpha,
                r.error.as_deref().map(|m| format!("\"{}\"", m.replace('"', "\"\""))).unwrap_or_default()
            )?;
        }
    } else {
        writeln!(out, "{:<8} {:<9} {:>12} {:>10} {:<18} {:<6}", "test", "transform", "statistic", "p_value", "dist", "reject")?;
        for r in &rows {
            match &r.error {
                None => writeln!(
                    out,
                    "{:<8} {:<9} {:>12.4} {:>10.4} {:<18} {:<6}",
                    r.test.as_str(),
                    r.transform.as_str(),
                    r.statistic.unwrap_or(f64::NAN),
                    r.p_value.unwrap_or(f64::NAN),
                    r.dist.as_deref().unwrap_or(""),
                    r.reject.unwrap_or(false)
                )?,
                Some(m) => writeln!(out, "{:<8} {:<9} error: {m}", r.test.as_str(), r.transform.as_str())?,
            }
        }
    }
    out.flush()?;
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Design flags shared by `simulate`, `sweep` and `moments`.
#[derive(Args)]
struct DesignArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// Number of groups including the dominant one.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Alternative group sizes M2..MP, comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "m_total")]
    m2: Vec<usize>,
    /// Total size of the alternative groups, split at random each replication.
    #[arg(long)]
    m_total: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    h: f64,
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    base_beta: f64,
    #[arg(long, default_value = "heterogeneous", value_name = "heterogeneous|clean")]
    design: Design,
    /// Scatter group members over the unit index.
    #[arg(long)]
    shuffle: bool,
}

impl DesignArgs {
    fn build(&self) -> Result<DgpConfig> {
        let group_sizes = match (&self.m_total, self.m2.is_empty()) {
            (Some(total), _) => GroupSizes::RandomTotal { total: *total },
            (None, false) => GroupSizes::Fixed(self.m2.clone()),
            (None, true) if self.p == 1 => GroupSizes::Fixed(Vec::new()),
            (None, true) => bail!(grouptest::Error::Config("give --m2 or --m-total for the alternative groups".into())),
        };
        let cfg = DgpConfig {
            n: self.n,
            t: self.t,
            p: self.p,
            group_sizes,
            lambda: self.lambda,
            h: self.h,
            burn_in: self.burn_in,
            base_beta: self.base_beta,
            design: self.design,
            shuffle: self.shuffle,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Replication-parallel worker count.
    #[arg(long, env = "GROUPTEST_WORKERS")]
    workers: Option<usize>,
    /// Run replications on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Directory receiving results.csv and summary.json.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print rows as JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimArgs {
    /// Experiment configuration as JSON; excludes the inline design flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    suite: SuiteArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Swept design field.
    #[arg(long, value_name = "m2|lambda|total_m|p|t")]
    variable: Option<SweepVariable>,
    /// Comma-separated values of the swept field.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Vec<f64>,
}

/// Flags that are ignored when a config file is given; any of them present
/// alongside `--config` is an error.
fn inline_flags_present(matches: &clap::ArgMatches) -> Vec<String> {
    const INLINE: [&str; 19] = [
        "n", "t", "p", "m2", "m_total", "lambda", "h", "burn_in", "base_beta", "design", "shuffle", "reps", "seed",
        "alpha", "tests", "transform", "py_wls_weights", "sigma_tilde_divisor", "variable",
    ];
    INLINE
        .iter()
        .chain(std::iter::once(&"values"))
        .filter(|id| {
            matches!(matches.try_contains_id(id), Ok(true))
                && matches.value_source(id) == Some(clap::parser::ValueSource::CommandLine)
        })
        .map(|id| format!("--{}", id.replace('_', "-")))
        .collect()
}

fn experiment_from(sim: &SimArgs, sweep: Option<(SweepVariable, Vec<f64>)>, matches: &clap::ArgMatches) -> Result<ExperimentConfig> {
    let mut cfg = match &sim.config {
        Some(path) => {
            let clash = inline_flags_present(matches);
            if !clash.is_empty() {
                bail!(grouptest::Error::Config(format!(
                    "--config cannot be combined with inline flags ({})",
                    clash.join(", ")
                )));
            }
            ExperimentConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let mut cfg = ExperimentConfig::new(sim.design.build()?, sim.reps, sim.seed);
            cfg.alpha = sim.alpha;
            if sim.suite.is_set() {
                cfg.tests = sim.suite.build(sim.alpha)?;
            }
            if let Some((variable, values)) = sweep {
                cfg = cfg.with_sweep(variable, values);
            }
            cfg
        }
    };
    if sim.run.workers.is_some() {
        cfg.workers = sim.run.workers;
    }
    if sim.run.sequential {
        cfg.execution = Execution::Sequential;
    }
    if sim.run.output.is_some() {
        cfg.output = sim.run.output.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_and_report(cfg: &ExperimentConfig, json: bool) -> Result<()> {
    warn_pairings(&cfg.suite());
    for t in cfg.misspecified_tests() {
        eprintln!("warning: {t} runs on panels that still carry unit intercepts");
    }
    let rows: Vec<PowerRow> = run_experiment(cfg)?;
    let summary = summarize(&rows, cfg.sweep.as_ref())?;
    for f in &summary.flagged {
        eprintln!("warning: {} failed in {:.1}% of replications at {} = {}", f.test, 100.0 * f.error_rate, summary.x, f.x);
    }
    if let Some(dir) = &cfg.output {
        write_json(&dir.join(SUMMARY_FILE), &summary)?;
        eprintln!("wrote {} and {}", dir.join(RESULTS_FILE).display(), dir.join(SUMMARY_FILE).display());
    }
    let out = std::io::stdout().lock();
    if json {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, &rows)?;
        writeln!(out)?;
    } else {
        write_results(out, &rows)?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_simulate(args: SimArgs, matches: &clap::ArgMatches) -> Result<()> {
    let cfg = experiment_from(&args, None, matches)?;
    run_and_report(&cfg, args.run.json)
}

fn cmd_sweep(args: SweepArgs, matches: &clap::ArgMatches) -> Result<()> {
    let sweep = match (args.variable, args.values.is_empty()) {
        (Some(v), false) => Some((v, args.values.clone())),
        (None, true) if args.sim.config.is_some() => None,
        _ => bail!(grouptest::Error::Config("sweep needs --variable and --values (or a config file)".into())),
    };
    let cfg = experiment_from(&args.sim, sweep, matches)?;
    if cfg.sweep.is_none() {
        bail!(grouptest::Error::Config("the configuration has no sweep".into()));
    }
    run_and_report(&cfg, args.sim.run.json)
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    /// Alternative group size.
    #[arg(long)]
    m: Option<usize>,
    /// Slope gap scale; defaults to the boundary value, which gives c = 1.
    #[arg(long, conflicts_with_all = ["c", "m0"])]
    gamma: Option<f64>,
    /// Local constant `c`, given directly instead of through N, T, M and gamma.
    #[arg(long, requires = "m0")]
    c: Option<f64>,
    /// Alternative group share, given directly.
    #[arg(long, requires = "c")]
    m0: Option<f64>,
    /// Slope deviation of the alternative group, comma-separated (length K).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1")]
    lambda: Vec<f64>,
    #[arg(long, default_value = "large_t", value_name = "large_t|fixed_t")]
    regime: Regime,
    /// `scalar` (every moment 1, V0 = 2), `auto` (simulated), or a JSON file.
    #[arg(long, default_value = "scalar")]
    moments: String,
    /// Tests to report; delta, sc_j and brs_lm by default (brs_lm alone at fixed T).
    #[arg(long, value_delimiter = ',')]
    tests: Vec<TestName>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Design used by `--moments auto`.
    #[arg(long, default_value = "heterogeneous", value_name = "heterogeneous|clean")]
    design: Design,
    /// Replications used by `--moments auto`.
    #[arg(long, default_value_t = 200)]
    moment_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "GROUPTEST_WORKERS")]
    workers: Option<usize>,
}

#[derive(Serialize)]
struct Boundary {
    gamma_large_t: f64,
    gamma_fixed_t: f64,
}

#[derive(Serialize)]
struct TheoryReport {
    regime: Regime,
    alpha: f64,
    k: usize,
    boundary: Option<Boundary>,
    gamma: Option<f64>,
    c: f64,
    m0: f64,
    lambda: Vec<f64>,
    moments: String,
    noncentralities: BTreeMap<TestName, f64>,
    asymptotic_power: BTreeMap<TestName, f64>,
}

fn default_transform(design: Design) -> TransformKind {
    match design {
        Design::Heterogeneous => TransformKind::Within,
        Design::Clean => TransformKind::None,
    }
}

fn cmd_theory(args: TheoryArgs) -> Result<()> {
    let tests = if args.tests.is_empty() {
        match args.regime {
            Regime::LargeT => vec![TestName::Delta, TestName::ScJ, TestName::BrsLm],
            Regime::FixedT => vec![TestName::BrsLm],
        }
    } else {
        args.tests.clone()
    };
    if args.regime == Regime::FixedT {
        if let Some(t) = tests.iter().find(|t| t.needs_large_t()) {
            bail!(grouptest::Error::Config(format!(
                "{t} has no fixed-T limit; its null distribution requires T to grow (use brs_lm)"
            )));
        }
    }

    let (alt, gamma, boundary) = match (args.c, args.m0) {
        (Some(c), Some(m0)) => (LocalAlternative::two_group(args.lambda.clone(), m0, c), None, None),
        _ => {
            let (Some(n), Some(t), Some(m)) = (args.n, args.t, args.m) else {
                bail!(grouptest::Error::Config("give --n, --t and --m, or --c and --m0".into()));
            };
            let gamma = args.gamma.unwrap_or_else(|| boundary_gamma(n, t, m, args.regime));
            let alt = LocalAlternative::from_design(n, t, &[m], gamma, vec![args.lambda.clone()], args.regime)?;
            let b = Boundary {
                gamma_large_t: boundary_gamma(n, t, m, Regime::LargeT),
                gamma_fixed_t: boundary_gamma(n, t, m, Regime::FixedT),
            };
            (alt, Some(gamma), Some(b))
        }
    };
    alt.validate()?;

    let k = args.lambda.len();
    let mut ms = match args.moments.as_str() {
        "scalar" => MomentSpec::scalar(k, MomentBlock::scalar(k, 1.0, 1.0, 1.0, 1.0), 1.0, 2.0)?,
        "auto" => {
            let (Some(n), Some(t), Some(m)) = (args.n, args.t, args.m) else {
                bail!(grouptest::Error::Config("--moments auto needs --n, --t and --m".into()));
            };
            if k != 1 {
                bail!(grouptest::Error::Config("simulated moments have K = 1; give a single --lambda".into()));
            }
            let cfg = DgpConfig::two_group(n, t, m, 0.0).with_design(args.design);
            estimate_moments(&cfg, default_transform(args.design), args.moment_reps, args.seed, Execution::Parallel, args.workers)?
        }
        path => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let ms: MomentSpec = serde_json::from_str(&text).map_err(grouptest::Error::from)?;
            ms.validate()?;
            ms
        }
    };
    if args.regime == Regime::FixedT && ms.fixed_t.is_none() {
        let Some(t) = args.t else {
            bail!(grouptest::Error::Config("fixed-T moments need --t or a moments file that carries them".into()));
        };
        ms = ms.with_fixed_t_from(t);
    }

    let mut noncentralities = BTreeMap::new();
    let mut power = BTreeMap::new();
    for test in tests {
        let nc = noncentrality_for(test, &ms, &alt, args.regime)?;
        power.insert(test, asymptotic_power(test, nc, ms.dim(), args.alpha)?);
        noncentralities.insert(test, nc);
    }
    let report = TheoryReport {
        regime: args.regime,
        alpha: args.alpha,
        k: ms.dim(),
        boundary,
        gamma,
        c: alt.c_squared().sqrt(),
        m0: alt.m0(),
        lambda: args.lambda,
        moments: args.moments,
        noncentralities,
        asymptotic_power: power,
    };
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Args)]
struct MomentArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Transform applied before the moments are formed; `within` for the
    /// heterogeneous design and `none` for the clean one by default.
    #[arg(long)]
    transform: Option<TransformKind>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "GROUPTEST_WORKERS")]
    workers: Option<usize>,
    /// Write the moments here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn cmd_moments(args: MomentArgs) -> Result<()> {
    let cfg = args.design.build()?;
    let transform = args.transform.unwrap_or_else(|| default_transform(cfg.design));
    let ms = estimate_moments(&cfg, transform, args.reps, args.seed, Execution::Parallel, args.workers)?;
    match &args.output {
        Some(path) => write_json(path, &ms),
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &ms)?;
            writeln!(out)?;
            Ok(())
        }
    }
}

/// 1 for usage and configuration errors, 3 for numerical degeneracy, 2 for
/// everything else (bad data, I/O).
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<grouptest::Error>()) {
        Some(grouptest::Error::Config(_)) | Some(grouptest::Error::Index { .. }) => 1,
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let matches = match <Cli as clap::CommandFactory>::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match <Cli as clap::FromArgMatches>::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m.clone()).expect("subcommand is required");
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a, &sub),
        Command::Sweep(a) => cmd_sweep(a, &sub),
        Command::Theory(a) => cmd_theory(a),
        Command::Moments(a) => cmd_moments(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
