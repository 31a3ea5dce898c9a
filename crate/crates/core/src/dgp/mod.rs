//! Synthetic panels with grouped slopes.
//!
//! ```text
//! y_it = x_it β_i + α_i + ε_it,     ε_it ~ N(0, σ²_i)
//! x_it = ρ_i x_i,t−1 + √(1−ρ²_i) v_it,   v_it ~ N(0, σ²_ix)
//! ρ_i ~ U(0.05, 0.95),  σ²_i ~ χ²(2)/2,  σ²_ix ~ χ²(1),  α_i ~ N(1, 1)
//! β_i = β₀ in G₁,  β₀ + λ(1 + e_p) in G_p,  e_p ~ U(−h, h)
//! ```
//!
//! The first `burn_in` values of each regressor path are discarded.

pub mod stream;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{GroupSpec, PanelDataset};
pub use stream::{Purpose, Stream};

/// Sizes of the alternative groups `G₂..G_P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSizes {
    /// `M₂..M_P` given explicitly.
    Fixed(Vec<usize>),
    /// Total `𝕄` split at random into `P − 1` positive parts per replication.
    RandomTotal { total: usize },
}

impl GroupSizes {
    pub fn total(&self) -> usize {
        match self {
            GroupSizes::Fixed(v) => v.iter().sum(),
            GroupSizes::RandomTotal { total } => *total,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Heterogeneous AR(1) regressors, variances and intercepts.
    #[default]
    Heterogeneous,
    /// `x_it ~ N(0,1)` i.i.d., `σ²_i = 1`, no intercept.
    Clean,
}

impl std::str::FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heterogeneous" => Ok(Design::Heterogeneous),
            "clean" => Ok(Design::Clean),
            other => Err(Error::Config(format!("unknown design `{other}` (heterogeneous|clean)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub n: usize,
    pub t: usize,
    /// Number of groups, including the dominant one.
    pub p: usize,
    pub group_sizes: GroupSizes,
    pub lambda: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_base_beta")]
    pub base_beta: f64,
    #[serde(default)]
    pub design: Design,
    /// Scatter group members over the unit index instead of placing the
    /// alternative groups last.
    #[serde(default)]
    pub shuffle: bool,
}

fn default_burn_in() -> usize {
    50
}

fn default_base_beta() -> f64 {
    1.0
}

impl DgpConfig {
    /// Two groups with `m2` units in the alternative group, `h = 0`.
    pub fn two_group(n: usize, t: usize, m2: usize, lambda: f64) -> Self {
        DgpConfig {
            n,
            t,
            p: 2,
            group_sizes: GroupSizes::Fixed(vec![m2]),
            lambda,
            h: 0.0,
            burn_in: default_burn_in(),
            base_beta: default_base_beta(),
            design: Design::Heterogeneous,
            shuffle: false,
        }
    }

    /// `P` groups whose alternative sizes are a random split of `total`.
    pub fn multi_group(n: usize, t: usize, p: usize, total: usize, lambda: f64, h: f64) -> Self {
        DgpConfig { p, group_sizes: GroupSizes::RandomTotal { total }, h, ..Self::two_group(n, t, 0, lambda) }
    }

    pub fn with_design(mut self, design: Design) -> Self {
        self.design = design;
        self
    }

    /// Whether generated panels carry unit intercepts.
    pub fn has_intercepts(&self) -> bool {
        self.design == Design::Heterogeneous
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.t == 0 || self.p == 0 {
            return bad(format!("n, t and p must be positive (n={}, t={}, p={})", self.n, self.t, self.p));
        }
        if !self.lambda.is_finite() || !self.base_beta.is_finite() {
            return bad("lambda and base_beta must be finite".into());
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return bad(format!("h must be a finite nonnegative number, got {}", self.h));
        }
        match &self.group_sizes {
            GroupSizes::Fixed(sizes) => {
                if sizes.len() != self.p - 1 {
                    return bad(format!("{} alternative group sizes given for p = {}", sizes.len(), self.p));
                }
                if sizes.contains(&0) {
                    return bad("alternative group sizes must be positive".into());
                }
            }
            GroupSizes::RandomTotal { total } => {
                if *total < self.p - 1 {
                    return bad(format!("total {total} cannot be split into {} positive groups", self.p - 1));
                }
            }
        }
        let total = self.group_sizes.total();
        if total >= self.n {
            return bad(format!("alternative groups hold {total} of {} units; the dominant group would be empty", self.n));
        }
        Ok(())
    }
}

/// Realized parameters of one unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpUnitParams {
    pub sigma2_i: f64,
    pub sigma2_ix: f64,
    pub rho_i: f64,
    pub alpha_i: f64,
    pub beta_i: f64,
}

/// Uniform random composition of `total` into `p − 1` positive parts.
pub fn split_group_sizes(total: usize, p: usize, seed: u64, rep: u64) -> Result<Vec<usize>> {
    if p == 0 || total < p - 1 || (p == 1 && total != 0) {
        return Err(Error::Config(format!("cannot split {total} into {} positive parts", p.saturating_sub(1))));
    }
    if p == 1 {
        return Ok(Vec::new());
    }
    // Choosing p − 2 distinct cut points among the total − 1 gaps gives every
    // composition the same probability.
    let mut st = Stream::new(seed, rep, 0, Purpose::GroupSizes);
    let mut cuts: Vec<usize> = rand::seq::index::sample(st.rng(), total - 1, p - 2).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(p - 1);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        sizes.push(c - prev);
        prev = c;
    }
    Ok(sizes)
}

fn resolve_sizes(cfg: &DgpConfig, seed: u64, rep: u64) -> Result<Vec<usize>> {
    match &cfg.group_sizes {
        GroupSizes::Fixed(v) => Ok(v.clone()),
        GroupSizes::RandomTotal { total } => split_group_sizes(*total, cfg.p, seed, rep),
    }
}

/// Group slopes `β₀, β₀ + λ(1+e₂), …`, one draw of `e_p` per group.
fn group_slopes(cfg: &DgpConfig, seed: u64, rep: u64) -> Vec<f64> {
    let mut slopes = vec![cfg.base_beta];
    for g in 2..=cfg.p {
        let e = if cfg.h > 0.0 {
            Stream::new(seed, rep, g as u64, Purpose::GroupEffect).uniform_range(-cfg.h, cfg.h)
        } else {
            0.0
        };
        slopes.push(cfg.base_beta + cfg.lambda * (1.0 + e));
    }
    slopes
}

/// The group partition and slopes of replication `rep`.
pub fn generate_groups(cfg: &DgpConfig, seed: u64, rep: u64) -> Result<GroupSpec> {
    cfg.validate()?;
    let sizes = resolve_sizes(cfg, seed, rep)?;
    let dominant = cfg.n - sizes.iter().sum::<usize>();
    let mut assignment = vec![1usize; dominant];
    for (g, &m) in sizes.iter().enumerate() {
        assignment.extend(std::iter::repeat_n(g + 2, m));
    }
    if cfg.shuffle {
        use rand::seq::SliceRandom;
        assignment.shuffle(Stream::new(seed, rep, 0, Purpose::Shuffle).rng());
    }
    let slopes = group_slopes(cfg, seed, rep).into_iter().map(|b| vec![b]).collect();
    Ok(GroupSpec { n_groups: cfg.p, assignment, slopes })
}

fn unit_params(cfg: &DgpConfig, seed: u64, rep: u64, i: usize, beta_i: f64) -> DgpUnitParams {
    match cfg.design {
        Design::Clean => DgpUnitParams { sigma2_i: 1.0, sigma2_ix: 1.0, rho_i: 0.0, alpha_i: 0.0, beta_i },
        Design::Heterogeneous => {
            let mut st = Stream::new(seed, rep, i as u64, Purpose::UnitParams);
            let rho_i = st.uniform_range(0.05, 0.95);
            let sigma2_i = st.chisq(2) / 2.0;
            let sigma2_ix = st.chisq(1);
            let alpha_i = 1.0 + st.normal();
            DgpUnitParams { sigma2_i, sigma2_ix, rho_i, alpha_i, beta_i }
        }
    }
}

/// Fills `x` (length T) with the unit's regressor path and `eps` with its errors.
fn unit_series(cfg: &DgpConfig, seed: u64, rep: u64, i: usize, par: &DgpUnitParams, x: &mut [f64], eps: &mut [f64]) {
    let mut xs = Stream::new(seed, rep, i as u64, Purpose::Regressor);
    let sd_v = par.sigma2_ix.sqrt();
    match cfg.design {
        Design::Clean => x.iter_mut().for_each(|v| *v = sd_v * xs.normal()),
        Design::Heterogeneous => {
            let scale = (1.0 - par.rho_i * par.rho_i).sqrt() * sd_v;
            let mut prev = 0.0;
            for _ in 0..cfg.burn_in {
                prev = par.rho_i * prev + scale * xs.normal();
            }
            for v in x.iter_mut() {
                prev = par.rho_i * prev + scale * xs.normal();
                *v = prev;
            }
        }
    }
    let mut es = Stream::new(seed, rep, i as u64, Purpose::Noise);
    let sd_e = par.sigma2_i.sqrt();
    eps.iter_mut().for_each(|v| *v = sd_e * es.normal());
}

/// Draws replication `rep` of the design. Regressors, errors and unit
/// parameters depend only on `(seed, rep, unit)`, never on the grouping, so
/// sweeps over λ or group sizes share their random numbers.
pub fn generate_panel(cfg: &DgpConfig, seed: u64, rep: u64) -> Result<(PanelDataset, GroupSpec, Vec<DgpUnitParams>)> {
    let groups = generate_groups(cfg, seed, rep)?;
    let (n, t) = (cfg.n, cfg.t);
    let mut y = vec![0.0; n * t];
    let mut x = vec![0.0; n * t];
    let mut eps = vec![0.0; t];
    let mut params = Vec::with_capacity(n);
    for i in 0..n {
        let beta_i = groups.unit_slope(i)[0];
        let par = unit_params(cfg, seed, rep, i, beta_i);
        let xi = &mut x[i * t..(i + 1) * t];
        unit_series(cfg, seed, rep, i, &par, xi, &mut eps);
        for ((yv, xv), e) in y[i * t..(i + 1) * t].iter_mut().zip(xi.iter()).zip(&eps) {
            *yv = xv * beta_i + par.alpha_i + e;
        }
        params.push(par);
    }
    let panel = PanelDataset::from_arrays(n, t, 1, y, x)?;
    Ok((panel, groups, params))
}
