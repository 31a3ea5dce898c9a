//! Simulation estimates of the limiting moment matrices.
//!
//! For a set of units `G` with regressors `xᵢ` (T×K) and error variances `σ²ᵢ`:
//!
//! ```text
//! Q^(G)   = (#G T)⁻¹ Σᵢ xᵢ'xᵢ / σ²ᵢ
//! S^(G)   = (#G T)⁻¹ Σᵢ xᵢ'xᵢ
//! W^(G)   = (#G T)⁻¹ Σᵢ Σₜ xᵢₜxᵢₜ' (1 − hᵢ,ₜₜ)
//! Ωₖ^(G)  = (#G T²)⁻¹ Σᵢ Σ_{s<t} xᵢₜ,ₖ xᵢₛ,ₖ sym(xᵢₜxᵢₛ')
//! Ψₖₗ     = (N T²)⁻¹ Σᵢ σ⁴ᵢ Σ_{s<t} xᵢₜ,ₖ xᵢₜ,ₗ xᵢₛ,ₖ xᵢₛ,ₗ
//! ```
//!
//! The fixed-T objects are the same sums without the powers of `T`:
//! `Σ^(G) = T·S^(G)`, `Uₖ^(G) = T²·Ωₖ^(G)`, `𝒱 = T²·Ψ`.
//! `V₀` is the variance of the 𝒥 numerator `N^{-1/2}LM_SC − B̂` over null
//! replications.

use serde::{Deserialize, Serialize};

use crate::dgp::{generate_panel, DgpConfig};
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::homogeneity::sc_components;
use crate::numkern::{Cholesky, SymMatrix};
use crate::panel::PanelDataset;
use crate::transforms::TransformKind;

/// Moments of one set of units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBlock {
    pub q: SymMatrix,
    pub s: SymMatrix,
    pub w: SymMatrix,
    /// `Ω₁..Ω_K`.
    pub omega: Vec<SymMatrix>,
}

impl MomentBlock {
    /// Every matrix equal to the same scalar multiple of the identity; handy
    /// for closed-form checks.
    pub fn scalar(k: usize, q: f64, s: f64, w: f64, omega: f64) -> Self {
        let id = SymMatrix::identity(k);
        MomentBlock { q: id.scaled(q), s: id.scaled(s), w: id.scaled(w), omega: vec![id.scaled(omega); k] }
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    fn zeros(k: usize) -> Self {
        Self::scalar(k, 0.0, 0.0, 0.0, 0.0)
    }

    fn matrices(&self) -> impl Iterator<Item = &SymMatrix> {
        [&self.q, &self.s, &self.w].into_iter().chain(self.omega.iter())
    }

    fn matrices_mut(&mut self) -> impl Iterator<Item = &mut SymMatrix> {
        [&mut self.q, &mut self.s, &mut self.w].into_iter().chain(self.omega.iter_mut())
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.omega.len() != k || self.matrices().any(|m| m.dim() != k) {
            return Err(Error::Shape(format!("moment block is not {k}-dimensional with {k} omega matrices")));
        }
        Ok(())
    }
}

/// Fixed-T counterparts used by the fixed-T LM calculator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedTMoments {
    pub sigma_cap: SymMatrix,
    /// `Σ^(G_p)`, one per alternative group.
    pub sigma_cap_groups: Vec<SymMatrix>,
    pub u: Vec<SymMatrix>,
    /// `Uₖ^(G_p)`, one list per alternative group.
    pub u_groups: Vec<Vec<SymMatrix>>,
    pub curly_v: SymMatrix,
}

/// Standard errors of a [`MomentSpec`], entry by entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentStdErr {
    pub full: MomentBlock,
    pub groups: Vec<MomentBlock>,
    pub psi: SymMatrix,
    pub v0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    /// Moments over all units (`Q`, `S`, `W`, `Ωₖ`).
    pub full: MomentBlock,
    /// Moments over each alternative group `G₂..G_P`.
    pub groups: Vec<MomentBlock>,
    pub psi: SymMatrix,
    pub v0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_t: Option<FixedTMoments>,
    /// Mean of the 𝒥 variance estimator `V̂` over the null replications.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_hat_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<MomentStdErr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
}

impl MomentSpec {
    /// Moments given directly, with fixed-T objects left unset.
    pub fn new(full: MomentBlock, groups: Vec<MomentBlock>, psi: SymMatrix, v0: f64) -> Result<Self> {
        let ms = MomentSpec { full, groups, psi, v0, fixed_t: None, v_hat_mean: None, std_err: None, reps: None };
        ms.validate()?;
        Ok(ms)
    }

    /// Scalar-identity moments shared by the whole sample and one alternative group.
    pub fn scalar(k: usize, block: MomentBlock, psi: f64, v0: f64) -> Result<Self> {
        Self::new(block.clone(), vec![block], SymMatrix::identity(k).scaled(psi), v0)
    }

    /// Derives the fixed-T objects from the large-T ones for panels of length `t`.
    pub fn with_fixed_t_from(mut self, t: usize) -> Self {
        let tf = t as f64;
        self.fixed_t = Some(FixedTMoments {
            sigma_cap: self.full.s.scaled(tf),
            sigma_cap_groups: self.groups.iter().map(|g| g.s.scaled(tf)).collect(),
            u: self.full.omega.iter().map(|o| o.scaled(tf * tf)).collect(),
            u_groups: self.groups.iter().map(|g| g.omega.iter().map(|o| o.scaled(tf * tf)).collect()).collect(),
            curly_v: self.psi.scaled(tf * tf),
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.full.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dim();
        self.full.check(k)?;
        for g in &self.groups {
            g.check(k)?;
        }
        if self.psi.dim() != k {
            return Err(Error::Shape("psi has the wrong dimension".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::Shape("at least one alternative group block is required".into()));
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::Degenerate(format!("v0 must be positive, got {}", self.v0)));
        }
        for m in [&self.full.q, &self.full.s, &self.full.w, &self.psi] {
            Cholesky::new(m)?;
        }
        if let Some(f) = &self.fixed_t {
            let dims_ok = f.sigma_cap.dim() == k
                && f.curly_v.dim() == k
                && f.u.len() == k
                && f.sigma_cap_groups.len() == self.groups.len()
                && f.u_groups.len() == self.groups.len()
                && f.u_groups.iter().all(|u| u.len() == k);
            if !dims_ok {
                return Err(Error::Shape("fixed-T moments do not match the large-T blocks".into()));
            }
        }
        Ok(())
    }
}

/// Sample moments of one set of units from one panel.
struct BlockSums {
    block: MomentBlock,
    count: usize,
}

impl BlockSums {
    fn new(k: usize) -> Self {
        BlockSums { block: MomentBlock::zeros(k), count: 0 }
    }

    fn add(&mut self, unit: &UnitMoments) {
        self.count += 1;
        for (a, b) in self.block.matrices_mut().zip(unit.block.matrices()) {
            a.add_scaled(b, 1.0);
        }
    }

    fn mean(mut self) -> MomentBlock {
        let inv = 1.0 / self.count.max(1) as f64;
        for m in self.block.matrices_mut() {
            *m = m.scaled(inv);
        }
        self.block
    }
}

struct UnitMoments {
    block: MomentBlock,
    psi: SymMatrix,
}

fn unit_moments(data: &PanelDataset, i: usize, sigma2: f64) -> Result<UnitMoments> {
    let (t, k) = (data.n_periods(), data.n_regressors());
    let tf = t as f64;
    let xi = data.x_unit(i);
    let mut gram = SymMatrix::zeros(k);
    for row in xi.chunks_exact(k) {
        gram.add_outer(row, 1.0);
    }
    let chol = Cholesky::new(&gram)?;

    let mut w = SymMatrix::zeros(k);
    let mut omega_raw = vec![vec![0.0; k * k]; k];
    let mut psi = SymMatrix::zeros(k);
    // prefix[k][m] = Σ_{s<t} x_s,k x_s,m
    let mut prefix = vec![0.0; k * k];
    for row in xi.chunks_exact(k) {
        w.add_outer(row, 1.0 - chol.inv_quad_form(row));
        for (kk, om) in omega_raw.iter_mut().enumerate() {
            for l in 0..k {
                for m in 0..k {
                    om[l * k + m] += row[kk] * row[l] * prefix[kk * k + m];
                }
            }
        }
        for a in 0..k {
            for b in 0..=a {
                let v = psi.get(a, b) + row[a] * row[b] * prefix[a * k + b];
                psi.set(a, b, v);
            }
        }
        for a in 0..k {
            for b in 0..k {
                prefix[a * k + b] += row[a] * row[b];
            }
        }
    }
    let t2 = tf * tf;
    let block = MomentBlock {
        q: gram.scaled(1.0 / (tf * sigma2)),
        s: gram.scaled(1.0 / tf),
        w: w.scaled(1.0 / tf),
        omega: omega_raw.iter().map(|om| SymMatrix::symmetric_part(k, om).scaled(1.0 / t2)).collect(),
    };
    Ok(UnitMoments { block, psi: psi.scaled(sigma2 * sigma2 / t2) })
}

/// Per-replication estimates, flattened so replications can be averaged.
fn replicate(cfg: &DgpConfig, transform: TransformKind, seed: u64, rep: u64) -> Result<Vec<f64>> {
    let null = DgpConfig { lambda: 0.0, ..cfg.clone() };
    let (raw, groups, params) = generate_panel(&null, seed, rep)?;
    let data = transform.apply(&raw)?;
    let k = data.n_regressors();
    let mut full = BlockSums::new(k);
    let mut by_group: Vec<BlockSums> = (1..cfg.p).map(|_| BlockSums::new(k)).collect();
    let mut psi = SymMatrix::zeros(k);
    for (i, par) in params.iter().enumerate() {
        let u = unit_moments(&data, i, par.sigma2_i)?;
        full.add(&u);
        psi.add_scaled(&u.psi, 1.0);
        let g = groups.assignment[i];
        if g >= 2 {
            by_group[g - 2].add(&u);
        }
    }
    let psi = psi.scaled(1.0 / data.n_units() as f64);
    let sc = sc_components(&data)?;
    let numerator = sc.lm_sc / (data.n_units() as f64).sqrt() - sc.b_hat;

    let mut flat = Vec::new();
    push_block(&mut flat, &full.mean());
    for g in by_group {
        push_block(&mut flat, &g.mean());
    }
    flat.extend_from_slice(psi.as_slice());
    flat.push(numerator);
    flat.push(sc.v_hat);
    Ok(flat)
}

fn push_block(flat: &mut Vec<f64>, b: &MomentBlock) {
    for m in b.matrices() {
        flat.extend_from_slice(m.as_slice());
    }
}

fn read_matrix(k: usize, it: &mut impl Iterator<Item = f64>) -> SymMatrix {
    let vals: Vec<f64> = it.take(k * k).collect();
    SymMatrix::symmetric_part(k, &vals)
}

fn read_block(k: usize, it: &mut impl Iterator<Item = f64>) -> MomentBlock {
    let q = read_matrix(k, it);
    let s = read_matrix(k, it);
    let w = read_matrix(k, it);
    let omega = (0..k).map(|_| read_matrix(k, it)).collect();
    MomentBlock { q, s, w, omega }
}

/// Estimates the moment matrices by averaging finite-sample versions over
/// `reps` null replications of `cfg` (λ is set to zero; groups are kept).
/// `transform` is applied to each panel first.
pub fn estimate_moments(
    cfg: &DgpConfig,
    transform: TransformKind,
    reps: usize,
    seed: u64,
    exec: Execution,
    workers: Option<usize>,
) -> Result<MomentSpec> {
    cfg.validate()?;
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let samples = map_indices(reps as u64, exec, workers, |rep| replicate(cfg, transform, seed, rep))?;
    let samples: Vec<Vec<f64>> = samples.into_iter().collect::<Result<_>>()?;

    let len = samples[0].len();
    let r = reps as f64;
    let mut mean = vec![0.0; len];
    for s in &samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / r;
        }
    }
    let mut var = vec![0.0; len];
    if reps > 1 {
        for s in &samples {
            for ((q, v), m) in var.iter_mut().zip(s).zip(&mean) {
                *q += (v - m) * (v - m) / (r - 1.0);
            }
        }
    }
    let se: Vec<f64> = var.iter().map(|v| (v / r).sqrt()).collect();

    let k = 1; // the design has a single regressor
    let n_alt = cfg.p - 1;
    let unpack = |vals: &[f64]| {
        let mut it = vals.iter().copied();
        let full = read_block(k, &mut it);
        let groups: Vec<MomentBlock> = (0..n_alt).map(|_| read_block(k, &mut it)).collect();
        let psi = read_matrix(k, &mut it);
        (full, groups, psi)
    };
    let (full, groups, psi) = unpack(&mean);
    let (full_se, groups_se, psi_se) = unpack(&se);

    let v_hat_mean = mean[len - 1];
    let (v0, v0_se) = if reps > 1 {
        let v = var[len - 2];
        (v, v * (2.0 / (r - 1.0)).sqrt())
    } else {
        (v_hat_mean, f64::NAN)
    };
    let t_eff = transform.output_periods(cfg.t);
    let spec = MomentSpec {
        full,
        groups,
        psi,
        v0,
        fixed_t: None,
        v_hat_mean: Some(v_hat_mean),
        std_err: Some(MomentStdErr { full: full_se, groups: groups_se, psi: psi_se, v0: v0_se }),
        reps: Some(reps),
    }
    .with_fixed_t_from(t_eff);
    spec.validate()?;
    Ok(spec)
}
