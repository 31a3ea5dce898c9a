//! Local power under grouped alternatives.
//!
//! Under `β_i = β + λ_p/γ` for `i ∈ G_p` the large-T statistics have the
//! limits `Δ, 𝒥 → N(δ, 1)` and `LM → χ²_K(δ'Ψ⁻¹δ)`. With `m_p = M_p/N`,
//! `c²_p = M_p T/(√N γ²)`, `a_p = S^(G_p)λ_p` and `b_p = Q^(G_p)λ_p`:
//!
//! ```text
//! δ_Δ    = (Σ c²_p λ_p'b_p − (Σ m_p b_p)'Q⁻¹(Σ c²_q b_q)) / √(2K)
//! δ_𝒥    = (Σ c²_p λ_p'W^(G_p)λ_p + (Σ m_p a_p)'S⁻¹WS⁻¹(Σ c²_q a_q)
//!           − 2(Σ m_p W^(G_p)λ_p)'S⁻¹(Σ c²_q a_q)) / √V₀
//! δ_LM,k = Σ c²_p λ_p'Ω_k^(G_p)λ_p + (Σ m_p a_p)'S⁻¹Ω_kS⁻¹(Σ c²_q a_q)
//!           − 2(S⁻¹Σ m_p a_p)'(Σ c²_q Ω_k^(G_q)λ_q)
//! ```
//!
//! The double sums over groups factor because `m_p c²_q = m_q c²_p`. With a
//! single alternative group these are the two-group formulas with
//! `m₀ = m₂`, `c² = c²₂`. At fixed T the LM calculator swaps `S, Ω_k, Ψ` for
//! `Σ, U_k, 𝒱` and uses `c²_p = M_p/(√N γ²)`.

pub mod moments;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homogeneity::TestName;
use crate::numkern::{chisq_upper_quantile, dot, noncentral_chisq_sf, std_normal_quantile, std_normal_sf, Cholesky, SymMatrix};
pub use moments::{estimate_moments, FixedTMoments, MomentBlock, MomentSpec, MomentStdErr};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    LargeT,
    FixedT,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "large_t" => Ok(Regime::LargeT),
            "fixed_t" => Ok(Regime::FixedT),
            other => Err(Error::Config(format!("unknown regime `{other}` (large_t|fixed_t)"))),
        }
    }
}

/// Slope gap scale at which power turns nontrivial:
/// `√(MT)/N^{1/4}` at large T, `√M/N^{1/4}` at fixed T.
pub fn boundary_gamma(n: usize, t: usize, m: usize, regime: Regime) -> f64 {
    let tt = match regime {
        Regime::LargeT => t as f64,
        Regime::FixedT => 1.0,
    };
    (m as f64 * tt).sqrt() / (n as f64).powf(0.25)
}

/// Alternative groups `G₂..G_P`: slope deviations `λ_p`, shares `m_p` and
/// scale constants `c_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalAlternative {
    pub lambdas: Vec<Vec<f64>>,
    pub m: Vec<f64>,
    pub c: Vec<f64>,
}

impl LocalAlternative {
    pub fn two_group(lambda: Vec<f64>, m0: f64, c: f64) -> Self {
        LocalAlternative { lambdas: vec![lambda], m: vec![m0], c: vec![c] }
    }

    /// Plug-in constants for a finite design: `m_p = M_p/N` and
    /// `c²_p = M_p T/(√N γ²)` (`T` replaced by 1 at fixed T).
    pub fn from_design(n: usize, t: usize, sizes: &[usize], gamma: f64, lambdas: Vec<Vec<f64>>, regime: Regime) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        if sizes.len() != lambdas.len() {
            return Err(Error::Config(format!("{} group sizes for {} slope deviations", sizes.len(), lambdas.len())));
        }
        let tt = match regime {
            Regime::LargeT => t as f64,
            Regime::FixedT => 1.0,
        };
        let nf = n as f64;
        let m = sizes.iter().map(|&mp| mp as f64 / nf).collect();
        let c = sizes.iter().map(|&mp| (mp as f64 * tt / (nf.sqrt() * gamma * gamma)).sqrt()).collect();
        let alt = LocalAlternative { lambdas, m, c };
        alt.validate()?;
        Ok(alt)
    }

    pub fn m0(&self) -> f64 {
        self.m.iter().sum()
    }

    /// `c² = Σ c²_p`.
    pub fn c_squared(&self) -> f64 {
        self.c.iter().map(|c| c * c).sum()
    }

    pub fn n_groups(&self) -> usize {
        self.lambdas.len()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.lambdas.len();
        if g == 0 || self.m.len() != g || self.c.len() != g {
            return Err(Error::Config("lambdas, m and c must have one entry per alternative group".into()));
        }
        if self.m.iter().any(|&m| !(0.0..=1.0).contains(&m)) || self.m0() > 1.0 + 1e-12 {
            return Err(Error::Config(format!("group shares must be in [0,1] and sum to at most 1, got {:?}", self.m)));
        }
        if self.c.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::Config("c must be finite and nonnegative".into()));
        }
        if self.lambdas.iter().any(|l| l.iter().any(|v| !v.is_finite())) {
            return Err(Error::Config("lambda entries must be finite".into()));
        }
        Ok(())
    }
}

/// Noncentralities of all three statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Noncentrality {
    pub delta: f64,
    pub j: f64,
    pub lm: Vec<f64>,
    pub lm_ncp: f64,
}

fn check_inputs(ms: &MomentSpec, alt: &LocalAlternative) -> Result<usize> {
    alt.validate()?;
    let k = ms.dim();
    if ms.groups.len() != alt.n_groups() {
        return Err(Error::Config(format!(
            "moments hold {} alternative group(s), alternative has {}",
            ms.groups.len(),
            alt.n_groups()
        )));
    }
    if alt.lambdas.iter().any(|l| l.len() != k) {
        return Err(Error::Config(format!("slope deviations must have length K = {k}")));
    }
    Ok(k)
}

fn weighted_sum(k: usize, weights: impl Iterator<Item = f64>, vecs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for (w, v) in weights.zip(vecs) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

fn c2s(alt: &LocalAlternative) -> Vec<f64> {
    alt.c.iter().map(|c| c * c).collect()
}

fn delta_from(ms: &MomentSpec, alt: &LocalAlternative, k: usize) -> Result<f64> {
    let c2 = c2s(alt);
    let b: Vec<Vec<f64>> = ms.groups.iter().zip(&alt.lambdas).map(|(g, l)| g.q.mul_vec(l)).collect();
    let own: f64 = alt.lambdas.iter().zip(&b).zip(&c2).map(|((l, b), c)| c * dot(l, b)).sum();
    let left = weighted_sum(k, alt.m.iter().copied(), &b);
    let right = weighted_sum(k, c2.iter().copied(), &b);
    let cross = dot(&left, &Cholesky::new(&ms.full.q)?.solve(&right));
    Ok((own - cross) / (2.0 * k as f64).sqrt())
}

fn j_from(ms: &MomentSpec, alt: &LocalAlternative, k: usize) -> Result<f64> {
    let c2 = c2s(alt);
    let s_chol = Cholesky::new(&ms.full.s)?;
    let a: Vec<Vec<f64>> = ms.groups.iter().zip(&alt.lambdas).map(|(g, l)| g.s.mul_vec(l)).collect();
    let wl: Vec<Vec<f64>> = ms.groups.iter().zip(&alt.lambdas).map(|(g, l)| g.w.mul_vec(l)).collect();
    let own: f64 = alt.lambdas.iter().zip(&wl).zip(&c2).map(|((l, w), c)| c * dot(l, w)).sum();
    let sinv_ma = s_chol.solve(&weighted_sum(k, alt.m.iter().copied(), &a));
    let sinv_ca = s_chol.solve(&weighted_sum(k, c2.iter().copied(), &a));
    let sandwich = ms.full.w.bilinear(&sinv_ma, &sinv_ca);
    let mixed = dot(&weighted_sum(k, alt.m.iter().copied(), &wl), &sinv_ca);
    Ok((own + sandwich - 2.0 * mixed) / ms.v0.sqrt())
}

/// Shared LM arithmetic for both regimes: `s` plays `S` or `Σ`, `omega` plays
/// `Ω_k` or `U_k`, `psi` plays `Ψ` or `𝒱`.
fn lm_from(
    s: &SymMatrix,
    s_groups: &[&SymMatrix],
    omega: &[SymMatrix],
    omega_groups: &[&[SymMatrix]],
    psi: &SymMatrix,
    alt: &LocalAlternative,
    k: usize,
) -> Result<(Vec<f64>, f64)> {
    let c2 = c2s(alt);
    let s_chol = Cholesky::new(s)?;
    let a: Vec<Vec<f64>> = s_groups.iter().zip(&alt.lambdas).map(|(g, l)| g.mul_vec(l)).collect();
    let sinv_ma = s_chol.solve(&weighted_sum(k, alt.m.iter().copied(), &a));
    let sinv_ca = s_chol.solve(&weighted_sum(k, c2.iter().copied(), &a));
    let mut delta = Vec::with_capacity(k);
    for kk in 0..k {
        let own: f64 = omega_groups.iter().zip(&alt.lambdas).zip(&c2).map(|((om, l), c)| c * om[kk].quad_form(l)).sum();
        let sandwich = omega[kk].bilinear(&sinv_ma, &sinv_ca);
        let og: Vec<Vec<f64>> = omega_groups.iter().zip(&alt.lambdas).map(|(om, l)| om[kk].mul_vec(l)).collect();
        let mixed = dot(&sinv_ma, &weighted_sum(k, c2.iter().copied(), &og));
        delta.push(own + sandwich - 2.0 * mixed);
    }
    let ncp = Cholesky::new(psi)?.inv_quad_form(&delta);
    Ok((delta, ncp))
}

fn lm_regime(ms: &MomentSpec, alt: &LocalAlternative, regime: Regime, k: usize) -> Result<(Vec<f64>, f64)> {
    match regime {
        Regime::LargeT => {
            let sg: Vec<&SymMatrix> = ms.groups.iter().map(|g| &g.s).collect();
            let og: Vec<&[SymMatrix]> = ms.groups.iter().map(|g| g.omega.as_slice()).collect();
            lm_from(&ms.full.s, &sg, &ms.full.omega, &og, &ms.psi, alt, k)
        }
        Regime::FixedT => {
            let f = ms
                .fixed_t
                .as_ref()
                .ok_or_else(|| Error::Config("fixed-T moments are missing from the moment spec".into()))?;
            let sg: Vec<&SymMatrix> = f.sigma_cap_groups.iter().collect();
            let og: Vec<&[SymMatrix]> = f.u_groups.iter().map(Vec::as_slice).collect();
            lm_from(&f.sigma_cap, &sg, &f.u, &og, &f.curly_v, alt, k)
        }
    }
}

fn refuse_fixed_t(test: TestName, regime: Regime) -> Result<()> {
    if regime == Regime::FixedT {
        return Err(Error::Config(format!("{test} has no fixed-T limit; it requires T to grow")));
    }
    Ok(())
}

/// Noncentralities of Δ, 𝒥 and LM for any number of alternative groups.
/// Δ and 𝒥 are only defined at large T.
pub fn noncentrality_multigroup(ms: &MomentSpec, alt: &LocalAlternative) -> Result<Noncentrality> {
    let k = check_inputs(ms, alt)?;
    let delta = delta_from(ms, alt, k)?;
    let j = j_from(ms, alt, k)?;
    let (lm, lm_ncp) = lm_regime(ms, alt, Regime::LargeT, k)?;
    Ok(Noncentrality { delta, j, lm, lm_ncp })
}

pub fn noncentrality_delta(ms: &MomentSpec, alt: &LocalAlternative) -> Result<f64> {
    let k = check_inputs(ms, alt)?;
    delta_from(ms, alt, k)
}

pub fn noncentrality_j(ms: &MomentSpec, alt: &LocalAlternative) -> Result<f64> {
    let k = check_inputs(ms, alt)?;
    j_from(ms, alt, k)
}

/// `(δ_LM, δ_LM'Ψ⁻¹δ_LM)`, or the fixed-T version with `𝒱`.
pub fn noncentrality_lm(ms: &MomentSpec, alt: &LocalAlternative, regime: Regime) -> Result<(Vec<f64>, f64)> {
    let k = check_inputs(ms, alt)?;
    lm_regime(ms, alt, regime, k)
}

/// Noncentrality of `test` as the scalar its limit depends on: the mean
/// shift for Δ and 𝒥, the χ² noncentrality for LM.
pub fn noncentrality_for(test: TestName, ms: &MomentSpec, alt: &LocalAlternative, regime: Regime) -> Result<f64> {
    match test {
        TestName::Delta => refuse_fixed_t(test, regime).and_then(|_| noncentrality_delta(ms, alt)),
        TestName::ScJ => refuse_fixed_t(test, regime).and_then(|_| noncentrality_j(ms, alt)),
        TestName::BrsLm => noncentrality_lm(ms, alt, regime).map(|(_, ncp)| ncp),
        TestName::Swamy => Err(Error::Config("no local power theory is available for the Swamy statistic".into())),
    }
}

/// Limiting rejection probability: `1 − Φ(z_{1−α} − δ)` for Δ and 𝒥,
/// `1 − F_{χ²_K(ncp)}(χ²_{K,1−α})` for LM.
pub fn asymptotic_power(test: TestName, value: f64, k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie strictly inside (0,1), got {alpha}")));
    }
    match test {
        TestName::Delta | TestName::ScJ => {
            let z = std_normal_quantile(1.0 - alpha);
            Ok(std_normal_sf(z - value))
        }
        TestName::BrsLm => {
            let df = k as u32;
            let crit = chisq_upper_quantile(alpha, df);
            Ok(noncentral_chisq_sf(crit, df, value.max(0.0)))
        }
        TestName::Swamy => Err(Error::Config("no local power theory is available for the Swamy statistic".into())),
    }
}
