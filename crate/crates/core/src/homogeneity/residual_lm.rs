//! Bias-adjusted residual LM statistic 𝒥.
//!
//! With pooled residuals `ε̂ᵢ`, unit grams `Gᵢ = xᵢ'xᵢ` and `Ŝᵢ = Gᵢ/T`:
//!
//! ```text
//! LM_SC = Σᵢ ε̂ᵢ'xᵢ Gᵢ⁻¹ xᵢ'ε̂ᵢ
//! B̂     = N^{-1/2} Σᵢ Σₜ ε̂²ᵢₜ hᵢ,ₜₜ
//! V̂     = 4/(T²N) Σᵢ Σ_{t≥2} [ε̂ᵢₜ b̂ᵢₜ' Σ_{s<t} b̂ᵢₛ ε̂ᵢₛ]²,   b̂ᵢₜ = Ŝᵢ^{-1/2} xᵢₜ
//! 𝒥     = (N^{-1/2} LM_SC − B̂) / √V̂
//! ```

use serde::{Deserialize, Serialize};

use super::{RefDist, TestName, TestOptions, TestResult};
use crate::error::{Error, Result};
use crate::estimators::{pooled_residuals, unit_moments};
use crate::numkern::{dot, sym_inv_sqrt, tol, Cholesky};
use crate::panel::PanelDataset;

/// The pieces of 𝒥.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScComponents {
    pub lm_sc: f64,
    pub b_hat: f64,
    pub v_hat: f64,
    pub j: f64,
}

/// Computes `LM_SC`, `B̂`, `V̂` and 𝒥 from the pooled residuals of `data`.
pub fn sc_components(data: &PanelDataset) -> Result<ScComponents> {
    let (n, t, k) = (data.n_units(), data.n_periods(), data.n_regressors());
    if t < 3 {
        return Err(Error::Degenerate(format!("the J statistic needs T >= 3, panel has T = {t}")));
    }
    let (_, resid) = pooled_residuals(data)?;

    let mut lm_sc = 0.0;
    let mut bias = 0.0;
    let mut var = 0.0;
    let mut xe = vec![0.0; k];
    let mut prefix = vec![0.0; k];
    let mut b = vec![0.0; k];
    for i in 0..n {
        let e = &resid[i * t..(i + 1) * t];
        let xi = data.x_unit(i);
        let gram = unit_moments(data, i).gram;
        let chol = Cholesky::new(&gram)?;
        let root = sym_inv_sqrt(&gram.scaled(1.0 / t as f64))?;

        xe.iter_mut().for_each(|v| *v = 0.0);
        prefix.iter_mut().for_each(|v| *v = 0.0);
        for (row, &et) in xi.chunks_exact(k).zip(e) {
            for (a, x) in xe.iter_mut().zip(row) {
                *a += x * et;
            }
            bias += et * et * chol.inv_quad_form(row);

            for (r, bv) in b.iter_mut().enumerate() {
                *bv = (0..k).map(|c| root.get(r, c) * row[c]).sum();
            }
            // The first period has an empty prefix and contributes zero.
            let term = et * dot(&b, &prefix);
            var += term * term;
            for (p, bv) in prefix.iter_mut().zip(&b) {
                *p += bv * et;
            }
        }
        lm_sc += chol.inv_quad_form(&xe);
    }

    let nf = n as f64;
    let b_hat = bias / nf.sqrt();
    let v_hat = 4.0 * var / ((t * t) as f64 * nf);
    // Compared against the response scale so the check is invariant to y → c·y.
    let mean_y2 = data.y().iter().map(|v| v * v).sum::<f64>() / resid.len() as f64;
    if !(v_hat > tol::VARIANCE_TOL * mean_y2 * mean_y2) {
        return Err(Error::Degenerate(format!("variance estimate of the J statistic is zero ({v_hat:e})")));
    }
    let j = (lm_sc / nf.sqrt() - b_hat) / v_hat.sqrt();
    Ok(ScComponents { lm_sc, b_hat, v_hat, j })
}

/// 𝒥 with a one-sided upper-tail normal p-value.
pub fn sc_j_test(data: &PanelDataset, opts: &TestOptions) -> Result<TestResult> {
    let c = sc_components(data)?;
    Ok(TestResult::new(TestName::ScJ, c.j, RefDist::StdNormalUpper, opts.alpha))
}
