//! LM statistic for random-coefficient variance.
//!
//! With prefix sums `Aᵢₜ,ₖ = Σ_{s<t} ε̂ᵢₛ xᵢₛ,ₖ`:
//!
//! ```text
//! ŝₖ   = Σᵢ Σₜ ε̂ᵢₜ xᵢₜ,ₖ Aᵢₜ,ₖ
//! V̂ₖₗ  = Σᵢ Σₜ ε̂²ᵢₜ xᵢₜ,ₖ xᵢₜ,ₗ Aᵢₜ,ₖ Aᵢₜ,ₗ
//! LM   = ŝ' V̂⁻¹ ŝ  ~  χ²_K
//! ```

use serde::{Deserialize, Serialize};

use super::{RefDist, TestName, TestOptions, TestResult};
use crate::error::{Error, Result};
use crate::estimators::pooled_residuals;
use crate::numkern::{Cholesky, SymMatrix};
use crate::panel::PanelDataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmComponents {
    pub score: Vec<f64>,
    pub v_hat: SymMatrix,
    pub lm: f64,
}

/// Score and variance from residuals `resid` (unit-major, N×T), in one pass.
pub fn lm_components(data: &PanelDataset, resid: &[f64]) -> Result<LmComponents> {
    let (n, t, k) = (data.n_units(), data.n_periods(), data.n_regressors());
    if resid.len() != n * t {
        return Err(Error::Shape(format!("{} residuals for a {n}x{t} panel", resid.len())));
    }
    let mut score = vec![0.0; k];
    let mut v_hat = SymMatrix::zeros(k);
    let mut prefix = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..n {
        let e = &resid[i * t..(i + 1) * t];
        prefix.iter_mut().for_each(|a| *a = 0.0);
        for (row, &et) in data.x_unit(i).chunks_exact(k).zip(e) {
            for c in 0..k {
                w[c] = et * row[c] * prefix[c];
                score[c] += w[c];
            }
            v_hat.add_outer(&w, 1.0);
            for c in 0..k {
                prefix[c] += et * row[c];
            }
        }
    }
    let lm = Cholesky::new(&v_hat)?.inv_quad_form(&score);
    Ok(LmComponents { score, v_hat, lm })
}

/// The LM test on pooled residuals, upper tail of `χ²_K`.
pub fn brs_lm_test(data: &PanelDataset, opts: &TestOptions) -> Result<TestResult> {
    let t = data.n_periods();
    if t < 2 {
        return Err(Error::Degenerate(format!("the LM statistic needs T >= 2, panel has T = {t}")));
    }
    let (_, resid) = pooled_residuals(data)?;
    let c = lm_components(data, &resid)?;
    let df = data.n_regressors() as u32;
    Ok(TestResult::new(TestName::BrsLm, c.lm, RefDist::ChiSquare { df }, opts.alpha))
}
