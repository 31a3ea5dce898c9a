//! Swamy's dispersion statistic and the standardized Δ.
//!
//! Both compare unit slopes `β̂_i` with a variance-weighted pooled slope:
//!
//! ```text
//! S(σ̄²) = Σ_i (β̂_i − β̂_WLS)' (x_i'x_i / σ̄²_i) (β̂_i − β̂_WLS)
//! ```
//!
//! Swamy uses the unit OLS variances `σ̂²ᵢ`; Δ uses the pooled-residual
//! variances `σ̃²ᵢ` and standardizes as `(S − NK)/√(2NK)`.

use super::{RefDist, TestName, TestOptions, TestResult, WlsWeighting};
use crate::error::{Error, Result};
use crate::estimators::{pooled_ols, unit_moments, unit_ols, wls_from_moments, UnitFit, UnitMoments};
use crate::numkern::tol;
use crate::panel::PanelDataset;

fn unit_fits(data: &PanelDataset) -> Result<Vec<UnitFit>> {
    (0..data.n_units()).map(|i| unit_ols(data, i)).collect()
}

fn check_variances(data: &PanelDataset, sigma2: &[f64], what: &str) -> Result<()> {
    match sigma2.iter().position(|&s| !(s > tol::VARIANCE_TOL)) {
        Some(i) => Err(Error::Degenerate(format!(
            "{what} is zero for unit `{}`",
            data.unit_ids()[i]
        ))),
        None => Ok(()),
    }
}

fn kernel(fits: &[UnitFit], sigma2_bar: &[f64], beta_wls: &[f64]) -> f64 {
    fits.iter()
        .zip(sigma2_bar)
        .map(|(f, &s2)| {
            let d: Vec<f64> = f.beta.iter().zip(beta_wls).map(|(b, w)| b - w).collect();
            f.gram.quad_form(&d) / s2
        })
        .sum()
}

/// The shared kernel `S(σ̄²)`, with the inner WLS weighted by `sigma2_wls`.
pub fn dispersion_statistic(data: &PanelDataset, sigma2_bar: &[f64], sigma2_wls: &[f64]) -> Result<f64> {
    let n = data.n_units();
    if sigma2_bar.len() != n || sigma2_wls.len() != n {
        return Err(Error::Shape("one variance per unit is required".into()));
    }
    check_variances(data, sigma2_bar, "variance")?;
    let fits = unit_fits(data)?;
    let moments: Vec<UnitMoments> = (0..n).map(|i| unit_moments(data, i)).collect();
    let beta_wls = wls_from_moments(&moments, sigma2_wls)?;
    Ok(kernel(&fits, sigma2_bar, &beta_wls))
}

/// Swamy's statistic with `χ²_{K(N−1)}` reference.
pub fn swamy_statistic(data: &PanelDataset, opts: &TestOptions) -> Result<TestResult> {
    let fits = unit_fits(data)?;
    let sigma2: Vec<f64> = fits.iter().map(|f| f.sigma2_hat).collect();
    check_variances(data, &sigma2, "unit OLS residual variance")?;
    let moments: Vec<UnitMoments> = (0..data.n_units()).map(|i| unit_moments(data, i)).collect();
    let beta_wls = wls_from_moments(&moments, &sigma2)?;
    let s = kernel(&fits, &sigma2, &beta_wls);
    let df = (data.n_regressors() * (data.n_units() - 1)) as u32;
    Ok(TestResult::new(TestName::Swamy, s, RefDist::ChiSquare { df }, opts.alpha))
}

/// `S_PY` with its centring and scaling; also returns the raw kernel.
pub fn delta_parts(data: &PanelDataset, opts: &TestOptions) -> Result<(f64, f64)> {
    let fits = unit_fits(data)?;
    let pooled = pooled_ols(data, opts.sigma_tilde_divisor)?;
    let sigma_tilde = pooled.sigma2_tilde;
    check_variances(data, &sigma_tilde, "pooled residual variance")?;
    let moments: Vec<UnitMoments> = (0..data.n_units()).map(|i| unit_moments(data, i)).collect();
    let beta_wls = match opts.wls_weights {
        WlsWeighting::Consistent => wls_from_moments(&moments, &sigma_tilde)?,
        WlsWeighting::SigmaHat => {
            let sigma_hat: Vec<f64> = fits.iter().map(|f| f.sigma2_hat).collect();
            check_variances(data, &sigma_hat, "unit OLS residual variance")?;
            wls_from_moments(&moments, &sigma_hat)?
        }
    };
    let s = kernel(&fits, &sigma_tilde, &beta_wls);
    let nk = (data.n_units() * data.n_regressors()) as f64;
    Ok(((s - nk) / (2.0 * nk).sqrt(), s))
}

/// Standardized dispersion statistic Δ, one-sided upper-tail normal p-value.
pub fn delta_test(data: &PanelDataset, opts: &TestOptions) -> Result<TestResult> {
    let (delta, _) = delta_parts(data, opts)?;
    Ok(TestResult::new(TestName::Delta, delta, RefDist::StdNormalUpper, opts.alpha))
}
