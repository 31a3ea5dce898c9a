//! Unit-level OLS, pooled OLS and variance-weighted least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkern::{tol, Cholesky, SymMatrix};
use crate::panel::PanelDataset;

/// Cross-products `x_i'x_i` and `x_i'y_i` of one unit.
#[derive(Clone, Debug)]
pub struct UnitMoments {
    pub gram: SymMatrix,
    pub xy: Vec<f64>,
}

pub fn unit_moments(data: &PanelDataset, i: usize) -> UnitMoments {
    let k = data.n_regressors();
    let mut gram = SymMatrix::zeros(k);
    let mut xy = vec![0.0; k];
    for (row, &y) in data.x_unit(i).chunks_exact(k).zip(data.y_unit(i)) {
        gram.add_outer(row, 1.0);
        for (a, v) in xy.iter_mut().zip(row) {
            *a += v * y;
        }
    }
    UnitMoments { gram, xy }
}

/// OLS fit of a single unit.
#[derive(Clone, Debug)]
pub struct UnitFit {
    pub beta: Vec<f64>,
    pub resid: Vec<f64>,
    /// `resid'resid / (T − K − 1)`.
    pub sigma2_hat: f64,
    pub gram: SymMatrix,
    /// Diagonal of the unit's projection matrix.
    pub hat_diag: Vec<f64>,
}

fn check_periods(data: &PanelDataset) -> Result<()> {
    let (t, k) = (data.n_periods(), data.n_regressors());
    if t <= k + 1 {
        return Err(Error::Degenerate(format!("insufficient periods: T = {t} must exceed K + 1 = {}", k + 1)));
    }
    Ok(())
}

/// Least squares of `y_i` on `x_i`.
pub fn unit_ols(data: &PanelDataset, i: usize) -> Result<UnitFit> {
    check_periods(data)?;
    if i >= data.n_units() {
        return Err(Error::Shape(format!("unit index {i} out of range")));
    }
    let (t, k) = (data.n_periods(), data.n_regressors());
    let UnitMoments { gram, xy } = unit_moments(data, i);
    let chol = Cholesky::new(&gram)?;
    let beta = chol.solve(&xy);
    let xi = data.x_unit(i);
    let mut resid = Vec::with_capacity(t);
    let mut hat_diag = Vec::with_capacity(t);
    for (row, &y) in xi.chunks_exact(k).zip(data.y_unit(i)) {
        resid.push(y - crate::numkern::dot(row, &beta));
        hat_diag.push(chol.inv_quad_form(row));
    }
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    Ok(UnitFit { beta, resid, sigma2_hat: rss / (t - k - 1) as f64, gram, hat_diag })
}

/// Divisor used for the pooled-residual variances `σ̃²ᵢ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaTildeDivisor {
    /// `T − K − 1`, the same divisor as the unit-level variance.
    Displayed,
    /// `T − a`, where `a` counts intercepts already absorbed by a transform.
    /// The pooled fit spends no per-unit slope degrees of freedom.
    #[default]
    PooledDof,
}

impl SigmaTildeDivisor {
    pub fn divisor(self, t: usize, k: usize, absorbed: usize) -> f64 {
        match self {
            SigmaTildeDivisor::Displayed => t as f64 - k as f64 - 1.0,
            SigmaTildeDivisor::PooledDof => t as f64 - absorbed as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SigmaTildeDivisor::Displayed => "displayed",
            SigmaTildeDivisor::PooledDof => "pooled_dof",
        }
    }
}

impl std::str::FromStr for SigmaTildeDivisor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "displayed" => Ok(SigmaTildeDivisor::Displayed),
            "pooled_dof" => Ok(SigmaTildeDivisor::PooledDof),
            other => Err(Error::Config(format!("unknown divisor `{other}` (displayed|pooled-dof)"))),
        }
    }
}

/// Pooled OLS fit with pooled-residual variances.
#[derive(Clone, Debug)]
pub struct PooledFit {
    pub beta_ls: Vec<f64>,
    /// Residuals `y_it − x_it'β̂_LS`, unit-major, N×T.
    pub resid: Vec<f64>,
    pub sigma2_tilde: Vec<f64>,
}

/// `β̂_LS` and the pooled residuals, with no degrees-of-freedom requirement.
pub fn pooled_residuals(data: &PanelDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = data.n_regressors();
    let mut gram = SymMatrix::zeros(k);
    let mut xy = vec![0.0; k];
    for i in 0..data.n_units() {
        let m = unit_moments(data, i);
        gram.add_scaled(&m.gram, 1.0);
        for (a, b) in xy.iter_mut().zip(&m.xy) {
            *a += b;
        }
    }
    let beta = Cholesky::new(&gram)?.solve(&xy);
    let resid = data
        .x()
        .chunks_exact(k)
        .zip(data.y())
        .map(|(row, &y)| y - crate::numkern::dot(row, &beta))
        .collect();
    Ok((beta, resid))
}

/// Pooled least squares across all units.
pub fn pooled_ols(data: &PanelDataset, divisor: SigmaTildeDivisor) -> Result<PooledFit> {
    check_periods(data)?;
    let t = data.n_periods();
    let dof = divisor.divisor(t, data.n_regressors(), data.absorbed_intercepts());
    if dof <= 0.0 {
        return Err(Error::Degenerate(format!("no residual degrees of freedom (divisor {dof})")));
    }
    let (beta_ls, resid) = pooled_residuals(data)?;
    let sigma2_tilde = resid.chunks_exact(t).map(|e| e.iter().map(|v| v * v).sum::<f64>() / dof).collect();
    Ok(PooledFit { beta_ls, resid, sigma2_tilde })
}

/// Weighted least squares with per-unit variances `weights`:
/// `(Σ x_i'x_i/w_i)^{-1} Σ x_i'y_i/w_i`.
pub fn wls(data: &PanelDataset, weights: &[f64]) -> Result<Vec<f64>> {
    let moments: Vec<UnitMoments> = (0..data.n_units()).map(|i| unit_moments(data, i)).collect();
    wls_from_moments(&moments, weights)
}

pub(crate) fn wls_from_moments(moments: &[UnitMoments], weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != moments.len() {
        return Err(Error::Shape(format!("{} weights for {} units", weights.len(), moments.len())));
    }
    if let Some(i) = weights.iter().position(|&w| !(w > tol::VARIANCE_TOL)) {
        return Err(Error::Degenerate(format!("zero variance weight for unit {i}")));
    }
    let k = moments[0].xy.len();
    let mut gram = SymMatrix::zeros(k);
    let mut xy = vec![0.0; k];
    for (m, &w) in moments.iter().zip(weights) {
        gram.add_scaled(&m.gram, 1.0 / w);
        for (a, b) in xy.iter_mut().zip(&m.xy) {
            *a += b / w;
        }
    }
    Ok(Cholesky::new(&gram)?.solve(&xy))
}
