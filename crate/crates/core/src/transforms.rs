//! Removal of unit-specific intercepts before testing.
//!
//! Both transforms act on `y` and on every regressor column with the same
//! linear map, unit by unit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    None,
    /// Premultiplication by `M₀ = I − ιι'/T`.
    Within,
    /// Forward orthogonal deviations; drops one period.
    #[serde(rename = "fod", alias = "forward_orthogonal")]
    ForwardOrthogonal,
}

impl TransformKind {
    pub fn apply(self, data: &PanelDataset) -> Result<PanelDataset> {
        match self {
            TransformKind::None => Ok(data.clone()),
            TransformKind::Within => within_demean(data),
            TransformKind::ForwardOrthogonal => forward_orthogonal(data),
        }
    }

    /// Periods remaining after the transform.
    pub fn output_periods(self, t: usize) -> usize {
        match self {
            TransformKind::ForwardOrthogonal => t.saturating_sub(1),
            _ => t,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::None => "none",
            TransformKind::Within => "within",
            TransformKind::ForwardOrthogonal => "fod",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(TransformKind::None),
            "within" => Ok(TransformKind::Within),
            "fod" | "forward_orthogonal" => Ok(TransformKind::ForwardOrthogonal),
            other => Err(Error::Config(format!("unknown transform `{other}` (none|within|fod)"))),
        }
    }
}

fn require_two_periods(data: &PanelDataset) -> Result<()> {
    if data.n_periods() < 2 {
        return Err(Error::Degenerate(format!(
            "transform needs at least 2 periods, panel has {}",
            data.n_periods()
        )));
    }
    Ok(())
}

/// Subtracts each unit's time mean from `y` and every regressor.
pub fn within_demean(data: &PanelDataset) -> Result<PanelDataset> {
    require_two_periods(data)?;
    let (n, t, k) = (data.n_units(), data.n_periods(), data.n_regressors());
    let inv_t = 1.0 / t as f64;
    let mut y = Vec::with_capacity(n * t);
    let mut x = Vec::with_capacity(n * t * k);
    let mut xmean = vec![0.0; k];
    for i in 0..n {
        let yi = data.y_unit(i);
        let ymean = yi.iter().sum::<f64>() * inv_t;
        y.extend(yi.iter().map(|v| v - ymean));

        let xi = data.x_unit(i);
        xmean.iter_mut().for_each(|m| *m = 0.0);
        for row in xi.chunks_exact(k) {
            for (m, v) in xmean.iter_mut().zip(row) {
                *m += v;
            }
        }
        xmean.iter_mut().for_each(|m| *m *= inv_t);
        for row in xi.chunks_exact(k) {
            x.extend(row.iter().zip(&xmean).map(|(v, m)| v - m));
        }
    }
    let absorbed = data.absorbed_intercepts().max(1);
    Ok(data.replace_values(t, data.time_ids().to_vec(), y, x).with_absorbed_intercepts(absorbed))
}

/// Applies forward orthogonal deviations to one series of length `T`,
/// writing `T − 1` values: `c_t (w_t − mean(w_{t+1..T}))` with
/// `c_t = sqrt((T−t)/(T−t+1))` for 1-based `t`.
fn fod_series(w: &[f64], stride: usize, offset: usize, out: &mut [f64], out_stride: usize) {
    let t_len = w.len() / stride;
    // Running sum of the future values, built from the end.
    let mut tail_sum = 0.0;
    for s in (1..t_len).rev() {
        tail_sum += w[s * stride + offset];
        let remaining = (t_len - s) as f64; // T − t for 1-based t = s
        let c = (remaining / (remaining + 1.0)).sqrt();
        out[(s - 1) * out_stride + offset] = c * (w[(s - 1) * stride + offset] - tail_sum / remaining);
    }
}

/// Forward orthogonal deviations of `y` and every regressor. The output has
/// `T − 1` periods, labelled by the first `T − 1` time identifiers.
pub fn forward_orthogonal(data: &PanelDataset) -> Result<PanelDataset> {
    require_two_periods(data)?;
    let (n, t, k) = (data.n_units(), data.n_periods(), data.n_regressors());
    let tt = t - 1;
    let mut y = vec![0.0; n * tt];
    let mut x = vec![0.0; n * tt * k];
    for i in 0..n {
        fod_series(data.y_unit(i), 1, 0, &mut y[i * tt..(i + 1) * tt], 1);
        let xi = data.x_unit(i);
        let xo = &mut x[i * tt * k..(i + 1) * tt * k];
        for col in 0..k {
            fod_series(xi, k, col, xo, k);
        }
    }
    let times = data.time_ids()[..tt].to_vec();
    Ok(data.replace_values(tt, times, y, x))
}
