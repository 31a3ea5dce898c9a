//! Power curves with detectability annotations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PowerRow, Sweep, SweepVariable};
use crate::error::{Error, Result};
use crate::homogeneity::TestName;
use crate::theory::{boundary_gamma, Regime};
use crate::transforms::TransformKind;

/// Error share above which a cell is flagged.
pub const ERROR_RATE_FLAG: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub rejection_rate: f64,
    pub mc_std_err: f64,
    pub n_reject: usize,
    pub n_errors: usize,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub test: TestName,
    pub transform: TransformKind,
    pub points: Vec<CurvePoint>,
}

/// Boundary scale of one design point. `local_c` is `λ·γ*`, the limit
/// constant the point would have if its slope gap `λ` were read as `1/γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNote {
    pub x: f64,
    pub m_total: usize,
    pub gamma_large_t: f64,
    pub gamma_fixed_t: f64,
    pub local_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub test: TestName,
    pub x: f64,
    pub error_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Name of the swept variable, or `m_total` without a sweep.
    pub x: String,
    pub curves: Vec<Curve>,
    pub boundary: Vec<BoundaryNote>,
    /// Alternative group size `√N` below which power is expected to be trivial.
    pub sqrt_n_threshold: f64,
    pub flagged: Vec<FlaggedCell>,
}

/// Groups rows into per-test curves ordered by the sweep coordinate.
pub fn summarize(rows: &[PowerRow], sweep: Option<&Sweep>) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::Empty("no result rows to summarize".into()));
    }
    let variable = sweep.map(|s| s.variable).unwrap_or(SweepVariable::TotalM);
    let x_name = match (sweep, variable) {
        (None, _) => "m_total",
        (_, SweepVariable::M2) => "m2",
        (_, SweepVariable::Lambda) => "lambda",
        (_, SweepVariable::TotalM) => "total_m",
        (_, SweepVariable::P) => "p",
        (_, SweepVariable::T) => "t",
    };

    let mut curves: BTreeMap<(TestName, TransformKind), Vec<CurvePoint>> = BTreeMap::new();
    let mut boundary: Vec<BoundaryNote> = Vec::new();
    let mut flagged = Vec::new();
    for r in rows {
        let x = Sweep::coordinate(variable, r);
        curves.entry((r.test, r.transform)).or_default().push(CurvePoint {
            x,
            rejection_rate: r.rejection_rate,
            mc_std_err: r.mc_std_err,
            n_reject: r.n_reject,
            n_errors: r.n_errors,
            reps: r.reps,
        });
        if r.error_rate() > ERROR_RATE_FLAG {
            flagged.push(FlaggedCell { test: r.test, x, error_rate: r.error_rate() });
        }
        if !boundary.iter().any(|b| b.x == x) {
            let g = boundary_gamma(r.n, r.t, r.m_total, Regime::LargeT);
            boundary.push(BoundaryNote {
                x,
                m_total: r.m_total,
                gamma_large_t: g,
                gamma_fixed_t: boundary_gamma(r.n, r.t, r.m_total, Regime::FixedT),
                local_c: r.lambda.abs() * g,
            });
        }
    }
    let by_x = |a: f64, b: f64| a.total_cmp(&b);
    let curves = curves
        .into_iter()
        .map(|((test, transform), mut points)| {
            points.sort_by(|a, b| by_x(a.x, b.x));
            Curve { test, transform, points }
        })
        .collect();
    boundary.sort_by(|a, b| by_x(a.x, b.x));
    Ok(Summary {
        x: x_name.into(),
        curves,
        boundary,
        sqrt_n_threshold: (rows[0].n as f64).sqrt(),
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(test: TestName, m: usize, n_reject: usize, n_errors: usize) -> PowerRow {
        let (r, se) = PowerRow::rate(n_reject, n_errors, 100);
        PowerRow {
            n: 100,
            t: 100,
            k: 1,
            p: 2,
            m_total: m,
            lambda: 0.3,
            h: 0.0,
            transform: TransformKind::Within,
            test,
            reps: 100,
            n_reject,
            n_errors,
            rejection_rate: r,
            mc_std_err: se,
            seed: 1,
            elapsed_s: 0.0,
        }
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(summarize(&[], None), Err(Error::Empty(_))));
    }

    #[test]
    fn single_row_echoed() {
        let s = summarize(&[row(TestName::Delta, 10, 40, 0)], None).unwrap();
        assert_eq!(s.curves.len(), 1);
        assert_eq!(s.curves[0].points[0].rejection_rate, 0.4);
        assert_eq!(s.sqrt_n_threshold, 10.0);
        assert!(s.flagged.is_empty());
    }

    #[test]
    fn curves_ordered_and_errors_flagged() {
        let sweep = Sweep { variable: SweepVariable::M2, values: vec![50.0, 10.0, 30.0] };
        let rows = [row(TestName::Delta, 50, 90, 0), row(TestName::Delta, 10, 10, 2), row(TestName::Delta, 30, 50, 0)];
        let s = summarize(&rows, Some(&sweep)).unwrap();
        let xs: Vec<f64> = s.curves[0].points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![10.0, 30.0, 50.0]);
        assert_eq!(s.flagged.len(), 1);
        assert_eq!(s.boundary.len(), 3);
        assert!((s.boundary[2].gamma_large_t - (5000f64).sqrt() / 100f64.powf(0.25)).abs() < 1e-12);
    }
}
