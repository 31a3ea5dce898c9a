//! Balanced panel datasets, group partitions and CSV ingestion.
//!
//! The CSV schema is long format, one observation per row:
//!
//! ```text
//! unit,time,y,x1,...,xK
//! ```
//!
//! Identifiers are arbitrary strings. Internally the panel is stored densely
//! with units and periods in a canonical order, so any row permutation of the
//! same file loads to an identical dataset.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Balanced `N × T` panel with `K` regressors.
///
/// `y` is stored unit-major (`y[i*T + t]`) and `x` as `x[(i*T + t)*K + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelDataset {
    n_units: usize,
    n_periods: usize,
    n_regressors: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    unit_ids: Vec<String>,
    time_ids: Vec<String>,
    absorbed_intercepts: usize,
}

impl PanelDataset {
    pub fn new(
        n_units: usize,
        n_periods: usize,
        n_regressors: usize,
        y: Vec<f64>,
        x: Vec<f64>,
        unit_ids: Vec<String>,
        time_ids: Vec<String>,
    ) -> Result<Self> {
        if n_units == 0 || n_periods == 0 || n_regressors == 0 {
            return Err(Error::Shape("N, T and K must all be positive".into()));
        }
        if y.len() != n_units * n_periods {
            return Err(Error::Shape(format!(
                "y has {} entries, expected N*T = {}",
                y.len(),
                n_units * n_periods
            )));
        }
        if x.len() != n_units * n_periods * n_regressors {
            return Err(Error::Shape(format!(
                "x has {} entries, expected N*T*K = {}",
                x.len(),
                n_units * n_periods * n_regressors
            )));
        }
        if unit_ids.len() != n_units || time_ids.len() != n_periods {
            return Err(Error::Shape("identifier lengths must match N and T".into()));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::Shape("panel contains non-finite values".into()));
        }
        check_unique(&unit_ids, "unit")?;
        check_unique(&time_ids, "time")?;
        Ok(PanelDataset {
            n_units,
            n_periods,
            n_regressors,
            y,
            x,
            unit_ids,
            time_ids,
            absorbed_intercepts: 0,
        })
    }

    /// Panel with positional identifiers `1..=N` and `1..=T`.
    pub fn from_arrays(
        n_units: usize,
        n_periods: usize,
        n_regressors: usize,
        y: Vec<f64>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let units = (1..=n_units).map(|i| i.to_string()).collect();
        let times = (1..=n_periods).map(|t| t.to_string()).collect();
        Self::new(n_units, n_periods, n_regressors, y, x, units, times)
    }

    #[inline]
    pub fn n_units(&self) -> usize {
        self.n_units
    }

    #[inline]
    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    #[inline]
    pub fn n_regressors(&self) -> usize {
        self.n_regressors
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn time_ids(&self) -> &[String] {
        &self.time_ids
    }

    /// Responses of unit `i`, length T.
    #[inline]
    pub fn y_unit(&self, i: usize) -> &[f64] {
        &self.y[i * self.n_periods..(i + 1) * self.n_periods]
    }

    /// Regressor block of unit `i`, length T*K, period-major.
    #[inline]
    pub fn x_unit(&self, i: usize) -> &[f64] {
        let w = self.n_periods * self.n_regressors;
        &self.x[i * w..(i + 1) * w]
    }

    /// Number of per-unit intercepts a transform has already projected out.
    /// Variance estimators use it to count residual degrees of freedom.
    pub fn absorbed_intercepts(&self) -> usize {
        self.absorbed_intercepts
    }

    pub(crate) fn with_absorbed_intercepts(mut self, n: usize) -> Self {
        self.absorbed_intercepts = n;
        self
    }

    /// Same panel with new values of the same (or a reduced) period count.
    pub(crate) fn replace_values(
        &self,
        n_periods: usize,
        time_ids: Vec<String>,
        y: Vec<f64>,
        x: Vec<f64>,
    ) -> PanelDataset {
        debug_assert_eq!(y.len(), self.n_units * n_periods);
        debug_assert_eq!(x.len(), self.n_units * n_periods * self.n_regressors);
        PanelDataset {
            n_units: self.n_units,
            n_periods,
            n_regressors: self.n_regressors,
            y,
            x,
            unit_ids: self.unit_ids.clone(),
            time_ids,
            absorbed_intercepts: self.absorbed_intercepts,
        }
    }

    /// Copy with `y` replaced, keeping regressors and identifiers.
    pub fn with_y(&self, y: Vec<f64>) -> Result<PanelDataset> {
        if y.len() != self.y.len() {
            return Err(Error::Shape("replacement y has the wrong length".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("panel contains non-finite values".into()));
        }
        let mut out = self.clone();
        out.y = y;
        Ok(out)
    }

    /// Copy with units reordered so that output unit `j` is input unit `order[j]`.
    pub fn permute_units(&self, order: &[usize]) -> Result<PanelDataset> {
        let mut seen = vec![false; self.n_units];
        if order.len() != self.n_units {
            return Err(Error::Shape("permutation has the wrong length".into()));
        }
        for &i in order {
            if i >= self.n_units || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Shape("not a permutation of the units".into()));
            }
        }
        let mut y = Vec::with_capacity(self.y.len());
        let mut x = Vec::with_capacity(self.x.len());
        for &i in order {
            y.extend_from_slice(self.y_unit(i));
            x.extend_from_slice(self.x_unit(i));
        }
        let mut out = self.clone();
        out.y = y;
        out.x = x;
        out.unit_ids = order.iter().map(|&i| self.unit_ids[i].clone()).collect();
        Ok(out)
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut set = BTreeSet::new();
    for id in ids {
        if !set.insert(id.as_str()) {
            return Err(Error::Shape(format!("{what} identifier `{id}` is repeated")));
        }
    }
    Ok(())
}

/// Identifier order: numeric when every identifier parses as a number,
/// lexicographic otherwise.
fn sort_ids(ids: &mut [String]) {
    let numeric: Option<Vec<f64>> = ids.iter().map(|s| s.trim().parse::<f64>().ok()).collect();
    match numeric {
        Some(_) => ids.sort_by(|a, b| {
            let (x, y) = (a.trim().parse::<f64>().unwrap(), b.trim().parse::<f64>().unwrap());
            x.partial_cmp(&y).unwrap_or(Ordering::Equal).then_with(|| a.cmp(b))
        }),
        None => ids.sort(),
    }
}

/// Reads a balanced panel with `k` regressors from a CSV file.
pub fn load_panel_csv(path: impl AsRef<Path>, k: usize) -> Result<PanelDataset> {
    let file = std::fs::File::open(path)?;
    read_panel_csv(file, k)
}

/// Reads a balanced panel from any reader; see [`load_panel_csv`].
pub fn read_panel_csv(reader: impl Read, k: usize) -> Result<PanelDataset> {
    if k == 0 {
        return Err(Error::Shape("K must be positive".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected: Vec<String> = ["unit", "time", "y"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..=k).map(|j| format!("x{j}")))
        .collect();
    let got: Vec<&str> = header.iter().collect();
    if got.len() != expected.len() || got.iter().zip(&expected).any(|(g, e)| !g.eq_ignore_ascii_case(e)) {
        return Err(Error::Shape(format!(
            "header must be `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }

    let mut cells: HashMap<(String, String), (f64, Vec<f64>)> = HashMap::new();
    let mut units = BTreeSet::new();
    let mut times = BTreeSet::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        if rec.len() != 3 + k {
            return Err(Error::Parse { row, msg: format!("expected {} fields, found {}", 3 + k, rec.len()) });
        }
        let num = |j: usize| -> Result<f64> {
            let s = &rec[j];
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Parse { row, msg: format!("column `{}` is not numeric: `{s}`", &header[j]) })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, msg: format!("column `{}` is not finite", &header[j]) });
            }
            Ok(v)
        };
        let unit = rec[0].to_string();
        let time = rec[1].to_string();
        let y = num(2)?;
        let xs = (0..k).map(|j| num(3 + j)).collect::<Result<Vec<_>>>()?;
        units.insert(unit.clone());
        times.insert(time.clone());
        if cells.insert((unit.clone(), time.clone()), (y, xs)).is_some() {
            return Err(Error::Duplicate { unit, time });
        }
    }
    if cells.is_empty() {
        return Err(Error::Empty("panel CSV has no observations".into()));
    }

    let mut unit_ids: Vec<String> = units.into_iter().collect();
    let mut time_ids: Vec<String> = times.into_iter().collect();
    sort_ids(&mut unit_ids);
    sort_ids(&mut time_ids);
    let (n, t) = (unit_ids.len(), time_ids.len());

    let mut y = Vec::with_capacity(n * t);
    let mut x = Vec::with_capacity(n * t * k);
    for u in &unit_ids {
        let missing = time_ids.iter().filter(|tm| !cells.contains_key(&(u.clone(), (*tm).clone()))).count();
        if missing > 0 {
            return Err(Error::Balance { unit: u.clone(), missing });
        }
        for tm in &time_ids {
            let (yv, xv) = &cells[&(u.clone(), tm.clone())];
            y.push(*yv);
            x.extend_from_slice(xv);
        }
    }
    PanelDataset::new(n, t, k, y, x, unit_ids, time_ids)
}

/// Writes `data` in the ingestion schema, values with 17 significant digits.
pub fn write_panel_csv(path: impl AsRef<Path>, data: &PanelDataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_panel(&mut w, data)?;
    w.flush()?;
    Ok(())
}

pub fn write_panel(writer: impl Write, data: &PanelDataset) -> Result<()> {
    let k = data.n_regressors();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["unit".to_string(), "time".to_string(), "y".to_string()];
    header.extend((1..=k).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..data.n_units() {
        let xi = data.x_unit(i);
        for t in 0..data.n_periods() {
            let mut rec = vec![
                data.unit_ids()[i].clone(),
                data.time_ids()[t].clone(),
                format!("{:.16e}", data.y_unit(i)[t]),
            ];
            rec.extend(xi[t * k..(t + 1) * k].iter().map(|v| format!("{v:.16e}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Partition of the units into `P` groups with one slope vector per group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub n_groups: usize,
    /// Group label of each unit, in `1..=n_groups`.
    pub assignment: Vec<usize>,
    /// Slope vector of each group; `slopes[p-1]` belongs to label `p`.
    pub slopes: Vec<Vec<f64>>,
}

impl GroupSpec {
    /// Group sizes `M_1..M_P` (counting labels, valid or not, within range).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.assignment {
            if (1..=self.n_groups).contains(&g) {
                sizes[g - 1] += 1;
            }
        }
        sizes
    }

    /// Total size of the alternative groups `G_2..G_P`.
    pub fn alternative_total(&self) -> usize {
        self.sizes().iter().skip(1).sum()
    }

    /// Indices of the units carrying label `p`.
    pub fn members(&self, p: usize) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &g)| g == p).map(|(i, _)| i).collect()
    }

    /// Slope of unit `i`.
    pub fn unit_slope(&self, i: usize) -> &[f64] {
        &self.slopes[self.assignment[i] - 1]
    }
}

/// Checks that `spec` partitions `n` units into nonempty groups.
pub fn validate_group_spec(spec: &GroupSpec, n: usize) -> Result<()> {
    if spec.n_groups == 0 {
        return Err(Error::Shape("a group spec needs at least one group".into()));
    }
    if spec.assignment.len() != n {
        return Err(Error::Shape(format!(
            "assignment covers {} units, expected {n}",
            spec.assignment.len()
        )));
    }
    if let Some(&label) = spec.assignment.iter().find(|&&g| g == 0 || g > spec.n_groups) {
        return Err(Error::Label { label, n_groups: spec.n_groups });
    }
    if spec.slopes.len() != spec.n_groups {
        return Err(Error::Shape(format!(
            "{} slope vectors for {} groups",
            spec.slopes.len(),
            spec.n_groups
        )));
    }
    if let Some(k) = spec.slopes.first().map(Vec::len) {
        if spec.slopes.iter().any(|s| s.len() != k) {
            return Err(Error::Shape("slope vectors differ in length".into()));
        }
    }
    if let Some(p) = spec.sizes().iter().position(|&m| m == 0) {
        return Err(Error::Partition { group: p + 1 });
    }
    Ok(())
}
