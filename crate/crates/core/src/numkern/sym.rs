//! Dense symmetric matrices of small dimension (K is expected to stay
//! below ten), a Cholesky factorization and a Jacobi eigensolver.

use serde::{Deserialize, Serialize};

use super::tol;
use crate::error::{Error, Result};

/// Symmetric `dim × dim` matrix stored densely, row-major. Every write goes
/// through [`SymMatrix::set`] or a symmetric update, so the storage is
/// symmetric bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// 1×1 matrix holding `v`.
    pub fn scalar(v: f64) -> Self {
        SymMatrix { dim: 1, data: vec![v] }
    }

    /// Builds a matrix from the lower triangle produced by `f(i, j)`, `j <= i`.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from full rows, rejecting non-square or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Shape("matrix has no rows".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape(format!("matrix rows must all have length {dim}")));
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Shape(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self::from_lower_fn(dim, |i, j| rows[i][j]))
    }

    /// Symmetric part `(a + a')/2` of a general row-major square matrix.
    pub fn symmetric_part(dim: usize, general: &[f64]) -> Self {
        assert_eq!(general.len(), dim * dim);
        Self::from_lower_fn(dim, |i, j| 0.5 * (general[i * dim + j] + general[j * dim + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `self += w · x x'`.
    pub fn add_outer(&mut self, x: &[f64], w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        for i in 0..d {
            let wi = w * x[i];
            for j in 0..=i {
                let v = self.data[i * d + j] + wi * x[j];
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    /// `self += w · other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, w: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += w * b;
        }
    }

    pub fn scaled(&self, w: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|v| v * w).collect() }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        self.data.chunks(self.dim).map(|row| dot(row, v)).collect()
    }

    /// `v' A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// `u' A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.mul_vec(v))
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor `A = L L'`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a`. A pivot below `SINGULAR_REL_TOL × max diagonal entry`
    /// (or any non-finite pivot) is reported as singular.
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let d = a.dim();
        let scale = a.max_diag();
        let floor = if scale > 0.0 { tol::SINGULAR_REL_TOL * scale } else { 0.0 };
        let mut l = vec![0.0; d * d];
        for j in 0..d {
            let mut pivot = a.get(j, j);
            for k in 0..j {
                pivot -= l[j * d + k] * l[j * d + k];
            }
            if !(pivot > floor) || !pivot.is_finite() {
                return Err(Error::Singular { pivot: j });
            }
            let ljj = pivot.sqrt();
            l[j * d + j] = ljj;
            for i in (j + 1)..d {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                l[i * d + j] = s / ljj;
            }
        }
        Ok(Cholesky { dim: d, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut z = b.to_vec();
        for i in 0..d {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[i * d + k] * z[k];
            }
            z[i] = s / self.l[i * d + i];
        }
        z
    }

    /// Solves `A z = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim);
        let d = self.dim;
        let mut z = self.forward(b);
        for i in (0..d).rev() {
            let mut s = z[i];
            for k in (i + 1)..d {
                s -= self.l[k * d + i] * z[k];
            }
            z[i] = s / self.l[i * d + i];
        }
        z
    }

    /// `b' A^{-1} b`, computed as `|L^{-1} b|²`.
    pub fn inv_quad_form(&self, b: &[f64]) -> f64 {
        let z = self.forward(b);
        dot(&z, &z)
    }

    pub fn inverse(&self) -> SymMatrix {
        let d = self.dim;
        let mut inv = SymMatrix::zeros(d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in j..d {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }
}

/// Solves `a z = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::Shape(format!(
            "right-hand side has length {} but matrix is {}x{}",
            b.len(),
            a.dim(),
            a.dim()
        )));
    }
    Ok(Cholesky::new(a)?.solve(b))
}

/// Eigen-decomposition `A = V diag(values) V'` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column-major eigenvectors: column `j` is `vectors[j*dim..(j+1)*dim]`.
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi eigensolver.
pub fn sym_eigen(a: &SymMatrix) -> SymEigen {
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    // v holds eigenvectors row-major while rotating; transposed at the end.
    let mut v = SymMatrix::identity(n).as_slice().to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let total: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            vectors[j * n + k] = v[k * n + j];
        }
    }
    SymEigen { values, vectors }
}

/// Symmetric inverse square root `R` with `R A R = I`, via the spectral
/// decomposition. Eigenvalues at or below `EIGEN_REL_TOL × max eigenvalue`
/// are rejected.
pub fn sym_inv_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let n = a.dim();
    let eig = sym_eigen(a);
    let max_ev = eig.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max_ev > 0.0) || !max_ev.is_finite() {
        return Err(Error::Singular { pivot: 0 });
    }
    let floor = tol::EIGEN_REL_TOL * max_ev;
    for (j, &ev) in eig.values.iter().enumerate() {
        if ev <= floor {
            return Err(Error::Singular { pivot: j });
        }
    }
    let scales: Vec<f64> = eig.values.iter().map(|ev| 1.0 / ev.sqrt()).collect();
    Ok(SymMatrix::from_lower_fn(n, |i, j| {
        (0..n).map(|e| eig.vectors[e * n + i] * scales[e] * eig.vectors[e * n + j]).sum()
    }))
}
