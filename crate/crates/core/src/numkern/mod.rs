//! Small dense linear algebra and distribution functions shared by every
//! other module.

pub mod dist;
pub mod sym;

pub use dist::{
    chisq_cdf, chisq_sf, chisq_upper_quantile, noncentral_chisq_cdf, noncentral_chisq_sf,
    std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf,
};
pub use sym::{dot, spd_solve, sym_eigen, sym_inv_sqrt, Cholesky, SymMatrix};

/// Numerical tolerances. Tests refer to these names rather than literals.
pub mod tol {
    /// A Cholesky pivot below this fraction of the largest diagonal entry
    /// marks the matrix as singular.
    pub const SINGULAR_REL_TOL: f64 = 1e-12;
    /// Eigenvalues below this fraction of the largest eigenvalue are treated
    /// as zero by the inverse square root.
    pub const EIGEN_REL_TOL: f64 = 1e-12;
    /// Unvisited Poisson weight at which the noncentral mixture stops.
    pub const NONCENTRAL_TAIL_TOL: f64 = 1e-14;
    /// Variances and weights at or below this are degenerate.
    pub const VARIANCE_TOL: f64 = 1e-12;
    /// Accuracy target for the distribution functions.
    pub const CDF_ABS_TOL: f64 = 1e-10;
    /// Residual bound for `spd_solve` and the `R A R = I` check.
    pub const SOLVE_REL_TOL: f64 = 1e-10;
}
