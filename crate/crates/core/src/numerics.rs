//! Scalar and small-matrix numerical kernels shared by the estimation and
//! receiver modules: symmetric positive-definite solves, multivariate
//! Gaussian log-density, and a stable log modified Bessel function.
//!
//! Only small dimensions (tens) are targeted; everything is backed by dense
//! `nalgebra` factorizations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check in [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense symmetric matrix with nonnegative diagonal.
///
/// Construction validates symmetry to within [`SYMMETRY_TOL`] relative to the
/// largest entry. Used for innovation covariances and phase posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates and wraps a matrix. Fails if the matrix is not square,
    /// not symmetric, or has a negative diagonal entry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
        let mut max_asym = 0.0f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(max_asym / scale));
        }
        if (0..m.nrows()).any(|i| m[(i, i)] < 0.0) {
            return Err(Error::NotPsd(
                (0..m.nrows()).map(|i| m[(i, i)]).fold(f64::MAX, f64::min),
            ));
        }
        Ok(Self(m))
    }

    /// Builds from entries `f(i, j)`; only the lower triangle is evaluated
    /// and mirrored, so the result is symmetric by construction.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Smallest eigenvalue; handy for PSD checks in tests and validation.
    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::MAX, |a, &x| a.min(x))
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Cholesky factorization with a one-shot jitter retry.
///
/// If the factorization fails, `1e-12 * trace(A)/dim` is added to the
/// diagonal once and the factorization retried; near-singular phase
/// covariances show up at high SNR with long pilot runs.
fn cholesky_jittered(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(chol);
    }
    let jitter = 1e-12 * a.trace() / a.nrows() as f64;
    let mut aj = a.clone();
    for i in 0..a.nrows() {
        aj[(i, i)] += jitter;
    }
    Cholesky::new(aj).ok_or(Error::NotPositiveDefinite)
}

/// Solves `A X = B` for symmetric positive definite `A`.
///
/// The relative residual `||A X - B|| / ||B||` is at the level of machine
/// precision for well-conditioned inputs (see tests for the 1e-10 contract).
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    debug_assert_eq!(a.nrows(), a.ncols());
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "spd_solve: A is {}x{}, B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let chol = cholesky_jittered(a)?;
    let mut x = b.clone();
    chol.solve_mut(&mut x);
    Ok(x)
}

/// Crossover between the power series and the asymptotic expansion.
const BESSEL_CROSSOVER: f64 = 20.0;

/// Natural log of the modified Bessel function of the first kind, order zero.
///
/// Power series below `x = 20`, asymptotic expansion (with correction terms,
/// so both branches agree to better than 1e-10 at the crossover) above.
pub fn log_bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0, "log_bessel_i0 requires x >= 0, got {x}");
    if x < BESSEL_CROSSOVER {
        // I0(x) = sum_m ((x/2)^(2m) / (m!)^2); ratio of consecutive terms
        // is (x/2)^2 / m^2.
        let x2 = x * x / 4.0;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut m = 1.0f64;
        while term > f64::EPSILON * sum {
            term *= x2 / (m * m);
            sum += term;
            m += 1.0;
        }
        sum.ln()
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k a_k / x^k with
        // a_k = ((2k-1)!!)^2 / (8^k k!). Truncated at the smallest term.
        let mut corr = 1.0f64;
        let mut a = 1.0f64;
        let mut prev = f64::MAX;
        for k in 1..30 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            a *= odd * odd / (8.0 * kf);
            let term = a / x.powi(k as i32);
            if term >= prev {
                break;
            }
            corr += term;
            prev = term;
            if term < 1e-18 * corr {
                break;
            }
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + corr.ln()
    }
}

/// Log-density of a multivariate real Gaussian.
pub fn gaussian_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &SymMatrix) -> Result<f64> {
    let d = cov.dim();
    if x.len() != d || mean.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "gaussian_logpdf: x has {}, mean has {}, cov is {d}x{d}",
            x.len(),
            mean.len()
        )));
    }
    let chol = cholesky_jittered(cov.as_matrix())?;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let mut r = x - mean;
    chol.l().solve_lower_triangular_mut(&mut r);
    let quad = r.norm_squared();
    Ok(-0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}
