//! Soft-input extended Kalman smoother over the multidimensional phase walk.
//!
//! The forward pass is an EKF whose measurement update reduces, for the
//! phase-rotation model, to
//!
//! ```text
//! M_{k|k-1} = M_{k-1} + Q
//! M_k       = (I + M_{k|k-1} V_k)^{-1} M_{k|k-1}
//! theta_k   = theta_{k-1} + M_k h_k
//! ```
//!
//! with `V_k = diag(|mean|^2 / eff_var)` and
//! `h_i = Im{r * conj(mean) * exp(-j theta_prev)} / eff_var`. The backward
//! pass is a Rauch-Tung-Striebel smoother. Both receivers feed this module
//! with per-slot soft symbol statistics, so the FG and VB variants differ
//! only in how `mean`/`eff_var` are produced.
//!
//! The covariance correction is evaluated in the symmetrized Woodbury form
//! `M_k = P - P W (I + W P W)^{-1} W P` with `W = sqrt(V_k)`, which keeps
//! every factorization symmetric positive definite.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ComplexGrid, CovarianceSpec, C64};
use crate::numerics::spd_solve;

/// Prior variance assigned to a channel whose soft mean is zero at k = 0:
/// the initial phase is uniform, so the start is uninformative.
pub const UNINFORMATIVE_PHASE_VAR: f64 = 1e4;

/// Above this prior variance (rad^2) the linearization is meaningless, so
/// the filter re-centers the channel's linearization point on the raw
/// observation angle before updating. This generalizes the k = 0
/// initialization to each channel's first informative slot; without it a
/// channel whose first pilot arrives mid-frame cannot acquire its phase
/// (the small-angle correction saturates at `sin`).
const RELINEARIZE_VAR: f64 = 0.25;

/// Soft-mean energy below this is treated as an erased slot. Projecting a
/// uniform PMF leaves a ~1e-17 floating-point residue in the mean, which
/// must not masquerade as an informative observation.
const INFORMATIVE_MEAN_SQR: f64 = 1e-18;

/// Per-slot soft symbol means and effective noise variances driving the
/// smoother. `eff_var` is at least the channel noise variance everywhere;
/// pilot slots carry the pilot value with exactly the channel variance.
#[derive(Debug, Clone)]
pub struct SoftSymbolStats {
    mean: ComplexGrid,
    eff_var: Vec<f64>,
    es: f64,
}

impl SoftSymbolStats {
    pub fn new(mean: ComplexGrid, eff_var: Vec<f64>, es: f64) -> Result<Self> {
        if eff_var.len() != mean.channels() * mean.len() {
            return Err(Error::LengthMismatch {
                expected: mean.channels() * mean.len(),
                got: eff_var.len(),
            });
        }
        Ok(Self { mean, eff_var, es })
    }

    pub fn channels(&self) -> usize {
        self.mean.channels()
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self, i: usize, k: usize) -> C64 {
        self.mean[(i, k)]
    }

    pub fn eff_var(&self, i: usize, k: usize) -> f64 {
        self.eff_var[i * self.mean.len() + k]
    }

    /// Average symbol energy of the underlying constellation.
    pub fn es(&self) -> f64 {
        self.es
    }
}

/// Forward (filtering) quantities, retained in full for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
    /// Predicted covariance `M_{k|k-1}`; entry 0 is unused.
    pub cov_pred: Vec<DMatrix<f64>>,
}

/// Smoothed phase posterior: per-time mean vector and covariance of the
/// Gaussian approximation of `p(theta_k | r)`.
#[derive(Debug, Clone)]
pub struct PhasePosterior {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
}

impl PhasePosterior {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn mean_at(&self, i: usize, k: usize) -> f64 {
        self.mean[k][i]
    }

    /// Marginal phase variance of channel `i` at time `k`.
    pub fn var_at(&self, i: usize, k: usize) -> f64 {
        self.cov[k][(i, i)]
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Measurement update `(I + P V)^{-1} P` through the symmetric Woodbury
/// form; `v` holds the diagonal of `V`.
fn covariance_update(p: &DMatrix<f64>, v: &[f64]) -> Result<DMatrix<f64>> {
    let d = p.nrows();
    if v.iter().all(|&x| x == 0.0) {
        return Ok(p.clone());
    }
    let w: Vec<f64> = v.iter().map(|&x| x.sqrt()).collect();
    // S = I + W P W
    let mut s = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            s[(i, j)] = w[i] * p[(i, j)] * w[j];
        }
        s[(i, i)] += 1.0;
    }
    // WP
    let mut wp = p.clone();
    for i in 0..d {
        for j in 0..d {
            wp[(i, j)] *= w[i];
        }
    }
    let x = spd_solve(&s, &wp)?;
    // M = P - (WP)^T X
    let mut m = p - wp.transpose() * x;
    symmetrize(&mut m);
    Ok(m)
}

/// Runs the forward EKF over the frame.
pub fn ekf_forward(
    r: &ComplexGrid,
    stats: &SoftSymbolStats,
    cov: &CovarianceSpec,
) -> Result<ForwardPass> {
    let (d, n) = (r.channels(), r.len());
    if stats.channels() != d || stats.len() != n || cov.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "ekf_forward: r {}x{}, stats {}x{}, cov dim {}",
            d,
            n,
            stats.channels(),
            stats.len(),
            cov.dim()
        )));
    }
    let q = cov.q.as_matrix();

    let mut mean = Vec::with_capacity(n);
    let mut covs = Vec::with_capacity(n);
    let mut cov_pred = Vec::with_capacity(n);

    // k = 0: initialize from the first observation where the soft mean is
    // informative; otherwise flat prior.
    let mut theta0 = DVector::zeros(d);
    let mut m0 = DMatrix::zeros(d, d);
    for i in 0..d {
        let s = stats.mean(i, 0);
        if s.norm_sqr() > INFORMATIVE_MEAN_SQR {
            theta0[i] = (r[(i, 0)] * s.conj()).arg();
            // Variance of the angle observation. With the energy of the
            // actual first symbol in place of its average, weak inner-ring
            // pilots no longer get an overconfident prior (which was
            // measured to cause wrong phase locks downstream).
            m0[(i, i)] = stats.eff_var(i, 0) / s.norm_sqr().min(stats.es() * 4.0);
        } else {
            theta0[i] = 0.0;
            m0[(i, i)] = UNINFORMATIVE_PHASE_VAR;
        }
    }
    mean.push(theta0);
    covs.push(m0);
    cov_pred.push(DMatrix::zeros(d, d));

    let mut v = vec![0.0f64; d];
    let mut h = DVector::zeros(d);
    for k in 1..n {
        let pred = &covs[k - 1] + q;
        let mut prev = mean[k - 1].clone();
        for i in 0..d {
            let s = stats.mean(i, k);
            let ev = stats.eff_var(i, k);
            let informative = s.norm_sqr() > INFORMATIVE_MEAN_SQR;
            v[i] = if informative { s.norm_sqr() / ev } else { 0.0 };
            if informative && pred[(i, i)] > RELINEARIZE_VAR {
                // Essentially flat prior: linearize at the observation
                // angle itself, making this update's residual zero.
                prev[i] = (r[(i, k)] * s.conj()).arg();
            }
            let rot = C64::from_polar(1.0, -prev[i]);
            h[i] = if informative {
                (r[(i, k)] * s.conj() * rot).im / ev
            } else {
                0.0
            };
        }
        let m = covariance_update(&pred, &v)?;
        let theta = &prev + &m * &h;
        mean.push(theta);
        covs.push(m);
        cov_pred.push(pred);
    }

    Ok(ForwardPass {
        mean,
        cov: covs,
        cov_pred,
    })
}

/// Runs the Rauch-Tung-Striebel backward recursion over a forward pass.
pub fn rtss_backward(fwd: &ForwardPass, _cov: &CovarianceSpec) -> Result<PhasePosterior> {
    let n = fwd.mean.len();
    let d = fwd.mean[0].len();
    let mut mean = fwd.mean.clone();
    let mut cov = fwd.cov.clone();

    for k in (0..n - 1).rev() {
        let pred = &fwd.cov_pred[k + 1];
        // A = M_k * pred^{-1}; pred^{-1} M_k is its transpose since both
        // factors are symmetric.
        let a = spd_solve(pred, &fwd.cov[k])?.transpose();
        mean[k] = &fwd.mean[k] + &a * (&mean[k + 1] - &fwd.mean[k]);
        let mut mk = &fwd.cov[k] + &a * (&cov[k + 1] - pred) * a.transpose();
        symmetrize(&mut mk);
        cov[k] = mk;
    }
    let _ = d;
    Ok(PhasePosterior { mean, cov })
}

/// Forward EKF followed by the RTS smoother.
pub fn smooth(
    r: &ComplexGrid,
    stats: &SoftSymbolStats,
    cov: &CovarianceSpec,
) -> Result<PhasePosterior> {
    let fwd = ekf_forward(r, stats, cov)?;
    rtss_backward(&fwd, cov)
}

/// Single-step linearized phase estimate from one received sample with the
/// transmitted symbol and the previous phase known:
/// `theta_prev + Im{r * exp(-j theta_prev) / s}`.
pub fn single_step_phase_estimate(r: C64, s: C64, theta_prev: f64) -> Result<f64> {
    if s.norm_sqr() == 0.0 {
        return Err(Error::ZeroSymbol);
    }
    let rot = C64::from_polar(1.0, -theta_prev);
    Ok(theta_prev + (r * rot / s).im)
}
