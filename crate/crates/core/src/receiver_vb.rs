//! VB-PNC: variational-Bayes phase-noise compensation.
//!
//! One iteration takes the a-posteriori symbol PMFs from the decoder,
//! reduces them to soft means (the variance term is constant in the phase
//! update and drops out), runs the extended Kalman smoother, and emits the
//! closed-form symbol likelihood
//!
//! ```text
//! g(s) = exp( Re{r s* alpha*} / sigma2 - |s|^2 / (2 sigma2) )
//! ```
//!
//! where `alpha = exp(j theta_s - M_s / 2)` is the posterior circular
//! moment `E[e^{j Theta}]` from the Gaussian characteristic function.

use crate::eks::{self, PhasePosterior, SoftSymbolStats};
use crate::error::Result;
use crate::model::{ComplexGrid, Constellation, CovarianceSpec, PilotGrid, C64};
use crate::pmf::SymbolPmf;

const PMF_TOL: f64 = 1e-6;

/// Posterior circular moments `alpha = E[e^{j Theta}]` per slot.
#[derive(Debug, Clone)]
pub struct CircularMoment {
    d: usize,
    n: usize,
    alpha: Vec<C64>,
}

impl CircularMoment {
    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, k: usize) -> C64 {
        self.alpha[i * self.n + k]
    }

    /// Unit-magnitude moments from exactly known phases (genie case).
    pub fn from_known_phases(theta: &[Vec<f64>]) -> Self {
        let d = theta.len();
        let n = theta[0].len();
        let mut alpha = Vec::with_capacity(d * n);
        for row in theta {
            alpha.extend(row.iter().map(|&t| C64::from_polar(1.0, t)));
        }
        Self { d, n, alpha }
    }
}

/// Reduces a-posteriori symbol PMFs to soft means. The effective variance
/// stays at the bare channel noise: unlike the FG projection, symbol
/// uncertainty does not inflate it.
pub fn vb_soft_means(
    qs: &SymbolPmf,
    constellation: &Constellation,
    cov: &CovarianceSpec,
    pilots: &PilotGrid,
) -> Result<SoftSymbolStats> {
    qs.validate_normalized(PMF_TOL)?;
    let (d, n) = (qs.channels(), qs.len());
    let mut mean = ComplexGrid::zeros(d, n);
    let mut eff_var = vec![0.0f64; d * n];
    for i in 0..d {
        let sigma2 = cov.sigma2[i];
        for k in 0..n {
            eff_var[i * n + k] = sigma2;
            if pilots.is_pilot(i, k) {
                mean[(i, k)] = pilots.value(i, k);
            } else {
                let mut s_bar = C64::new(0.0, 0.0);
                for (p, &prob) in constellation.points().iter().zip(qs.slot(i, k)) {
                    s_bar += p * prob;
                }
                mean[(i, k)] = s_bar;
            }
        }
    }
    SoftSymbolStats::new(mean, eff_var, constellation.es())
}

/// Circular moment of the smoothed Gaussian phase posterior:
/// `alpha = exp(j theta_s - M_s / 2)`.
pub fn circular_moment(posterior: &PhasePosterior) -> CircularMoment {
    let n = posterior.len();
    let d = posterior.mean[0].len();
    let mut alpha = Vec::with_capacity(d * n);
    for i in 0..d {
        for k in 0..n {
            let ms = posterior.var_at(i, k);
            alpha.push(C64::from_polar((-ms / 2.0).exp(), posterior.mean_at(i, k)));
        }
    }
    CircularMoment { d, n, alpha }
}

/// Per-slot symbol likelihoods of the virtual phase-compensated channel.
pub fn compute_g(
    r: &ComplexGrid,
    alpha: &CircularMoment,
    constellation: &Constellation,
    cov: &CovarianceSpec,
) -> SymbolPmf {
    let (d, n) = (r.channels(), r.len());
    let m = constellation.size();
    let mut g = SymbolPmf::zeros(d, n, m);
    let mut logs = vec![0.0f64; m];
    for i in 0..d {
        let sigma2 = cov.sigma2[i];
        for k in 0..n {
            let a = alpha.get(i, k).conj();
            for (idx, &s) in constellation.points().iter().enumerate() {
                logs[idx] =
                    ((r[(i, k)] * s.conj() * a).re - s.norm_sqr() / 2.0) / sigma2;
            }
            g.set_slot_from_log(i, k, &logs);
        }
    }
    g
}

/// One VB-PNC iteration: soft means, smoothing, circular moments, g.
pub fn vb_pnc_iteration(
    r: &ComplexGrid,
    qs: &SymbolPmf,
    cov: &CovarianceSpec,
    pilots: &PilotGrid,
    constellation: &Constellation,
) -> Result<SymbolPmf> {
    let stats = vb_soft_means(qs, constellation, cov, pilots)?;
    let posterior = eks::smooth(r, &stats, cov)?;
    let alpha = circular_moment(&posterior);
    Ok(compute_g(r, &alpha, constellation, cov))
}
