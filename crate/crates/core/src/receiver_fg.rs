//! FG-PNC: factor-graph/sum-product phase-noise compensation.
//!
//! One iteration projects decoder extrinsics to Gaussian soft symbols
//! (moment matching of the per-slot mixture), runs the extended Kalman
//! smoother, and emits per-slot symbol likelihoods through the closed-form
//! Tikhonov-approximated message
//!
//! ```text
//! xi(s) = e^{j theta_s} / M_s + r s* / sigma2 - r s_bar* / var_tilde
//! f(s)  = |xi| - |s|^2 / (2 sigma2) - ln(|xi|) / 2
//! ```
//!
//! with max-shifted exponentiation and normalization per slot.

use crate::eks::{self, PhasePosterior, SoftSymbolStats};
use crate::error::Result;
use crate::model::{ComplexGrid, Constellation, CovarianceSpec, PilotGrid, C64};
use crate::pmf::SymbolPmf;

/// Tolerance used when validating incoming PMFs.
const PMF_TOL: f64 = 1e-6;

/// Floor applied to `|xi|` inside the logarithm; the asymptotic message
/// diverges at zero and the event carries no probability mass.
const XI_FLOOR: f64 = 1e-12;

/// Projects per-slot symbol PMFs onto Gaussian soft statistics: mean
/// `sum s P(s)` and effective variance `sigma2 + Var(S)/2`. Pilot slots
/// always carry the pilot value with the bare channel variance, regardless
/// of the incoming PMF.
pub fn project_soft_stats(
    pd: &SymbolPmf,
    constellation: &Constellation,
    cov: &CovarianceSpec,
    pilots: &PilotGrid,
) -> Result<SoftSymbolStats> {
    pd.validate_normalized(PMF_TOL)?;
    let (d, n) = (pd.channels(), pd.len());
    let mut mean = ComplexGrid::zeros(d, n);
    let mut eff_var = vec![0.0f64; d * n];
    for i in 0..d {
        let sigma2 = cov.sigma2[i];
        for k in 0..n {
            if pilots.is_pilot(i, k) {
                mean[(i, k)] = pilots.value(i, k);
                eff_var[i * n + k] = sigma2;
                continue;
            }
            let slot = pd.slot(i, k);
            let mut s_bar = C64::new(0.0, 0.0);
            for (p, &prob) in constellation.points().iter().zip(slot) {
                s_bar += p * prob;
            }
            let mut var = 0.0;
            for (p, &prob) in constellation.points().iter().zip(slot) {
                var += (p - s_bar).norm_sqr() * prob;
            }
            mean[(i, k)] = s_bar;
            eff_var[i * n + k] = sigma2 + 0.5 * var;
        }
    }
    SoftSymbolStats::new(mean, eff_var, constellation.es())
}

/// Computes the symbol likelihood PMFs from the smoothed phase posterior.
pub fn compute_pu(
    r: &ComplexGrid,
    stats: &SoftSymbolStats,
    posterior: &PhasePosterior,
    constellation: &Constellation,
    cov: &CovarianceSpec,
) -> SymbolPmf {
    let (d, n) = (r.channels(), r.len());
    let m = constellation.size();
    let mut pu = SymbolPmf::zeros(d, n, m);
    let mut logs = vec![0.0f64; m];
    for i in 0..d {
        let sigma2 = cov.sigma2[i];
        for k in 0..n {
            let theta = posterior.mean_at(i, k);
            let ms = posterior.var_at(i, k);
            let prior_term = C64::from_polar(1.0 / ms, theta);
            let s_bar = stats.mean(i, k);
            let var_tilde = stats.eff_var(i, k);
            let data_term = r[(i, k)] * s_bar.conj() / var_tilde;
            for (idx, &s) in constellation.points().iter().enumerate() {
                let xi = prior_term + r[(i, k)] * s.conj() / sigma2 - data_term;
                let mag = xi.norm();
                logs[idx] =
                    mag - s.norm_sqr() / (2.0 * sigma2) - 0.5 * mag.max(XI_FLOOR).ln();
            }
            pu.set_slot_from_log(i, k, &logs);
        }
    }
    pu
}

/// One FG-PNC iteration: soft projection, smoothing, message computation.
pub fn fg_pnc_iteration(
    r: &ComplexGrid,
    pd: &SymbolPmf,
    cov: &CovarianceSpec,
    pilots: &PilotGrid,
    constellation: &Constellation,
) -> Result<SymbolPmf> {
    let stats = project_soft_stats(pd, constellation, cov, pilots)?;
    let posterior = eks::smooth(r, &stats, cov)?;
    Ok(compute_pu(r, &stats, &posterior, constellation, cov))
}
