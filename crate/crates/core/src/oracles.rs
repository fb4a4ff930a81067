//! Brute-force reference implementations used to validate the fast paths:
//! a grid-based Bayesian filter/smoother for a single channel, and direct
//! numerical quadrature of the per-slot symbol messages.
//!
//! These are deliberately slow and simple; nothing here shares code with
//! the implementations under test.

use crate::error::{Error, Result};
use crate::model::{ComplexGrid, Constellation, C64};

/// Discretized circular distribution on `[0, 2pi)`.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub num_points: usize,
    pub probs: Vec<f64>,
}

impl PhaseGrid {
    fn uniform(num_points: usize) -> Self {
        Self {
            num_points,
            probs: vec![1.0 / num_points as f64; num_points],
        }
    }

    fn normalize(&mut self) {
        let sum: f64 = self.probs.iter().sum();
        for p in &mut self.probs {
            *p /= sum;
        }
    }

    /// First circular moment `sum p * exp(j theta)`.
    fn circular_moment(&self) -> C64 {
        let step = std::f64::consts::TAU / self.num_points as f64;
        self.probs
            .iter()
            .enumerate()
            .map(|(g, &p)| C64::from_polar(p, g as f64 * step))
            .sum()
    }
}

/// Per-time circular statistics extracted from the grid recursion.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    /// Filtering means/variances (forward pass only).
    pub filter_mean: Vec<f64>,
    pub filter_var: Vec<f64>,
    /// Smoothed means/variances (forward-backward).
    pub smooth_mean: Vec<f64>,
    pub smooth_var: Vec<f64>,
}

/// Wrapped Gaussian transition kernel sampled on the grid, normalized to
/// sum one. Returned as offsets `0..num_points`.
fn wrapped_kernel(q: f64, num_points: usize) -> Vec<f64> {
    let step = std::f64::consts::TAU / num_points as f64;
    let mut kernel = vec![0.0f64; num_points];
    if q == 0.0 {
        kernel[0] = 1.0;
        return kernel;
    }
    for (off, k) in kernel.iter_mut().enumerate() {
        // Distance on the circle, both directions, plus one extra wrap for
        // wide kernels.
        let base = off as f64 * step;
        for w in [-1.0f64, 0.0, 1.0] {
            let x = base + w * std::f64::consts::TAU;
            *k += (-x * x / (2.0 * q)).exp();
        }
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Significant kernel taps as (offset, weight) pairs, precomputed once per
/// smoother run.
fn kernel_taps(kernel: &[f64]) -> Vec<(usize, f64)> {
    kernel
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-300)
        .map(|(o, &w)| (o, w))
        .collect()
}

/// Circular convolution of a grid distribution with the transition kernel.
fn convolve(dist: &PhaseGrid, taps: &[(usize, f64)]) -> PhaseGrid {
    let g = dist.num_points;
    let mut out = vec![0.0f64; g];
    for &(off, w) in taps {
        // out[(src + off) % g] += p * w for all src, split at the wrap.
        let head = g - off;
        for (o, &p) in out[off..].iter_mut().zip(&dist.probs[..head]) {
            *o += p * w;
        }
        for (o, &p) in out[..off].iter_mut().zip(&dist.probs[head..]) {
            *o += p * w;
        }
    }
    PhaseGrid {
        num_points: g,
        probs: out,
    }
}

/// Likelihood of each grid phase for one received sample, max-shifted.
fn likelihood_row(r: C64, s: C64, sigma2: f64, num_points: usize) -> Vec<f64> {
    let step = std::f64::consts::TAU / num_points as f64;
    let logs: Vec<f64> = (0..num_points)
        .map(|g| {
            let rot = C64::from_polar(1.0, g as f64 * step);
            -(r - s * rot).norm_sqr() / (2.0 * sigma2)
        })
        .collect();
    let max = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    logs.iter().map(|&l| (l - max).exp()).collect()
}

fn circ_stats(grid: &PhaseGrid) -> (f64, f64) {
    let m = grid.circular_moment();
    let mean = m.arg().rem_euclid(std::f64::consts::TAU);
    // Wrapped-Gaussian equivalent variance.
    let var = -2.0 * m.norm().min(1.0).ln();
    (mean, var)
}

/// Exact (discretized) Bayesian filter and smoother on a wrapped phase grid
/// for a single channel with known symbols. The recursion uses the true
/// (non-linearized) complex Gaussian likelihood.
pub fn grid_bayes_smoother(
    r: &ComplexGrid,
    s: &ComplexGrid,
    q: f64,
    sigma2: f64,
    num_points: usize,
) -> Result<GridPosterior> {
    if r.channels() != 1 || s.channels() != 1 {
        return Err(Error::UnsupportedDimension(r.channels().max(s.channels())));
    }
    if r.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: r.len(),
            got: s.len(),
        });
    }
    let n = r.len();
    let kernel = wrapped_kernel(q, num_points);
    let taps = kernel_taps(&kernel);

    let likes: Vec<Vec<f64>> = (0..n)
        .map(|k| likelihood_row(r[(0, k)], s[(0, k)], sigma2, num_points))
        .collect();

    // Forward: alpha_k ∝ L_k * (kernel ⊛ alpha_{k-1}); flat prior at k=0.
    let mut forward: Vec<PhaseGrid> = Vec::with_capacity(n);
    let mut alpha = PhaseGrid::uniform(num_points);
    for (p, &l) in alpha.probs.iter_mut().zip(&likes[0]) {
        *p *= l;
    }
    alpha.normalize();
    forward.push(alpha);
    for k in 1..n {
        let mut next = convolve(&forward[k - 1], &taps);
        for (p, &l) in next.probs.iter_mut().zip(&likes[k]) {
            *p *= l;
        }
        next.normalize();
        forward.push(next);
    }

    // Backward: beta_k ∝ kernel ⊛ (L_{k+1} * beta_{k+1}).
    let mut betas: Vec<PhaseGrid> = vec![PhaseGrid::uniform(num_points); n];
    for k in (0..n - 1).rev() {
        let mut prod = betas[k + 1].clone();
        for (p, &l) in prod.probs.iter_mut().zip(&likes[k + 1]) {
            *p *= l;
        }
        let mut b = convolve(&prod, &taps);
        b.normalize();
        betas[k] = b;
    }

    let mut out = GridPosterior {
        filter_mean: Vec::with_capacity(n),
        filter_var: Vec::with_capacity(n),
        smooth_mean: Vec::with_capacity(n),
        smooth_var: Vec::with_capacity(n),
    };
    for k in 0..n {
        let (fm, fv) = circ_stats(&forward[k]);
        out.filter_mean.push(fm);
        out.filter_var.push(fv);
        let mut gamma = forward[k].clone();
        for (p, b) in gamma.probs.iter_mut().zip(&betas[k].probs) {
            *p *= b;
        }
        gamma.normalize();
        let (sm, sv) = circ_stats(&gamma);
        out.smooth_mean.push(sm);
        out.smooth_var.push(sv);
    }
    Ok(out)
}

/// Default trapezoid resolution for the message quadratures.
pub const QUADRATURE_POINTS: usize = 4096;

/// Numerically integrates the FG symbol message: for each constellation
/// point `s`,
///
/// ```text
/// Pu(s) ∝ ∫ CN(r; s e^{j theta}, 2 sigma2) / CN(r; s_bar e^{j theta}, 2 var_tilde)
///          * N(theta; theta_s, m_s) d theta
/// ```
///
/// by the trapezoid rule over `theta_s ± 6 sqrt(m_s)`. Returns the
/// normalized PMF.
pub fn quadrature_pu(
    r: C64,
    s_bar: C64,
    var_tilde: f64,
    theta_s: f64,
    m_s: f64,
    constellation: &Constellation,
    sigma2: f64,
    num_points: usize,
) -> Vec<f64> {
    assert!(m_s > 0.0, "quadrature requires a positive phase variance");
    let half = 6.0 * m_s.sqrt();
    let lo = theta_s - half;
    let step = 2.0 * half / (num_points - 1) as f64;

    let m = constellation.size();
    let mut log_vals = vec![f64::NEG_INFINITY; m];
    let mut integrand = vec![0.0f64; num_points];
    for (idx, &s) in constellation.points().iter().enumerate() {
        let mut max = f64::NEG_INFINITY;
        for (t, slot) in integrand.iter_mut().enumerate() {
            let theta = lo + t as f64 * step;
            let rot = C64::from_polar(1.0, theta);
            let log_num = -(r - s * rot).norm_sqr() / (2.0 * sigma2);
            let log_den = -(r - s_bar * rot).norm_sqr() / (2.0 * var_tilde);
            let dtheta = theta - theta_s;
            let log_gauss = -dtheta * dtheta / (2.0 * m_s);
            *slot = log_num - log_den + log_gauss;
            max = max.max(*slot);
        }
        let mut sum = 0.0;
        for (t, &l) in integrand.iter().enumerate() {
            let w = if t == 0 || t == num_points - 1 { 0.5 } else { 1.0 };
            sum += w * (l - max).exp();
        }
        log_vals[idx] = max + sum.ln();
    }
    normalize_from_log(&log_vals)
}

/// Brute-force VB symbol likelihood: evaluates
/// `g(s) ∝ exp(-E[|r - s e^{j Theta}|^2] / (2 sigma2))` with the
/// expectation over `Theta ~ N(theta_s, m_s)` taken by trapezoid
/// quadrature rather than the characteristic-function identity.
pub fn quadrature_g(
    r: C64,
    theta_s: f64,
    m_s: f64,
    constellation: &Constellation,
    sigma2: f64,
    num_points: usize,
) -> Vec<f64> {
    assert!(m_s > 0.0);
    let half = 10.0 * m_s.sqrt();
    let lo = theta_s - half;
    let step = 2.0 * half / (num_points - 1) as f64;

    // Gaussian weights on the grid, normalized to undo truncation.
    let mut weights = vec![0.0f64; num_points];
    let mut wsum = 0.0;
    for (t, w) in weights.iter_mut().enumerate() {
        let dtheta = lo + t as f64 * step - theta_s;
        let trap = if t == 0 || t == num_points - 1 { 0.5 } else { 1.0 };
        *w = trap * (-dtheta * dtheta / (2.0 * m_s)).exp();
        wsum += *w;
    }
    for w in &mut weights {
        *w /= wsum;
    }

    let m = constellation.size();
    let mut log_vals = vec![0.0f64; m];
    for (idx, &s) in constellation.points().iter().enumerate() {
        let mut expect = 0.0;
        for (t, &w) in weights.iter().enumerate() {
            let theta = lo + t as f64 * step;
            let rot = C64::from_polar(1.0, theta);
            expect += w * (r - s * rot).norm_sqr();
        }
        log_vals[idx] = -expect / (2.0 * sigma2);
    }
    normalize_from_log(&log_vals)
}

fn normalize_from_log(log_vals: &[f64]) -> Vec<f64> {
    let max = log_vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out: Vec<f64> = log_vals.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Total variation distance between two PMFs.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}
