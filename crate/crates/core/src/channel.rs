//! Correlated phase-noise trajectories and the AWGN phase-rotation channel.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{ComplexGrid, CovarianceSpec, C64};
use crate::numerics::SymMatrix;

/// Unwrapped phase trajectories for all channels, radians.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    d: usize,
    n: usize,
    theta: Vec<f64>,
}

impl PhaseTrajectory {
    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.theta[i * self.n + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.n..(i + 1) * self.n]
    }
}

/// Symmetric square root of a PSD matrix via eigendecomposition; tiny
/// negative eigenvalues from roundoff are clipped at zero. Eigenvalues
/// below `-1e-10 * trace` are rejected as genuinely indefinite.
fn symmetric_sqrt(q: &SymMatrix) -> Result<DMatrix<f64>> {
    let eig = q.as_matrix().clone().symmetric_eigen();
    let scale = q.as_matrix().trace().max(1e-300);
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        if *v < -1e-10 * scale {
            return Err(Error::NotPsd(*v));
        }
        *v = v.max(0.0).sqrt();
    }
    let u = eig.eigenvectors;
    Ok(&u * DMatrix::from_diagonal(&vals) * u.transpose())
}

/// Draws a multidimensional Gaussian random walk: the initial phase is
/// uniform on `[0, 2pi)` per channel and each increment is `N(0, Q)`.
pub fn generate_phase_walk<R: Rng>(q: &SymMatrix, n: usize, rng: &mut R) -> Result<PhaseTrajectory> {
    let d = q.dim();
    let root = symmetric_sqrt(q)?;
    let mut theta = vec![0.0f64; d * n];
    let mut current = DVector::from_fn(d, |_, _| rng.random_range(0.0..std::f64::consts::TAU));
    for i in 0..d {
        theta[i * n] = current[i];
    }
    let mut z = DVector::zeros(d);
    for k in 1..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        current += &root * &z;
        for i in 0..d {
            theta[i * n + k] = current[i];
        }
    }
    Ok(PhaseTrajectory { d, n, theta })
}

/// Applies the phase-rotation AWGN channel: `r = s * exp(j theta) + n`,
/// complex noise with variance `sigma2[i]` per real dimension, independent
/// across channels and time.
pub fn apply_channel<R: Rng>(
    s: &ComplexGrid,
    theta: &PhaseTrajectory,
    cov: &CovarianceSpec,
    rng: &mut R,
) -> Result<ComplexGrid> {
    let (d, n) = (s.channels(), s.len());
    if theta.channels() != d || theta.len() != n || cov.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "apply_channel: s {}x{}, theta {}x{}, cov dim {}",
            d,
            n,
            theta.channels(),
            theta.len(),
            cov.dim()
        )));
    }
    let mut r = ComplexGrid::zeros(d, n);
    for i in 0..d {
        let std = cov.sigma2[i].sqrt();
        for k in 0..n {
            let rot = C64::from_polar(1.0, theta.get(i, k));
            let nre: f64 = rng.sample(StandardNormal);
            let nim: f64 = rng.sample(StandardNormal);
            r[(i, k)] = s[(i, k)] * rot + C64::new(nre * std, nim * std);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_covariance;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn zero_covariance_freezes_phase() {
        let q = SymMatrix::from_diagonal(&[0.0, 0.0]);
        let mut rng = StdRng::seed_from_u64(1);
        let t = generate_phase_walk(&q, 50, &mut rng).unwrap();
        for i in 0..2 {
            for k in 0..50 {
                assert_eq!(t.get(i, k), t.get(i, 0));
            }
        }
    }

    #[test]
    fn initial_phase_in_principal_range() {
        let q = SymMatrix::from_diagonal(&[1e-4; 3]);
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..100 {
            let t = generate_phase_walk(&q, 2, &mut rng).unwrap();
            for i in 0..3 {
                assert!(t.get(i, 0) >= 0.0 && t.get(i, 0) < std::f64::consts::TAU);
            }
        }
    }

    #[test]
    fn scalar_walk_variance_grows_linearly() {
        // Var(theta_{k+m} - theta_k) = m * q; Monte Carlo over many walks.
        let qval = 2e-3;
        let q = SymMatrix::from_diagonal(&[qval]);
        let mut rng = StdRng::seed_from_u64(3);
        let m = 8;
        let walks = 100_000;
        let mut acc = 0.0;
        for _ in 0..walks {
            let t = generate_phase_walk(&q, m + 1, &mut rng).unwrap();
            let diff = t.get(0, m) - t.get(0, 0);
            acc += diff * diff;
        }
        let var = acc / walks as f64;
        let expected = m as f64 * qval;
        assert!(
            (var - expected).abs() < 0.05 * expected,
            "var {var}, expected {expected}"
        );
    }

    #[test]
    fn fully_correlated_increments_keep_offset() {
        // Off-diagonal equal to diagonal: rank-1 increments, so the
        // channel difference never moves.
        let q = SymMatrix::from_fn(2, |_, _| 5e-3);
        let mut rng = StdRng::seed_from_u64(4);
        let t = generate_phase_walk(&q, 200, &mut rng).unwrap();
        let offset = t.get(0, 0) - t.get(1, 0);
        for k in 0..200 {
            assert!((t.get(0, k) - t.get(1, k) - offset).abs() < 1e-9);
        }
    }

    #[test]
    fn increment_covariance_converges_to_q() {
        let q = build_covariance(3e-4, 3e-7, 3);
        let mut rng = StdRng::seed_from_u64(5);
        let n = 100_001;
        let t = generate_phase_walk(&q, n, &mut rng).unwrap();
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for k in 1..n {
            let inc = DVector::from_fn(3, |i, _| t.get(i, k) - t.get(i, k - 1));
            acc += &inc * inc.transpose();
        }
        acc /= (n - 1) as f64;
        let err = (&acc - q.as_matrix()).norm() / q.as_matrix().norm();
        assert!(err < 0.05, "Frobenius error {err}");
    }

    #[test]
    fn noiseless_identity_phase_returns_input() {
        let q = SymMatrix::from_diagonal(&[0.0]);
        let cov = CovarianceSpec::uniform_noise(q.clone(), 1e-18, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let mut s = ComplexGrid::zeros(1, 4);
        for k in 0..4 {
            s[(0, k)] = C64::new(k as f64, -1.0);
        }
        let theta = PhaseTrajectory {
            d: 1,
            n: 4,
            theta: vec![0.0; 4],
        };
        let r = apply_channel(&s, &theta, &cov, &mut rng).unwrap();
        for k in 0..4 {
            assert!((r[(0, k)] - s[(0, k)]).norm() < 1e-8);
        }
    }

    #[test]
    fn quarter_turn_maps_one_to_j() {
        let q = SymMatrix::from_diagonal(&[0.0]);
        let cov = CovarianceSpec::uniform_noise(q, 1e-30, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let mut s = ComplexGrid::zeros(1, 1);
        s[(0, 0)] = C64::new(1.0, 0.0);
        let theta = PhaseTrajectory {
            d: 1,
            n: 1,
            theta: vec![std::f64::consts::FRAC_PI_2],
        };
        let r = apply_channel(&s, &theta, &cov, &mut rng).unwrap();
        assert!((r[(0, 0)] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn noise_moments_match_sigma2() {
        let q = SymMatrix::from_diagonal(&[0.0, 0.0]);
        let sigma2 = [0.3, 0.05];
        let cov = CovarianceSpec::new(q, sigma2.to_vec()).unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let n = 100_000;
        let s = ComplexGrid::zeros(2, n);
        let theta = PhaseTrajectory {
            d: 2,
            n,
            theta: vec![0.0; 2 * n],
        };
        let r = apply_channel(&s, &theta, &cov, &mut rng).unwrap();
        for i in 0..2 {
            let var_re: f64 =
                r.row(i).iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
            assert!(
                (var_re - sigma2[i]).abs() < 0.03 * sigma2[i],
                "channel {i}: {var_re} vs {}",
                sigma2[i]
            );
        }
        // Cross-channel noise is uncorrelated.
        let cross: f64 = (0..n)
            .map(|k| r[(0, k)].re * r[(1, k)].re)
            .sum::<f64>()
            / n as f64;
        let bound = 4.0 / (n as f64).sqrt() * (sigma2[0] * sigma2[1]).sqrt();
        assert!(cross.abs() < bound, "cross-cov {cross}");
    }
}
