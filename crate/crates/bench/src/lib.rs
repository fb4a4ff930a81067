//! Shared setup for the criterion benchmarks: deterministic frames under
//! the correlated phase-noise channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use mcpnc::channel::{apply_channel, generate_phase_walk};
use mcpnc::model::{
    build_covariance, make_qam, ComplexGrid, Constellation, CovarianceSpec, PilotGrid,
};

pub struct BenchFrame {
    pub constellation: Constellation,
    pub cov: CovarianceSpec,
    pub pilots: PilotGrid,
    pub received: ComplexGrid,
}

/// A 16QAM frame over `d` channels with pilots every 25 slots and the
/// coded-experiment phase-noise level.
pub fn frame(d: usize, n: usize, sigma2: f64, seed: u64) -> BenchFrame {
    let constellation = make_qam(16, 1.0).unwrap();
    let lpn = 2.0 * std::f64::consts::PI * 5e-5;
    let q = build_covariance(lpn, lpn / 1000.0, d);
    let cov = CovarianceSpec::uniform_noise(q.clone(), sigma2, d).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut pilots = PilotGrid::none(d, n);
    let mut sent = ComplexGrid::zeros(d, n);
    for i in 0..d {
        for k in 0..n {
            let idx = rng.random_range(0..16);
            sent[(i, k)] = constellation.point(idx);
            if (k + i * 25 / d) % 25 == 0 {
                pilots.force_pilot(i, k, &constellation, idx);
            }
        }
    }
    let walk = generate_phase_walk(&q, n, &mut rng).unwrap();
    let received = apply_channel(&sent, &walk, &cov, &mut rng).unwrap();
    BenchFrame {
        constellation,
        cov,
        pilots,
        received,
    }
}
