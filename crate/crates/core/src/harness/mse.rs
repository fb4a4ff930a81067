//! Single-step linearization MSE study: how much estimation error the
//! first-order phase update contributes with and without AWGN.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eks::single_step_phase_estimate;
use crate::error::{Error, Result};
use crate::model::make_qam;

/// Configuration of the MSE study. `ebn0_db` may contain `inf` entries for
/// the noise-free case.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MseConfig {
    pub linewidths_hz: Vec<f64>,
    pub baud_hz: f64,
    pub ebn0_db: Vec<f64>,
    pub samples: u64,
    #[serde(default = "default_order")]
    pub constellation_order: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_order() -> usize {
    4
}

/// One (linewidth, Eb/N0) cell of the study.
#[derive(Debug, Clone, Copy)]
pub struct MsePoint {
    pub linewidth_hz: f64,
    pub ebn0_db: f64,
    pub samples: u64,
    pub mse: f64,
}

pub const MSE_CSV_HEADER: &str = "linewidth_hz,ebn0_db,samples,mse";

/// Estimates the single-step MSE by Monte Carlo: draw the previous phase
/// and a Gaussian increment, form the received sample (with AWGN unless
/// Eb/N0 is infinite), apply the linearized estimator with the symbol and
/// previous phase known exactly, and accumulate the squared error.
pub fn run_linearization_mse(config: &MseConfig) -> Result<Vec<MsePoint>> {
    if config.samples < 10_000 {
        return Err(Error::InvalidConfig(
            "MSE study needs at least 1e4 samples".into(),
        ));
    }
    if config.baud_hz <= 0.0 {
        return Err(Error::InvalidConfig("baud rate must be positive".into()));
    }
    let constellation = make_qam(config.constellation_order, 1.0)?;
    let mut points = Vec::new();
    for (li, &linewidth) in config.linewidths_hz.iter().enumerate() {
        let q = 2.0 * std::f64::consts::PI * linewidth / config.baud_hz;
        for (ei, &ebn0_db) in config.ebn0_db.iter().enumerate() {
            let sigma = if ebn0_db.is_infinite() {
                0.0
            } else {
                super::ebn0_to_noise_variance(ebn0_db, &constellation, 1.0, 0.0)?.sqrt()
            };
            let mut rng = ChaCha12Rng::seed_from_u64(config.master_seed);
            rng.set_stream(((li as u64) << 32) | ei as u64);
            let mut acc = 0.0f64;
            for _ in 0..config.samples {
                let theta_prev = rng.random_range(0.0..std::f64::consts::TAU);
                let delta: f64 = rng.sample::<f64, _>(StandardNormal) * q.sqrt();
                let theta = theta_prev + delta;
                let s = constellation.point(rng.random_range(0..constellation.size()));
                let mut r = s * crate::model::C64::from_polar(1.0, theta);
                if sigma > 0.0 {
                    r += crate::model::C64::new(
                        rng.sample::<f64, _>(StandardNormal) * sigma,
                        rng.sample::<f64, _>(StandardNormal) * sigma,
                    );
                }
                let est = single_step_phase_estimate(r, s, theta_prev)?;
                let err = est - theta;
                acc += err * err;
            }
            points.push(MsePoint {
                linewidth_hz: linewidth,
                ebn0_db,
                samples: config.samples,
                mse: acc / config.samples as f64,
            });
        }
    }
    Ok(points)
}

pub fn write_mse_csv<W: Write>(mut w: W, points: &[MsePoint]) -> std::io::Result<()> {
    writeln!(w, "{MSE_CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{:e}",
            p.linewidth_hz, p.ebn0_db, p.samples, p.mse
        )?;
    }
    Ok(())
}
