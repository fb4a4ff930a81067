//! Experiment orchestration: Monte Carlo BER sweeps with outer-iteration
//! scheduling, the single-step linearization MSE study, joint versus
//! per-channel comparisons, seeded reproducibility, and CSV emission.

mod config;
mod mse;
mod sweep;
mod trial;

pub use config::{ReceiverKind, SimConfig};
pub use mse::{run_linearization_mse, write_mse_csv, MseConfig, MsePoint, MSE_CSV_HEADER};
pub use sweep::{
    run_sweep, sweep_csv_row, write_sweep_csv, SweepPoint, TimingMode, SWEEP_CSV_HEADER,
};
pub use trial::{build_pilot_grid, plan_frame, run_coded_trial, FramePlan, TrialOutcome, TrialSetup};

use crate::error::{Error, Result};
use crate::model::Constellation;

/// Converts an SNR per information bit (dB) into the AWGN variance per real
/// dimension: `sigma2 = Es / (2 * 10^(ebn0/10) * Rc * Rm * (1 - Rp))`,
/// accounting for code rate, bits per symbol, and pilot overhead.
pub fn ebn0_to_noise_variance(
    ebn0_db: f64,
    constellation: &Constellation,
    code_rate: f64,
    pilot_rate: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&pilot_rate) {
        return Err(Error::InvalidRate(pilot_rate));
    }
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::InvalidRate(code_rate));
    }
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    let rm = constellation.bits_per_symbol() as f64;
    Ok(constellation.es() / (2.0 * ebn0 * code_rate * rm * (1.0 - pilot_rate)))
}

/// Inverse of [`ebn0_to_noise_variance`].
pub fn noise_variance_to_ebn0(
    sigma2: f64,
    constellation: &Constellation,
    code_rate: f64,
    pilot_rate: f64,
) -> f64 {
    let rm = constellation.bits_per_symbol() as f64;
    let ebn0 = constellation.es() / (2.0 * sigma2 * code_rate * rm * (1.0 - pilot_rate));
    10.0 * ebn0.log10()
}
