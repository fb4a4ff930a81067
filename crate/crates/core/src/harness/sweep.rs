//! Monte Carlo BER sweeps and the sweep CSV format.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::make_qam;

use super::config::SimConfig;
use super::trial::{run_coded_trial, TrialOutcome, TrialSetup};

/// Trials dispatched per parallel batch. Fixed so that the set of trials
/// folded into the totals is independent of thread count.
const BATCH: u64 = 64;

/// Accumulated results at one Eb/N0 point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    /// Normal-approximation half-width `1.96 sqrt(BER / bits)`.
    pub ber_ci: f64,
    pub seconds: f64,
    /// Set when `max_frames` was reached before `min_frame_errors`.
    pub hit_max_frames: bool,
}

/// Fixed CSV header for sweep results.
pub const SWEEP_CSV_HEADER: &str =
    "ebn0_db,receiver,outer_iters,frames,bit_errors,frame_errors,ber,ber_ci,seconds";

/// Whether the `seconds` column carries wall time. The default elsewhere is
/// [`TimingMode::Deterministic`], which writes zeros so that rerunning the
/// same seed yields byte-identical files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Deterministic,
    Measured,
}

/// Runs every Eb/N0 point of the config. Trials are dispatched in fixed
/// batches across the thread pool and folded in trial order, so the result
/// is a pure function of `(config, master_seed)` regardless of `threads`.
/// `on_point` fires as each point completes (progress and partial output).
pub fn run_sweep(
    config: &SimConfig,
    threads: usize,
    mut on_point: impl FnMut(&SweepPoint),
) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let constellation = make_qam(config.constellation_order, 1.0)?;
    let code_rate = config.load_code()?.rate();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let mut points = Vec::with_capacity(config.ebn0_db.len());
    for (point_idx, &ebn0_db) in config.ebn0_db.iter().enumerate() {
        let sigma2 =
            super::ebn0_to_noise_variance(ebn0_db, &constellation, code_rate, config.pilot_rate)?;
        let setup = TrialSetup::from_config(config, sigma2)?;
        let start = Instant::now();

        let mut frames = 0u64;
        let mut bit_errors = 0u64;
        let mut frame_errors = 0u64;
        let mut reached_min = false;
        while !reached_min && frames < config.max_frames {
            let batch = BATCH.min(config.max_frames - frames);
            let outcomes: Vec<TrialOutcome> = pool.install(|| {
                (frames..frames + batch)
                    .into_par_iter()
                    .map(|t| run_coded_trial(&setup, stream_for(point_idx, t)))
                    .collect::<Result<Vec<_>>>()
            })?;
            for out in outcomes {
                frames += 1;
                bit_errors += out.info_bit_errors;
                frame_errors += u64::from(out.frame_error);
                if frame_errors >= config.min_frame_errors {
                    reached_min = true;
                    break;
                }
            }
        }

        let total_bits = frames * setup.info_bits_per_frame();
        let ber = bit_errors as f64 / total_bits as f64;
        let point = SweepPoint {
            ebn0_db,
            frames,
            bit_errors,
            frame_errors,
            ber,
            ber_ci: 1.96 * (ber / total_bits as f64).sqrt(),
            seconds: start.elapsed().as_secs_f64(),
            hit_max_frames: !reached_min,
        };
        on_point(&point);
        points.push(point);
    }
    Ok(points)
}

/// Per-trial RNG stream: unique across (point, trial) pairs.
fn stream_for(point_idx: usize, trial: u64) -> u64 {
    ((point_idx as u64) << 40) | trial
}

/// Writes the sweep CSV. `TimingMode::Deterministic` zeroes the seconds
/// column so identical runs produce identical bytes.
pub fn write_sweep_csv<W: Write>(
    mut w: W,
    config: &SimConfig,
    points: &[SweepPoint],
    timing: TimingMode,
) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{}", sweep_csv_row(config, p, timing))?;
    }
    Ok(())
}

/// One CSV row matching [`SWEEP_CSV_HEADER`].
pub fn sweep_csv_row(config: &SimConfig, p: &SweepPoint, timing: TimingMode) -> String {
    let seconds = match timing {
        TimingMode::Deterministic => "0.000".to_string(),
        TimingMode::Measured => format!("{:.3}", p.seconds),
    };
    format!(
        "{},{},{},{},{},{},{:e},{:e},{}",
        p.ebn0_db,
        config.receiver_label(),
        config.outer_iterations,
        p.frames,
        p.bit_errors,
        p.frame_errors,
        p.ber,
        p.ber_ci,
        seconds
    )
}
