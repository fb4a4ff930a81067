//! Bit-LLR computation from symbol likelihoods and the reverse product-form
//! PMF construction, plus the extrinsic/a-posteriori bookkeeping.

use crate::error::{Error, Result};
use crate::model::{Constellation, PilotGrid};
use crate::pmf::SymbolPmf;

/// Clamp applied to every bit LLR handed to or produced for the decoder
/// interface; keeps the product form finite without affecting decisions.
pub const LLR_CLAMP: f64 = 50.0;

/// Which decoder output feeds back into the phase-compensation stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlrMode {
    /// `L(c|r) - L(c)`: the decoder's extrinsic information (FG-PNC).
    Extrinsic,
    /// `L(c|r)` as-is (VB-PNC).
    Aposteriori,
}

/// Per-channel coded-bit LLRs around one decoder invocation.
#[derive(Debug, Clone)]
pub struct LlrFrame {
    prior: Vec<f64>,
    posterior: Vec<f64>,
}

impl LlrFrame {
    pub fn new(prior: Vec<f64>, posterior: Vec<f64>) -> Result<Self> {
        if prior.len() != posterior.len() {
            return Err(Error::LengthMismatch {
                expected: prior.len(),
                got: posterior.len(),
            });
        }
        Ok(Self { prior, posterior })
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    /// Extrinsic LLRs, exactly `posterior - prior` per bit.
    pub fn extrinsic(&self) -> Vec<f64> {
        self.posterior
            .iter()
            .zip(&self.prior)
            .map(|(&post, &pri)| post - pri)
            .collect()
    }

    pub fn select(&self, mode: LlrMode) -> Vec<f64> {
        match mode {
            LlrMode::Extrinsic => self.extrinsic(),
            LlrMode::Aposteriori => self.posterior.clone(),
        }
    }
}

/// LLR of labeling bit `j` from per-point log-likelihoods, via max-shifted
/// bit-conditioned sums. Positive favors bit 0.
pub fn bit_llr_from_loglik(logliks: &[f64], constellation: &Constellation, j: usize) -> f64 {
    debug_assert_eq!(logliks.len(), constellation.size());
    let max = logliks.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut sum0 = 0.0f64;
    let mut sum1 = 0.0f64;
    for (idx, &l) in logliks.iter().enumerate() {
        let w = (l - max).exp();
        if constellation.bit(idx, j) == 0 {
            sum0 += w;
        } else {
            sum1 += w;
        }
    }
    (sum0.ln() - sum1.ln()).clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// Converts per-slot symbol PMFs into decoder-input bit LLRs, one vector
/// per channel, data slots in time order.
pub fn pmf_to_llr(
    pmf: &SymbolPmf,
    constellation: &Constellation,
    pilots: &PilotGrid,
) -> Result<Vec<Vec<f64>>> {
    pmf.validate_normalized(1e-6)?;
    let rm = constellation.bits_per_symbol();
    let mut out = Vec::with_capacity(pmf.channels());
    for i in 0..pmf.channels() {
        let slots = pilots.data_slots(i);
        let mut llrs = Vec::with_capacity(slots.len() * rm);
        for &k in &slots {
            let slot = pmf.slot(i, k);
            for j in 0..rm {
                let mut sum0 = 0.0f64;
                let mut sum1 = 0.0f64;
                for (idx, &p) in slot.iter().enumerate() {
                    if constellation.bit(idx, j) == 0 {
                        sum0 += p;
                    } else {
                        sum1 += p;
                    }
                }
                llrs.push((sum0.ln() - sum1.ln()).clamp(-LLR_CLAMP, LLR_CLAMP));
            }
        }
        out.push(llrs);
    }
    Ok(out)
}

/// Rebuilds per-slot symbol PMFs from coded-bit LLRs through the
/// bit-probability product over the labeling. Pilot slots come back
/// degenerate at the pilot point.
pub fn llr_to_symbol_pmf(
    frames: &[LlrFrame],
    constellation: &Constellation,
    pilots: &PilotGrid,
    mode: LlrMode,
) -> Result<SymbolPmf> {
    let (d, n) = (pilots.channels(), pilots.len());
    if frames.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: frames.len(),
        });
    }
    let rm = constellation.bits_per_symbol();
    let m = constellation.size();
    let mut pmf = SymbolPmf::zeros(d, n, m);
    for (i, frame) in frames.iter().enumerate() {
        let slots = pilots.data_slots(i);
        let llrs = frame.select(mode);
        if llrs.len() != slots.len() * rm {
            return Err(Error::LengthMismatch {
                expected: slots.len() * rm,
                got: llrs.len(),
            });
        }
        for (t, &k) in slots.iter().enumerate() {
            // p0[j] = P(c_j = 0) from the clamped LLRs.
            let p0: Vec<f64> = (0..rm)
                .map(|j| {
                    let l = llrs[t * rm + j].clamp(-LLR_CLAMP, LLR_CLAMP);
                    1.0 / (1.0 + (-l).exp())
                })
                .collect();
            let slot = pmf.slot_mut(i, k);
            let mut sum = 0.0;
            for (idx, p) in slot.iter_mut().enumerate() {
                let mut prob = 1.0;
                for (j, &pj) in p0.iter().enumerate() {
                    prob *= if constellation.bit(idx, j) == 0 {
                        pj
                    } else {
                        1.0 - pj
                    };
                }
                *p = prob;
                sum += prob;
            }
            for p in slot.iter_mut() {
                *p /= sum;
            }
        }
        for k in 0..n {
            if pilots.is_pilot(i, k) {
                pmf.set_slot_degenerate(i, k, pilots.point_index(i, k));
            }
        }
    }
    Ok(pmf)
}
