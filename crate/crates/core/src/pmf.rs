//! Per-slot symbol probability grids exchanged between the receivers and
//! the decoder interface.

use crate::error::{Error, Result};

/// Probability vectors over the constellation for every slot of a D x N
/// frame. Stored flat, slot-major.
#[derive(Debug, Clone)]
pub struct SymbolPmf {
    d: usize,
    n: usize,
    m: usize,
    probs: Vec<f64>,
}

impl SymbolPmf {
    /// Uniform PMF on every slot.
    pub fn uniform(d: usize, n: usize, m: usize) -> Self {
        Self {
            d,
            n,
            m,
            probs: vec![1.0 / m as f64; d * n * m],
        }
    }

    pub fn zeros(d: usize, n: usize, m: usize) -> Self {
        Self {
            d,
            n,
            m,
            probs: vec![0.0; d * n * m],
        }
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Constellation size.
    pub fn points(&self) -> usize {
        self.m
    }

    #[inline]
    fn base(&self, i: usize, k: usize) -> usize {
        (i * self.n + k) * self.m
    }

    pub fn slot(&self, i: usize, k: usize) -> &[f64] {
        let b = self.base(i, k);
        &self.probs[b..b + self.m]
    }

    pub fn slot_mut(&mut self, i: usize, k: usize) -> &mut [f64] {
        let b = self.base(i, k);
        &mut self.probs[b..b + self.m]
    }

    /// Overwrites a slot from log-domain scores: subtracts the maximum,
    /// exponentiates, and normalizes to sum one.
    pub fn set_slot_from_log(&mut self, i: usize, k: usize, log_scores: &[f64]) {
        debug_assert_eq!(log_scores.len(), self.m);
        let max = log_scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let slot = self.slot_mut(i, k);
        let mut sum = 0.0;
        for (p, &f) in slot.iter_mut().zip(log_scores) {
            *p = (f - max).exp();
            sum += *p;
        }
        for p in slot.iter_mut() {
            *p /= sum;
        }
    }

    /// Collapses a slot to a single point.
    pub fn set_slot_degenerate(&mut self, i: usize, k: usize, idx: usize) {
        let slot = self.slot_mut(i, k);
        slot.fill(0.0);
        slot[idx] = 1.0;
    }

    pub fn argmax(&self, i: usize, k: usize) -> usize {
        self.slot(i, k)
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(idx, _)| idx)
            .unwrap()
    }

    /// Checks that every slot sums to one within `tol`.
    pub fn validate_normalized(&self, tol: f64) -> Result<()> {
        for i in 0..self.d {
            for k in 0..self.n {
                let sum: f64 = self.slot(i, k).iter().sum();
                if (sum - 1.0).abs() > tol {
                    return Err(Error::UnnormalizedPmf {
                        channel: i,
                        time: k,
                        sum,
                    });
                }
            }
        }
        Ok(())
    }
}
