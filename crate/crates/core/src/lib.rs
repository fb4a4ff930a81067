//! Joint-channel phase-noise compensation for coded multichannel optical
//! transmission.
//!
//! The library simulates transmission of LDPC-coded QAM frames over `D`
//! parallel channels impaired by spatially correlated laser phase noise
//! (a multidimensional Gaussian random walk) and AWGN, and implements the
//! receivers to undo it:
//!
//! * [`eks`] — a soft-input extended Kalman smoother estimating the joint
//!   phase posterior over all channels,
//! * [`receiver_fg`] — iterative factor-graph/sum-product detection with a
//!   closed-form Tikhonov-approximated symbol message (FG-PNC),
//! * [`receiver_vb`] — iterative variational-Bayes detection through the
//!   Gaussian characteristic function (VB-PNC),
//! * [`receiver_bps`] — the per-channel blind-phase-search baseline with
//!   Euclidean-distance detection (BPS-EDD),
//! * [`coding`] — LDPC encoding/decoding plus the PMF/LLR interfaces,
//! * [`harness`] — Monte Carlo BER sweeps, the linearization MSE study, and
//!   CSV emission (backing the `mcpnc` CLI),
//! * [`oracles`] — slow brute-force references (grid Bayesian smoother,
//!   quadrature messages) used to validate the fast paths.

pub mod channel;
pub mod coding;
pub mod eks;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod oracles;
pub mod pmf;
pub mod receiver_bps;
pub mod receiver_fg;
pub mod receiver_vb;

pub use error::{Error, Result};
pub use model::{ComplexGrid, Constellation, CovarianceSpec, PilotGrid};
pub use numerics::SymMatrix;
pub use pmf::SymbolPmf;

/// Complex sample type used throughout.
pub type Complex = num_complex::Complex<f64>;
