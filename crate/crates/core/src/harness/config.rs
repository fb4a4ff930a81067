//! Simulation configuration, deserializable from TOML.

use serde::{Deserialize, Serialize};

use crate::coding::CodeDefinition;
use crate::error::{Error, Result};
use crate::model::PilotPlacement;
use crate::receiver_bps::BpsConfig;

/// Which receiver processes the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    /// Iterative factor-graph/sum-product receiver.
    Fg,
    /// Iterative variational-Bayes receiver.
    Vb,
    /// Blind phase search with Euclidean-distance detection.
    Bps,
    /// Genie-phase benchmark: exact phase compensation, no pilots needed.
    Ideal,
}

impl ReceiverKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::Fg => "fg",
            ReceiverKind::Vb => "vb",
            ReceiverKind::Bps => "bps",
            ReceiverKind::Ideal => "ideal",
        }
    }
}

/// Full description of one coded Monte Carlo sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Number of parallel channels D.
    pub channels: usize,
    /// QAM order: 4, 16, 64, or 256.
    pub constellation_order: usize,
    /// Target pilot rate Rp; 0 disables pilots.
    pub pilot_rate: f64,
    /// Code id: `hamming74`, `peg1008`, `rate1:<n>`, or a path to an alist.
    pub code: String,
    /// Laser linewidth times symbol duration.
    pub linewidth_symbol_product: f64,
    /// Per-channel drift variance as a fraction of the laser variance.
    #[serde(default = "defaults::drift_ratio")]
    pub drift_ratio: f64,
    /// SNR-per-information-bit grid, dB.
    pub ebn0_db: Vec<f64>,
    pub receiver: ReceiverKind,
    /// Outer (phase compensation + full decode) rounds for fg/vb.
    #[serde(default = "defaults::outer_iterations")]
    pub outer_iterations: usize,
    /// Detector self-iterations (likelihoods fed back in place of decoder
    /// PMFs) before the first decode. The first pass is effectively
    /// uncoded, which is exactly the regime the self-iteration schedule
    /// targets; two rounds of data-directed tracking pull the pilot-only
    /// phase estimate close enough for the first decode to engage.
    #[serde(default = "defaults::bootstrap_self_iterations")]
    pub bootstrap_self_iterations: usize,
    /// Decoder iterations per outer round.
    #[serde(default = "defaults::decoder_iterations")]
    pub decoder_iterations: usize,
    /// Stop a point after this many frame errors.
    pub min_frame_errors: u64,
    /// Hard cap on frames per point.
    pub max_frames: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Joint processing of all channels; `false` drops the off-diagonal
    /// covariance and smooths each channel independently.
    #[serde(default = "defaults::joint")]
    pub joint: bool,
    /// Pilot period/stagger override; derived from `pilot_rate` if absent.
    #[serde(default)]
    pub pilot_placement: Option<PilotPlacement>,
    /// BPS parameters; format-dependent defaults if absent.
    #[serde(default)]
    pub bps: Option<BpsConfig>,
}

mod defaults {
    pub fn drift_ratio() -> f64 {
        1e-3
    }
    pub fn outer_iterations() -> usize {
        2
    }
    pub fn decoder_iterations() -> usize {
        50
    }
    pub fn joint() -> bool {
        true
    }
    pub fn bootstrap_self_iterations() -> usize {
        2
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::InvalidConfig("channels must be positive".into()));
        }
        if !matches!(self.constellation_order, 4 | 16 | 64 | 256) {
            return Err(Error::UnsupportedOrder(self.constellation_order));
        }
        if !(0.0..1.0).contains(&self.pilot_rate) {
            return Err(Error::InvalidRate(self.pilot_rate));
        }
        if self.ebn0_db.is_empty() {
            return Err(Error::InvalidConfig("ebn0_db list is empty".into()));
        }
        if self.linewidth_symbol_product < 0.0 || self.drift_ratio < 0.0 {
            return Err(Error::InvalidConfig(
                "linewidth and drift ratio must be nonnegative".into(),
            ));
        }
        if self.outer_iterations == 0 || self.decoder_iterations == 0 {
            return Err(Error::InvalidConfig("iteration counts must be positive".into()));
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(Error::InvalidConfig(
                "min_frame_errors and max_frames must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Resolves the code id: embedded fixtures by name, `rate1:<n>` for the
    /// pass-through code, anything else as an alist path.
    pub fn load_code(&self) -> Result<CodeDefinition> {
        match self.code.as_str() {
            "hamming74" => Ok(CodeDefinition::hamming_7_4()),
            "peg1008" => Ok(CodeDefinition::peg_1008()),
            other => {
                if let Some(n) = other.strip_prefix("rate1:") {
                    let n: usize = n.parse().map_err(|_| {
                        Error::InvalidConfig(format!("bad rate1 length in code id {other:?}"))
                    })?;
                    Ok(CodeDefinition::rate_one(n))
                } else {
                    CodeDefinition::from_alist_file(std::path::Path::new(other))
                }
            }
        }
    }

    /// BPS settings: explicit override or format defaults.
    pub fn bps_config(&self) -> BpsConfig {
        self.bps
            .unwrap_or_else(|| BpsConfig::for_order(self.constellation_order))
    }

    /// Receiver label used in CSV output; per-channel processing is marked.
    pub fn receiver_label(&self) -> String {
        if self.joint {
            self.receiver.name().to_string()
        } else {
            format!("{}-perchannel", self.receiver.name())
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}
