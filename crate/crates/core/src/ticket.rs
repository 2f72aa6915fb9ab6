use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::denoise::SwapRecord;
use crate::error::GltError;
use crate::masking::BinaryMasks;
use crate::nn::TrainOutcome;
use crate::session::PhaseTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Fastglt,
    Imp,
    Random,
    Oneshot,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Dense,
        Method::Fastglt,
        Method::Imp,
        Method::Random,
        Method::Oneshot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Fastglt => "fastglt",
            Method::Imp => "imp",
            Method::Random => "random",
            Method::Oneshot => "oneshot",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = GltError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                GltError::InvalidArgument(format!(
                    "unknown method {s:?} (expected dense, fastglt, imp, random or oneshot)"
                ))
            })
    }
}

/// Accuracy of the model as it stands when a search ends, before any retraining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InPlace {
    pub val_acc: f64,
    pub test_acc: f64,
}

/// Everything a method arm produces: the ticket, how it scores and what it cost.
#[derive(Debug, Clone)]
pub struct TicketRun {
    pub method: Method,
    pub masks: BinaryMasks,
    pub in_place: InPlace,
    /// Retraining from Θ₀ under `masks`.
    pub verification: TrainOutcome,
    pub phases: Vec<PhaseTime>,
    /// Seconds spent finding the masks, verification excluded. For the dense
    /// arm this is its training time.
    pub search_seconds: f64,
    /// Training epochs consumed by the search.
    pub search_epochs: usize,
    /// Denoising swaps, one per interval (FastGLT only).
    pub swaps: Vec<SwapRecord>,
    /// Intermediate masks: the one-shot start for FastGLT, one entry per
    /// round for IMP.
    pub mask_history: Vec<BinaryMasks>,
}
