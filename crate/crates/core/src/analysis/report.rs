use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::nn::GcnShape;
use crate::session::PhaseTime;
use crate::ticket::{Method, TicketRun};

use super::macs::mac_count;

pub const SCHEMA_VERSION: u32 = 1;

/// Run metadata that lives outside the algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub dataset: String,
    pub seed: u64,
    pub config_digest: String,
    pub precision: String,
    pub threads: usize,
}

/// Wall-clock fields, the only part of a report outside the determinism contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phases: Vec<PhaseTime>,
    pub search_seconds: f64,
    pub total_seconds: f64,
    /// Search time over the dense arm's training time, when a dense arm ran.
    pub relative_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketReport {
    pub schema_version: u32,
    pub method: Method,
    #[serde(flatten)]
    pub info: RunInfo,
    pub s_g: f64,
    pub s_theta: f64,
    pub kept_edges: usize,
    pub total_edges: usize,
    pub kept_weights: usize,
    pub total_weights: usize,
    /// Test accuracy of the searched model before retraining.
    pub in_place_test_acc: f64,
    /// Test accuracy after retraining from Θ₀, at the best validation epoch.
    pub retrained_test_acc: f64,
    pub retrained_val_acc: f64,
    pub retrained_best_epoch: usize,
    pub macs: u64,
    pub search_epochs: usize,
    pub swap_intervals: usize,
    pub timing: Timing,
}

impl TicketReport {
    pub fn from_run(run: &TicketRun, num_nodes: usize, shape: GcnShape, info: RunInfo) -> Result<Self> {
        let masks = &run.masks;
        Ok(TicketReport {
            schema_version: SCHEMA_VERSION,
            method: run.method,
            info,
            s_g: masks.graph_sparsity(),
            s_theta: masks.weight_sparsity(),
            kept_edges: masks.graph.count_ones(),
            total_edges: masks.graph.len(),
            kept_weights: masks.weights.count_ones(),
            total_weights: masks.weights.len(),
            in_place_test_acc: run.in_place.test_acc,
            retrained_test_acc: run.verification.test_acc,
            retrained_val_acc: run.verification.best_val_acc,
            retrained_best_epoch: run.verification.best_epoch,
            macs: mac_count(num_nodes, shape, masks)?,
            search_epochs: run.search_epochs,
            swap_intervals: run.swaps.len(),
            timing: Timing {
                search_seconds: run.search_seconds,
                total_seconds: run.phases.iter().map(|p| p.seconds).sum(),
                phases: run.phases.clone(),
                relative_time: None,
            },
        })
    }

    /// Sets the relative time against the dense arm's training time.
    pub fn relate_to(&mut self, dense_seconds: f64) -> Result<()> {
        if dense_seconds.is_nan() || dense_seconds <= 0.0 {
            return Err(GltError::InvalidArgument(format!(
                "dense baseline time {dense_seconds} must be positive"
            )));
        }
        self.timing.relative_time = Some(self.timing.search_seconds / dense_seconds);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall-clock fields removed, for determinism checks.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| GltError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GltError::io(path, e))?;
        let report: TicketReport = serde_json::from_str(&text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(GltError::InvalidArgument(format!(
                "{}: schema_version {} (expected {SCHEMA_VERSION})",
                path.display(),
                report.schema_version
            )));
        }
        Ok(report)
    }
}
