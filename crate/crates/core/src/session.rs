use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{GltError, PhaseContext, Result};
use crate::graph::{normalize_adjacency, Dataset};
use crate::masking::{BinaryMasks, SoftMasks};
use crate::nn::{train_weights, GcnParams, GcnShape, GraphContext, StepOptions, TrainOutcome};
use crate::real::Real;

/// One dataset, one Θ₀ and one set of training options, shared by every
/// method arm so accuracy differences come from the masks alone.
#[derive(Debug)]
pub struct Session<'d, T> {
    dataset: &'d Dataset,
    ctx: GraphContext<T>,
    init: GcnParams<T>,
    seed: u64,
    opts: StepOptions,
    train_epochs: usize,
}

impl<'d, T: Real> Session<'d, T> {
    pub fn new(
        dataset: &'d Dataset,
        hidden: usize,
        seed: u64,
        opts: StepOptions,
        train_epochs: usize,
    ) -> Result<Self> {
        if hidden == 0 || train_epochs == 0 {
            return Err(GltError::InvalidArgument(format!(
                "need hidden >= 1 and train_epochs >= 1, got {hidden} and {train_epochs}"
            )));
        }
        if !(0.0..1.0).contains(&opts.dropout) {
            return Err(GltError::InvalidArgument(format!(
                "dropout {} outside [0, 1)",
                opts.dropout
            )));
        }
        let shape = GcnShape::new(dataset.num_features(), hidden, dataset.num_classes());
        Ok(Session {
            dataset,
            ctx: GraphContext::new(dataset),
            init: GcnParams::glorot(shape, seed),
            seed,
            opts: StepOptions { seed, ..opts },
            train_epochs,
        })
    }

    pub fn dataset(&self) -> &'d Dataset {
        self.dataset
    }

    pub fn ctx(&self) -> &GraphContext<T> {
        &self.ctx
    }

    pub fn shape(&self) -> GcnShape {
        self.init.shape()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn opts(&self) -> &StepOptions {
        &self.opts
    }

    pub fn train_epochs(&self) -> usize {
        self.train_epochs
    }

    /// Parameters sitting at Θ₀.
    pub fn fresh_params(&self) -> GcnParams<T> {
        self.init.clone()
    }

    pub fn dense_masks(&self) -> BinaryMasks {
        BinaryMasks::dense(self.dataset.num_edges(), self.shape())
    }

    /// Trains from Θ₀ under `masks` with all soft masks at 1.
    pub fn verify(&self, masks: &BinaryMasks) -> Result<TrainOutcome> {
        let adj = normalize_adjacency(self.dataset, &masks.graph)?;
        let mut params = self.fresh_params();
        let soft = SoftMasks::ones(self.dataset.num_edges(), self.shape());
        train_weights(
            &self.ctx,
            &adj,
            &mut params,
            &soft,
            masks,
            self.train_epochs,
            &self.opts,
        )
        .phase("verification retrain")
    }
}

/// Wall-clock seconds spent in one named phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTime {
    pub name: String,
    pub seconds: f64,
}

/// Monotonic lap timer.
#[derive(Debug)]
pub struct PhaseTimer {
    last: Instant,
    phases: Vec<PhaseTime>,
}

impl Default for PhaseTimer {
    fn default() -> Self {
        Self::new()
    }
}

impl PhaseTimer {
    pub fn new() -> Self {
        PhaseTimer {
            last: Instant::now(),
            phases: Vec::new(),
        }
    }

    /// Closes the running phase under `name` and starts the next one.
    pub fn lap(&mut self, name: &str) -> f64 {
        let now = Instant::now();
        let seconds = now.duration_since(self.last).as_secs_f64();
        self.last = now;
        self.phases.push(PhaseTime {
            name: name.to_string(),
            seconds,
        });
        seconds
    }

    pub fn finish(self) -> Vec<PhaseTime> {
        self.phases
    }
}
