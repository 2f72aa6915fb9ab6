use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::graph::{NormAdj, Split};
use crate::masking::{BinaryMasks, SoftMasks};
use crate::real::Real;
use crate::rng::{stream, Stream};

use super::model::{
    accuracy, backward, gcn_forward, gcn_forward_dropout, masked_loss, Dropout, ForwardCache,
    GcnInputs,
};
use super::{AdamConfig, AdamState, GcnParams, GcnShape, Gradients, GraphContext};

/// Which tensors an optimizer step touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trainable {
    pub theta: bool,
    pub weight_mask: bool,
    pub graph_mask: bool,
}

impl Trainable {
    pub const WEIGHTS: Trainable = Trainable {
        theta: true,
        weight_mask: false,
        graph_mask: false,
    };
    pub const ALL: Trainable = Trainable {
        theta: true,
        weight_mask: true,
        graph_mask: true,
    };
    pub const WEIGHTS_AND_GRAPH: Trainable = Trainable {
        theta: true,
        weight_mask: false,
        graph_mask: true,
    };
}

/// Adam states for every trainable tensor of one session.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    cfg: AdamConfig,
    trainable: Trainable,
    shape: GcnShape,
    theta: [AdamState<T>; 2],
    weight_mask: [AdamState<T>; 2],
    graph_mask: AdamState<T>,
    dropout: Option<(f64, ChaCha8Rng)>,
}

impl<T: Real> Trainer<T> {
    pub fn new(cfg: AdamConfig, trainable: Trainable, shape: GcnShape, num_edges: usize) -> Self {
        let layer = |l: usize| {
            let (r, c) = shape.layer_dims(l);
            AdamState::new(r * c)
        };
        Trainer {
            cfg,
            trainable,
            shape,
            theta: [layer(0), layer(1)],
            weight_mask: [layer(0), layer(1)],
            graph_mask: AdamState::new(num_edges),
            dropout: None,
        }
    }

    /// Enables dropout on input features and hidden units during training steps.
    pub fn with_dropout(mut self, rate: f64, seed: u64) -> Self {
        self.dropout = (rate > 0.0).then(|| (rate, stream(seed, Stream::Dropout)));
        self
    }

    /// Forward pass plus gradients of the training loss.
    pub fn compute(
        &mut self,
        ctx: &GraphContext<T>,
        adj: &NormAdj,
        inputs: GcnInputs<'_, T>,
    ) -> Result<(ForwardCache<T>, Gradients<T>)> {
        let cache = match &mut self.dropout {
            Some((rate, rng)) => {
                let pattern = Dropout::draw(ctx, self.shape.hidden, *rate, rng)?;
                gcn_forward_dropout(ctx, adj, inputs, pattern)?
            }
            None => gcn_forward(ctx, adj, inputs)?,
        };
        let grads = backward(&cache, ctx, adj, inputs, ctx.split(Split::Train))?;
        Ok((cache, grads))
    }

    /// Metrics of the state `train_cache` was computed from. Without dropout
    /// the training forward pass doubles as the evaluation pass.
    pub fn record(
        &self,
        epoch: usize,
        train_cache: &ForwardCache<T>,
        ctx: &GraphContext<T>,
        adj: &NormAdj,
        inputs: GcnInputs<'_, T>,
    ) -> Result<EpochRecord> {
        if self.dropout.is_some() {
            record(ctx, epoch, &gcn_forward(ctx, adj, inputs)?)
        } else {
            record(ctx, epoch, train_cache)
        }
    }

    /// Applies one optimizer step; only entries kept by `binary` move.
    pub fn apply(
        &mut self,
        grads: &Gradients<T>,
        params: &mut GcnParams<T>,
        soft: &mut SoftMasks<T>,
        binary: &BinaryMasks,
    ) -> Result<()> {
        for l in 0..2 {
            let offset = self.shape.layer_offset(l);
            let active = Some((&binary.weights, offset));
            if self.trainable.theta {
                self.theta[l].step(
                    &self.cfg,
                    params.theta_mut()[l].as_mut_slice(),
                    grads.theta[l].as_slice(),
                    active,
                    if l == 0 { "layer 0 weights" } else { "layer 1 weights" },
                )?;
            }
            if self.trainable.weight_mask {
                self.weight_mask[l].step(
                    &self.cfg,
                    soft.weights[l].as_mut_slice(),
                    grads.weight_mask[l].as_slice(),
                    active,
                    if l == 0 { "layer 0 weight mask" } else { "layer 1 weight mask" },
                )?;
            }
        }
        if self.trainable.graph_mask {
            self.graph_mask.step(
                &self.cfg,
                &mut soft.graph,
                &grads.graph_mask,
                Some((&binary.graph, 0)),
                "graph mask",
            )?;
        }
        if !params.is_finite() || !soft.is_finite() {
            return Err(GltError::NonFinite("parameters after optimizer step".into()));
        }
        Ok(())
    }

    /// Forgets the optimizer history of a weight entry (flat mask index).
    pub fn reset_weight_entry(&mut self, flat: usize) {
        let split = self.shape.layer_offset(1);
        if flat < split {
            self.theta[0].reset_entry(flat);
            self.weight_mask[0].reset_entry(flat);
        } else {
            self.theta[1].reset_entry(flat - split);
            self.weight_mask[1].reset_entry(flat - split);
        }
    }

    pub fn reset_graph_entry(&mut self, edge: usize) {
        self.graph_mask.reset_entry(edge);
    }
}

/// Optimizer and regularization settings shared by every training loop.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepOptions {
    pub adam: AdamConfig,
    pub dropout: f64,
    /// Seeds the dropout stream.
    pub seed: u64,
}

/// Metrics of the state reached after `epoch` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

pub(crate) fn record<T: Real>(
    ctx: &GraphContext<T>,
    epoch: usize,
    cache: &ForwardCache<T>,
) -> Result<EpochRecord> {
    let logits = cache.logits();
    Ok(EpochRecord {
        epoch,
        train_loss: masked_loss(logits, ctx.labels(), ctx.split(Split::Train))?.as_f64(),
        val_acc: accuracy(logits, ctx.labels(), ctx.split(Split::Val))?,
        test_acc: accuracy(logits, ctx.labels(), ctx.split(Split::Test))?,
    })
}

/// Index into `history` of the highest validation accuracy, earliest on ties.
pub fn best_epoch(history: &[EpochRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in history.iter().enumerate() {
        if best.is_none_or(|b| r.val_acc > history[b].val_acc) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Test accuracy at the best validation epoch.
    pub test_acc: f64,
    pub final_test_acc: f64,
}

impl TrainOutcome {
    pub(crate) fn from_history(history: Vec<EpochRecord>) -> Result<Self> {
        let b = best_epoch(&history)
            .ok_or_else(|| GltError::InvalidArgument("training needs at least one epoch".into()))?;
        let best = history[b];
        let last = history[history.len() - 1];
        Ok(TrainOutcome {
            best_epoch: best.epoch,
            best_val_acc: best.val_acc,
            test_acc: best.test_acc,
            final_test_acc: last.test_acc,
            history,
        })
    }
}

/// Trains Θ for `epochs` full-batch steps under fixed masks.
pub fn train_weights<T: Real>(
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    params: &mut GcnParams<T>,
    soft: &SoftMasks<T>,
    binary: &BinaryMasks,
    epochs: usize,
    opts: &StepOptions,
) -> Result<TrainOutcome> {
    if epochs == 0 {
        return Err(GltError::InvalidArgument("training needs at least one epoch".into()));
    }
    let mut trainer = Trainer::new(opts.adam, Trainable::WEIGHTS, params.shape(), ctx.num_edges())
        .with_dropout(opts.dropout, opts.seed);
    let mut soft = soft.clone();
    let mut history = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let inputs = GcnInputs {
            params,
            soft: &soft,
            binary,
        };
        let (cache, grads) = trainer.compute(ctx, adj, inputs)?;
        if epoch > 1 {
            history.push(trainer.record(epoch - 1, &cache, ctx, adj, inputs)?);
        }
        trainer.apply(&grads, params, &mut soft, binary)?;
    }
    let inputs = GcnInputs {
        params,
        soft: &soft,
        binary,
    };
    history.push(record(ctx, epochs, &gcn_forward(ctx, adj, inputs)?)?);
    TrainOutcome::from_history(history)
}

#[derive(Debug, Clone)]
pub struct OneShotOutcome<T> {
    /// Soft masks snapshotted at the best validation epoch.
    pub best_masks: SoftMasks<T>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub history: Vec<EpochRecord>,
}

/// Co-trains Θ, m_θ and m_g for `epochs` steps and keeps the soft masks of
/// the epoch with the best validation accuracy (earliest on ties).
pub fn train_oneshot_phase<T: Real>(
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    params: &mut GcnParams<T>,
    soft: &mut SoftMasks<T>,
    binary: &BinaryMasks,
    epochs: usize,
    opts: &StepOptions,
) -> Result<OneShotOutcome<T>> {
    if epochs == 0 {
        return Err(GltError::InvalidArgument(
            "one-shot phase needs at least one epoch".into(),
        ));
    }
    let mut trainer = Trainer::new(opts.adam, Trainable::ALL, params.shape(), ctx.num_edges())
        .with_dropout(opts.dropout, opts.seed);
    let mut history: Vec<EpochRecord> = Vec::with_capacity(epochs);
    let mut best: Option<(EpochRecord, SoftMasks<T>)> = None;
    let mut consider = |rec: EpochRecord, soft: &SoftMasks<T>| {
        if best.as_ref().is_none_or(|(b, _)| rec.val_acc > b.val_acc) {
            best = Some((rec, soft.clone()));
        }
        history.push(rec);
    };
    for epoch in 1..=epochs {
        let inputs = GcnInputs {
            params,
            soft,
            binary,
        };
        let (cache, grads) = trainer.compute(ctx, adj, inputs)?;
        if epoch > 1 {
            consider(trainer.record(epoch - 1, &cache, ctx, adj, inputs)?, soft);
        }
        trainer.apply(&grads, params, soft, binary)?;
    }
    let inputs = GcnInputs {
        params,
        soft,
        binary,
    };
    let last = record(ctx, epochs, &gcn_forward(ctx, adj, inputs)?)?;
    consider(last, soft);
    let (rec, best_masks) = best.expect("at least one epoch recorded");
    Ok(OneShotOutcome {
        best_masks,
        best_epoch: rec.epoch,
        best_val_acc: rec.val_acc,
        history,
    })
}
