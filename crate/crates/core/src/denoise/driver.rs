use serde::{Deserialize, Serialize};

use crate::error::{GltError, PhaseContext, Result};
use crate::graph::{edge_degree_scores, normalize_adjacency, Split};
use crate::masking::{init_soft_masks, one_shot_threshold, BinaryMasks, Mask, SoftMasks, SparsityPlan};
use crate::nn::{
    accuracy, gcn_forward, train_oneshot_phase, GcnInputs, GcnParams, Gradients, Trainable, Trainer,
};
use crate::real::Real;
use crate::session::{PhaseTimer, Session};
use crate::ticket::{InPlace, Method, TicketRun};

use super::schedule::{denoise_ratio, interval_quotas, DenoiseSchedule, ShrinkPlan};
use super::select::{discover_potential, identify_noisy};
use super::update::{update_masks, SwapRecord};

/// Running sum of `|∂L/∂W_eff|` per weight entry over the current interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator {
    sums: Vec<f64>,
    epochs: usize,
}

impl GradientAccumulator {
    pub fn new(num_weights: usize) -> Self {
        GradientAccumulator {
            sums: vec![0.0; num_weights],
            epochs: 0,
        }
    }

    pub fn add<T: Real>(&mut self, grads: &Gradients<T>) {
        let flat = grads.theta_dense.iter().flat_map(|m| m.as_slice());
        for (s, g) in self.sums.iter_mut().zip(flat) {
            *s += g.as_f64().abs();
        }
        self.epochs += 1;
    }

    pub fn values(&self) -> &[f64] {
        &self.sums
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn reset(&mut self) {
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.epochs = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastGltConfig {
    /// Epochs of the one-shot co-training phase (E).
    pub oneshot_epochs: usize,
    pub schedule: DenoiseSchedule,
    pub plan: SparsityPlan,
}

pub(crate) fn threshold_soft<T: Real>(soft: &SoftMasks<T>, s_g: f64, s_theta: f64) -> Result<BinaryMasks> {
    Ok(BinaryMasks {
        graph: one_shot_threshold(&soft.graph_f64(), s_g)?,
        weights: one_shot_threshold(&soft.flat_weights(), s_theta)?,
    })
}

pub(crate) fn in_place<T: Real>(
    session: &Session<'_, T>,
    masks: &BinaryMasks,
    params: &GcnParams<T>,
    soft: &SoftMasks<T>,
) -> Result<InPlace> {
    let adj = normalize_adjacency(session.dataset(), &masks.graph)?;
    let inputs = GcnInputs {
        params,
        soft,
        binary: masks,
    };
    let ctx = session.ctx();
    let cache = gcn_forward(ctx, &adj, inputs)?;
    Ok(InPlace {
        val_acc: accuracy(cache.logits(), ctx.labels(), ctx.split(Split::Val))?,
        test_acc: accuracy(cache.logits(), ctx.labels(), ctx.split(Split::Test))?,
    })
}

fn check_swap(rec: &SwapRecord, n_net_graph: usize, n_net_weights: usize) -> Result<()> {
    for (what, swap, n_net) in [
        ("graph", &rec.graph, n_net_graph),
        ("weight", &rec.weights, n_net_weights),
    ] {
        if swap.net_removed() != n_net as isize {
            return Err(GltError::Precondition(format!(
                "interval {}: {what} mask shrank by {} instead of {n_net}",
                rec.interval,
                swap.net_removed()
            )));
        }
        if swap.removed.iter().any(|i| swap.regrown.binary_search(i).is_ok()) {
            return Err(GltError::Precondition(format!(
                "interval {}: {what} noisy and potential sets overlap",
                rec.interval
            )));
        }
    }
    Ok(())
}

/// The prune-and-regrow phase: trains Θ and m_g under fixed binary masks
/// and swaps noisy for potential elements whenever an interval closes.
struct Denoiser<'s, 'd, T> {
    session: &'s Session<'d, T>,
    schedule: DenoiseSchedule,
    graph_plan: ShrinkPlan,
    weight_plan: ShrinkPlan,
    trainer: Trainer<T>,
    acc: GradientAccumulator,
    swaps: Vec<SwapRecord>,
}

impl<T: Real> Denoiser<'_, '_, T> {
    fn run(
        mut self,
        params: &mut GcnParams<T>,
        soft: &mut SoftMasks<T>,
        mut masks: BinaryMasks,
    ) -> Result<(BinaryMasks, Vec<SwapRecord>)> {
        let dataset = self.session.dataset();
        let mut adj = normalize_adjacency(dataset, &masks.graph)?;
        for d in 1..=self.schedule.epochs {
            let inputs = GcnInputs {
                params,
                soft,
                binary: &masks,
            };
            let (_, grads) = self.trainer.compute(self.session.ctx(), &adj, inputs)?;
            self.acc.add(&grads);
            self.trainer.apply(&grads, params, soft, &masks)?;
            if self.schedule.closes_interval(d) {
                masks = self.swap(self.schedule.interval_of(d), params, soft, &masks)?;
                adj = normalize_adjacency(dataset, &masks.graph)?;
                self.acc.reset();
            }
        }
        Ok((masks, self.swaps))
    }

    fn swap(
        &mut self,
        mu: usize,
        params: &mut GcnParams<T>,
        soft: &mut SoftMasks<T>,
        masks: &BinaryMasks,
    ) -> Result<BinaryMasks> {
        let ratio = denoise_ratio(mu, &self.schedule)?;
        let quota = |mask: &Mask, n_net| {
            interval_quotas(mask.count_ones(), mask.count_zeros(), ratio, n_net)
        };
        let (g_net, w_net) = (self.graph_plan.n_net(mu), self.weight_plan.n_net(mu));
        let gq = quota(&masks.graph, g_net)?;
        let wq = quota(&masks.weights, w_net)?;

        let noisy = identify_noisy(masks, &soft.graph_f64(), &params.flat_theta(), gq, wq)?;
        let edge_scores = edge_degree_scores(self.session.dataset(), &masks.graph)?;
        let potential = discover_potential(masks, self.acc.values(), &edge_scores, gq, wq)?;
        let (next, rec) = update_masks(masks, &noisy, &potential, mu)?;
        check_swap(&rec, g_net, w_net)?;

        for &w in &potential.weights {
            params.set_flat(w, T::zero());
            self.trainer.reset_weight_entry(w);
        }
        if !potential.graph.is_empty() {
            let mut survivors = masks.graph.clone();
            for &e in &noisy.graph {
                survivors.set(e, false);
            }
            let count = survivors.count_ones();
            let mean = if count == 0 {
                T::one()
            } else {
                let sum: f64 = survivors.iter_ones().map(|e| soft.graph[e].as_f64()).sum();
                T::of(sum / count as f64)
            };
            for &e in &potential.graph {
                soft.graph[e] = mean;
                self.trainer.reset_graph_entry(e);
            }
        }
        self.swaps.push(rec);
        Ok(next)
    }
}

/// One-shot search to the intermediate sparsities, gradual denoising to the
/// targets, then retraining from Θ₀ under the final masks.
pub fn run_fastglt<T: Real>(session: &Session<'_, T>, cfg: &FastGltConfig) -> Result<TicketRun> {
    let shape = session.shape();
    let num_edges = session.dataset().num_edges();
    let plan = cfg.plan;
    let mut timer = PhaseTimer::new();

    let mut params = session.fresh_params();
    let mut soft = init_soft_masks::<T>(num_edges, shape, session.seed());
    let dense = session.dense_masks();
    let dense_adj = normalize_adjacency(session.dataset(), &dense.graph)?;
    let oneshot = train_oneshot_phase(
        session.ctx(),
        &dense_adj,
        &mut params,
        &mut soft,
        &dense,
        cfg.oneshot_epochs,
        session.opts(),
    )
    .phase("one-shot phase")?;
    let start_masks = threshold_soft(&oneshot.best_masks, plan.s_g_inm, plan.s_theta_inm)
        .phase("one-shot thresholding")?;
    let oneshot_secs = timer.lap("oneshot");

    // m_θ is frozen from here on: fold it into Θ.
    params.scale_by(&soft.weights);
    let ones = SoftMasks::<T>::ones(num_edges, shape);
    soft.weights = ones.weights;

    let intervals = cfg.schedule.num_intervals();
    let denoiser = Denoiser {
        session,
        schedule: cfg.schedule,
        graph_plan: ShrinkPlan::new(num_edges, plan.s_g_inm, plan.s_g_tgt, intervals)?,
        weight_plan: ShrinkPlan::new(shape.num_weights(), plan.s_theta_inm, plan.s_theta_tgt, intervals)?,
        trainer: Trainer::new(session.opts().adam, Trainable::WEIGHTS_AND_GRAPH, shape, num_edges)
            .with_dropout(session.opts().dropout, session.seed().wrapping_add(1)),
        acc: GradientAccumulator::new(shape.num_weights()),
        swaps: Vec::with_capacity(intervals),
    };
    let (masks, swaps) = denoiser
        .run(&mut params, &mut soft, start_masks.clone())
        .phase("denoising")?;
    let in_place = in_place(session, &masks, &params, &soft).phase("denoising")?;
    let denoise_secs = timer.lap("denoise");

    let verification = session.verify(&masks)?;
    timer.lap("verify");

    Ok(TicketRun {
        method: Method::Fastglt,
        masks,
        in_place,
        verification,
        phases: timer.finish(),
        search_seconds: oneshot_secs + denoise_secs,
        search_epochs: cfg.oneshot_epochs + cfg.schedule.epochs,
        swaps,
        mask_history: vec![start_masks],
    })
}
