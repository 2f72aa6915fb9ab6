//! Comparison methods sharing the training engine: dense training, iterative
//! magnitude pruning with rewinding, uniformly random masks and one-shot
//! thresholding without denoising.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::denoise::{in_place, threshold_soft};
use crate::error::{GltError, PhaseContext, Result};
use crate::graph::normalize_adjacency;
use crate::masking::{init_soft_masks, kept_count, select_first_k, BinaryMasks, Mask};
use crate::nn::train_oneshot_phase;
use crate::real::Real;
use crate::rng::{stream, Stream};
use crate::session::{PhaseTimer, Session};
use crate::ticket::{InPlace, Method, TicketRun};

/// Trains the unpruned model from Θ₀; its training time is the reference
/// the other arms' search times are divided by.
pub fn run_dense<T: Real>(session: &Session<'_, T>) -> Result<TicketRun> {
    let mut timer = PhaseTimer::new();
    let masks = session.dense_masks();
    let verification = session.verify(&masks).phase("dense training")?;
    let seconds = timer.lap("train");
    let last = &verification.history[verification.history.len() - 1];
    Ok(TicketRun {
        method: Method::Dense,
        masks,
        in_place: InPlace {
            val_acc: last.val_acc,
            test_acc: last.test_acc,
        },
        verification,
        phases: timer.finish(),
        search_seconds: seconds,
        search_epochs: session.train_epochs(),
        swaps: Vec::new(),
        mask_history: Vec::new(),
    })
}

/// Per-round prune fractions of iterative magnitude pruning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpConfig {
    pub p_g: f64,
    pub p_theta: f64,
}

impl ImpConfig {
    pub fn new(p_g: f64, p_theta: f64) -> Result<Self> {
        for p in [p_g, p_theta] {
            if !(0.0..1.0).contains(&p) {
                return Err(GltError::InvalidArgument(format!(
                    "prune fraction {p} outside [0, 1)"
                )));
            }
        }
        if p_g == 0.0 && p_theta == 0.0 {
            return Err(GltError::InvalidArgument(
                "at least one of p_g, p_theta must be positive".into(),
            ));
        }
        Ok(ImpConfig { p_g, p_theta })
    }
}

/// Smallest `k` with `1 - (1 - p)^k >= target`.
pub fn imp_rounds(p: f64, target: f64) -> Result<usize> {
    if target <= 0.0 {
        return Ok(0);
    }
    if p <= 0.0 {
        return Err(GltError::InvalidArgument(format!(
            "target sparsity {target} is unreachable with a zero prune fraction"
        )));
    }
    let mut k = 0;
    let mut kept = 1.0;
    while 1.0 - kept < target - 1e-12 {
        kept *= 1.0 - p;
        k += 1;
    }
    Ok(k)
}

/// Sparsity levels one mask type must pass through, ending at the target.
/// A round never prunes past the next level, so each level is hit exactly.
fn next_kept(kept: usize, size: usize, p: f64, levels: &[f64]) -> usize {
    let stepped = kept_count(kept, p);
    levels
        .iter()
        .map(|&s| kept_count(size, s))
        .find(|&k| k < kept)
        .map_or(kept, |floor| stepped.max(floor))
}

/// Keeps the `k` currently kept entries of largest `|score|`, lower index on ties.
fn prune_kept(mask: &Mask, scores: &[f64], k: usize) -> Mask {
    let kept = select_first_k(mask.iter_ones().collect(), k, |&a, &b| {
        scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b))
    });
    Mask::from_kept(mask.len(), kept)
}

fn check_target(s: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s) {
        return Err(GltError::InvalidArgument(format!(
            "target sparsity {s} outside [0, 1)"
        )));
    }
    Ok(())
}

/// IMP with per-type level lists. `graph_levels` and `weight_levels` must be
/// ascending; the last entry of each is that type's target.
pub fn run_imp_to_levels<T: Real>(
    session: &Session<'_, T>,
    cfg: &ImpConfig,
    graph_levels: &[f64],
    weight_levels: &[f64],
) -> Result<TicketRun> {
    for levels in [graph_levels, weight_levels] {
        levels.iter().try_for_each(|&s| check_target(s))?;
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(GltError::InvalidArgument("sparsity levels must ascend".into()));
        }
    }
    let g_target = graph_levels.last().copied().unwrap_or(0.0);
    let w_target = weight_levels.last().copied().unwrap_or(0.0);
    imp_rounds(cfg.p_g, g_target)?;
    imp_rounds(cfg.p_theta, w_target)?;

    let dataset = session.dataset();
    let shape = session.shape();
    let (num_edges, num_weights) = (dataset.num_edges(), shape.num_weights());
    let g_goal = kept_count(num_edges, g_target);
    let w_goal = kept_count(num_weights, w_target);

    let mut timer = PhaseTimer::new();
    let mut params = session.fresh_params();
    let mut soft = init_soft_masks::<T>(num_edges, shape, session.seed());
    let mut masks = session.dense_masks();
    let mut history = Vec::new();
    let mut rounds = 0;
    while masks.graph.count_ones() > g_goal || masks.weights.count_ones() > w_goal {
        rounds += 1;
        params.rewind();
        let adj = normalize_adjacency(dataset, &masks.graph)?;
        let trained = train_oneshot_phase(
            session.ctx(),
            &adj,
            &mut params,
            &mut soft,
            &masks,
            session.train_epochs(),
            session.opts(),
        )
        .phase("imp round")?;
        let g_next = next_kept(masks.graph.count_ones(), num_edges, cfg.p_g, graph_levels);
        let w_next = next_kept(masks.weights.count_ones(), num_weights, cfg.p_theta, weight_levels);
        let next = BinaryMasks {
            graph: prune_kept(&masks.graph, &trained.best_masks.graph_f64(), g_next),
            weights: prune_kept(&masks.weights, &trained.best_masks.flat_weights(), w_next),
        };
        if next == masks {
            return Err(GltError::Precondition(format!(
                "imp round {rounds} pruned nothing"
            )));
        }
        masks = next;
        history.push(masks.clone());
    }
    let in_place = in_place(session, &masks, &params, &soft).phase("imp round")?;
    let search_seconds = timer.lap("search");
    let verification = session.verify(&masks)?;
    timer.lap("verify");
    Ok(TicketRun {
        method: Method::Imp,
        masks,
        in_place,
        verification,
        phases: timer.finish(),
        search_seconds,
        search_epochs: rounds * session.train_epochs(),
        swaps: Vec::new(),
        mask_history: history,
    })
}

/// IMP to `(s_g, s_θ)`; the crossing round is clamped to land on the target.
pub fn run_imp<T: Real>(
    session: &Session<'_, T>,
    cfg: &ImpConfig,
    s_g: f64,
    s_theta: f64,
) -> Result<TicketRun> {
    run_imp_to_levels(session, cfg, &[s_g], &[s_theta])
}

/// Uniformly random masks holding exactly `⌈(1 - s)·n⌉` elements per type.
pub fn random_masks(num_edges: usize, num_weights: usize, s_g: f64, s_theta: f64, seed: u64) -> Result<BinaryMasks> {
    check_target(s_g)?;
    check_target(s_theta)?;
    let mut rng = stream(seed, Stream::RandomPrune);
    let mut draw = |n: usize, s: f64| Mask::from_kept(n, sample(&mut rng, n, kept_count(n, s)));
    Ok(BinaryMasks {
        graph: draw(num_edges, s_g),
        weights: draw(num_weights, s_theta),
    })
}

pub fn run_random<T: Real>(session: &Session<'_, T>, s_g: f64, s_theta: f64) -> Result<TicketRun> {
    let mut timer = PhaseTimer::new();
    let masks = random_masks(
        session.dataset().num_edges(),
        session.shape().num_weights(),
        s_g,
        s_theta,
        session.seed(),
    )?;
    let search_seconds = timer.lap("search");
    let verification = session.verify(&masks)?;
    timer.lap("verify");
    let last = verification.history[verification.history.len() - 1];
    Ok(TicketRun {
        method: Method::Random,
        masks,
        in_place: InPlace {
            val_acc: last.val_acc,
            test_acc: last.test_acc,
        },
        verification,
        phases: timer.finish(),
        search_seconds,
        search_epochs: 0,
        swaps: Vec::new(),
        mask_history: Vec::new(),
    })
}

/// The one-shot co-training phase thresholded straight to the targets.
pub fn run_oneshot_only<T: Real>(
    session: &Session<'_, T>,
    epochs: usize,
    s_g: f64,
    s_theta: f64,
) -> Result<TicketRun> {
    check_target(s_g)?;
    check_target(s_theta)?;
    let shape = session.shape();
    let num_edges = session.dataset().num_edges();
    let mut timer = PhaseTimer::new();
    let mut params = session.fresh_params();
    let mut soft = init_soft_masks::<T>(num_edges, shape, session.seed());
    let dense = session.dense_masks();
    let adj = normalize_adjacency(session.dataset(), &dense.graph)?;
    let trained = train_oneshot_phase(
        session.ctx(),
        &adj,
        &mut params,
        &mut soft,
        &dense,
        epochs,
        session.opts(),
    )
    .phase("one-shot phase")?;
    let masks = threshold_soft(&trained.best_masks, s_g, s_theta).phase("one-shot thresholding")?;
    let in_place = in_place(session, &masks, &params, &soft).phase("one-shot phase")?;
    let search_seconds = timer.lap("search");
    let verification = session.verify(&masks)?;
    timer.lap("verify");
    Ok(TicketRun {
        method: Method::Oneshot,
        masks,
        in_place,
        verification,
        phases: timer.finish(),
        search_seconds,
        search_epochs: epochs,
        swaps: Vec::new(),
        mask_history: Vec::new(),
    })
}

/// Graph masks from a single one-shot phase, thresholded at each level with
/// every weight kept.
pub fn oneshot_graph_masks<T: Real>(
    session: &Session<'_, T>,
    epochs: usize,
    levels: &[f64],
) -> Result<Vec<(f64, Mask)>> {
    levels.iter().try_for_each(|&s| check_target(s))?;
    let num_edges = session.dataset().num_edges();
    let mut params = session.fresh_params();
    let mut soft = init_soft_masks::<T>(num_edges, session.shape(), session.seed());
    let dense = session.dense_masks();
    let adj = normalize_adjacency(session.dataset(), &dense.graph)?;
    let trained = train_oneshot_phase(
        session.ctx(),
        &adj,
        &mut params,
        &mut soft,
        &dense,
        epochs,
        session.opts(),
    )
    .phase("one-shot phase")?;
    let values = trained.best_masks.graph_f64();
    levels
        .iter()
        .map(|&s| Ok((s, crate::masking::one_shot_threshold(&values, s)?)))
        .collect()
}
