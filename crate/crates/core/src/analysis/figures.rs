use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::graph::{hamming_distance, normalize_adjacency, Split};
use crate::masking::{BinaryMasks, Mask, SoftMasks};
use crate::nn::{backward, gcn_forward, GcnInputs};
use crate::real::Real;
use crate::session::Session;
use crate::ticket::Method;

use super::report::TicketReport;

/// Summary of one score distribution over a pruned set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedStats {
    pub method: String,
    pub quantity: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p20: f64,
    pub p30: f64,
    pub p40: f64,
    pub p60: f64,
    pub p70: f64,
    pub p80: f64,
    pub p90: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(method: &str, quantity: &str, mask: &Mask, scores: &[f64]) -> Result<PrunedStats> {
    if scores.len() != mask.len() {
        return Err(GltError::Shape(format!(
            "{} {quantity} scores for a {}-element mask",
            scores.len(),
            mask.len()
        )));
    }
    let mut values: Vec<f64> = mask.iter_zeros().map(|i| scores[i]).collect();
    if values.is_empty() {
        return Err(GltError::InvalidArgument(format!(
            "{method} pruned no {quantity} elements"
        )));
    }
    values.sort_by(f64::total_cmp);
    let q = |p| quantile(&values, p);
    Ok(PrunedStats {
        method: method.to_string(),
        quantity: quantity.to_string(),
        count: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: q(0.5),
        p10: q(0.1),
        p20: q(0.2),
        p30: q(0.3),
        p40: q(0.4),
        p60: q(0.6),
        p70: q(0.7),
        p80: q(0.8),
        p90: q(0.9),
    })
}

/// Distributions of weight-gradient magnitude over pruned weights and of edge
/// degree over pruned edges, for each named mask pair.
pub fn pruned_set_stats(
    arms: &[(&str, &BinaryMasks)],
    weight_grads: &[f64],
    edge_scores: &[f64],
) -> Result<Vec<PrunedStats>> {
    let mut out = Vec::with_capacity(2 * arms.len());
    for &(name, masks) in arms {
        out.push(summarize(name, "weight_grad", &masks.weights, weight_grads)?);
        out.push(summarize(name, "edge_degree", &masks.graph, edge_scores)?);
    }
    Ok(out)
}

/// `|∂L/∂W_eff|` of the training loss at Θ₀ on the full graph.
pub fn init_gradient_magnitudes<T: Real>(session: &Session<'_, T>) -> Result<Vec<f64>> {
    let masks = session.dense_masks();
    let adj = normalize_adjacency(session.dataset(), &masks.graph)?;
    let params = session.fresh_params();
    let soft = SoftMasks::ones(session.dataset().num_edges(), session.shape());
    let inputs = GcnInputs {
        params: &params,
        soft: &soft,
        binary: &masks,
    };
    let ctx = session.ctx();
    let cache = gcn_forward(ctx, &adj, inputs)?;
    let grads = backward(&cache, ctx, &adj, inputs, ctx.split(Split::Train))?;
    Ok(grads
        .theta_dense
        .iter()
        .flat_map(|m| m.as_slice().iter().map(|v| v.as_f64().abs()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub sparsity: f64,
    pub method: String,
    pub distance: f64,
}

/// Normalized Hamming distance of each method's mask to the reference mask at
/// every matched sparsity level. Masks at one level may differ in size by at
/// most one kept element.
pub fn distance_curve(
    reference: &[(f64, Mask)],
    methods: &[(&str, Vec<(f64, Mask)>)],
) -> Result<Vec<DistanceRow>> {
    let mut rows = Vec::new();
    for (name, masks) in methods {
        if masks.len() != reference.len() {
            return Err(GltError::Shape(format!(
                "{name} has {} levels, reference has {}",
                masks.len(),
                reference.len()
            )));
        }
        for ((level, mask), (ref_level, ref_mask)) in masks.iter().zip(reference) {
            let gap = mask.count_ones().abs_diff(ref_mask.count_ones());
            if (level - ref_level).abs() > 1e-9 || gap > 1 {
                return Err(GltError::InvalidArgument(format!(
                    "{name} at level {level}: {gap} kept elements away from the reference"
                )));
            }
            rows.push(DistanceRow {
                sparsity: *level,
                method: name.to_string(),
                distance: hamming_distance(mask, ref_mask)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub method: Method,
    pub s_g: f64,
    pub s_theta: f64,
    pub retrained_test_acc: f64,
    pub macs: u64,
    pub search_epochs: usize,
    pub search_seconds: f64,
    pub relative_time: f64,
}

/// Normalizes every arm's search time by the dense arm's training time.
pub fn timing_report(reports: &mut [TicketReport]) -> Result<Vec<EfficiencyRow>> {
    let dense = reports
        .iter()
        .find(|r| r.method == Method::Dense)
        .ok_or_else(|| GltError::InvalidArgument("timing report needs a dense baseline run".into()))?
        .timing
        .search_seconds;
    reports
        .iter_mut()
        .map(|r| {
            r.relate_to(dense)?;
            Ok(EfficiencyRow {
                method: r.method,
                s_g: r.s_g,
                s_theta: r.s_theta,
                retrained_test_acc: r.retrained_test_acc,
                macs: r.macs,
                search_epochs: r.search_epochs,
                search_seconds: r.timing.search_seconds,
                relative_time: r.timing.search_seconds / dense,
            })
        })
        .collect()
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| GltError::io(path, e))
}

pub fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(GltError::from)).collect()
}
