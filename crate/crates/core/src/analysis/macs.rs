use crate::error::{GltError, Result};
use crate::masking::BinaryMasks;
use crate::nn::GcnShape;

/// Inference MACs of the masked two-layer GCN.
///
/// Layer `l` costs `N·nnz(W_l)` for the feature transform plus
/// `nnz(Â)·d_out(l)` for aggregation, where `nnz(Â)` is twice the kept
/// undirected edges plus one self-loop per node. Activations and softmax are
/// not counted.
pub fn mac_count(num_nodes: usize, shape: GcnShape, masks: &BinaryMasks) -> Result<u64> {
    if masks.weights.len() != shape.num_weights() {
        return Err(GltError::Shape(format!(
            "weight mask of {} for a model with {} weights",
            masks.weights.len(),
            shape.num_weights()
        )));
    }
    let split = shape.layer_offset(1);
    let nnz_w0 = masks.weights.slice(0..split).count_ones() as u64;
    let nnz_w1 = masks.weights.slice(split..masks.weights.len()).count_ones() as u64;
    let n = num_nodes as u64;
    let nnz_adj = 2 * masks.graph.count_ones() as u64 + n;
    Ok(n * nnz_w0 + nnz_adj * shape.hidden as u64 + n * nnz_w1 + nnz_adj * shape.classes as u64)
}
