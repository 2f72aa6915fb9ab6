use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Splits};
use crate::error::{GltError, Result};
use crate::rng::{stream, Stream};

/// Planted-partition graph with one class per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub seed: u64,
    /// Scale of the per-class mean vectors; noise is always unit variance.
    #[serde(default = "default_mean_scale")]
    pub mean_scale: f64,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    #[serde(default = "default_val_frac")]
    pub val_frac: f64,
}

fn default_mean_scale() -> f64 {
    1.0
}
fn default_train_frac() -> f64 {
    0.2
}
fn default_val_frac() -> f64 {
    0.2
}

impl SbmSpec {
    pub fn new(
        blocks: usize,
        nodes_per_block: usize,
        p_in: f64,
        p_out: f64,
        feature_dim: usize,
        seed: u64,
    ) -> Self {
        SbmSpec {
            blocks,
            nodes_per_block,
            p_in,
            p_out,
            feature_dim,
            seed,
            mean_scale: default_mean_scale(),
            train_frac: default_train_frac(),
            val_frac: default_val_frac(),
        }
    }
}

pub fn generate_sbm(spec: &SbmSpec) -> Result<Dataset> {
    if spec.blocks == 0 || spec.nodes_per_block == 0 {
        return Err(GltError::InvalidArgument(
            "SBM needs at least one block and one node per block".into(),
        ));
    }
    if !(0.0 <= spec.p_out && spec.p_out <= spec.p_in && spec.p_in <= 1.0) {
        return Err(GltError::InvalidArgument(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
            spec.p_in, spec.p_out
        )));
    }
    if !(spec.train_frac >= 0.0 && spec.val_frac >= 0.0 && spec.train_frac + spec.val_frac <= 1.0)
    {
        return Err(GltError::InvalidArgument("split fractions exceed 1".into()));
    }
    let mut rng = stream(spec.seed, Stream::Sbm);
    let n = spec.blocks * spec.nodes_per_block;
    let labels: Vec<usize> = (0..n).map(|v| v / spec.nodes_per_block).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] {
                spec.p_in
            } else {
                spec.p_out
            };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }

    let means: Vec<Vec<f64>> = (0..spec.blocks)
        .map(|_| {
            (0..spec.feature_dim)
                .map(|_| spec.mean_scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>()
        })
        .collect();
    let mut features = Vec::with_capacity(n * spec.feature_dim);
    for &label in &labels {
        for mean in &means[label] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push((mean + noise) as f32);
        }
    }

    let mut splits = Splits::default();
    for block in 0..spec.blocks {
        let mut members: Vec<usize> =
            (block * spec.nodes_per_block..(block + 1) * spec.nodes_per_block).collect();
        members.shuffle(&mut rng);
        let m = members.len();
        let n_train = ((spec.train_frac * m as f64).round() as usize).clamp(1.min(m), m);
        let n_val = ((spec.val_frac * m as f64).round() as usize).min(m - n_train);
        splits.train.extend_from_slice(&members[..n_train]);
        splits.val.extend_from_slice(&members[n_train..n_train + n_val]);
        splits.test.extend_from_slice(&members[n_train + n_val..]);
    }
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();

    Dataset::new(
        format!("sbm-{}x{}-seed{}", spec.blocks, spec.nodes_per_block, spec.seed),
        n,
        spec.feature_dim,
        spec.blocks,
        edges,
        features,
        labels,
        splits,
    )
}
