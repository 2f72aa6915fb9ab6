use rand::Rng;

use crate::error::{GltError, Result};
use crate::graph::{Dataset, NormAdj, Split, Splits};
use crate::linalg::{dot, Csr, Matrix};
use crate::masking::{BinaryMasks, SoftMasks};
use crate::real::Real;

use super::{GcnParams, GcnShape};

/// Node features and labels in engine precision.
#[derive(Debug, Clone)]
pub struct GraphContext<T> {
    x: Csr<T>,
    xt: Csr<T>,
    labels: Vec<usize>,
    splits: Splits,
    num_classes: usize,
    num_edges: usize,
}

impl<T: Real> GraphContext<T> {
    pub fn new(dataset: &Dataset) -> Self {
        let dense: Vec<T> = dataset.features().iter().map(|&v| T::of(v as f64)).collect();
        let x = Csr::from_dense_rows(dataset.num_nodes(), dataset.num_features(), &dense)
            .expect("dataset validated its feature length");
        GraphContext {
            xt: x.transpose(),
            x,
            labels: dataset.labels().to_vec(),
            splits: dataset.splits().clone(),
            num_classes: dataset.num_classes(),
            num_edges: dataset.num_edges(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.x.rows()
    }

    pub fn num_features(&self) -> usize {
        self.x.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn split(&self, which: Split) -> &[usize] {
        self.splits.get(which)
    }

    fn check(&self, shape: GcnShape, adj: &NormAdj) -> Result<()> {
        if shape.features != self.num_features()
            || shape.classes != self.num_classes
            || adj.num_nodes != self.num_nodes()
        {
            return Err(GltError::Shape(format!(
                "model {shape:?} / adjacency over {} nodes vs graph with {} nodes, {} features, {} classes",
                adj.num_nodes,
                self.num_nodes(),
                self.num_features(),
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// Everything the masked forward pass reads.
#[derive(Debug, Clone, Copy)]
pub struct GcnInputs<'a, T> {
    pub params: &'a GcnParams<T>,
    pub soft: &'a SoftMasks<T>,
    pub binary: &'a BinaryMasks,
}

impl<T: Real> GcnInputs<'_, T> {
    fn check(&self, num_edges: usize) -> Result<()> {
        let shape = self.params.shape();
        let ok = self.soft.graph.len() == num_edges
            && self.binary.graph.len() == num_edges
            && self.binary.weights.len() == shape.num_weights()
            && (0..2).all(|l| self.soft.weights[l].shape() == shape.layer_dims(l));
        if ok {
            Ok(())
        } else {
            Err(GltError::Shape(format!(
                "masks do not match {num_edges} edges and model {shape:?}"
            )))
        }
    }

    /// `Θ ⊙ m_θ ⊙ M_θ` for one layer.
    fn effective_weight(&self, layer: usize) -> Matrix<T> {
        let shape = self.params.shape();
        let offset = shape.layer_offset(layer);
        let theta = self.params.theta()[layer].as_slice();
        let soft = self.soft.weights[layer].as_slice();
        let (rows, cols) = shape.layer_dims(layer);
        let data = (0..rows * cols)
            .map(|i| {
                if self.binary.weights.get(offset + i) {
                    theta[i] * soft[i]
                } else {
                    T::zero()
                }
            })
            .collect();
        Matrix::from_vec(rows, cols, data).expect("layer dims")
    }

    fn fingerprint(&self, adj: &NormAdj) -> u64 {
        let mut fp = Fingerprint::default();
        for m in self.params.theta().iter().chain(&self.soft.weights) {
            fp.reals(m.as_slice());
        }
        fp.reals(&self.soft.graph);
        for w in self.binary.graph.words().chain(self.binary.weights.words()) {
            fp.word(w);
        }
        for &v in &adj.values {
            fp.word(v.to_bits());
        }
        fp.0
    }
}

/// FNV-style running hash used to detect a cache paired with the wrong state.
struct Fingerprint(u64);

impl Default for Fingerprint {
    fn default() -> Self {
        Fingerprint(0xcbf2_9ce4_8422_2325)
    }
}

impl Fingerprint {
    fn word(&mut self, w: u64) {
        self.0 = (self.0 ^ w).wrapping_mul(0x0000_0100_0000_01b3);
    }

    fn reals<T: Real>(&mut self, vals: &[T]) {
        for &v in vals {
            self.word(v.as_f64().to_bits());
        }
    }
}

/// Dropout pattern for one training step: a thinned, rescaled copy of the
/// input features and a per-entry scale (0 or 1/(1-rate)) on hidden units.
#[derive(Debug, Clone)]
pub struct Dropout<T> {
    x: Csr<T>,
    xt: Csr<T>,
    hidden: Vec<T>,
}

impl<T: Real> Dropout<T> {
    pub fn draw(ctx: &GraphContext<T>, hidden: usize, rate: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(GltError::InvalidArgument(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        let scale = T::of(1.0 / (1.0 - rate));
        let mut indptr = vec![0];
        let mut indices = Vec::with_capacity(ctx.x.nnz());
        let mut values = Vec::with_capacity(ctx.x.nnz());
        for r in 0..ctx.x.rows() {
            let (cols, vals) = ctx.x.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if !rng.random_bool(rate) {
                    indices.push(c);
                    values.push(v * scale);
                }
            }
            indptr.push(indices.len());
        }
        let x = Csr::from_parts(ctx.x.rows(), ctx.x.cols(), indptr, indices, values)?;
        let hidden = (0..ctx.num_nodes() * hidden)
            .map(|_| if rng.random_bool(rate) { T::zero() } else { scale })
            .collect();
        Ok(Dropout {
            xt: x.transpose(),
            x,
            hidden,
        })
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Effective adjacency: normalized value × m_g × M_g on the support.
    agg: Csr<T>,
    /// Layer 1 effective weight, transposed.
    w1t: Matrix<T>,
    xw: Matrix<T>,
    hidden_pre: Matrix<T>,
    hidden: Matrix<T>,
    hw: Matrix<T>,
    logits: Matrix<T>,
    dropout: Option<Dropout<T>>,
    fingerprint: u64,
}

impl<T: Real> ForwardCache<T> {
    pub fn logits(&self) -> &Matrix<T> {
        &self.logits
    }
}

pub fn gcn_forward<T: Real>(
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    inputs: GcnInputs<'_, T>,
) -> Result<ForwardCache<T>> {
    forward_with(ctx, adj, inputs, None)
}

/// Training-mode forward pass with a pre-drawn dropout pattern.
pub fn gcn_forward_dropout<T: Real>(
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    inputs: GcnInputs<'_, T>,
    dropout: Dropout<T>,
) -> Result<ForwardCache<T>> {
    forward_with(ctx, adj, inputs, Some(dropout))
}

fn forward_with<T: Real>(
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    inputs: GcnInputs<'_, T>,
    dropout: Option<Dropout<T>>,
) -> Result<ForwardCache<T>> {
    ctx.check(inputs.params.shape(), adj)?;
    inputs.check(ctx.num_edges)?;
    let values = adj
        .values
        .iter()
        .zip(&adj.edge_ids)
        .map(|(&v, e)| match *e {
            None => T::of(v),
            Some(e) if inputs.binary.graph.get(e) => T::of(v) * inputs.soft.graph[e],
            Some(_) => T::zero(),
        })
        .collect();
    let agg = Csr::from_parts(
        adj.num_nodes,
        adj.num_nodes,
        adj.indptr.clone(),
        adj.indices.clone(),
        values,
    )?;
    let x = dropout.as_ref().map_or(&ctx.x, |d| &d.x);
    let xw = x.mul_dense(&inputs.effective_weight(0))?;
    let hidden_pre = agg.mul_dense(&xw)?;
    let mut hidden = hidden_pre.map(|v| if v > T::zero() { v } else { T::zero() });
    if let Some(d) = &dropout {
        if d.hidden.len() != hidden.len() {
            return Err(GltError::Shape("dropout pattern does not match hidden layer".into()));
        }
        for (h, &s) in hidden.as_mut_slice().iter_mut().zip(&d.hidden) {
            *h *= s;
        }
    }
    let w1t = inputs.effective_weight(1).transpose();
    let hw = hidden.matmul_t(&w1t)?;
    let logits = agg.mul_dense(&hw)?;
    Ok(ForwardCache {
        agg,
        w1t,
        xw,
        hidden_pre,
        hidden,
        hw,
        logits,
        dropout,
        fingerprint: inputs.fingerprint(adj),
    })
}

fn check_split(labels: &[usize], rows: usize, split: &[usize]) -> Result<()> {
    if split.is_empty() {
        return Err(GltError::InvalidArgument("empty split".into()));
    }
    if let Some(&v) = split.iter().find(|&&v| v >= rows || v >= labels.len()) {
        return Err(GltError::Shape(format!("split node {v} out of range")));
    }
    Ok(())
}

fn log_sum_exp<T: Real>(row: &[T]) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    max + row.iter().map(|&z| (z - max).exp()).sum::<T>().ln()
}

/// Mean cross-entropy of `softmax(logits)` over the split.
pub fn masked_loss<T: Real>(logits: &Matrix<T>, labels: &[usize], split: &[usize]) -> Result<T> {
    check_split(labels, logits.rows(), split)?;
    let mut total = T::zero();
    for &v in split {
        let row = logits.row(v);
        total += log_sum_exp(row) - row[labels[v]];
    }
    Ok(total / T::of(split.len() as f64))
}

/// Fraction of split nodes whose argmax logit (lowest index on ties) is the label.
pub fn accuracy<T: Real>(logits: &Matrix<T>, labels: &[usize], split: &[usize]) -> Result<f64> {
    check_split(labels, logits.rows(), split)?;
    let correct = split
        .iter()
        .filter(|&&v| {
            let row = logits.row(v);
            let mut best = 0;
            for (c, &z) in row.iter().enumerate() {
                if z > row[best] {
                    best = c;
                }
            }
            best == labels[v]
        })
        .count();
    Ok(correct as f64 / split.len() as f64)
}

pub fn evaluate_accuracy<T: Real>(
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    inputs: GcnInputs<'_, T>,
    split: Split,
) -> Result<f64> {
    let cache = gcn_forward(ctx, adj, inputs)?;
    accuracy(cache.logits(), ctx.labels(), ctx.split(split))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub loss: T,
    pub theta: [Matrix<T>; 2],
    pub weight_mask: [Matrix<T>; 2],
    /// Gradient at the effective weight position, including pruned entries.
    pub theta_dense: [Matrix<T>; 2],
    pub graph_mask: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn is_finite(&self) -> bool {
        let all = |m: &[Matrix<T>; 2]| m.iter().all(|m| m.as_slice().iter().all(|v| v.is_finite()));
        self.loss.is_finite()
            && all(&self.theta)
            && all(&self.weight_mask)
            && all(&self.theta_dense)
            && self.graph_mask.iter().all(|v| v.is_finite())
    }
}

/// Gradients of `masked_loss` over `split` for the state `cache` was built from.
pub fn backward<T: Real>(
    cache: &ForwardCache<T>,
    ctx: &GraphContext<T>,
    adj: &NormAdj,
    inputs: GcnInputs<'_, T>,
    split: &[usize],
) -> Result<Gradients<T>> {
    if inputs.fingerprint(adj) != cache.fingerprint {
        return Err(GltError::StaleCache);
    }
    let labels = ctx.labels();
    let loss = masked_loss(&cache.logits, labels, split)?;

    // softmax minus one-hot, averaged over the split
    let classes = cache.logits.cols();
    let scale = T::one() / T::of(split.len() as f64);
    let mut d_logits = Matrix::zeros(cache.logits.rows(), classes);
    for &v in split {
        let row = cache.logits.row(v);
        let lse = log_sum_exp(row);
        let out = d_logits.row_mut(v);
        for c in 0..classes {
            out[c] = (row[c] - lse).exp() * scale;
        }
        out[labels[v]] -= scale;
    }

    let d_hw = cache.agg.t_mul_dense(&d_logits)?;
    let d_w1 = d_hw.transpose().matmul(&cache.hidden)?.transpose();
    let mut d_hidden = d_hw.matmul(&cache.w1t)?;
    for (d, &pre) in d_hidden
        .as_mut_slice()
        .iter_mut()
        .zip(cache.hidden_pre.as_slice())
    {
        if pre <= T::zero() {
            *d = T::zero();
        }
    }
    if let Some(drop) = &cache.dropout {
        for (d, &s) in d_hidden.as_mut_slice().iter_mut().zip(&drop.hidden) {
            *d *= s;
        }
    }
    let d_xw = cache.agg.t_mul_dense(&d_hidden)?;
    let xt = cache.dropout.as_ref().map_or(&ctx.xt, |d| &d.xt);
    let d_w0 = xt.mul_dense(&d_xw)?;

    let mut graph_mask = vec![T::zero(); ctx.num_edges];
    for i in 0..adj.num_nodes {
        for k in adj.row(i) {
            let Some(e) = adj.edge_ids[k] else { continue };
            if !inputs.binary.graph.get(e) {
                continue;
            }
            let j = adj.indices[k];
            let d_entry = dot(d_logits.row(i), cache.hw.row(j)) + dot(d_hidden.row(i), cache.xw.row(j));
            graph_mask[e] += T::of(adj.values[k]) * d_entry;
        }
    }

    let shape = inputs.params.shape();
    let theta_dense = [d_w0, d_w1];
    let mut theta = theta_dense.clone();
    let mut weight_mask = theta_dense.clone();
    for l in 0..2 {
        let offset = shape.layer_offset(l);
        let th = inputs.params.theta()[l].as_slice();
        let sm = inputs.soft.weights[l].as_slice();
        let dt = theta[l].as_mut_slice();
        let dm = weight_mask[l].as_mut_slice();
        for i in 0..dt.len() {
            if inputs.binary.weights.get(offset + i) {
                dt[i] *= sm[i];
                dm[i] *= th[i];
            } else {
                dt[i] = T::zero();
                dm[i] = T::zero();
            }
        }
    }
    Ok(Gradients {
        loss,
        theta,
        weight_mask,
        theta_dense,
        graph_mask,
    })
}
