//! Graph representation: validated datasets, symmetric normalization,
//! edge degrees and mask distances.

mod bundle;
mod linqs;
mod sbm;

pub use bundle::{load_bundle, save_bundle};
pub use linqs::{convert_linqs, LinqsOptions};
pub use sbm::{generate_sbm, SbmSpec};

use crate::error::{GltError, Result};
use crate::masking::Mask;

/// Disjoint train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Which split to score on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Splits {
    pub fn get(&self, which: Split) -> &[usize] {
        match which {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Immutable graph bundle: undirected edges, node features, labels and splits.
///
/// Edges are canonical `(i, j)` with `i < j`, sorted; an edge's position in
/// that list is its stable index, shared by every edge mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    /// CSR over both directions of every edge: neighbor and edge id.
    adj_indptr: Vec<usize>,
    adj_neighbors: Vec<usize>,
    adj_edge_ids: Vec<usize>,
    features: Vec<f32>,
    labels: Vec<usize>,
    splits: Splits,
}

impl Dataset {
    /// Validates and canonicalizes. Edge pairs may come in either orientation
    /// and repeat; self-loops are rejected.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        num_nodes: usize,
        num_features: usize,
        num_classes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Vec<f32>,
        labels: Vec<usize>,
        splits: Splits,
    ) -> Result<Self> {
        let bad = |msg: String| Err(GltError::Bundle(msg));
        if num_nodes == 0 {
            return bad("dataset has no nodes".into());
        }
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return bad(format!("edge ({a}, {b}) out of range for {num_nodes} nodes"));
            }
            if a == b {
                return bad(format!("self-loop ({a}, {a}) in edge list"));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();

        if features.len() != num_nodes * num_features {
            return bad(format!(
                "{} feature values for {num_nodes}x{num_features}",
                features.len()
            ));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return bad("non-finite feature value".into());
        }
        if labels.len() != num_nodes {
            return bad(format!("{} labels for {num_nodes} nodes", labels.len()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
            return bad(format!("label {l} outside [0, {num_classes})"));
        }
        let mut seen = vec![false; num_nodes];
        for &i in splits.train.iter().chain(&splits.val).chain(&splits.test) {
            if i >= num_nodes {
                return bad(format!("split index {i} out of range"));
            }
            if seen[i] {
                return bad(format!("node {i} appears twice across splits"));
            }
            seen[i] = true;
        }

        let mut degree = vec![0usize; num_nodes];
        for &(i, j) in &canon {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut adj_indptr = vec![0usize; num_nodes + 1];
        for v in 0..num_nodes {
            adj_indptr[v + 1] = adj_indptr[v] + degree[v];
        }
        let mut next = adj_indptr.clone();
        let mut adj_neighbors = vec![0; 2 * canon.len()];
        let mut adj_edge_ids = vec![0; 2 * canon.len()];
        // Edges are sorted, so each row's neighbors come out ascending.
        let mut by_dst: Vec<(usize, usize, usize)> = canon
            .iter()
            .enumerate()
            .flat_map(|(e, &(i, j))| [(i, j, e), (j, i, e)])
            .collect();
        by_dst.sort_unstable();
        for (src, dst, e) in by_dst {
            adj_neighbors[next[src]] = dst;
            adj_edge_ids[next[src]] = e;
            next[src] += 1;
        }

        Ok(Dataset {
            name: name.into(),
            num_nodes,
            num_features,
            num_classes,
            edges: canon,
            adj_indptr,
            adj_neighbors,
            adj_edge_ids,
            features,
            labels,
            splits,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Directed nonzeros of A (twice the undirected edge count).
    pub fn adjacency_nnz(&self) -> usize {
        self.adj_neighbors.len()
    }

    /// `(neighbor, edge id)` pairs of node `v`, ascending by neighbor.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let span = self.adj_indptr[v]..self.adj_indptr[v + 1];
        self.adj_neighbors[span.clone()]
            .iter()
            .copied()
            .zip(self.adj_edge_ids[span].iter().copied())
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    /// Per-node degree on the subgraph kept by `edge_mask`, self-loops excluded.
    pub fn masked_degrees(&self, edge_mask: &Mask) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_nodes];
        for e in edge_mask.iter_ones() {
            let (i, j) = self.edges[e];
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    fn check_edge_mask(&self, edge_mask: &Mask) -> Result<()> {
        if edge_mask.len() != self.num_edges() {
            return Err(GltError::Shape(format!(
                "edge mask of {} for {} edges",
                edge_mask.len(),
                self.num_edges()
            )));
        }
        Ok(())
    }
}

/// `D̂^{-1/2} (A_masked + I) D̂^{-1/2}` in CSR form over its support.
///
/// Rows are sorted by column. `edge_ids[k]` names the undirected edge behind
/// entry `k`, or `None` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdj {
    pub num_nodes: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub edge_ids: Vec<Option<usize>>,
}

impl NormAdj {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.indptr[i]..self.indptr[i + 1]
    }
}

pub fn normalize_adjacency(dataset: &Dataset, edge_mask: &Mask) -> Result<NormAdj> {
    dataset.check_edge_mask(edge_mask)?;
    let n = dataset.num_nodes();
    let deg_hat: Vec<f64> = dataset
        .masked_degrees(edge_mask)
        .into_iter()
        .map(|d| (d + 1) as f64)
        .collect();
    let norm = |i: usize, j: usize| 1.0 / (deg_hat[i] * deg_hat[j]).sqrt();

    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut edge_ids = Vec::new();
    indptr.push(0);
    for i in 0..n {
        let mut self_done = false;
        for (j, e) in dataset.neighbors(i) {
            if !edge_mask.get(e) {
                continue;
            }
            if !self_done && j > i {
                indices.push(i);
                values.push(norm(i, i));
                edge_ids.push(None);
                self_done = true;
            }
            indices.push(j);
            values.push(norm(i, j));
            edge_ids.push(Some(e));
        }
        if !self_done {
            indices.push(i);
            values.push(norm(i, i));
            edge_ids.push(None);
        }
        indptr.push(indices.len());
    }
    Ok(NormAdj {
        num_nodes: n,
        indptr,
        indices,
        values,
        edge_ids,
    })
}

/// Edge degree `(deg(i) + deg(j)) / 2` for every original edge, with degrees
/// taken on the masked graph (pruned edges are scored too).
pub fn edge_degree_scores(dataset: &Dataset, edge_mask: &Mask) -> Result<Vec<f64>> {
    dataset.check_edge_mask(edge_mask)?;
    let deg = dataset.masked_degrees(edge_mask);
    Ok(dataset
        .edges()
        .iter()
        .map(|&(i, j)| (deg[i] + deg[j]) as f64 / 2.0)
        .collect())
}

/// Fraction of positions where the two masks disagree.
pub fn hamming_distance(a: &Mask, b: &Mask) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GltError::Shape(format!(
            "hamming distance between masks of {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let differ = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
    Ok(differ as f64 / a.len() as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn toy(n: usize, edges: &[(usize, usize)]) -> Dataset {
        Dataset::new(
            "toy",
            n,
            1,
            1,
            edges.iter().copied(),
            vec![1.0; n],
            vec![0; n],
            Splits::default(),
        )
        .unwrap()
    }

    fn dense_norm(n: usize, edges: &[(usize, usize)], mask: &Mask) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask.get(e) {
                a[i][j] = 1.0;
                a[j][i] = 1.0;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
        (0..n)
            .map(|i| (0..n).map(|j| a[i][j] / (d[i] * d[j]).sqrt()).collect())
            .collect()
    }

    fn to_dense(adj: &NormAdj) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; adj.num_nodes]; adj.num_nodes];
        for (i, row) in out.iter_mut().enumerate() {
            for k in adj.row(i) {
                row[adj.indices[k]] += adj.values[k];
            }
        }
        out
    }

    #[test]
    fn canonicalizes_and_counts_directed_entries() {
        let d = toy(4, &[(1, 0), (0, 1), (2, 1), (3, 2), (0, 3)]);
        assert_eq!(d.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(d.adjacency_nnz(), 8);
        assert_eq!(d.neighbors(0).collect::<Vec<_>>(), vec![(1, 0), (3, 1)]);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let mk = |edges: Vec<(usize, usize)>, labels: Vec<usize>, splits: Splits| {
            Dataset::new("x", 3, 1, 2, edges, vec![0.0; 3], labels, splits)
        };
        assert!(mk(vec![(1, 1)], vec![0; 3], Splits::default()).is_err());
        assert!(mk(vec![(0, 3)], vec![0; 3], Splits::default()).is_err());
        assert!(mk(vec![], vec![0, 2, 0], Splits::default()).is_err());
        let overlapping = Splits {
            train: vec![0],
            val: vec![0],
            test: vec![],
        };
        assert!(mk(vec![], vec![0; 3], overlapping).is_err());
    }

    #[test]
    fn normalization_examples() {
        let single = toy(1, &[]);
        let adj = normalize_adjacency(&single, &Mask::ones(0)).unwrap();
        assert_eq!(adj.values, vec![1.0]);
        assert_eq!(adj.edge_ids, vec![None]);

        let pair = toy(2, &[(0, 1)]);
        let adj = normalize_adjacency(&pair, &Mask::ones(1)).unwrap();
        assert_eq!(adj.values, vec![0.5; 4]);

        // Triangle with (1, 2) masked: path 1-0-2, d̂ = [3, 2, 2].
        let tri = toy(3, &[(0, 1), (0, 2), (1, 2)]);
        let mask = Mask::from_bools(&[true, true, false]);
        let dense = to_dense(&normalize_adjacency(&tri, &mask).unwrap());
        assert!((dense[0][1] - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((dense[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(dense[1][2], 0.0);
        // Full triangle: every node has d̂ = 3, so (0,1) = 1/√(3·3).
        let full = to_dense(&normalize_adjacency(&tri, &Mask::ones(3)).unwrap());
        assert!((full[0][1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn edge_degree_examples() {
        let d = toy(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        // canonical order: (0,1), (0,2), (1,2), (2,3)
        let s = edge_degree_scores(&d, &Mask::ones(4)).unwrap();
        assert_eq!(s, vec![2.0, 2.5, 2.5, 2.0]);
        let star = toy(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(edge_degree_scores(&star, &Mask::ones(4)).unwrap(), vec![2.5; 4]);
        assert_eq!(edge_degree_scores(&star, &Mask::zeros(4)).unwrap(), vec![0.0; 4]);
        assert!(edge_degree_scores(&star, &Mask::ones(3)).is_err());
    }

    #[test]
    fn hamming_examples() {
        let a = Mask::from_bools(&[true, false, true, true]);
        let b = Mask::from_bools(&[true, true, false, true]);
        assert_eq!(hamming_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 0.5);
        assert_eq!(hamming_distance(&a, &a.complement()).unwrap(), 1.0);
        assert!(hamming_distance(&a, &Mask::ones(3)).is_err());
    }

    fn random_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<bool>)> {
        (1usize..50).prop_flat_map(|n| {
            let pairs = prop::collection::vec((0..n, 0..n), 0..150).prop_map(|v| {
                let mut v: Vec<_> = v
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| (a.min(b), a.max(b)))
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            });
            (Just(n), pairs).prop_flat_map(|(n, e)| {
                let m = e.len();
                (Just(n), Just(e), prop::collection::vec(any::<bool>(), m))
            })
        })
    }

    proptest! {
        #[test]
        fn normalization_matches_dense_oracle((n, edges, keep) in random_graph()) {
            let d = toy(n, &edges);
            let mask = Mask::from_bools(&keep);
            let got = to_dense(&normalize_adjacency(&d, &mask).unwrap());
            let want = dense_norm(n, d.edges(), &mask);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((got[i][j] - want[i][j]).abs() < 1e-14);
                    prop_assert_eq!(got[i][j], got[j][i]);
                }
            }
        }

        #[test]
        fn edge_degrees_match_brute_force((n, edges, keep) in random_graph()) {
            let d = toy(n, &edges);
            let mask = Mask::from_bools(&keep);
            let scores = edge_degree_scores(&d, &mask).unwrap();
            for (e, &(i, j)) in d.edges().iter().enumerate() {
                let deg = |v: usize| d.edges().iter().enumerate()
                    .filter(|&(k, &(a, b))| mask.get(k) && (a == v || b == v))
                    .count();
                prop_assert_eq!(scores[e], (deg(i) + deg(j)) as f64 / 2.0);
            }
        }

        #[test]
        fn hamming_is_a_metric(
            bits in prop::collection::vec(any::<(bool, bool, bool)>(), 1..120)
        ) {
            let a = Mask::from_bools(&bits.iter().map(|t| t.0).collect::<Vec<_>>());
            let b = Mask::from_bools(&bits.iter().map(|t| t.1).collect::<Vec<_>>());
            let c = Mask::from_bools(&bits.iter().map(|t| t.2).collect::<Vec<_>>());
            let d = |x: &Mask, y: &Mask| hamming_distance(x, y).unwrap();
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
            prop_assert!((0.0..=1.0).contains(&d(&a, &b)));
        }
    }
}
