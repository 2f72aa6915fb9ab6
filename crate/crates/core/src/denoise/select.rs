use std::cmp::Ordering;

use crate::error::{GltError, Result};
use crate::masking::{select_first_k, BinaryMasks, Mask};

use super::schedule::Quota;

/// Chosen indices per mask type, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    pub graph: Vec<usize>,
    pub weights: Vec<usize>,
}

fn check_len(what: &str, scores: &[f64], mask: &Mask) -> Result<()> {
    if scores.len() != mask.len() {
        return Err(GltError::Shape(format!(
            "{} {what} scores for a {}-element mask",
            scores.len(),
            mask.len()
        )));
    }
    Ok(())
}

fn pick(
    pool: Vec<usize>,
    k: usize,
    what: &str,
    cmp: impl Fn(&usize, &usize) -> Ordering,
) -> Result<Vec<usize>> {
    if k > pool.len() {
        return Err(GltError::Precondition(format!(
            "quota of {k} {what} exceeds the {} eligible",
            pool.len()
        )));
    }
    Ok(select_first_k(pool, k, cmp))
}

/// Kept entries with the `k` smallest `|score|`, lower index first on ties.
pub fn smallest_kept(mask: &Mask, scores: &[f64], k: usize, what: &str) -> Result<Vec<usize>> {
    check_len(what, scores, mask)?;
    pick(mask.iter_ones().collect(), k, what, |&a, &b| {
        scores[a].abs().total_cmp(&scores[b].abs()).then(a.cmp(&b))
    })
}

/// Pruned entries with the `k` largest scores, lower index first on ties.
pub fn largest_pruned(mask: &Mask, scores: &[f64], k: usize, what: &str) -> Result<Vec<usize>> {
    check_len(what, scores, mask)?;
    pick(mask.iter_zeros().collect(), k, what, |&a, &b| {
        scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
    })
}

/// Pruned entries with the `k` smallest scores, lower index first on ties.
pub fn smallest_pruned(mask: &Mask, scores: &[f64], k: usize, what: &str) -> Result<Vec<usize>> {
    check_len(what, scores, mask)?;
    pick(mask.iter_zeros().collect(), k, what, |&a, &b| {
        scores[a].total_cmp(&scores[b]).then(a.cmp(&b))
    })
}

/// Kept weights of smallest `|Θ|` and kept edges of smallest `|m_g|`.
pub fn identify_noisy(
    masks: &BinaryMasks,
    soft_graph: &[f64],
    theta: &[f64],
    graph_quota: Quota,
    weight_quota: Quota,
) -> Result<Selection> {
    Ok(Selection {
        graph: smallest_kept(&masks.graph, soft_graph, graph_quota.noisy, "noisy edges")?,
        weights: smallest_kept(&masks.weights, theta, weight_quota.noisy, "noisy weights")?,
    })
}

/// Pruned weights of largest accumulated gradient and pruned edges of
/// smallest edge degree.
pub fn discover_potential(
    masks: &BinaryMasks,
    grad_acc: &[f64],
    edge_scores: &[f64],
    graph_quota: Quota,
    weight_quota: Quota,
) -> Result<Selection> {
    Ok(Selection {
        graph: smallest_pruned(
            &masks.graph,
            edge_scores,
            graph_quota.potential,
            "potential edges",
        )?,
        weights: largest_pruned(
            &masks.weights,
            grad_acc,
            weight_quota.potential,
            "potential weights",
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(noisy: usize, potential: usize) -> Quota {
        Quota { noisy, potential }
    }

    #[test]
    fn noisy_examples() {
        let masks = BinaryMasks {
            graph: Mask::ones(2),
            weights: Mask::ones(3),
        };
        let sel = identify_noisy(&masks, &[1.0, 1.0], &[0.5, -0.01, 0.3], q(0, 0), q(1, 0)).unwrap();
        assert_eq!(sel.weights, vec![1]);
        assert!(sel.graph.is_empty());
        assert!(identify_noisy(&masks, &[1.0, 1.0], &[0.0; 3], q(3, 0), q(0, 0)).is_err());
    }

    #[test]
    fn potential_examples() {
        let masks = BinaryMasks {
            graph: Mask::from_bools(&[true, false, false, false]),
            weights: Mask::zeros(3),
        };
        let sel = discover_potential(
            &masks,
            &[0.0, 5.0, 1.2],
            &[9.0, 4.0, 1.5, 2.0],
            q(2, 2),
            q(1, 1),
        )
        .unwrap();
        assert_eq!(sel.weights, vec![1]);
        assert_eq!(sel.graph, vec![2, 3]);
        let none = discover_potential(&masks, &[0.0; 3], &[0.0; 4], q(0, 0), q(0, 0)).unwrap();
        assert_eq!(none, Selection::default());
    }

    fn oracle_smallest(mask: &[bool], scores: &[f64], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| mask[i]).collect();
        idx.sort_by(|&a, &b| scores[a].abs().partial_cmp(&scores[b].abs()).unwrap().then(a.cmp(&b)));
        let mut out = idx[..k].to_vec();
        out.sort();
        out
    }

    proptest! {
        #[test]
        fn noisy_matches_sort_oracle(
            entries in prop::collection::vec((any::<bool>(), -4i32..4), 1..400),
            frac in 0.0f64..=1.0,
        ) {
            let bits: Vec<bool> = entries.iter().map(|e| e.0).collect();
            // coarse integer scores force plenty of ties
            let scores: Vec<f64> = entries.iter().map(|e| e.1 as f64 * 0.5).collect();
            let mask = Mask::from_bools(&bits);
            let k = (mask.count_ones() as f64 * frac) as usize;
            prop_assert_eq!(
                smallest_kept(&mask, &scores, k, "x").unwrap(),
                oracle_smallest(&bits, &scores, k)
            );
        }

        #[test]
        fn selection_is_scale_invariant(
            scores in prop::collection::vec(0.0f64..10.0, 1..200),
            scale in 0.001f64..1000.0,
            k in 0usize..50,
        ) {
            let mask = Mask::zeros(scores.len());
            let k = k.min(scores.len());
            let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            prop_assert_eq!(
                largest_pruned(&mask, &scores, k, "x").unwrap(),
                largest_pruned(&mask, &scaled, k, "x").unwrap()
            );
            prop_assert_eq!(
                smallest_pruned(&mask, &scores, k, "x").unwrap(),
                smallest_pruned(&mask, &scaled, k, "x").unwrap()
            );
        }
    }
}
