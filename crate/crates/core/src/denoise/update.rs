use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::masking::{BinaryMasks, Mask};

use super::select::Selection;

/// What one interval's swap did to one mask type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSwap {
    pub removed: Vec<usize>,
    pub regrown: Vec<usize>,
    pub sparsity_before: f64,
    pub sparsity_after: f64,
}

impl TypeSwap {
    pub fn net_removed(&self) -> isize {
        self.removed.len() as isize - self.regrown.len() as isize
    }
}

/// Audit record of the prune-and-regrow step that closes interval `interval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub interval: usize,
    pub graph: TypeSwap,
    pub weights: TypeSwap,
}

fn swap_one(mask: &Mask, removed: &[usize], regrown: &[usize], what: &str) -> Result<(Mask, TypeSwap)> {
    for &i in removed {
        if i >= mask.len() || !mask.get(i) {
            return Err(GltError::Precondition(format!(
                "{what}: noisy element {i} is not currently kept"
            )));
        }
    }
    for &i in regrown {
        if i >= mask.len() || mask.get(i) {
            return Err(GltError::Precondition(format!(
                "{what}: potential element {i} is not currently pruned"
            )));
        }
    }
    let mut next = mask.clone();
    for &i in removed {
        next.set(i, false);
    }
    for &i in regrown {
        next.set(i, true);
    }
    if next.count_ones() + removed.len() != mask.count_ones() + regrown.len() {
        return Err(GltError::Precondition(format!(
            "{what}: duplicate indices in swap sets"
        )));
    }
    let swap = TypeSwap {
        removed: removed.to_vec(),
        regrown: regrown.to_vec(),
        sparsity_before: mask.sparsity()?,
        sparsity_after: next.sparsity()?,
    };
    Ok((next, swap))
}

/// `(M \ noisy) ∪ potential` for both mask types.
pub fn update_masks(
    masks: &BinaryMasks,
    noisy: &Selection,
    potential: &Selection,
    interval: usize,
) -> Result<(BinaryMasks, SwapRecord)> {
    let (graph, gs) = swap_one(&masks.graph, &noisy.graph, &potential.graph, "graph mask")?;
    let (weights, ws) = swap_one(&masks.weights, &noisy.weights, &potential.weights, "weight mask")?;
    Ok((
        BinaryMasks { graph, weights },
        SwapRecord {
            interval,
            graph: gs,
            weights: ws,
        },
    ))
}

/// Re-applies recorded swaps to a starting mask pair.
pub fn replay_swaps(start: &BinaryMasks, records: &[SwapRecord]) -> Result<BinaryMasks> {
    let mut masks = start.clone();
    for r in records {
        let noisy = Selection {
            graph: r.graph.removed.clone(),
            weights: r.weights.removed.clone(),
        };
        let potential = Selection {
            graph: r.graph.regrown.clone(),
            weights: r.weights.regrown.clone(),
        };
        masks = update_masks(&masks, &noisy, &potential, r.interval)?.0;
    }
    Ok(masks)
}

pub fn write_swap_records(path: &Path, records: &[SwapRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| GltError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| GltError::io(path, e))?;
    }
    out.flush().map_err(|e| GltError::io(path, e))
}

pub fn read_swap_records(path: &Path) -> Result<Vec<SwapRecord>> {
    let file = File::open(path).map_err(|e| GltError::io(path, e))?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| GltError::io(path, e))?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::schedule::{interval_quotas, ShrinkPlan};
    use crate::denoise::select::{largest_pruned, smallest_kept};
    use crate::masking::{kept_count, one_shot_threshold};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn masks(graph: Mask) -> BinaryMasks {
        BinaryMasks {
            graph,
            weights: Mask::ones(4),
        }
    }

    #[test]
    fn empty_swap_is_identity() {
        let m = masks(Mask::from_bools(&[true, false, true]));
        let (next, rec) = update_masks(&m, &Selection::default(), &Selection::default(), 1).unwrap();
        assert_eq!(next, m);
        assert_eq!(rec.graph.net_removed(), 0);
    }

    #[test]
    fn remove_three_regrow_two() {
        let m = masks(Mask::from_bools(&[
            true, true, true, true, true, false, false, false, true, true,
        ]));
        let noisy = Selection {
            graph: vec![0, 2, 9],
            weights: vec![],
        };
        let potential = Selection {
            graph: vec![5, 7],
            weights: vec![],
        };
        let (next, rec) = update_masks(&m, &noisy, &potential, 3).unwrap();
        assert_eq!(next.graph.count_ones(), m.graph.count_ones() - 1);
        assert!((rec.graph.sparsity_after - rec.graph.sparsity_before - 0.1).abs() < 1e-12);
        assert_eq!(rec.interval, 3);
    }

    #[test]
    fn rejects_bad_sets() {
        let m = masks(Mask::from_bools(&[true, false, true]));
        let sel = |g: Vec<usize>| Selection {
            graph: g,
            weights: vec![],
        };
        assert!(update_masks(&m, &sel(vec![1]), &sel(vec![]), 1).is_err());
        assert!(update_masks(&m, &sel(vec![]), &sel(vec![0]), 1).is_err());
        assert!(update_masks(&m, &sel(vec![0, 0]), &sel(vec![]), 1).is_err());
        assert!(update_masks(&m, &sel(vec![7]), &sel(vec![]), 1).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("swaps.jsonl");
        let rec = SwapRecord {
            interval: 2,
            graph: TypeSwap {
                removed: vec![1, 4],
                regrown: vec![3],
                sparsity_before: 0.25,
                sparsity_after: 0.3,
            },
            weights: TypeSwap {
                removed: vec![],
                regrown: vec![],
                sparsity_before: 0.5,
                sparsity_after: 0.5,
            },
        };
        write_swap_records(&path, &[rec.clone(), rec.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_swap_records(&path).unwrap(), vec![rec.clone(), rec]);
    }

    proptest! {
        // A synthetic trajectory with random scores lands on the target count
        // and replays to the same final mask.
        #[test]
        fn trajectory_lands_and_replays(
            size in 10usize..600,
            a in 0.0f64..0.95,
            b in 0.0f64..0.95,
            intervals in 1usize..30,
            tau in 0.0f64..=0.5,
            seed in any::<u64>(),
        ) {
            let (s_inm, s_tgt) = if a <= b { (a, b) } else { (b, a) };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
            let start = BinaryMasks {
                graph: Mask::ones(3),
                weights: one_shot_threshold(&init, s_inm).unwrap(),
            };
            let plan = ShrinkPlan::new(size, s_inm, s_tgt, intervals).unwrap();
            let mut cur = start.clone();
            let mut records = Vec::new();
            for mu in 1..=intervals {
                let ratio = tau * (1.0 - mu as f64 / intervals as f64);
                let kept = cur.weights.count_ones();
                let q = interval_quotas(kept, size - kept, ratio, plan.n_net(mu)).unwrap();
                let scores: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
                let noisy = Selection {
                    graph: vec![],
                    weights: smallest_kept(&cur.weights, &scores, q.noisy, "w").unwrap(),
                };
                let potential = Selection {
                    graph: vec![],
                    weights: largest_pruned(&cur.weights, &scores, q.potential, "w").unwrap(),
                };
                let before = cur.weights.sparsity().unwrap();
                let (next, rec) = update_masks(&cur, &noisy, &potential, mu).unwrap();
                prop_assert_eq!(rec.weights.net_removed(), plan.n_net(mu) as isize);
                prop_assert!(next.weights.sparsity().unwrap() >= before);
                cur = next;
                records.push(rec);
            }
            prop_assert_eq!(cur.weights.count_ones(), kept_count(size, s_tgt));
            prop_assert_eq!(replay_swaps(&start, &records).unwrap(), cur);
        }
    }
}
