//! Binary mask lifecycle: sparsity accounting, the intermediate-sparsity
//! map and global magnitude thresholding.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::linalg::Matrix;
use crate::nn::GcnShape;
use crate::real::Real;
use crate::rng::{stream, Stream};

const MASK_MAGIC: &[u8; 4] = b"GLTM";

/// A binary keep/prune mask over a fixed universe of elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask(BitVec<u64, Lsb0>);

impl Mask {
    pub fn ones(len: usize) -> Self {
        Mask(bitvec![u64, Lsb0; 1; len])
    }

    pub fn zeros(len: usize) -> Self {
        Mask(bitvec![u64, Lsb0; 0; len])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Mask(bits.iter().copied().collect())
    }

    pub fn from_kept(len: usize, kept: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Mask::zeros(len);
        for i in kept {
            m.set(i, true);
        }
        m
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, keep: bool) {
        self.0.set(i, keep);
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn count_zeros(&self) -> usize {
        self.0.count_zeros()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter_ones()
    }

    pub fn iter_zeros(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter_zeros()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().by_vals()
    }

    pub fn complement(&self) -> Mask {
        Mask(!self.0.clone())
    }

    /// Fraction of pruned elements, `1 - kept / size`.
    pub fn sparsity(&self) -> Result<f64> {
        sparsity(self)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Mask {
        Mask(self.0[range].to_bitvec())
    }

    /// Storage words, bit `i` at word `i / 64` position `i % 64`; bits past
    /// the end are zero.
    pub fn words(&self) -> impl Iterator<Item = u64> + '_ {
        let raw = self.0.as_raw_slice();
        let tail = self.len() % 64;
        raw.iter().enumerate().map(move |(w, &bits)| {
            if tail != 0 && w + 1 == raw.len() {
                bits & ((1u64 << tail) - 1)
            } else {
                bits
            }
        })
    }

    /// Packed little-endian bitset: bit `i` lives in byte `i / 8` at position `i % 8`.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words().flat_map(u64::to_le_bytes).collect();
        bytes.truncate(self.len().div_ceil(8));
        bytes
    }

    pub fn from_packed_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(GltError::InvalidArgument(format!(
                "{} payload bytes for a {len}-element mask",
                bytes.len()
            )));
        }
        if !len.is_multiple_of(8) && bytes[bytes.len() - 1] >> (len % 8) != 0 {
            return Err(GltError::InvalidArgument(
                "mask payload has bits set past its universe".into(),
            ));
        }
        let mut bits: BitVec<u64, Lsb0> = bytes.view_bits::<Lsb0>().iter().by_vals().collect();
        bits.truncate(len);
        Ok(Mask(bits))
    }

    /// Mask file: magic `GLTM`, universe size as u64 LE, packed bitset.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.len().div_ceil(8));
        out.extend_from_slice(MASK_MAGIC);
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.to_packed_bytes());
        out
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MASK_MAGIC {
            return Err(GltError::InvalidArgument("not a GLTM mask file".into()));
        }
        let len = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        Mask::from_packed_bytes(len, &bytes[12..])
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| GltError::io(path, e))?;
        f.write_all(&self.to_file_bytes())
            .map_err(|e| GltError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| GltError::io(path, e))?;
        Mask::from_file_bytes(&bytes)
    }
}

/// Paired binary masks: one bit per undirected edge, and one bit per weight
/// entry with layer 0 (row-major F×H) followed by layer 1 (row-major H×C).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMasks {
    pub graph: Mask,
    pub weights: Mask,
}

impl BinaryMasks {
    pub fn dense(num_edges: usize, shape: GcnShape) -> Self {
        BinaryMasks {
            graph: Mask::ones(num_edges),
            weights: Mask::ones(shape.num_weights()),
        }
    }

    pub fn graph_sparsity(&self) -> f64 {
        sparsity(&self.graph).unwrap_or(0.0)
    }

    pub fn weight_sparsity(&self) -> f64 {
        sparsity(&self.weights).unwrap_or(0.0)
    }

    /// Weight mask of one layer as a 0/1 matrix.
    pub fn layer_matrix<T: Real>(&self, shape: GcnShape, layer: usize) -> Matrix<T> {
        let (rows, cols) = shape.layer_dims(layer);
        let offset = shape.layer_offset(layer);
        let data = (0..rows * cols)
            .map(|i| {
                if self.weights.get(offset + i) {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        Matrix::from_vec(rows, cols, data).expect("layer dims")
    }
}

/// Fraction of pruned elements, `1 - ‖M‖₀ / |M|`.
pub fn sparsity(mask: &Mask) -> Result<f64> {
    if mask.is_empty() {
        return Err(GltError::InvalidArgument(
            "sparsity of an empty universe".into(),
        ));
    }
    Ok(1.0 - mask.count_ones() as f64 / mask.len() as f64)
}

/// `s - alpha * s^beta`: the sparsity the one-shot phase lands on before
/// denoising climbs to the target.
pub fn intermediate_sparsity(s_tgt: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s_tgt) {
        return Err(GltError::InvalidArgument(format!(
            "target sparsity {s_tgt} outside [0, 1)"
        )));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(GltError::InvalidArgument(format!(
            "coefficients must be positive (alpha={alpha}, beta={beta})"
        )));
    }
    let s = s_tgt - alpha * s_tgt.powf(beta);
    if !(0.0..=s_tgt).contains(&s) {
        return Err(GltError::InvalidArgument(format!(
            "intermediate sparsity {s} for target {s_tgt} leaves [0, target]"
        )));
    }
    Ok(s)
}

/// Number of elements kept at sparsity `s`: `⌈(1 - s)·size⌉`.
///
/// A 1e-9 slack absorbs representation error so that e.g. `s = 0.4` on 1000
/// elements keeps 600, not 601.
pub fn kept_count(size: usize, s: f64) -> usize {
    let raw = ((1.0 - s) * size as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(size)
}

/// Descending `|v|`, lower index first on ties.
fn magnitude_desc(values: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then_with(|| a.cmp(&b))
    }
}

/// Indices of the `k` entries ranked first under `cmp`, in ascending index order.
pub(crate) fn select_first_k(
    mut candidates: Vec<usize>,
    k: usize,
    cmp: impl Fn(&usize, &usize) -> Ordering,
) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, &cmp);
        candidates.truncate(k);
    }
    candidates.sort_unstable();
    candidates
}

/// Keeps the `⌈(1 - s)·n⌉` entries of largest magnitude; ties keep the lower index.
pub fn one_shot_threshold(values: &[f64], s: f64) -> Result<Mask> {
    if !(0.0..1.0).contains(&s) {
        return Err(GltError::InvalidArgument(format!(
            "sparsity {s} outside [0, 1)"
        )));
    }
    let k = kept_count(values.len(), s);
    let kept = select_first_k((0..values.len()).collect(), k, magnitude_desc(values));
    Ok(Mask::from_kept(values.len(), kept))
}

/// Target and intermediate sparsities for both mask types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityPlan {
    pub s_g_tgt: f64,
    pub s_theta_tgt: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s_g_inm: f64,
    pub s_theta_inm: f64,
}

impl SparsityPlan {
    pub fn new(s_g_tgt: f64, s_theta_tgt: f64, alpha: f64, beta: f64) -> Result<Self> {
        Ok(SparsityPlan {
            s_g_tgt,
            s_theta_tgt,
            alpha,
            beta,
            s_g_inm: intermediate_sparsity(s_g_tgt, alpha, beta)?,
            s_theta_inm: intermediate_sparsity(s_theta_tgt, alpha, beta)?,
        })
    }
}

/// Trainable real-valued masks over edges and weight entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMasks<T> {
    pub graph: Vec<T>,
    pub weights: [Matrix<T>; 2],
}

impl<T: Real> SoftMasks<T> {
    pub fn ones(num_edges: usize, shape: GcnShape) -> Self {
        let (r0, c0) = shape.layer_dims(0);
        let (r1, c1) = shape.layer_dims(1);
        SoftMasks {
            graph: vec![T::one(); num_edges],
            weights: [Matrix::filled(r0, c0, T::one()), Matrix::filled(r1, c1, T::one())],
        }
    }

    /// Weight-mask values flattened in the `BinaryMasks::weights` order.
    pub fn flat_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .flat_map(|m| m.as_slice().iter().map(|v| v.as_f64()))
            .collect()
    }

    pub fn graph_f64(&self) -> Vec<f64> {
        self.graph.iter().map(|v| v.as_f64()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.graph.iter().all(|v| v.is_finite())
            && self
                .weights
                .iter()
                .all(|m| m.as_slice().iter().all(|v| v.is_finite()))
    }
}

/// Soft masks at `1 + U(-0.01, 0.01)`, seeded.
pub fn init_soft_masks<T: Real>(num_edges: usize, shape: GcnShape, seed: u64) -> SoftMasks<T> {
    let mut rng = stream(seed, Stream::SoftMaskInit);
    let mut draw = || T::of(1.0 + rng.random_range(-0.01..=0.01));
    let graph = (0..num_edges).map(|_| draw()).collect();
    let weights = [0, 1].map(|l| {
        let (r, c) = shape.layer_dims(l);
        Matrix::from_vec(r, c, (0..r * c).map(|_| draw()).collect()).expect("layer dims")
    });
    SoftMasks { graph, weights }
}

/// Writes values as raw little-endian f32, like `features.bin`.
pub fn write_soft_values(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|e| GltError::io(path, e))
}
