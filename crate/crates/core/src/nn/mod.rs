//! Masked two-layer GCN: parameters, forward/backward, loss, Adam and the
//! training loops shared by every pruning method.

mod adam;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use model::{
    accuracy, backward, evaluate_accuracy, gcn_forward, gcn_forward_dropout, masked_loss, Dropout,
    ForwardCache, GcnInputs, Gradients, GraphContext,
};
pub use train::{
    best_epoch, train_oneshot_phase, train_weights, EpochRecord, OneShotOutcome, StepOptions, Trainable,
    TrainOutcome, Trainer,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::real::Real;
use crate::rng::{stream, Stream};

/// Layer widths: features → hidden → classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnShape {
    pub features: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl GcnShape {
    pub fn new(features: usize, hidden: usize, classes: usize) -> Self {
        GcnShape {
            features,
            hidden,
            classes,
        }
    }

    pub fn layer_dims(&self, layer: usize) -> (usize, usize) {
        match layer {
            0 => (self.features, self.hidden),
            1 => (self.hidden, self.classes),
            _ => panic!("two-layer GCN has no layer {layer}"),
        }
    }

    /// Offset of a layer's entries in the flattened weight universe.
    pub fn layer_offset(&self, layer: usize) -> usize {
        match layer {
            0 => 0,
            1 => self.features * self.hidden,
            _ => panic!("two-layer GCN has no layer {layer}"),
        }
    }

    pub fn num_weights(&self) -> usize {
        self.features * self.hidden + self.hidden * self.classes
    }
}

/// Layer weights plus the frozen initialization they were drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams<T> {
    shape: GcnShape,
    theta: [Matrix<T>; 2],
    init: [Matrix<T>; 2],
}

impl<T: Real> GcnParams<T> {
    /// Glorot-uniform initialization; the result is also recorded as Θ₀.
    pub fn glorot(shape: GcnShape, seed: u64) -> Self {
        let mut rng = stream(seed, Stream::WeightInit);
        let theta = [0, 1].map(|l| {
            let (fan_in, fan_out) = shape.layer_dims(l);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| T::of(rng.random_range(-limit..=limit)))
                .collect();
            Matrix::from_vec(fan_in, fan_out, data).expect("layer dims")
        });
        GcnParams::from_init(shape, theta)
    }

    pub fn from_init(shape: GcnShape, theta: [Matrix<T>; 2]) -> Self {
        for (l, m) in theta.iter().enumerate() {
            assert_eq!(m.shape(), shape.layer_dims(l), "layer {l} shape");
        }
        GcnParams {
            shape,
            init: theta.clone(),
            theta,
        }
    }

    pub fn shape(&self) -> GcnShape {
        self.shape
    }

    pub fn theta(&self) -> &[Matrix<T>; 2] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [Matrix<T>; 2] {
        &mut self.theta
    }

    /// Θ₀, never mutated after construction.
    pub fn init(&self) -> &[Matrix<T>; 2] {
        &self.init
    }

    /// Resets the trainable weights to Θ₀.
    pub fn rewind(&mut self) {
        self.theta = self.init.clone();
    }

    /// A fresh copy whose current weights are Θ₀.
    pub fn rewound(&self) -> Self {
        GcnParams {
            shape: self.shape,
            theta: self.init.clone(),
            init: self.init.clone(),
        }
    }

    /// Current weights flattened in mask order.
    pub fn flat_theta(&self) -> Vec<f64> {
        self.theta
            .iter()
            .flat_map(|m| m.as_slice().iter().map(|v| v.as_f64()))
            .collect()
    }

    /// Overwrites one weight addressed by its flat mask index.
    pub fn set_flat(&mut self, flat: usize, value: T) {
        let split = self.shape.layer_offset(1);
        if flat < split {
            self.theta[0].as_mut_slice()[flat] = value;
        } else {
            self.theta[1].as_mut_slice()[flat - split] = value;
        }
    }

    /// Multiplies the weights by `scale` entrywise (`Θ ← Θ ⊙ scale`).
    pub fn scale_by(&mut self, scale: &[Matrix<T>; 2]) {
        for (w, s) in self.theta.iter_mut().zip(scale) {
            for (a, &b) in w.as_mut_slice().iter_mut().zip(s.as_slice()) {
                *a *= b;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta
            .iter()
            .all(|m| m.as_slice().iter().all(|v| v.is_finite()))
    }
}
