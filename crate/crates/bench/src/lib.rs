//! Shared fixtures for the criterion benchmarks.

use fastglt_core::graph::{generate_sbm, SbmSpec};
use fastglt_core::Dataset;

/// A planted-partition graph roughly the size of Cora (2800 nodes, ~5k edges).
pub fn cora_sized() -> Dataset {
    let mut spec = SbmSpec::new(7, 400, 0.0075, 0.00025, 256, 7);
    spec.mean_scale = 0.5;
    generate_sbm(&spec).expect("valid sbm spec")
}

/// A small graph for per-call kernels.
pub fn small() -> Dataset {
    generate_sbm(&SbmSpec::new(4, 50, 0.1, 0.01, 32, 1)).expect("valid sbm spec")
}
