//! Graph lottery tickets for a two-layer GCN: one-shot mask search followed
//! by gradual prune-and-regrow denoising, plus IMP, random and one-shot
//! baselines and the measurement code used to compare them.

pub mod analysis;
pub mod baselines;
pub mod denoise;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod masking;
pub mod nn;
pub mod real;
pub mod rng;
pub mod session;
pub mod ticket;

pub use error::{GltError, PhaseContext, Result};
pub use graph::{Dataset, NormAdj, Split, Splits};
pub use masking::{BinaryMasks, Mask, SoftMasks, SparsityPlan};
pub use nn::{GcnParams, GcnShape};
pub use real::Real;
pub use session::{PhaseTime, Session};
pub use ticket::{InPlace, Method, TicketRun};
