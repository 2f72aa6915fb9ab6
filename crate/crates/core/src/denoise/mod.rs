//! Gradual denoising: interval schedule, noisy/potential selection, the
//! mask swap and the end-to-end FastGLT driver.

mod driver;
mod schedule;
mod select;
mod update;

pub use driver::{run_fastglt, FastGltConfig, GradientAccumulator};
pub(crate) use driver::{in_place, threshold_soft};
pub use schedule::{denoise_ratio, interval_quotas, DenoiseSchedule, Quota, ShrinkPlan};
pub use select::{
    discover_potential, identify_noisy, largest_pruned, smallest_kept, smallest_pruned, Selection,
};
pub use update::{
    read_swap_records, replay_swaps, update_masks, write_swap_records, SwapRecord, TypeSwap,
};
