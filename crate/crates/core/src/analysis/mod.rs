//! Measurement code: ticket reports, the MAC cost model, pruned-set
//! statistics, mask-distance curves and relative wall-clock time.

mod figures;
mod macs;
mod report;

pub use figures::{
    distance_curve, init_gradient_magnitudes, pruned_set_stats, read_csv, timing_report, write_csv,
    DistanceRow, EfficiencyRow, PrunedStats,
};
pub use macs::mac_count;
pub use report::{RunInfo, TicketReport, Timing, SCHEMA_VERSION};
