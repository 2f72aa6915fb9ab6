use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::masking::kept_count;

/// Interval layout of the denoising phase and the swap-ratio decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSchedule {
    /// Epochs per interval (ΔT).
    pub interval: usize,
    /// Total denoising epochs (D).
    pub epochs: usize,
    /// Initial swap ratio τ.
    pub tau: f64,
    /// Decay exponent κ.
    pub kappa: f64,
}

impl DenoiseSchedule {
    pub fn new(interval: usize, epochs: usize, tau: f64, kappa: f64) -> Result<Self> {
        if interval == 0 || epochs == 0 {
            return Err(GltError::InvalidArgument(format!(
                "denoising needs interval >= 1 and epochs >= 1, got {interval} and {epochs}"
            )));
        }
        if !(0.0..=1.0).contains(&tau) || kappa.is_nan() || kappa <= 0.0 {
            return Err(GltError::InvalidArgument(format!(
                "need tau in [0, 1] and kappa > 0, got {tau} and {kappa}"
            )));
        }
        Ok(DenoiseSchedule {
            interval,
            epochs,
            tau,
            kappa,
        })
    }

    /// Number of intervals, `⌈D / ΔT⌉`.
    pub fn num_intervals(&self) -> usize {
        self.epochs.div_ceil(self.interval)
    }

    /// Interval (1-based) that epoch `d` (1-based) belongs to.
    pub fn interval_of(&self, d: usize) -> usize {
        d.div_ceil(self.interval)
    }

    /// True when epoch `d` closes its interval (the last epoch closes the final, possibly short, one).
    pub fn closes_interval(&self, d: usize) -> bool {
        d.is_multiple_of(self.interval) || d == self.epochs
    }
}

/// Swap ratio `τ (1 - μ/μ_end)^κ` for interval `mu`.
pub fn denoise_ratio(mu: usize, schedule: &DenoiseSchedule) -> Result<f64> {
    let end = schedule.num_intervals();
    if mu == 0 || mu > end {
        return Err(GltError::InvalidArgument(format!(
            "interval {mu} outside 1..={end}"
        )));
    }
    Ok(schedule.tau * (1.0 - mu as f64 / end as f64).powf(schedule.kappa))
}

/// Per-interval net shrink for one mask type: every interval removes
/// `floor(total / μ_end)` elements and the last one also takes the residue,
/// so the kept count lands exactly on `⌈(1 - s_tgt)·size⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShrinkPlan {
    pub start_kept: usize,
    pub target_kept: usize,
    pub intervals: usize,
}

impl ShrinkPlan {
    pub fn new(size: usize, s_inm: f64, s_tgt: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(GltError::InvalidArgument("zero intervals".into()));
        }
        if !(0.0 <= s_inm && s_inm <= s_tgt && s_tgt < 1.0) {
            return Err(GltError::InvalidArgument(format!(
                "need 0 <= s_inm <= s_tgt < 1, got {s_inm} and {s_tgt}"
            )));
        }
        Ok(ShrinkPlan {
            start_kept: kept_count(size, s_inm),
            target_kept: kept_count(size, s_tgt),
            intervals,
        })
    }

    pub fn total(&self) -> usize {
        self.start_kept - self.target_kept
    }

    pub fn per_interval(&self) -> usize {
        self.total() / self.intervals
    }

    /// Net removals scheduled for interval `mu` (1-based).
    pub fn n_net(&self, mu: usize) -> usize {
        let base = self.per_interval();
        if mu == self.intervals {
            self.total() - base * (self.intervals - 1)
        } else {
            base
        }
    }
}

/// Removal and regrowth counts for one mask type in one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quota {
    pub noisy: usize,
    pub potential: usize,
}

/// `N_ns = max(round(kept·Υ), n_net)` and `N_pt = N_ns - n_net`, clamped so
/// that neither exceeds the kept/pruned pools.
pub fn interval_quotas(kept: usize, pruned: usize, ratio: f64, n_net: usize) -> Result<Quota> {
    if n_net > kept {
        return Err(GltError::Precondition(format!(
            "net shrink {n_net} exceeds {kept} kept elements"
        )));
    }
    let proposed = (kept as f64 * ratio).round() as usize;
    let noisy = proposed.max(n_net).min(kept);
    let potential = (noisy - n_net).min(pruned);
    Ok(Quota {
        noisy: potential + n_net,
        potential,
    })
}
