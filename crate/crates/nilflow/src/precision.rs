//! Phase-error budget and anchoring policy.
//!
//! The env var `NILFLOW_PRECISION` overrides the default 1e-9 absolute
//! budget on reduced phases. Incremental engines re-anchor against the
//! exact closed form often enough to keep compounded drift below the
//! budget; a tighter budget shortens the anchoring interval.

use serde::Serialize;

pub const DEFAULT_PHASE_BUDGET: f64 = 1e-9;
pub const DEFAULT_ANCHOR_INTERVAL: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PrecisionSettings {
    pub phase_budget: f64,
    pub anchor_interval: u64,
}

impl Default for PrecisionSettings {
    fn default() -> Self {
        Self::from_budget(DEFAULT_PHASE_BUDGET)
    }
}

impl PrecisionSettings {
    pub fn from_budget(budget: f64) -> Self {
        // per-step incremental drift is a few ulps; 2^20 steps stay below
        // ~1e-10, so only budgets tighter than that shrink the interval
        let anchor_interval = if budget >= 1e-10 {
            DEFAULT_ANCHOR_INTERVAL
        } else {
            1 << 16
        };
        PrecisionSettings {
            phase_budget: budget,
            anchor_interval,
        }
    }

    /// Resolve from the environment, falling back to the default budget.
    pub fn from_env() -> Self {
        match std::env::var("NILFLOW_PRECISION") {
            Ok(s) => match s.trim().parse::<f64>() {
                Ok(v) if v > 0.0 => Self::from_budget(v),
                _ => Self::default(),
            },
            Err(_) => Self::default(),
        }
    }
}
