//! Finite-window drift searches and statistical probes: Ratner-type drift
//! between nearby orbits, the two-speed disjointness drift, linear-splitting
//! probes, Moebius-weighted flow averages, Monte-Carlo correlations, and a
//! deterministic batch runner.

pub mod batch;
pub mod correlation;
pub mod drift;
pub mod moebius;
pub mod presets;

pub use batch::{batch, BatchReport, JobKind, JobOutcome, JobSpec};
pub use correlation::{correlation, CorrelationPoint};
pub use drift::{
    disjointness_drift, linsplit_probe, ratner_drift, DriftConfig, DriftReport, LinsplitReport,
};
pub use moebius::{moebius_sieve, moebius_sum, MoebiusTable, Weighting};
pub use presets::{preset_observable, preset_roof};

use crate::observables::{evaluate_unchecked, FourierObservable};
use crate::specialflow::{RoofFunction, SpecialFlowState};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Observable on the suspension space {(p, s) : 0 <= s < f(p)}: a base
/// observable times a fiber window in the normalized roof coordinate s/f(p).
#[derive(Clone, Debug)]
pub struct FlowObservable {
    pub base: FourierObservable,
    pub window: FiberWindow,
}

/// Fiber profile w(u) on u = s/f(p) in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberWindow {
    /// w(u) = 1.
    Flat,
    /// w(u) = sin^2(pi u); vanishes at both cell boundaries, so the
    /// observable is continuous on the suspension.
    SinSq,
}

impl FlowObservable {
    pub fn new(base: FourierObservable, window: FiberWindow) -> Self {
        FlowObservable { base, window }
    }

    pub fn evaluate(&self, f: &RoofFunction, st: &SpecialFlowState) -> f64 {
        let b = evaluate_unchecked(&self.base, &st.base);
        match self.window {
            FiberWindow::Flat => b,
            FiberWindow::SinSq => {
                let u = st.s / f.evaluate(&st.base);
                b * (PI * u).sin().powi(2)
            }
        }
    }
}
