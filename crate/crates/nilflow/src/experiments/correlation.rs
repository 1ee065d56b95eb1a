//! Seeded Monte-Carlo correlations of suspension observables along the flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::FlowObservable;
use crate::specialflow::{flow, RoofFunction, SpecialFlowState};
use crate::torus::{SkewShiftParams, TorusPoint};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorrelationPoint {
    pub t: f64,
    /// Monte-Carlo estimate of int F(Phi_t sigma) G(sigma) d mu^f
    /// (normalized volume).
    pub corr: f64,
    /// Standard error of the estimate.
    pub stderr: f64,
}

/// Estimate the flow correlations <F o Phi_t, G> at each requested time,
/// sampling `sample_count` points uniformly under the roof by rejection.
/// The same sample set is reused across times, so results are deterministic
/// in the seed and smooth in t.
pub fn correlation(
    f: &RoofFunction,
    params: &SkewShiftParams,
    big_f: &FlowObservable,
    big_g: &FlowObservable,
    t_list: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<Vec<CorrelationPoint>> {
    if sample_count < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(sample_count);
    while states.len() < sample_count {
        let p = TorusPoint::from_f64(rng.gen(), rng.gen());
        let s = rng.gen::<f64>() * f.certified_max;
        if s < f.evaluate(&p) {
            states.push(SpecialFlowState { base: p, s });
        }
    }
    let g_vals: Vec<f64> = states.iter().map(|st| big_g.evaluate(f, st)).collect();

    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for (st, &gv) in states.iter().zip(&g_vals) {
            let moved = flow(f, params, st, t)?;
            let prod = big_f.evaluate(f, &moved) * gv;
            sum += prod;
            sumsq += prod * prod;
        }
        let n = sample_count as f64;
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        out.push(CorrelationPoint {
            t,
            corr: mean,
            stderr: (var / n).sqrt(),
        });
    }
    Ok(out)
}
