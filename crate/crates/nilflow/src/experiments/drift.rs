//! Finite-window drift searches between nearby orbits.
//!
//! The Ratner-type search tracks a_n = S_n(f)(p) - S_n(f)(q) until it
//! leaves [-1, 1], then certifies a window on which a_n sits near a single
//! element of {-1, +1} while the base points stay close. The disjointness
//! search runs the two-speed difference of pair drifts at speeds p and q
//! and records when it clears a threshold. Both report the constants they
//! measure instead of assuming any.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::circle_dist;
use crate::birkhoff::{Kahan, ModeRotor, ObservableSum, MAX_SUM_LENGTH};
use crate::error::{Error, Result};
use crate::observables::FourierObservable;
use crate::precision::PrecisionSettings;
use crate::specialflow::RoofFunction;
use crate::torus::{SkewShiftParams, TorusPoint};

/// Search configuration. All scans are budgeted by `d_max` times the
/// delta-derived time scale T and hard-capped at `max_steps`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    /// Window tolerance around the matched sign.
    pub eps: f64,
    /// Relative window length: the window is [M, ceil(M(1+kappa))].
    pub kappa: f64,
    /// Budget multiplier on T.
    pub d_max: f64,
    /// Bound on the number of stored trace points.
    pub checkpoints: usize,
    /// Disjointness crossing level.
    pub threshold: f64,
    /// Absolute abort on scanned steps.
    pub max_steps: i64,
    /// Echoed into the report for provenance.
    pub seed: u64,
    /// Permit equal speeds in the disjointness scan (noise-floor controls
    /// only; the splitting estimate itself requires p != q).
    pub allow_equal_speeds: bool,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            eps: 0.5,
            kappa: 0.01,
            d_max: 1e3,
            checkpoints: 10_000,
            threshold: 0.01,
            max_steps: 1_000_000_000,
            seed: 0,
            allow_equal_speeds: false,
        }
    }
}

/// Outcome of a drift search; self-verifying through `drift_trace`, which
/// always contains the decision points exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftReport {
    /// "ratner" or "disjointness".
    pub mode: String,
    /// The pair (Ratner) or quadruple (disjointness) of base points.
    pub points: Vec<(f64, f64)>,
    /// (delta_x, delta_y, delta_w); delta_w = 0 in Ratner mode.
    pub deltas: (f64, f64, f64),
    /// T = min(delta_x^{-2/3}, delta_y^{-2} [, delta_w^{-2}]) over the
    /// nonzero deltas.
    pub t_scale: f64,
    /// The alternative printed variant min(delta_x^{-2/3}, delta_y^{2}),
    /// logged for comparison; the scan budget uses `t_scale`.
    pub t_scale_alt: f64,
    /// First n with |a_n| > 1 (Ratner) / first s at the threshold
    /// (disjointness).
    pub n0: Option<i64>,
    /// First n >= n0 with min(|a_n - 1|, |a_n + 1|) <= eps/3.
    pub m: Option<i64>,
    /// Certified window length (window = [M, M + L]).
    pub l: i64,
    /// L / M for the certified window (0 when no window exists).
    pub kappa: f64,
    /// +1 or -1: the element of {-1, +1} matched at M.
    pub matched_sign: Option<i8>,
    /// Whether a_n stayed within eps of the matched sign and the base
    /// points stayed eps-close throughout the window.
    pub window_ok: Option<bool>,
    /// (n, a_n) at thinned checkpoints plus all decision points.
    pub drift_trace: Vec<(i64, f64)>,
    /// Empirical constants (D, max_increment, crossing_excess, d_triple, ...).
    pub measured_constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub seed: u64,
    /// Step budget the scan was allowed.
    pub budget: i64,
    /// Steps actually consumed.
    pub steps_used: i64,
}

/// Representative of t in (-1/2, 1/2].
fn signed_frac(t: f64) -> f64 {
    let r = t - t.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// min over the listed (delta, exponent) pairs with delta > 0 of
/// delta^exponent; +inf when every delta vanishes.
fn time_scale(entries: &[(f64, f64)]) -> f64 {
    entries
        .iter()
        .filter(|(d, _)| *d > 0.0)
        .map(|(d, e)| d.powf(*e))
        .fold(f64::INFINITY, f64::min)
}

fn clamp_budget(raw: f64, cfg: &DriftConfig) -> i64 {
    let capped = (raw.min(cfg.max_steps as f64)).min(MAX_SUM_LENGTH as f64 - 1.0);
    (capped.max(0.0)).ceil() as i64
}

/// Decimating trace buffer: stores every `stride`-th sample and doubles the
/// stride whenever the buffer would exceed its cap, so the final density is
/// about cap points over the whole scan.
struct TraceBuffer {
    stride: i64,
    cap: usize,
    buf: Vec<(i64, f64)>,
    forced: Vec<(i64, f64)>,
}

impl TraceBuffer {
    fn new(cap: usize) -> Self {
        TraceBuffer {
            stride: 1,
            cap: cap.max(16),
            buf: Vec::new(),
            forced: Vec::new(),
        }
    }

    fn push(&mut self, n: i64, v: f64) {
        if n % self.stride == 0 {
            self.buf.push((n, v));
            if self.buf.len() > self.cap {
                self.stride *= 2;
                let s = self.stride;
                self.buf.retain(|&(k, _)| k % s == 0);
            }
        }
    }

    /// Record a decision point verbatim, regardless of the stride.
    fn force(&mut self, n: i64, v: f64) {
        self.forced.push((n, v));
    }

    fn into_trace(mut self) -> Vec<(i64, f64)> {
        self.buf.append(&mut self.forced);
        self.buf.sort_by_key(|&(n, _)| n);
        self.buf.dedup_by_key(|&mut (n, _)| n);
        self.buf
    }
}

/// Incremental a_n = S_n(g)(p) - S_n(g)(q) through paired mode engines.
/// The mean mode cancels exactly in the difference and is skipped; the
/// remaining Hermitian modes are folded onto one half-plane representative
/// each, halving the work.
struct PairScanner<'a> {
    modes: Vec<(Complex64, f64, ModeRotor<'a>, ModeRotor<'a>)>,
    total: Kahan,
    n: i64,
}

impl<'a> PairScanner<'a> {
    fn new(
        g: &FourierObservable,
        params: &'a SkewShiftParams,
        p: &TorusPoint,
        q: &TorusPoint,
        precision: PrecisionSettings,
    ) -> Result<Self> {
        g.check_hermitian()?;
        let mut modes = Vec::new();
        for (&(a, b), &c) in g.coefficients() {
            if (a, b) == (0, 0) || c.norm() == 0.0 {
                continue;
            }
            // keep the (b, a)-lexicographically positive representative of
            // each conjugate pair, with weight 2
            if b < 0 || (b == 0 && a < 0) {
                continue;
            }
            modes.push((
                c,
                2.0,
                ModeRotor::new(params, p, a, b, precision)?,
                ModeRotor::new(params, q, a, b, precision)?,
            ));
        }
        Ok(PairScanner {
            modes,
            total: Kahan::default(),
            n: 0,
        })
    }

    /// a_n over the terms consumed so far.
    #[inline]
    fn value(&self) -> f64 {
        self.total.value()
    }

    #[inline]
    fn n(&self) -> i64 {
        self.n
    }

    #[inline]
    fn advance(&mut self) -> Result<()> {
        let mut term = 0.0;
        for (c, w, mp, mq) in &self.modes {
            let d = mp.current_term() - mq.current_term();
            term += w * (c * d).re;
        }
        self.total.add(term);
        for (_, _, mp, mq) in &mut self.modes {
            mp.advance()?;
            mq.advance()?;
        }
        self.n += 1;
        Ok(())
    }
}

/// Ratner-type drift search for the pair (p, q) under the roof f.
pub fn ratner_drift(
    f: &RoofFunction,
    params: &SkewShiftParams,
    p: &TorusPoint,
    q: &TorusPoint,
    cfg: &DriftConfig,
) -> Result<DriftReport> {
    let dx_signed = signed_frac(p.x().sub(&q.x()).value());
    let dy_signed = signed_frac(p.y().sub(&q.y()).value());
    let (dx, dy) = (dx_signed.abs(), dy_signed.abs());
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegeneratePair);
    }
    // tolerate representation roundoff at the boundary
    if dx + dy > 1e-2 * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "pair separation {:.3e} too large: need delta_x + delta_y <= 1e-2",
            dx + dy
        )));
    }
    let t_scale = time_scale(&[(dx, -2.0 / 3.0), (dy, -2.0)]);
    let t_alt = time_scale(&[(dx, -2.0 / 3.0), (dy, 2.0)]);
    let budget = clamp_budget(cfg.d_max * t_scale, cfg);
    // the certified window may extend past the crossing budget, but never
    // past twice of it
    let hard_max = clamp_budget(2.0 * cfg.d_max * t_scale, cfg);

    let precision = PrecisionSettings::from_env();
    let mut scan = PairScanner::new(&f.obs, params, p, q, precision)?;
    let mut trace = TraceBuffer::new(cfg.checkpoints);

    let mut n0: Option<i64> = None;
    let mut m: Option<i64> = None;
    let mut matched_sign: Option<i8> = None;
    let mut window_ok: Option<bool> = None;
    let mut window_end: i64 = 0;
    let mut prev_a = 0.0f64;
    let mut max_increment = 0.0f64;
    let mut crossing_excess = f64::NAN;
    let d1 = circle_dist(dx_signed);

    loop {
        let n = scan.n();
        let a = scan.value();
        trace.push(n, a);
        max_increment = max_increment.max((a - prev_a).abs());
        prev_a = a;

        if n0.is_none() && a.abs() > 1.0 {
            n0 = Some(n);
            crossing_excess = a.abs() - 1.0;
            trace.force(n, a);
        }
        if n0.is_some() && m.is_none() {
            let near = (a - 1.0).abs().min((a + 1.0).abs());
            if near <= cfg.eps / 3.0 {
                m = Some(n);
                matched_sign = Some(if (a - 1.0).abs() <= (a + 1.0).abs() {
                    1
                } else {
                    -1
                });
                window_end = ((n as f64) * (1.0 + cfg.kappa)).ceil() as i64;
                window_end = window_end.max(n + 1).min(hard_max);
                window_ok = Some(true);
                trace.force(n, a);
            }
        }
        if let Some(sign) = matched_sign {
            if n <= window_end {
                let d2 = circle_dist(dy_signed + n as f64 * dx_signed);
                if (a - sign as f64).abs() > cfg.eps || d1 >= cfg.eps || d2 >= cfg.eps {
                    window_ok = Some(false);
                }
            }
            if n >= window_end {
                trace.force(n, a);
                break;
            }
        } else if n >= if n0.is_some() { hard_max } else { budget } {
            trace.force(n, a);
            break;
        }
        scan.advance()?;
    }

    let steps_used = scan.n();
    let mut constants = BTreeMap::new();
    constants.insert("max_increment".into(), max_increment);
    if let Some(n0) = n0 {
        constants.insert("D".into(), n0 as f64 / t_scale);
        constants.insert("crossing_excess".into(), crossing_excess);
    }
    if m.is_some() {
        constants.insert("D_window".into(), window_end as f64 / t_scale);
    }
    let l = m.map(|m| window_end - m).unwrap_or(0);
    Ok(DriftReport {
        mode: "ratner".into(),
        points: vec![(p.x_f64(), p.y_f64()), (q.x_f64(), q.y_f64())],
        deltas: (dx, dy, 0.0),
        t_scale,
        t_scale_alt: t_alt,
        n0,
        m,
        l,
        kappa: m.map(|m| l as f64 / m as f64).unwrap_or(0.0),
        matched_sign,
        window_ok,
        drift_trace: trace.into_trace(),
        measured_constants: constants,
        pass: n0.is_some(),
        seed: cfg.seed,
        budget,
        steps_used,
    })
}

/// Two-speed disjointness drift for the quadruple
/// ((x,y), (x',y'), (z,w), (z,w')) at integer speeds p < q:
/// drift(s) = [S_s(f/p)(z,w) - S_s(f/p)(z,w')]
///          - [S_{[zeta s]}(f/q)(x,y) - S_{[zeta s]}(f/q)(x',y')],
/// zeta = q/p.
pub fn disjointness_drift(
    f: &RoofFunction,
    params: &SkewShiftParams,
    p_int: u32,
    q_int: u32,
    quad: &[TorusPoint; 4],
    cfg: &DriftConfig,
) -> Result<DriftReport> {
    if p_int == 0 || q_int == 0 {
        return Err(Error::Precondition("speeds must be positive".into()));
    }
    if p_int == q_int && !cfg.allow_equal_speeds {
        return Err(Error::Precondition(
            "equal speeds p = q: the splitting estimate requires p != q".into(),
        ));
    }
    let [xy, xy2, zw, zw2] = quad;
    if signed_frac(zw.x().sub(&zw2.x()).value()).abs() > 1e-15 {
        return Err(Error::Precondition(
            "third and fourth points must share the first coordinate".into(),
        ));
    }
    let dx = signed_frac(xy.x().sub(&xy2.x()).value()).abs();
    let dy = signed_frac(xy.y().sub(&xy2.y()).value()).abs();
    let dw = signed_frac(zw.y().sub(&zw2.y()).value()).abs();
    let t_scale = time_scale(&[(dx, -2.0 / 3.0), (dy, -2.0), (dw, -2.0)]);
    let t_alt = time_scale(&[(dx, -2.0 / 3.0), (dy, 2.0), (dw, 2.0)]);
    let budget = clamp_budget(cfg.d_max * t_scale, cfg);
    let zeta = q_int as f64 / p_int as f64;

    let precision = PrecisionSettings::from_env();
    let slow = f.obs.scale(1.0 / p_int as f64);
    let fast = f.obs.scale(1.0 / q_int as f64);
    let mut first = PairScanner::new(&slow, params, zw, zw2, precision)?;
    let mut second = PairScanner::new(&fast, params, xy, xy2, precision)?;
    let mut trace = TraceBuffer::new(cfg.checkpoints);

    let mut max_drift = 0.0f64;
    let mut argmax: i64 = 0;
    let mut drift_at_argmax = 0.0f64;
    let mut first_cross: Option<i64> = None;

    loop {
        let s = first.n();
        let target = (q_int as i64 * s) / p_int as i64;
        while second.n() < target {
            second.advance()?;
        }
        let drift = first.value() - second.value();
        trace.push(s, drift);
        if drift.abs() > max_drift {
            max_drift = drift.abs();
            argmax = s;
            drift_at_argmax = drift;
        }
        if first_cross.is_none() && drift.abs() >= cfg.threshold {
            first_cross = Some(s);
            trace.force(s, drift);
        }
        if s >= budget {
            trace.force(s, drift);
            break;
        }
        first.advance()?;
    }
    trace.force(argmax, drift_at_argmax);

    let steps_used = first.n() + second.n();
    let mut constants = BTreeMap::new();
    constants.insert("d_triple".into(), max_drift);
    constants.insert("zeta".into(), zeta);
    constants.insert("argmax_s".into(), argmax as f64);
    if let Some(s) = first_cross {
        constants.insert("D".into(), s as f64 / t_scale);
    }
    Ok(DriftReport {
        mode: "disjointness".into(),
        points: quad.iter().map(|p| (p.x_f64(), p.y_f64())).collect(),
        deltas: (dx, dy, dw),
        t_scale,
        t_scale_alt: t_alt,
        n0: first_cross,
        m: None,
        l: 0,
        kappa: 0.0,
        matched_sign: None,
        window_ok: None,
        drift_trace: trace.into_trace(),
        measured_constants: constants,
        pass: first_cross.is_some(),
        seed: cfg.seed,
        budget,
        steps_used,
    })
}

/// Empirical linear-splitting probe: maximize
/// |S_{n'}(h)(z,w) - zeta^{-1/2} S_{[zeta n']}(h)(x,y)| over n' in
/// [0, d_max * T] and report the T^{1/2}-normalized maximum.
#[derive(Clone, Debug, Serialize)]
pub struct LinsplitReport {
    pub best_n: i64,
    pub best_value: f64,
    /// best_value / T^{1/2}: the empirical splitting constant.
    pub normalized: f64,
    pub zeta: f64,
    pub budget: i64,
}

pub fn linsplit_probe(
    h: &FourierObservable,
    params: &SkewShiftParams,
    p_int: u32,
    q_int: u32,
    xy: &TorusPoint,
    zw: &TorusPoint,
    t: f64,
    d_max: f64,
) -> Result<LinsplitReport> {
    if p_int == 0 || q_int == 0 {
        return Err(Error::Precondition("speeds must be positive".into()));
    }
    if !(t > 0.0) || !(d_max > 0.0) {
        return Err(Error::Precondition("T and d_max must be positive".into()));
    }
    if h.mean().abs() > 1e-12 {
        return Err(Error::Precondition("observable must have zero mean".into()));
    }
    let zeta = q_int as f64 / p_int as f64;
    let budget = ((d_max * t).min(MAX_SUM_LENGTH as f64 - 1.0)).ceil() as i64;
    let precision = PrecisionSettings::from_env();
    let mut at_zw = ObservableSum::new(h, params, zw, precision)?;
    let mut at_xy = ObservableSum::new(h, params, xy, precision)?;
    let mut best_n = 0i64;
    let mut best = 0.0f64;
    loop {
        let n = at_zw.n();
        let target = (q_int as i64 * n) / p_int as i64;
        while at_xy.n() < target {
            at_xy.advance()?;
        }
        let v = (at_zw.value() - at_xy.value() / zeta.sqrt()).abs();
        if v > best {
            best = v;
            best_n = n;
        }
        if n >= budget {
            break;
        }
        at_zw.advance()?;
    }
    Ok(LinsplitReport {
        best_n,
        best_value: best,
        normalized: best / t.sqrt(),
        zeta,
        budget,
    })
}
