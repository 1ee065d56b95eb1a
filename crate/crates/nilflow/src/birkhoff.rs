//! Birkhoff sums S_N(g) along the skew-shift: a direct anchored-orbit
//! engine, a per-mode incremental rotation engine, sup-norm estimation by
//! orbit sampling, grid L^2 profiles, and growth-exponent fits.
//!
//! The mode engine exploits that the phase of e_{a,b} along an orbit is a
//! quadratic polynomial in the step index: its first difference rotates by a
//! fixed factor e^{2 pi i b alpha} each step, so each term costs two complex
//! multiplications and no trig. Both engines re-anchor against the exact
//! closed form every `anchor_interval` steps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

#[cfg(test)]
use crate::arith::reduce_quadratic_phase;
use crate::arith::{ExtendedReal, PhaseAngle};
use crate::error::{Error, Result};
use crate::observables::{evaluate_unchecked, FourierObservable, TAU};
use crate::precision::PrecisionSettings;
use crate::torus::{iterate, OrbitIter, SkewShiftParams, TorusPoint};

/// Sum-length bound for both engines.
pub const MAX_SUM_LENGTH: i64 = 1 << 33;

/// Rotor refresh interval. The second-difference rotors compound their
/// rounding into the running phase quadratically in the interval, so they are
/// refreshed from the compensated phase (one sincos) every 64 terms, keeping
/// per-term phase drift near 2e-13; the compensated phases themselves are
/// re-anchored against the exact reduction every `anchor_interval` terms.
const ROTOR_REFRESH: u64 = 64;

/// Kahan-compensated real accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    #[inline]
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

fn unit(phase01: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * phase01)
}

/// phase(a, b, k) at the point p: the exponent of e_{a,b} at Phi^k p, mod 1.
#[cfg(test)]
fn mode_phase(a: i64, b: i64, k: i64, params: &SkewShiftParams, p: &TorusPoint) -> Result<f64> {
    reduce_quadratic_phase(a, b, k, &params.alpha.angle, &p.x(), &p.y(), &params.beta)
}

/// First difference phase(a,b,k+1) - phase(a,b,k) = (a + b k) alpha + b beta + b x, mod 1.
fn mode_increment_phase(
    a: i64,
    b: i64,
    k: i64,
    params: &SkewShiftParams,
    p: &TorusPoint,
) -> ExtendedReal {
    let alpha: &PhaseAngle = &params.alpha.angle;
    alpha
        .mul_int_frac(a as i128 + b as i128 * k as i128)
        .add(&params.beta.mul_int_frac(b as i128))
        .add(&p.x().mul_i128(b as i128).frac())
        .frac()
}

/// Incremental term engine for e^{2 pi i phase(a,b,k)} along an orbit.
///
/// The phase of term k and its first difference advance by compensated
/// additions (reduction mod 1 is deferred to the refresh, where it is
/// exact); the unit-complex terms advance by rotor multiplications that
/// are refreshed from the compensated phases every [`ROTOR_REFRESH`] steps
/// and re-anchored against the exact reduction every `anchor_interval`.
pub struct ModeRotor<'a> {
    params: &'a SkewShiftParams,
    p: TorusPoint,
    a: i64,
    b: i64,
    k: i64,
    phi: ExtendedReal,
    delta: ExtendedReal,
    b_alpha: ExtendedReal,
    z: Complex64,
    r: Complex64,
    rho: Complex64,
    anchor_interval: u64,
    since_anchor: u64,
    since_refresh: u64,
}

impl<'a> ModeRotor<'a> {
    pub fn new(
        params: &'a SkewShiftParams,
        p: &TorusPoint,
        a: i64,
        b: i64,
        precision: PrecisionSettings,
    ) -> Result<Self> {
        let b_alpha = params.alpha.angle.mul_int_frac(b as i128);
        let mut mr = ModeRotor {
            params,
            p: *p,
            a,
            b,
            k: 0,
            phi: ExtendedReal::ZERO,
            delta: ExtendedReal::ZERO,
            b_alpha,
            z: Complex64::new(1.0, 0.0),
            r: Complex64::new(1.0, 0.0),
            rho: unit(b_alpha.value()),
            anchor_interval: precision.anchor_interval,
            since_anchor: 0,
            since_refresh: 0,
        };
        mr.anchor()?;
        Ok(mr)
    }

    fn anchor(&mut self) -> Result<()> {
        self.phi = crate::arith::reduce_quadratic_phase_dd(
            self.a,
            self.b,
            self.k,
            &self.params.alpha.angle,
            &self.p.x(),
            &self.p.y(),
            &self.params.beta,
        )?;
        self.delta = mode_increment_phase(self.a, self.b, self.k, self.params, &self.p);
        self.refresh();
        self.since_anchor = 0;
        Ok(())
    }

    fn refresh(&mut self) {
        // phi and delta drift from [0, 1) between refreshes (the per-step
        // additions skip the reduction); frac() is exact on the double-double
        // pair, and their magnitude stays below ~ROTOR_REFRESH^2, so nothing
        // is lost
        self.phi = self.phi.frac();
        self.delta = self.delta.frac();
        self.z = unit(self.phi.value());
        self.r = unit(self.delta.value());
        self.since_refresh = 0;
    }

    /// Number of terms consumed so far.
    pub fn n(&self) -> i64 {
        self.k
    }

    /// e^{2 pi i phase(a,b,n)}, the next term to be consumed.
    #[inline]
    pub fn current_term(&self) -> Complex64 {
        self.z
    }

    /// Consume one term.
    #[inline]
    pub fn advance(&mut self) -> Result<()> {
        self.k += 1;
        if self.k > MAX_SUM_LENGTH {
            return Err(Error::Domain("mode sum length exceeds 2^33".into()));
        }
        self.phi = self.phi.add(&self.delta);
        self.delta = self.delta.add(&self.b_alpha);
        self.since_anchor += 1;
        self.since_refresh += 1;
        if self.since_anchor >= self.anchor_interval {
            self.anchor()?;
        } else if self.since_refresh >= ROTOR_REFRESH {
            self.refresh();
        } else {
            self.z *= self.r;
            self.r *= self.rho;
        }
        Ok(())
    }
}

/// Incremental engine for S_n(e_{a,b})(p) = sum_{k<n} e^{2 pi i phase(a,b,k)}:
/// a [`ModeRotor`] plus a compensated complex accumulator.
pub struct ModeSum<'a> {
    rotor: ModeRotor<'a>,
    sum: KahanComplex,
}

impl<'a> ModeSum<'a> {
    pub fn new(
        params: &'a SkewShiftParams,
        p: &TorusPoint,
        a: i64,
        b: i64,
        precision: PrecisionSettings,
    ) -> Result<Self> {
        Ok(ModeSum {
            rotor: ModeRotor::new(params, p, a, b, precision)?,
            sum: KahanComplex::default(),
        })
    }

    /// Number of terms consumed so far.
    pub fn n(&self) -> i64 {
        self.rotor.n()
    }

    /// e^{2 pi i phase(a,b,n)}, the next term to be consumed.
    #[inline]
    pub fn current_term(&self) -> Complex64 {
        self.rotor.current_term()
    }

    /// sum_{k<n} of the terms consumed so far.
    #[inline]
    pub fn partial(&self) -> Complex64 {
        self.sum.value()
    }

    /// Consume one term.
    #[inline]
    pub fn advance(&mut self) -> Result<()> {
        self.sum.add(self.rotor.current_term());
        self.rotor.advance()
    }
}

/// S_N(e_{a,b})(p) for N >= 0.
pub fn birkhoff_sum_mode(
    a: i64,
    b: i64,
    params: &SkewShiftParams,
    p: &TorusPoint,
    n: i64,
) -> Result<Complex64> {
    if !(0..=MAX_SUM_LENGTH).contains(&n) {
        return Err(Error::Domain(format!("mode sum length {n} out of range")));
    }
    let mut ms = ModeSum::new(params, p, a, b, PrecisionSettings::from_env())?;
    for _ in 0..n {
        ms.advance()?;
    }
    Ok(ms.partial())
}

/// Incremental S_n(g)(p) for a full observable, as coefficient-weighted mode
/// sums with an O(1) running value.
pub struct ObservableSum<'a> {
    modes: Vec<(Complex64, ModeRotor<'a>)>,
    total: Kahan,
    n: i64,
}

impl<'a> ObservableSum<'a> {
    pub fn new(
        g: &FourierObservable,
        params: &'a SkewShiftParams,
        p: &TorusPoint,
        precision: PrecisionSettings,
    ) -> Result<Self> {
        let mut modes = Vec::with_capacity(g.coefficients().len());
        for (&(a, b), &c) in g.coefficients() {
            modes.push((c, ModeRotor::new(params, p, a, b, precision)?));
        }
        Ok(ObservableSum {
            modes,
            total: Kahan::default(),
            n: 0,
        })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    /// S_n(g)(p) over the terms consumed so far.
    #[inline]
    pub fn value(&self) -> f64 {
        self.total.value()
    }

    #[inline]
    pub fn advance(&mut self) -> Result<()> {
        let mut term = Kahan::default();
        for (c, m) in &self.modes {
            term.add((c * m.current_term()).re);
        }
        self.total.add(term.value());
        for (_, m) in &mut self.modes {
            m.advance()?;
        }
        self.n += 1;
        Ok(())
    }
}

/// S_N(g)(p) by direct evaluation along an anchored orbit. Negative N uses
/// the cocycle inverse S_{-M}(g)(p) = -S_M(g)(Phi^{-M} p).
pub fn birkhoff_sum_direct(
    g: &FourierObservable,
    params: &SkewShiftParams,
    p: &TorusPoint,
    n: i64,
) -> Result<f64> {
    if n.abs() > MAX_SUM_LENGTH {
        return Err(Error::Domain(format!("sum length {n} out of range")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if n < 0 {
        let base = iterate(params, p, n)?;
        return Ok(-birkhoff_sum_direct(g, params, &base, -n)?);
    }
    let mut iter = OrbitIter::new(params, p, 0, PrecisionSettings::from_env())?;
    let mut acc = Kahan::default();
    for _ in 0..n {
        acc.add(evaluate_unchecked(g, &iter.current()));
        iter.advance()?;
    }
    Ok(acc.value())
}

/// S_N(g)(p) through the mode engine (fast path used everywhere below).
pub fn birkhoff_sum_modes(
    g: &FourierObservable,
    params: &SkewShiftParams,
    p: &TorusPoint,
    n: i64,
) -> Result<f64> {
    if !(0..=MAX_SUM_LENGTH).contains(&n) {
        return Err(Error::Domain(format!("sum length {n} out of range")));
    }
    let mut os = ObservableSum::new(g, params, p, PrecisionSettings::from_env())?;
    for _ in 0..n {
        os.advance()?;
    }
    Ok(os.value())
}

/// Checkpointed Birkhoff values at one point.
#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffProfile {
    pub checkpoints: Vec<i64>,
    pub values: Vec<f64>,
    pub point: (f64, f64),
    pub observable_modes: usize,
}

impl BirkhoffProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value\n");
        for (n, v) in self.checkpoints.iter().zip(&self.values) {
            out.push_str(&format!("{n},{v:.17e}\n"));
        }
        out
    }
}

/// S_N(g)(p) at every checkpoint, in one pass.
pub fn birkhoff_profile(
    g: &FourierObservable,
    params: &SkewShiftParams,
    p: &TorusPoint,
    checkpoints: &[i64],
) -> Result<BirkhoffProfile> {
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.first().is_some_and(|&n| n < 0) || sorted.last().is_some_and(|&n| n > MAX_SUM_LENGTH)
    {
        return Err(Error::Domain("checkpoints out of range".into()));
    }
    let mut os = ObservableSum::new(g, params, p, PrecisionSettings::from_env())?;
    let mut values = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        while os.n() < n {
            os.advance()?;
        }
        values.push(os.value());
    }
    Ok(BirkhoffProfile {
        checkpoints: sorted,
        values,
        point: (p.x_f64(), p.y_f64()),
        observable_modes: g.coefficients().len(),
    })
}

/// Low-discrepancy base points for sampling estimates.
fn sample_base_points(count: usize) -> Vec<TorusPoint> {
    const G1: f64 = 0.618_033_988_749_894_9;
    const G2: f64 = 0.381_966_011_250_105_2;
    (0..count)
        .map(|i| {
            let t = i as f64 + 0.5;
            TorusPoint::from_f64((t * G1).rem_euclid(1.0), (t * G2).rem_euclid(1.0))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SupNormEstimate {
    pub value: f64,
    /// sample argmax: base point and orbit offset m with S_N at Phi^m(base)
    pub argmax_base: (f64, f64),
    pub argmax_offset: i64,
    pub samples: u64,
}

/// Lower estimate of ||S_N(g)||_{C^0} by sampling S_N over a coarse set of
/// base points and, from each, every point of an orbit segment of length N
/// (the segment samples come free from prefix sums via the cocycle
/// identity S_N(g)(Phi^m p) = S_{N+m}(g)(p) - S_m(g)(p)).
pub fn sup_norm_estimate(
    g: &FourierObservable,
    params: &SkewShiftParams,
    n: i64,
    budget: u64,
) -> Result<SupNormEstimate> {
    if budget < 1_000 {
        return Err(Error::Precondition(
            "sup-norm budget must be >= 10^3".into(),
        ));
    }
    if !(1..=MAX_SUM_LENGTH).contains(&n) {
        return Err(Error::Domain(format!("sum length {n} out of range")));
    }
    let bases = sample_base_points((budget / 250).clamp(4, 64) as usize);
    let per_base: Vec<Result<(f64, usize, i64, u64)>> = bases
        .par_iter()
        .enumerate()
        .map(|(bi, base)| {
            let precision = PrecisionSettings::from_env();
            let mut os = ObservableSum::new(g, params, base, precision)?;
            let len = (2 * n) as usize;
            let mut prefix = vec![0.0f64; len + 1];
            for m in 1..=len {
                os.advance()?;
                prefix[m] = os.value();
            }
            let mut best = 0.0f64;
            let mut best_m = 0i64;
            for m in 0..=(n as usize) {
                let v = (prefix[m + n as usize] - prefix[m]).abs();
                if v > best {
                    best = v;
                    best_m = m as i64;
                }
            }
            Ok((best, bi, best_m, n as u64 + 1))
        })
        .collect();
    let mut value = 0.0f64;
    let mut argmax_base = bases[0];
    let mut argmax_offset = 0i64;
    let mut samples = 0u64;
    for r in per_base {
        let (best, bi, m, s) = r?;
        samples += s;
        if best > value {
            value = best;
            argmax_base = bases[bi];
            argmax_offset = m;
        }
    }
    Ok(SupNormEstimate {
        value,
        argmax_base: (argmax_base.x_f64(), argmax_base.y_f64()),
        argmax_offset,
        samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub per_n: Vec<(i64, f64)>,
    pub excluded: Vec<i64>,
    pub precision_budget: f64,
}

/// Least-squares slope of log sup_norm_estimate vs log N. Checkpoints below
/// 2^10 are excluded as preasymptotic; after exclusion the fit requires at
/// least 5 checkpoints spanning 3 decades.
pub fn growth_exponent(
    g: &FourierObservable,
    params: &SkewShiftParams,
    n_list: &[i64],
    budget: u64,
) -> Result<GrowthFit> {
    if g.is_zero() {
        return Err(Error::UndefinedFit("zero observable".into()));
    }
    let mut ns: Vec<i64> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let excluded: Vec<i64> = ns.iter().copied().filter(|&n| n < (1 << 10)).collect();
    let ns: Vec<i64> = ns.into_iter().filter(|&n| n >= (1 << 10)).collect();
    if ns.len() < 5 {
        return Err(Error::Precondition(
            "growth fit needs >= 5 checkpoints at N >= 2^10".into(),
        ));
    }
    let span = (*ns.last().unwrap() as f64 / ns[0] as f64).log10();
    if span < 3.0 {
        return Err(Error::Precondition(
            "growth fit checkpoints must span >= 3 decades".into(),
        ));
    }
    let per_n: Vec<(i64, f64)> = ns
        .iter()
        .map(|&n| Ok((n, sup_norm_estimate(g, params, n, budget)?.value)))
        .collect::<Result<_>>()?;
    if per_n.iter().any(|&(_, v)| v <= 0.0) {
        return Err(Error::UndefinedFit(
            "sup-norm estimate vanished at a checkpoint".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = per_n
        .iter()
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    let (slope, intercept, r2) = linear_fit(&pts);
    Ok(GrowthFit {
        slope,
        intercept,
        r2,
        per_n,
        excluded,
        precision_budget: PrecisionSettings::from_env().phase_budget,
    })
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Grid L^2 norm ||S_N(g)||_{L^2} on the G x G grid at every checkpoint,
/// one pass per x-column.
///
/// S_N(g)(x, y) = sum_b e^{2 pi i b y} A_b(x) with A_b independent of y, so
/// the exact y-grid average of |S_N|^2 is sum_b |A_b(x)|^2 whenever all mode
/// frequency differences satisfy |b - b'| < G.
pub fn l2_profile(
    g: &FourierObservable,
    params: &SkewShiftParams,
    checkpoints: &[i64],
    grid: usize,
) -> Result<Vec<(i64, f64)>> {
    if grid < 2 {
        return Err(Error::Precondition("grid resolution must be >= 2".into()));
    }
    if 2 * g.support_radius() >= grid as i64 {
        return Err(Error::Precondition(
            "grid too coarse for the mode support".into(),
        ));
    }
    let mut ns = checkpoints.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.first().is_some_and(|&n| n < 0) || ns.last().is_some_and(|&n| n > MAX_SUM_LENGTH) {
        return Err(Error::Domain("checkpoints out of range".into()));
    }
    // per x-column: sum over b of |A_b(x)|^2 at each checkpoint
    let columns: Vec<Result<Vec<f64>>> = (0..grid)
        .into_par_iter()
        .map(|ix| {
            let precision = PrecisionSettings::from_env();
            let p = TorusPoint::from_f64(ix as f64 / grid as f64, 0.0);
            let mut trackers: Vec<(i64, Complex64, ModeSum)> = Vec::new();
            for (&(a, b), &c) in g.coefficients() {
                trackers.push((b, c, ModeSum::new(params, &p, a, b, precision)?));
            }
            let mut bs: Vec<i64> = trackers.iter().map(|t| t.0).collect();
            bs.sort_unstable();
            bs.dedup();
            let mut out = Vec::with_capacity(ns.len());
            let mut k = 0i64;
            for &n in &ns {
                while k < n {
                    for (_, _, t) in &mut trackers {
                        t.advance()?;
                    }
                    k += 1;
                }
                let mut col = 0.0;
                for &b in &bs {
                    let mut ab = Complex64::new(0.0, 0.0);
                    for (tb, c, t) in &trackers {
                        if *tb == b {
                            ab += c * t.partial();
                        }
                    }
                    col += ab.norm_sqr();
                }
                out.push(col);
            }
            Ok(out)
        })
        .collect();
    let mut acc = vec![0.0f64; ns.len()];
    for col in columns {
        for (a, v) in acc.iter_mut().zip(col?) {
            *a += v;
        }
    }
    Ok(ns
        .iter()
        .zip(acc)
        .map(|(&n, s)| (n, (s / grid as f64).sqrt()))
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceFit {
    pub c_prime: f64,
    pub skipped_pairs: usize,
    pub per_pair_max: Vec<f64>,
}

/// Empirical C' for |S_n(g)(p) - S_n(g)(q)| <= C'(n^{3/2} d1 + n^{1/2} d2):
/// maximum observed ratio over the sample pairs and checkpoints. Coincident
/// pairs are skipped.
pub fn divergence_bound_fit(
    g: &FourierObservable,
    params: &SkewShiftParams,
    pairs: &[(TorusPoint, TorusPoint)],
    n_list: &[i64],
) -> Result<DivergenceFit> {
    let mut skipped = 0usize;
    let mut per_pair_max = Vec::new();
    let mut c_prime = 0.0f64;
    for (p, q) in pairs {
        let d1 = p.d1(q);
        let d2 = p.d2(q);
        if d1 == 0.0 && d2 == 0.0 {
            skipped += 1;
            continue;
        }
        let prof_p = birkhoff_profile(g, params, p, n_list)?;
        let prof_q = birkhoff_profile(g, params, q, n_list)?;
        let mut best = 0.0f64;
        for ((&n, vp), vq) in prof_p
            .checkpoints
            .iter()
            .zip(&prof_p.values)
            .zip(&prof_q.values)
        {
            if n == 0 {
                continue;
            }
            let nf = n as f64;
            let denom = nf.powf(1.5) * d1 + nf.sqrt() * d2;
            if denom > 0.0 {
                best = best.max((vp - vq).abs() / denom);
            }
        }
        per_pair_max.push(best);
        c_prime = c_prime.max(best);
    }
    Ok(DivergenceFit {
        c_prime,
        skipped_pairs: skipped,
        per_pair_max,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SupRatioProbe {
    /// best n in [T, V T] for the first inequality, and the attained ratio
    /// ||S_n|| / ||S_{[zeta n]}||
    pub best_n: i64,
    pub best_ratio: f64,
    pub threshold: f64,
    pub first_inequality_holds: bool,
    /// second displayed inequality, logged informationally:
    /// ||S_{qK}|| / ||S_{pK}|| at the best K against (1-chi) zeta^{1/2}
    pub second_ratio: f64,
    pub second_threshold: f64,
}

/// Probe of the sup-norm comparison estimate with zeta = q/p: searches
/// n in [T, V T] (geometric steps) for
/// ||S_n(g)|| >= (1-chi) zeta^{-1/2} ||S_{[zeta n]}(g)||.
pub fn sup_ratio_probe(
    g: &FourierObservable,
    params: &SkewShiftParams,
    p_int: u32,
    q_int: u32,
    t: i64,
    chi: f64,
    budget: u64,
) -> Result<SupRatioProbe> {
    if p_int == 0 || q_int == 0 || q_int <= p_int {
        return Err(Error::Precondition("need integers 0 < p < q".into()));
    }
    if t < 1 {
        return Err(Error::Precondition("T must be >= 1".into()));
    }
    let zeta = q_int as f64 / p_int as f64;
    let v = 8.0f64; // search-window stretch
    let threshold = (1.0 - chi) / zeta.sqrt();
    let mut best_ratio = 0.0f64;
    let mut best_n = t;
    let mut n = t;
    while n as f64 <= v * t as f64 {
        let sn = sup_norm_estimate(g, params, n, budget)?.value;
        let szn = sup_norm_estimate(g, params, (zeta * n as f64) as i64, budget)?.value;
        if szn > 0.0 {
            let ratio = sn / szn;
            if ratio > best_ratio {
                best_ratio = ratio;
                best_n = n;
            }
        }
        n = (n as f64 * 1.25).ceil() as i64;
    }
    let s_qk = sup_norm_estimate(g, params, best_n * q_int as i64, budget)?.value;
    let s_pk = sup_norm_estimate(g, params, best_n * p_int as i64, budget)?.value;
    Ok(SupRatioProbe {
        best_n,
        best_ratio,
        threshold,
        first_inequality_holds: best_ratio >= threshold,
        second_ratio: if s_pk > 0.0 {
            s_qk / s_pk
        } else {
            f64::INFINITY
        },
        second_threshold: (1.0 - chi) * zeta.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::RotationNumber;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn params() -> SkewShiftParams {
        SkewShiftParams {
            alpha: RotationNumber::golden(30),
            beta: PhaseAngle::from_decimal_str("0.3").unwrap(),
        }
    }

    fn random_observable(rng: &mut ChaCha8Rng, radius: i64, modes: usize) -> FourierObservable {
        let mut coeffs = BTreeMap::new();
        for _ in 0..modes {
            let a = rng.gen_range(-radius..=radius);
            let b = rng.gen_range(-radius..=radius);
            if a == 0 && b == 0 {
                continue;
            }
            let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            *coeffs.entry((a, b)).or_insert(Complex64::new(0.0, 0.0)) += c;
            *coeffs.entry((-a, -b)).or_insert(Complex64::new(0.0, 0.0)) += c.conj();
        }
        FourierObservable::from_coefficients(coeffs, 4.0).unwrap()
    }

    /// g = 2 cos(2 pi (x+y)): the single-component H_{1,1} preset with
    /// a unit-modulus obstruction.
    fn noncoboundary() -> FourierObservable {
        FourierObservable::cosine(1, 1, 2.0)
    }

    #[test]
    fn direct_constant_and_single_term() {
        let pr = params();
        let p = TorusPoint::from_f64(0.2, 0.7);
        let c = FourierObservable::constant(1.5);
        let n = 4096;
        let v = birkhoff_sum_direct(&c, &pr, &p, n).unwrap();
        assert!((v - 1.5 * n as f64).abs() <= 1e-12 * n as f64);
        let g = noncoboundary();
        let v1 = birkhoff_sum_direct(&g, &pr, &p, 1).unwrap();
        assert!((v1 - evaluate_unchecked(&g, &p)).abs() < 1e-14);
        assert_eq!(birkhoff_sum_direct(&g, &pr, &p, 0).unwrap(), 0.0);
    }

    #[test]
    fn direct_matches_naive_termwise_oracle() {
        // independent loop: closed-form iterate at every index, plain sum
        let pr = params();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let g = random_observable(&mut rng, 6, 10);
        let p = TorusPoint::from_f64(rng.gen(), rng.gen());
        let n = 10_000;
        let mut want = 0.0;
        for k in 0..n {
            let q = iterate(&pr, &p, k).unwrap();
            want += evaluate_unchecked(&g, &q);
        }
        let got = birkhoff_sum_direct(&g, &pr, &p, n).unwrap();
        assert!(
            (got - want).abs() < 1e-9 * (1.0 + want.abs()),
            "got {got}, want {want}"
        );
    }

    #[test]
    fn direct_negative_branch() {
        // S_{-M}(g)(p) = -(g(Phi^{-1}p) + ... + g(Phi^{-M}p))
        let pr = params();
        let g = noncoboundary();
        let p = TorusPoint::from_f64(0.41, 0.13);
        let m = 50;
        let mut want = 0.0;
        for k in 1..=m {
            want -= evaluate_unchecked(&g, &iterate(&pr, &p, -k).unwrap());
        }
        let got = birkhoff_sum_direct(&g, &pr, &p, -m).unwrap();
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn mode_trivial_cases() {
        let pr = params();
        let p = TorusPoint::from_f64(0.37, 0.59);
        // (a,b) = (0,0) -> N
        let v = birkhoff_sum_mode(0, 0, &pr, &p, 1000).unwrap();
        assert!((v - Complex64::new(1000.0, 0.0)).norm() < 1e-9);
        // (a,b) = (0,1), N = 2 -> e(y) + e(y + x + beta)
        let v = birkhoff_sum_mode(0, 1, &pr, &p, 2).unwrap();
        let want =
            unit(p.y_f64()) + unit((p.y_f64() + p.x_f64() + pr.beta.value()).rem_euclid(1.0));
        assert!((v - want).norm() < 1e-12);
    }

    #[test]
    fn mode_geometric_series_oracle() {
        // b = 0: sum_k e(a x + a k alpha) = e(ax)(e(aN alpha)-1)/(e(a alpha)-1)
        let pr = params();
        let p = TorusPoint::from_f64(0.123, 0.456);
        for a in [1i64, 3, -2] {
            let n = 100_000i64;
            let got = birkhoff_sum_mode(a, 0, &pr, &p, n).unwrap();
            let w = unit(pr.alpha.angle.mul_int_frac(a as i128).value());
            let wn = unit(pr.alpha.angle.mul_int_frac(a as i128 * n as i128).value());
            let want = unit((a as f64 * p.x_f64()).rem_euclid(1.0)) * (wn - 1.0) / (w - 1.0);
            assert!((got - want).norm() < 1e-9, "a={a}: {got} vs {want}");
        }
    }

    #[test]
    fn mode_vs_bruteforce_quadratic() {
        let pr = params();
        let p = TorusPoint::from_f64(0.81, 0.29);
        let (a, b) = (2i64, -3i64);
        let n = 5_000;
        let mut want = Complex64::new(0.0, 0.0);
        for k in 0..n {
            want += unit(mode_phase(a, b, k, &pr, &p).unwrap());
        }
        let got = birkhoff_sum_mode(a, b, &pr, &p, n).unwrap();
        assert!((got - want).norm() < 1e-9);
    }

    #[test]
    fn mode_long_run_stays_anchored() {
        // past several re-anchors the partial sum still matches a direct
        // closed-form evaluation of the final segment
        let pr = params();
        let p = TorusPoint::from_f64(0.05, 0.91);
        let n = (1i64 << 21) + 123;
        let got = birkhoff_sum_mode(1, 1, &pr, &p, n).unwrap();
        // oracle: direct sum via independent per-term closed-form phases over
        // a thinned grid is too slow; instead verify the cocycle identity
        // against two half-length sums
        let half = n / 2;
        let s1 = birkhoff_sum_mode(1, 1, &pr, &p, half).unwrap();
        let q = iterate(&pr, &p, half).unwrap();
        let s2 = birkhoff_sum_mode(1, 1, &pr, &q, n - half).unwrap();
        // the phase of e_{1,1} at Phi^{half+k} p equals the phase at Phi^k q
        assert!((got - (s1 + s2)).norm() < 1e-8, "{got} vs {}", s1 + s2);
    }

    #[test]
    fn modes_match_direct() {
        let pr = params();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = random_observable(&mut rng, 5, 8);
        let p = TorusPoint::from_f64(rng.gen(), rng.gen());
        for n in [1i64, 17, 1000, 100_000] {
            let a = birkhoff_sum_direct(&g, &pr, &p, n).unwrap();
            let b = birkhoff_sum_modes(&g, &pr, &p, n).unwrap();
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn cocycle_identity_random() {
        let pr = params();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let g = random_observable(&mut rng, 4, 6);
        for _ in 0..100 {
            let p = TorusPoint::from_f64(rng.gen(), rng.gen());
            let m = rng.gen_range(0i64..=30_000);
            let n = rng.gen_range(0i64..=30_000);
            let lhs = birkhoff_sum_modes(&g, &pr, &p, m + n).unwrap();
            let q = iterate(&pr, &p, m).unwrap();
            let rhs = birkhoff_sum_modes(&g, &pr, &p, m).unwrap()
                + birkhoff_sum_modes(&g, &pr, &q, n).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()),
                "m={m} n={n}: lhs={lhs} rhs={rhs} diff={}",
                lhs - rhs
            );
        }
    }

    #[test]
    fn linearity() {
        let pr = params();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let g = random_observable(&mut rng, 4, 6);
        let h = random_observable(&mut rng, 4, 6);
        let p = TorusPoint::from_f64(0.6, 0.25);
        let combo = g.scale(2.5).add(&h.scale(-1.25));
        let n = 20_000;
        let lhs = birkhoff_sum_modes(&combo, &pr, &p, n).unwrap();
        let rhs = 2.5 * birkhoff_sum_modes(&g, &pr, &p, n).unwrap()
            - 1.25 * birkhoff_sum_modes(&h, &pr, &p, n).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn profile_checkpoints_consistent() {
        let pr = params();
        let g = noncoboundary();
        let p = TorusPoint::from_f64(0.11, 0.77);
        let prof = birkhoff_profile(&g, &pr, &p, &[0, 10, 100, 1000]).unwrap();
        assert_eq!(prof.values[0], 0.0);
        for (i, &n) in prof.checkpoints.iter().enumerate() {
            let v = birkhoff_sum_modes(&g, &pr, &p, n).unwrap();
            assert!((prof.values[i] - v).abs() < 1e-10);
        }
        let csv = prof.to_csv();
        assert!(csv.starts_with("N,value\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn sup_norm_constant_and_coboundary() {
        let pr = params();
        let c = FourierObservable::constant(0.7);
        let n = 2048;
        let est = sup_norm_estimate(&c, &pr, n, 1000).unwrap();
        assert!((est.value - 0.7 * n as f64).abs() < 1e-9 * n as f64);

        // coboundary u o Phi - u with u = cos(2 pi y): S_N is telescoping,
        // bounded by 2 max |u| = 2
        let u = FourierObservable::cosine(0, 1, 1.0);
        let mut g = FourierObservable::zero();
        for (&(a, b), &cc) in u.coefficients() {
            // e_{a,b} o Phi = e^{2 pi i (a alpha + b beta)} e_{a+b, b}
            let ph = pr
                .alpha
                .angle
                .mul_int_frac(a as i128)
                .add(&pr.beta.mul_int_frac(b as i128))
                .frac()
                .value();
            let shifted = cc * unit(ph);
            g.set_coefficient(a + b, b, g.coefficient(a + b, b) + shifted);
            g.set_coefficient(a, b, g.coefficient(a, b) - cc);
        }
        for n in [100i64, 5000, 50_000] {
            let est = sup_norm_estimate(&g, &pr, n, 1000).unwrap();
            assert!(est.value <= 2.0 + 1e-6, "N={n}: {}", est.value);
        }
    }

    #[test]
    fn sup_norm_sqrt_scaling() {
        let pr = params();
        let g = noncoboundary();
        let n = 1i64 << 14;
        let e1 = sup_norm_estimate(&g, &pr, n, 2000).unwrap().value;
        let e4 = sup_norm_estimate(&g, &pr, 4 * n, 2000).unwrap().value;
        let ratio = e4 / e1;
        assert!((1.2..=3.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn growth_exponent_cases() {
        let pr = params();
        // slope ~ 1 for the constant (not zero-mean)
        let ns: Vec<i64> = (10..=20).map(|k| 1i64 << k).collect();
        let c = FourierObservable::constant(1.0);
        let fit = growth_exponent(&c, &pr, &ns, 1000).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.02, "slope {}", fit.slope);
        assert!(fit.r2 > 0.999);
        // zero observable -> undefined fit
        assert!(growth_exponent(&FourierObservable::zero(), &pr, &ns, 1000).is_err());
        // too few checkpoints -> precondition
        assert!(growth_exponent(&c, &pr, &ns[..4], 1000).is_err());
    }

    #[test]
    fn growth_exponent_half_for_noncoboundary() {
        let pr = params();
        let ns: Vec<i64> = (10..=20).map(|k| 1i64 << k).collect();
        let fit = growth_exponent(&noncoboundary(), &pr, &ns, 1000).unwrap();
        assert!(
            (0.4..=0.6).contains(&fit.slope),
            "slope {} per_n {:?}",
            fit.slope,
            fit.per_n
        );
    }

    #[test]
    fn l2_matches_bruteforce_grid_oracle() {
        // independent route: evaluate S_N at every grid node via mode sums
        // and average |.|^2 directly
        let pr = params();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let g = random_observable(&mut rng, 3, 5);
        let grid = 16usize;
        let n = 512i64;
        let prof = l2_profile(&g, &pr, &[n], grid).unwrap();
        let mut acc = 0.0;
        for i in 0..grid {
            for j in 0..grid {
                let p = TorusPoint::from_f64(i as f64 / grid as f64, j as f64 / grid as f64);
                let v = birkhoff_sum_modes(&g, &pr, &p, n).unwrap();
                acc += v * v;
            }
        }
        let want = (acc / (grid * grid) as f64).sqrt();
        assert!(
            (prof[0].1 - want).abs() < 1e-9 * (1.0 + want),
            "{} vs {want}",
            prof[0].1
        );
    }

    #[test]
    fn l2_near_sqrt_n_for_single_component() {
        // the L^2 law: N^{-1/2} ||S_N|| stays comparable to |D| = 1
        let pr = params();
        let g = noncoboundary();
        let prof = l2_profile(&g, &pr, &[1024, 4096, 16384], 64).unwrap();
        for (n, v) in prof {
            let normalized = v / (n as f64).sqrt();
            // |coefficients| contribute sqrt(2) at |c| = 1 each
            assert!(
                (0.3..=6.0).contains(&normalized),
                "N={n}: normalized {normalized}"
            );
        }
    }

    #[test]
    fn l2_rejects_coarse_grid() {
        let pr = params();
        let g = FourierObservable::cosine(40, 1, 1.0);
        assert!(l2_profile(&g, &pr, &[1024], 64).is_err());
    }

    #[test]
    fn divergence_fit_behaviour() {
        let pr = params();
        let g = noncoboundary();
        let p = TorusPoint::from_f64(0.3, 0.4);
        let q = TorusPoint::from_f64(0.3, 0.4001);
        let ns: Vec<i64> = vec![1000, 10_000, 100_000, 1_000_000];
        let fit = divergence_bound_fit(&g, &pr, &[(p, q), (p, p)], &ns).unwrap();
        assert_eq!(fit.skipped_pairs, 1);
        assert_eq!(fit.per_pair_max.len(), 1);
        assert!(
            fit.c_prime > 0.0 && fit.c_prime < 100.0,
            "C' = {}",
            fit.c_prime
        );
    }

    #[test]
    fn divergence_constant_stable_across_scales() {
        let pr = params();
        let g = noncoboundary();
        let ns: Vec<i64> = vec![1000, 10_000, 100_000];
        let p = TorusPoint::from_f64(0.3, 0.4);
        let mut cs = Vec::new();
        for delta in [1e-3, 1e-5] {
            let q = TorusPoint::from_f64(0.3 + delta, 0.4 + delta);
            let fit = divergence_bound_fit(&g, &pr, &[(p, q)], &ns).unwrap();
            cs.push(fit.c_prime);
        }
        let ratio = (cs[0] / cs[1]).max(cs[1] / cs[0]);
        assert!(ratio < 3.0, "C' at scales: {cs:?}");
    }

    #[test]
    fn sup_ratio_probe_first_inequality() {
        let pr = params();
        let g = noncoboundary();
        let probe = sup_ratio_probe(&g, &pr, 1, 2, 2000, 0.5, 1000).unwrap();
        assert!(
            probe.first_inequality_holds,
            "best ratio {} < threshold {}",
            probe.best_ratio, probe.threshold
        );
        assert!(sup_ratio_probe(&g, &pr, 2, 2, 1000, 0.5, 1000).is_err());
    }
}
