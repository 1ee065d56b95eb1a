//! The skew-shift (x, y) -> (x + alpha, y + x + beta) on the 2-torus, with
//! exact closed-form iterates and anchored incremental orbit segments.

use crate::arith::{
    reduce_quadratic_phase_dd, ExtendedReal, PhaseAngle, RotationNumber, MAX_ITERATE,
};
use crate::error::{Error, Result};
use crate::precision::PrecisionSettings;

#[derive(Clone, Debug)]
pub struct SkewShiftParams {
    pub alpha: RotationNumber,
    pub beta: PhaseAngle,
}

impl SkewShiftParams {
    pub fn new(alpha: RotationNumber, beta: PhaseAngle) -> Result<Self> {
        if alpha.is_rational() {
            return Err(Error::Domain(
                "skew-shift rotation number must be irrational at configured depth".into(),
            ));
        }
        Ok(SkewShiftParams { alpha, beta })
    }

    pub fn golden(cf_depth: usize) -> Self {
        SkewShiftParams {
            alpha: RotationNumber::golden(cf_depth),
            beta: PhaseAngle::from_f64(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    x: ExtendedReal,
    y: ExtendedReal,
}

impl TorusPoint {
    pub fn new(x: ExtendedReal, y: ExtendedReal) -> Self {
        TorusPoint {
            x: x.frac(),
            y: y.frac(),
        }
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        Self::new(ExtendedReal::from_f64(x), ExtendedReal::from_f64(y))
    }

    pub fn x(&self) -> ExtendedReal {
        self.x
    }

    pub fn y(&self) -> ExtendedReal {
        self.y
    }

    pub fn x_f64(&self) -> f64 {
        self.x.value()
    }

    pub fn y_f64(&self) -> f64 {
        self.y.value()
    }

    /// d_1: circle distance between the x coordinates.
    pub fn d1(&self, other: &TorusPoint) -> f64 {
        crate::arith::circle_dist(self.x_f64() - other.x_f64())
    }

    /// d_2: circle distance between the y coordinates.
    pub fn d2(&self, other: &TorusPoint) -> f64 {
        crate::arith::circle_dist(self.y_f64() - other.y_f64())
    }
}

/// One application of the skew-shift.
pub fn step(params: &SkewShiftParams, p: &TorusPoint) -> TorusPoint {
    let x = p.x.add(&params.alpha.angle.dd()).frac();
    let y = p.y.add(&p.x).add(&params.beta.dd()).frac();
    TorusPoint { x, y }
}

/// Closed-form n-th iterate:
/// (frac(x + n alpha), frac(y + n x + n beta + n(n-1)/2 alpha)).
/// Negative n uses the same algebraic form (the exact inverse).
pub fn iterate(params: &SkewShiftParams, p: &TorusPoint, n: i64) -> Result<TorusPoint> {
    if n.abs() > MAX_ITERATE {
        return Err(Error::Domain(format!(
            "iterate index {n} out of range (|n| <= 2^40)"
        )));
    }
    let n_i = n as i128;
    let x = p.x.add(&params.alpha.angle.mul_int_frac(n_i)).frac();
    // y + n x + n beta + binom(n,2) alpha == quadratic phase with a=0, b=1
    let y = reduce_quadratic_phase_dd(0, 1, n, &params.alpha.angle, &p.x, &p.y, &params.beta)?;
    Ok(TorusPoint { x, y })
}

/// The points Phi^{n0} p .. Phi^{n0+count-1} p, by anchored incremental
/// stepping: a closed-form re-anchor every `anchor_interval` steps and
/// compensated increments in between.
pub fn orbit_segment(
    params: &SkewShiftParams,
    p: &TorusPoint,
    n0: i64,
    count: usize,
) -> Result<Vec<TorusPoint>> {
    if count < 1 {
        return Err(Error::Domain("orbit segment needs count >= 1".into()));
    }
    let mut iter = OrbitIter::new(params, p, n0, PrecisionSettings::default())?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(iter.current());
        iter.advance()?;
    }
    Ok(out)
}

/// Streaming orbit walker used by the Birkhoff and drift engines.
pub struct OrbitIter<'a> {
    params: &'a SkewShiftParams,
    base: TorusPoint,
    current: TorusPoint,
    index: i64,
    anchor_interval: u64,
    since_anchor: u64,
}

impl<'a> OrbitIter<'a> {
    pub fn new(
        params: &'a SkewShiftParams,
        p: &TorusPoint,
        n0: i64,
        precision: PrecisionSettings,
    ) -> Result<Self> {
        let current = iterate(params, p, n0)?;
        Ok(OrbitIter {
            params,
            base: *p,
            current,
            index: n0,
            anchor_interval: precision.anchor_interval,
            since_anchor: 0,
        })
    }

    pub fn current(&self) -> TorusPoint {
        self.current
    }

    pub fn index(&self) -> i64 {
        self.index
    }

    pub fn advance(&mut self) -> Result<()> {
        self.index = self
            .index
            .checked_add(1)
            .ok_or_else(|| Error::Domain("orbit index overflow".into()))?;
        self.since_anchor += 1;
        if self.since_anchor >= self.anchor_interval {
            self.current = iterate(self.params, &self.base, self.index)?;
            self.since_anchor = 0;
        } else {
            if self.index.abs() > MAX_ITERATE {
                return Err(Error::Domain("orbit range overflow".into()));
            }
            self.current = step(self.params, &self.current);
        }
        Ok(())
    }
}
