//! Continued-fraction arithmetic for rotation numbers and extended-precision
//! reduction of quadratic phases mod 1.
//!
//! Two layers of precision:
//! * [`ExtendedReal`] is a two-term (hi, lo) compensated double giving ~32
//!   significant decimal digits; it carries torus coordinates and running
//!   accumulations.
//! * [`FixedPoint`] is a 256-fractional-bit fixed-point number backing
//!   rotation numbers, so that exact integer multiples k*alpha mod 1 stay
//!   accurate for k up to ~2^100 (the quadratic term n(n-1)/2 reaches 2^79
//!   at the documented iterate bound n = 2^40).

use num_bigint::{BigInt, BigUint, Sign};
use serde::Serialize;

use crate::error::{Error, Result};

/// Iterate bound: |n| <= 2^40 so n(n-1)/2 fits exact integer arithmetic.
pub const MAX_ITERATE: i64 = 1 << 40;

// ---------------------------------------------------------------------------
// ExtendedReal: two-term compensated double (double-double)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExtendedReal {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        ExtendedReal { hi: h, lo: l }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        ExtendedReal { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// Rounded double value hi + lo.
    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(&self, other: &Self) -> Self {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        ExtendedReal { hi: h, lo: l }
    }

    #[inline]
    pub fn add_f64(&self, x: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, x);
        let (h, l) = quick_two_sum(s1, s2 + self.lo);
        ExtendedReal { hi: h, lo: l }
    }

    #[inline]
    pub fn neg(&self) -> Self {
        ExtendedReal {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    #[inline]
    pub fn mul_f64(&self, x: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, x);
        let (h, l) = quick_two_sum(p1, p2 + self.lo * x);
        ExtendedReal { hi: h, lo: l }
    }

    #[inline]
    pub fn mul(&self, other: &Self) -> Self {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (h, l) = quick_two_sum(p1, p2);
        ExtendedReal { hi: h, lo: l }
    }

    /// Exact multiplication by a (possibly huge) integer coefficient.
    /// The coefficient is split into <=3 limbs of 40 bits so that each
    /// limb * hi product goes through an exact two_prod.
    pub fn mul_i128(&self, c: i128) -> Self {
        if c == 0 {
            return ExtendedReal::ZERO;
        }
        let neg = c < 0;
        let mut m = c.unsigned_abs();
        let mut shift = 0u32;
        let mut acc = ExtendedReal::ZERO;
        while m > 0 {
            let limb = (m & ((1u128 << 40) - 1)) as f64;
            m >>= 40;
            let scale = (2f64).powi(shift as i32);
            acc = acc.add(&self.mul_f64(limb * scale));
            shift += 40;
        }
        if neg {
            acc.neg()
        } else {
            acc
        }
    }

    /// Fractional part, reduced into [0, 1).
    pub fn frac(&self) -> Self {
        // hi - floor(hi) is exact for every finite double
        let mut r = ExtendedReal::new(self.hi - self.hi.floor(), self.lo);
        while r.value() < 0.0 {
            r = r.add_f64(1.0);
        }
        while r.value() >= 1.0 {
            r = r.add_f64(-1.0);
        }
        r
    }

    pub fn abs(&self) -> Self {
        if self.value() < 0.0 {
            self.neg()
        } else {
            *self
        }
    }
}

// ---------------------------------------------------------------------------
// FixedPoint: Q.256 fixed point over BigInt
// ---------------------------------------------------------------------------

pub const FRAC_BITS: u32 = 256;

/// A real carried as mantissa / 2^256. Exact under integer multiplication,
/// which is all the phase-reduction machinery needs.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    mant: BigInt,
}

fn one_shifted(bits: u32) -> BigInt {
    BigInt::from(1u8) << bits
}

impl FixedPoint {
    pub fn zero() -> Self {
        FixedPoint {
            mant: BigInt::from(0u8),
        }
    }

    pub fn from_mantissa(mant: BigInt) -> Self {
        FixedPoint { mant }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    /// num/den rounded to 2^-256.
    pub fn from_ratio(num: &BigInt, den: &BigInt) -> Result<Self> {
        if den.sign() == Sign::NoSign {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(FixedPoint {
            mant: (num << FRAC_BITS) / den,
        })
    }

    pub fn from_u64_ratio(num: u64, den: u64) -> Result<Self> {
        Self::from_ratio(&BigInt::from(num), &BigInt::from(den))
    }

    /// sqrt(k) to 256 fractional bits.
    pub fn from_sqrt_u64(k: u64) -> Self {
        let scaled = BigUint::from(k) << (2 * FRAC_BITS);
        FixedPoint {
            mant: BigInt::from(scaled.sqrt()),
        }
    }

    /// Parse a plain decimal literal like "0.617" or ".25" or "3".
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, s) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Parse(format!("not a decimal literal: {s:?}")));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(Error::Parse(format!("not a decimal literal: {s:?}")));
        }
        let digits: String = format!("{int_part}{frac_part}");
        let num: BigInt = digits
            .parse()
            .map_err(|_| Error::Parse(format!("not a decimal literal: {s:?}")))?;
        let den = BigInt::from(10u8).pow(frac_part.len() as u32);
        let mut fp = Self::from_ratio(&num, &den)?;
        if neg {
            fp.mant = -fp.mant;
        }
        Ok(fp)
    }

    pub fn from_f64(x: f64) -> Self {
        // decompose x = m * 2^e exactly
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if exp == 0 {
            (sign * frac, -1074i64)
        } else {
            (sign * (frac | (1 << 52)), exp - 1075)
        };
        let shift = e + FRAC_BITS as i64;
        let mant = if shift >= 0 {
            BigInt::from(m) << (shift as u32)
        } else {
            BigInt::from(m) >> ((-shift) as u32)
        };
        FixedPoint { mant }
    }

    pub fn add(&self, other: &Self) -> Self {
        FixedPoint {
            mant: &self.mant + &other.mant,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        FixedPoint {
            mant: &self.mant - &other.mant,
        }
    }

    /// Exact product with an integer.
    pub fn mul_int(&self, m: i128) -> Self {
        FixedPoint {
            mant: &self.mant * BigInt::from(m),
        }
    }

    /// Reduce into [0, 1).
    pub fn frac(&self) -> Self {
        let one = one_shifted(FRAC_BITS);
        let mut r = &self.mant % &one;
        if r.sign() == Sign::Minus {
            r += &one;
        }
        FixedPoint { mant: r }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.sign() == Sign::NoSign
    }

    /// The fractional part as a compensated double: a rounded head plus the
    /// exactly-computed residual, good to ~2^-106.
    pub fn to_extended(&self) -> ExtendedReal {
        use num_traits::ToPrimitive;
        let f = self.frac();
        let top = (&f.mant >> (FRAC_BITS - 64))
            .to_biguint()
            .expect("frac is nonnegative");
        let hi_u = top.to_u64_digits().first().copied().unwrap_or(0);
        // hi_u as f64 rounds to 53 bits; the residual must be taken against
        // the rounded value, not hi_u
        let hi = hi_u as f64 / 2f64.powi(64);
        let resid = f.mant - Self::from_f64(hi).mant;
        let lo = resid.to_f64().unwrap_or(0.0) / 2f64.powi(FRAC_BITS as i32);
        ExtendedReal::new(hi, lo)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_extended().value()
    }
}

// ---------------------------------------------------------------------------
// Continued fractions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ContinuedFraction {
    #[serde(skip)]
    pub value: ExtendedReal,
    pub partial_quotients: Vec<u64>,
    /// (p_n, q_n) with p_0/q_0 = 0/1
    pub convergents: Vec<(i128, i128)>,
    pub is_rational: bool,
    pub precision_limited: bool,
}

impl ContinuedFraction {
    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }
}

/// Expand x in (0,1) to the requested number of partial quotients, by exact
/// Euclidean division on the 256-bit fixed-point approximation. Convergent
/// denominators are tracked and expansion stops (precision_limited) once
/// q_n exceeds 2^100, past which the approximation no longer certifies the
/// quotients.
pub fn cf_expand(x: &FixedPoint, depth: usize) -> Result<ContinuedFraction> {
    if depth < 1 {
        return Err(Error::Domain("depth must be >= 1".into()));
    }
    let one = one_shifted(FRAC_BITS);
    if x.mant.sign() != Sign::Plus || x.mant >= one {
        return Err(Error::Domain("cf_expand requires 0 < x < 1".into()));
    }
    let mut num = x.mant.clone();
    let mut den = one;

    let mut quotients: Vec<u64> = Vec::new();
    // (p_{-1}, q_{-1}) = (1, 0), (p_0, q_0) = (0, 1)
    let mut convergents: Vec<(i128, i128)> = vec![(0, 1)];
    let (mut p_prev, mut q_prev): (i128, i128) = (1, 0);
    let (mut p_cur, mut q_cur): (i128, i128) = (0, 1);
    let mut is_rational = false;
    let mut precision_limited = false;

    // the input is only accurate to 2^-256; a residue below 2^-200 is
    // indistinguishable from an exact termination
    let tiny = one_shifted(FRAC_BITS - 200);

    while quotients.len() < depth {
        if num.sign() == Sign::NoSign {
            is_rational = true;
            break;
        }
        if &num * &tiny < den {
            // remainder vanished within precision
            is_rational = true;
            break;
        }
        let a = &den / &num;
        let rem = &den % &num;
        den = num;
        num = rem;
        let a_u64 = match u64::try_from(&a) {
            Ok(v) => v,
            Err(_) => {
                precision_limited = true;
                break;
            }
        };
        let a_i = a_u64 as i128;
        let (p_new, q_new) = match (
            a_i.checked_mul(p_cur).and_then(|v| v.checked_add(p_prev)),
            a_i.checked_mul(q_cur).and_then(|v| v.checked_add(q_prev)),
        ) {
            (Some(p), Some(q)) => (p, q),
            _ => {
                precision_limited = true;
                break;
            }
        };
        if q_new > (1i128 << 100) {
            precision_limited = true;
            break;
        }
        quotients.push(a_u64);
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_new;
        q_cur = q_new;
        convergents.push((p_cur, q_cur));
    }

    Ok(ContinuedFraction {
        value: x.to_extended(),
        partial_quotients: quotients,
        convergents,
        is_rational,
        precision_limited,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedTypeReport {
    pub max_quotient: u64,
    pub c_alpha_estimate: f64,
    /// bounded type is only certified up to this expansion depth
    pub certified_depth: usize,
    pub rational_input: bool,
}

/// Bounded-type certificate from a finite expansion: max partial quotient and
/// the max ratio q_{n+1}/q_n over the stored convergents. A finite expansion
/// can only certify up to its depth; the report says so.
pub fn is_bounded_type(cf: &ContinuedFraction) -> Result<BoundedTypeReport> {
    if cf.depth() < 3 {
        return Err(Error::Precondition(
            "bounded-type report needs depth >= 3".into(),
        ));
    }
    let max_quotient = *cf.partial_quotients.iter().max().expect("depth >= 3");
    let mut c_alpha: f64 = 0.0;
    for w in cf.convergents.windows(2) {
        let (_, q0) = w[0];
        let (_, q1) = w[1];
        if q0 > 0 {
            c_alpha = c_alpha.max(q1 as f64 / q0 as f64);
        }
    }
    Ok(BoundedTypeReport {
        max_quotient,
        c_alpha_estimate: c_alpha,
        certified_depth: cf.depth(),
        rational_input: cf.is_rational,
    })
}

/// Distance to the nearest integer, in [0, 1/2].
#[inline]
pub fn circle_dist(t: f64) -> f64 {
    (t - t.round()).abs()
}

// ---------------------------------------------------------------------------
// Rotation numbers and quadratic phase reduction
// ---------------------------------------------------------------------------

/// An angle in [0,1) carried at both precisions: the fixed-point mantissa is
/// the authority for integer multiples, the compensated double for everything
/// else.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAngle {
    fixed: FixedPoint,
    dd: ExtendedReal,
}

impl PhaseAngle {
    pub fn from_fixed(fp: FixedPoint) -> Self {
        let f = fp.frac();
        let dd = f.to_extended();
        PhaseAngle { fixed: f, dd }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_fixed(FixedPoint::from_f64(x))
    }

    pub fn from_decimal_str(s: &str) -> Result<Self> {
        Ok(Self::from_fixed(FixedPoint::from_decimal_str(s)?))
    }

    pub fn fixed(&self) -> &FixedPoint {
        &self.fixed
    }

    pub fn dd(&self) -> ExtendedReal {
        self.dd
    }

    pub fn value(&self) -> f64 {
        self.dd.value()
    }

    /// frac(m * angle) as a compensated double, exact-integer route.
    pub fn mul_int_frac(&self, m: i128) -> ExtendedReal {
        self.fixed.mul_int(m).frac().to_extended()
    }
}

/// A rotation number: the angle plus its continued-fraction metadata.
#[derive(Clone, Debug)]
pub struct RotationNumber {
    pub angle: PhaseAngle,
    pub cf: ContinuedFraction,
}

impl RotationNumber {
    pub fn from_fixed(fp: FixedPoint, cf_depth: usize) -> Result<Self> {
        let angle = PhaseAngle::from_fixed(fp);
        let cf = cf_expand(angle.fixed(), cf_depth)?;
        Ok(RotationNumber { angle, cf })
    }

    /// (sqrt(5)-1)/2, the golden rotation number.
    pub fn golden(cf_depth: usize) -> Self {
        let sqrt5 = FixedPoint::from_sqrt_u64(5);
        let one = FixedPoint::from_u64_ratio(1, 1).expect("1/1");
        let half = FixedPoint::from_u64_ratio(1, 2).expect("1/2");
        let fp = FixedPoint {
            mant: (sqrt5.sub(&one).mant * half.mant) >> FRAC_BITS,
        };
        Self::from_fixed(fp, cf_depth).expect("golden mean is in (0,1)")
    }

    /// sqrt(2) - 1.
    pub fn sqrt2_minus_one(cf_depth: usize) -> Self {
        let sqrt2 = FixedPoint::from_sqrt_u64(2);
        let one = FixedPoint::from_u64_ratio(1, 1).expect("1/1");
        Self::from_fixed(sqrt2.sub(&one), cf_depth).expect("sqrt2-1 is in (0,1)")
    }

    pub fn from_decimal(s: &str, cf_depth: usize) -> Result<Self> {
        Self::from_fixed(FixedPoint::from_decimal_str(s)?, cf_depth)
    }

    pub fn is_rational(&self) -> bool {
        self.cf.is_rational
    }

    pub fn value(&self) -> f64 {
        self.angle.value()
    }
}

/// Fractional part of a(x + n*alpha) + b(y + n*x + n*beta + n(n-1)/2 * alpha).
///
/// All integer multiples of alpha and beta run through the exact fixed-point
/// route; x and y contributions are accumulated in compensated arithmetic.
/// The absolute error stays below 1e-9 for |n| <= 2^40 (far below, in fact:
/// the fixed-point route leaves ~2^-70 at the bound).
pub fn reduce_quadratic_phase(
    a: i64,
    b: i64,
    n: i64,
    alpha: &PhaseAngle,
    x: &ExtendedReal,
    y: &ExtendedReal,
    beta: &PhaseAngle,
) -> Result<f64> {
    Ok(reduce_quadratic_phase_dd(a, b, n, alpha, x, y, beta)?
        .frac()
        .value()
        .rem_euclid(1.0))
}

/// Same as [`reduce_quadratic_phase`] but returns the compensated value
/// before the final rounding; internal consumers keep the extra bits.
pub fn reduce_quadratic_phase_dd(
    a: i64,
    b: i64,
    n: i64,
    alpha: &PhaseAngle,
    x: &ExtendedReal,
    y: &ExtendedReal,
    beta: &PhaseAngle,
) -> Result<ExtendedReal> {
    if n.abs() > MAX_ITERATE {
        return Err(Error::Domain(format!(
            "iterate index {n} out of range (|n| <= 2^40)"
        )));
    }
    let n_i = n as i128;
    let binom = n_i * (n_i - 1) / 2; // exact in i128 for |n| <= 2^40
    let a_i = a as i128;
    let b_i = b as i128;
    let m_alpha = a_i
        .checked_mul(n_i)
        .and_then(|an| b_i.checked_mul(binom).map(|bb| (an, bb)))
        .and_then(|(an, bb)| an.checked_add(bb))
        .ok_or_else(|| Error::Domain("phase coefficient overflow".into()))?;
    let m_beta = b_i
        .checked_mul(n_i)
        .ok_or_else(|| Error::Domain("phase coefficient overflow".into()))?;
    // coefficient of x: a + b*n
    let c_x = a_i
        .checked_add(m_beta)
        .ok_or_else(|| Error::Domain("phase coefficient overflow".into()))?;

    let mut acc = alpha.mul_int_frac(m_alpha);
    acc = acc.add(&beta.mul_int_frac(m_beta));
    acc = acc.add(&x.mul_i128(c_x).frac());
    acc = acc.add(&y.mul_f64(b as f64));
    Ok(acc.frac())
}
