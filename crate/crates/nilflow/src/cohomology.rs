//! Invariant distributions D_{m,n}, the spectral solver for the
//! cohomological equation u o Phi - u = g, and triviality tests for roofs.
//!
//! Inside one component H_{m,n} (spanned by e_{m+jn,n}, j in Z) write
//! E_j = e^{2 pi i [(alpha m + beta n) j + alpha n C(j,2)]}. Then
//! D_{m,n}(g) = sum_j g_j conj(E_j) is the unique obstruction, and when it
//! vanishes the transfer function is given by the one-sided sums
//! u_j = -E_j sum_{k<=j} g_k conj(E_k) = E_j sum_{k>j} g_k conj(E_k).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{decompose_hmn, project_zero_mean, FourierObservable, HmnComponent, TAU};
use crate::torus::SkewShiftParams;

/// Default coboundary-detection tolerance, relative to the component L2 norm.
pub const DEFAULT_COBOUNDARY_TOL: f64 = 1e-8;

/// Machine-safety floor for abelian small divisors.
pub const SMALL_DIVISOR_FLOOR: f64 = 1e-14;

fn unit(phase01: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * phase01)
}

/// The weight E_j, with the integer multiples of alpha and beta reduced
/// through the exact fixed-point route.
fn weight(m: i64, n: i64, j: i64, params: &SkewShiftParams) -> Complex64 {
    let j_i = j as i128;
    let binom = j_i * (j_i - 1) / 2;
    let alpha_mult = m as i128 * j_i + n as i128 * binom;
    let beta_mult = n as i128 * j_i;
    let phase = params
        .alpha
        .angle
        .mul_int_frac(alpha_mult)
        .add(&params.beta.mul_int_frac(beta_mult))
        .frac()
        .value();
    unit(phase)
}

/// e_{a,b} o Phi = e^{2 pi i (a alpha + b beta)} e_{a+b, b}: the coefficient
/// map of composition with the skew-shift, exact on mode indices.
pub fn compose_with_shift(g: &FourierObservable, params: &SkewShiftParams) -> FourierObservable {
    let mut out = FourierObservable::zero();
    for (&(a, b), &c) in g.coefficients() {
        let phase = params
            .alpha
            .angle
            .mul_int_frac(a as i128)
            .add(&params.beta.mul_int_frac(b as i128))
            .frac()
            .value();
        let prev = out.coefficient(a + b, b);
        out.set_coefficient(a + b, b, prev + c * unit(phase));
    }
    out
}

/// u o Phi - u, computed exactly on coefficients.
pub fn coboundary_of(u: &FourierObservable, params: &SkewShiftParams) -> FourierObservable {
    compose_with_shift(u, params).add(&u.scale(-1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantDistributionValue {
    pub m: i64,
    pub n: i64,
    pub value: (f64, f64),
    pub truncation_radius: i64,
    /// |g_j| mass omitted beyond the truncation radius (zero here: finite support)
    pub tail_bound: f64,
}

impl InvariantDistributionValue {
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.value.0, self.value.1)
    }

    pub fn abs(&self) -> f64 {
        self.complex().norm()
    }
}

/// D_{m,n}(g) = sum_j g_j conj(E_j) over the finite support.
pub fn invariant_distribution(
    c: &HmnComponent,
    params: &SkewShiftParams,
) -> Result<InvariantDistributionValue> {
    if c.n == 0 {
        return Err(Error::Precondition(
            "invariant distribution needs n != 0".into(),
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut radius = 0i64;
    for (&j, &gj) in &c.coeffs {
        acc += gj * weight(c.m, c.n, j, params).conj();
        radius = radius.max(j.abs());
    }
    Ok(InvariantDistributionValue {
        m: c.m,
        n: c.n,
        value: (acc.re, acc.im),
        truncation_radius: radius,
        tail_bound: 0.0,
    })
}

#[derive(Clone, Debug)]
pub struct CohomologySolution {
    pub u: HmnComponent,
    /// componentwise max |(u o Phi - u)_j - g_j|
    pub residual: f64,
    pub obstruction: f64,
}

/// Solve u o Phi - u = g in H_{m,n} by the one-sided formulas: the left sum
/// for j < 0, the right sum for j >= 0. Requires |D_{m,n}(g)| below
/// tol * ||g||_{L2}; otherwise an obstruction error carrying |D|.
pub fn solve_cohomological(
    c: &HmnComponent,
    params: &SkewShiftParams,
    tol: f64,
) -> Result<CohomologySolution> {
    let d = invariant_distribution(c, params)?;
    let scale = c.l2_norm();
    if scale == 0.0 {
        return Ok(CohomologySolution {
            u: HmnComponent {
                m: c.m,
                n: c.n,
                coeffs: BTreeMap::new(),
            },
            residual: 0.0,
            obstruction: 0.0,
        });
    }
    if d.abs() > tol * scale {
        return Err(Error::Obstruction {
            magnitude: d.abs(),
            tol: tol * scale,
        });
    }
    let jmin = *c.coeffs.keys().next().unwrap();
    let jmax = *c.coeffs.keys().next_back().unwrap();
    let mut u_coeffs = BTreeMap::new();
    for j in jmin..=jmax {
        let e_j = weight(c.m, c.n, j, params);
        let mut s = Complex64::new(0.0, 0.0);
        if j < 0 {
            for (&k, &gk) in c.coeffs.range(..=j) {
                s += gk * weight(c.m, c.n, k, params).conj();
            }
            s = -s;
        } else {
            for (&k, &gk) in c.coeffs.range(j + 1..) {
                s += gk * weight(c.m, c.n, k, params).conj();
            }
        }
        let uj = e_j * s;
        if uj.norm() > 0.0 {
            u_coeffs.insert(j, uj);
        }
    }
    let u = HmnComponent {
        m: c.m,
        n: c.n,
        coeffs: u_coeffs,
    };
    let residual = coboundary_residual(&u, c, params);
    Ok(CohomologySolution {
        u,
        residual,
        obstruction: d.abs(),
    })
}

/// max_j |(u o Phi - u)_j - g_j| via the exact mode-shift rule.
pub fn coboundary_residual(u: &HmnComponent, g: &HmnComponent, params: &SkewShiftParams) -> f64 {
    let ub = coboundary_of(&u.to_observable(), params);
    let gb = g.to_observable();
    let mut worst = 0.0f64;
    for key in ub
        .coefficients()
        .keys()
        .chain(gb.coefficients().keys())
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
    {
        worst = worst.max((ub.coefficient(key.0, key.1) - gb.coefficient(key.0, key.1)).norm());
    }
    worst
}

#[derive(Clone, Debug)]
pub struct AbelianSolution {
    pub u: BTreeMap<i64, Complex64>,
    pub smallest_divisor: f64,
}

/// Solve the circle-factor equation for modes with n = 0 and a != 0:
/// u_a = c_a / (e^{2 pi i a alpha} - 1). The mean mode must be absent.
pub fn solve_abelian(
    modes: &BTreeMap<i64, Complex64>,
    params: &SkewShiftParams,
    _tol: f64,
) -> Result<AbelianSolution> {
    if modes.get(&0).is_some_and(|c| c.norm() > 0.0) {
        return Err(Error::Precondition(
            "abelian solve requires a zero-mean input (drop the a=0 mode)".into(),
        ));
    }
    let mut u = BTreeMap::new();
    let mut smallest = f64::INFINITY;
    for (&a, &c) in modes {
        if a == 0 {
            continue;
        }
        let div = unit(params.alpha.angle.mul_int_frac(a as i128).value()) - 1.0;
        let d = div.norm();
        if d < SMALL_DIVISOR_FLOOR {
            return Err(Error::SmallDivisor(d));
        }
        smallest = smallest.min(d);
        u.insert(a, c / div);
    }
    Ok(AbelianSolution {
        u,
        smallest_divisor: if smallest.is_finite() { smallest } else { 0.0 },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrivialityReport {
    pub trivial: bool,
    pub inconclusive: bool,
    pub worst_obstruction: f64,
    /// per (m, n): |D_{m,n}| of the roof's component
    pub per_component: Vec<(i64, i64, f64)>,
    pub abelian_smallest_divisor: Option<f64>,
    pub mean: f64,
}

/// Decide whether the roof f is a trivial time change: f - mean(f) must be a
/// coboundary, i.e. every D_{m,n} vanishes (within tol, relative to the
/// component norm) and the abelian part solves without hitting a small
/// divisor. Small divisors make the verdict inconclusive rather than false.
pub fn triviality_test(
    f: &FourierObservable,
    params: &SkewShiftParams,
    tol: f64,
) -> Result<TrivialityReport> {
    let cert = crate::observables::certify_range(f, 128)?;
    if cert.grid_min - cert.margin <= 0.0 {
        return Err(Error::Precondition(
            "triviality test requires a certified positive roof".into(),
        ));
    }
    let g = project_zero_mean(f);
    let dec = decompose_hmn(&g);
    let mut worst = 0.0f64;
    let mut per_component = Vec::new();
    for comp in dec.components.values() {
        let d = invariant_distribution(comp, params)?;
        let scale = comp.l2_norm().max(f64::MIN_POSITIVE);
        per_component.push((comp.m, comp.n, d.abs()));
        worst = worst.max(d.abs() / scale);
    }
    let mut inconclusive = false;
    let mut abelian_smallest_divisor = None;
    if !dec.abelian.is_empty() {
        match solve_abelian(&dec.abelian, params, tol) {
            Ok(sol) => abelian_smallest_divisor = Some(sol.smallest_divisor),
            Err(Error::SmallDivisor(_)) => inconclusive = true,
            Err(e) => return Err(e),
        }
    }
    Ok(TrivialityReport {
        trivial: !inconclusive && worst <= tol,
        inconclusive,
        worst_obstruction: worst,
        per_component,
        abelian_smallest_divisor,
        mean: f.mean(),
    })
}
