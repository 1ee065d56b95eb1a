//! Real-valued observables on the 2-torus as finite Fourier series, with the
//! H_{m,n} component decomposition, derivatives, Sobolev norms, and roof
//! construction.
//!
//! A real observable g = sum c_{a,b} e^{2 pi i (a x + b y)} must satisfy the
//! Hermitian symmetry c_{-a,-b} = conj(c_{a,b}). Coefficients are kept in a
//! BTreeMap so every traversal is deterministic.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::TorusPoint;

pub const TAU: f64 = 2.0 * PI;

/// Default support radius for synthesized test observables.
pub const DEFAULT_SUPPORT_RADIUS: i64 = 16;
/// Default Sobolev hint, above the 7/2 regularity class.
pub const DEFAULT_SOBOLEV_HINT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierObservable {
    coeffs: BTreeMap<(i64, i64), Complex64>,
    sobolev_hint: f64,
}

impl FourierObservable {
    pub fn zero() -> Self {
        FourierObservable {
            coeffs: BTreeMap::new(),
            sobolev_hint: DEFAULT_SOBOLEV_HINT,
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut obs = Self::zero();
        if c != 0.0 {
            obs.coeffs.insert((0, 0), Complex64::new(c, 0.0));
        }
        obs
    }

    /// amp * cos(2 pi (a x + b y))
    pub fn cosine(a: i64, b: i64, amp: f64) -> Self {
        let mut obs = Self::zero();
        if a == 0 && b == 0 {
            return Self::constant(amp);
        }
        obs.coeffs.insert((a, b), Complex64::new(amp / 2.0, 0.0));
        obs.coeffs.insert((-a, -b), Complex64::new(amp / 2.0, 0.0));
        obs
    }

    /// amp * sin(2 pi (a x + b y))
    pub fn sine(a: i64, b: i64, amp: f64) -> Self {
        let mut obs = Self::zero();
        if a == 0 && b == 0 {
            return obs;
        }
        obs.coeffs.insert((a, b), Complex64::new(0.0, -amp / 2.0));
        obs.coeffs.insert((-a, -b), Complex64::new(0.0, amp / 2.0));
        obs
    }

    /// Build from explicit coefficients, verifying Hermitian symmetry.
    pub fn from_coefficients(
        coeffs: BTreeMap<(i64, i64), Complex64>,
        sobolev_hint: f64,
    ) -> Result<Self> {
        let obs = FourierObservable {
            coeffs,
            sobolev_hint,
        };
        obs.check_hermitian()?;
        Ok(obs)
    }

    pub fn check_hermitian(&self) -> Result<()> {
        for (&(a, b), &c) in &self.coeffs {
            let mirror = self
                .coeffs
                .get(&(-a, -b))
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0));
            if (mirror - c.conj()).norm() > 1e-12 * (1.0 + c.norm()) {
                return Err(Error::Integrity(format!(
                    "non-Hermitian coefficients at ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> &BTreeMap<(i64, i64), Complex64> {
        &self.coeffs
    }

    pub fn coefficient(&self, a: i64, b: i64) -> Complex64 {
        self.coeffs
            .get(&(a, b))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set_coefficient(&mut self, a: i64, b: i64, c: Complex64) {
        if c.norm() == 0.0 {
            self.coeffs.remove(&(a, b));
        } else {
            self.coeffs.insert((a, b), c);
        }
    }

    pub fn support_radius(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|&(a, b)| a.abs().max(b.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn sobolev_hint(&self) -> f64 {
        self.sobolev_hint
    }

    pub fn set_sobolev_hint(&mut self, s: f64) {
        self.sobolev_hint = s;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    /// Mean value = c_{0,0} (real for Hermitian observables).
    pub fn mean(&self) -> f64 {
        self.coefficient(0, 0).re
    }

    pub fn scale(&self, s: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(&k, &c)| (k, c * s)).collect();
        FourierObservable {
            coeffs,
            sobolev_hint: self.sobolev_hint,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (&k, &c) in &other.coeffs {
            let e = coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0));
            *e += c;
        }
        coeffs.retain(|_, c| c.norm() > 0.0);
        FourierObservable {
            coeffs,
            sobolev_hint: self.sobolev_hint.min(other.sobolev_hint),
        }
    }

    /// Sum of |c| * 2 pi (|a| + |b|): a Lipschitz constant in each coordinate.
    pub fn lipschitz_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(a, b), c)| c.norm() * TAU * (a.abs() + b.abs()) as f64)
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }
}

/// Evaluate at a point; the imaginary residue of the Hermitian sum is
/// asserted below 1e-12 scale and discarded.
pub fn evaluate(obs: &FourierObservable, p: &TorusPoint) -> Result<f64> {
    obs.check_hermitian()?;
    Ok(evaluate_unchecked(obs, p))
}

pub fn evaluate_unchecked(obs: &FourierObservable, p: &TorusPoint) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (&(a, b), &c) in &obs.coeffs {
        let phase = (a as f64 * p.x_f64() + b as f64 * p.y_f64()).rem_euclid(1.0);
        sum += c * Complex64::from_polar(1.0, TAU * phase);
    }
    debug_assert!(
        sum.im.abs() <= 1e-10 * (1.0 + obs.l1_norm()),
        "imaginary residue {} too large",
        sum.im
    );
    sum.re
}

/// Zero the mean mode, leaving everything else unchanged.
pub fn project_zero_mean(obs: &FourierObservable) -> FourierObservable {
    let mut out = obs.clone();
    out.coeffs.remove(&(0, 0));
    out
}

/// One invariant component H_{m,n}: modes e_{m+jn, n} indexed by j.
#[derive(Clone, Debug, PartialEq)]
pub struct HmnComponent {
    pub m: i64,
    pub n: i64,
    /// j -> g_j, the coefficient of e_{m+jn, n}
    pub coeffs: BTreeMap<i64, Complex64>,
}

impl HmnComponent {
    pub fn l2_norm(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Back to (a, b) coefficient space.
    pub fn to_observable(&self) -> FourierObservable {
        let mut coeffs = BTreeMap::new();
        for (&j, &c) in &self.coeffs {
            coeffs.insert((self.m + j * self.n, self.n), c);
        }
        FourierObservable {
            coeffs,
            sobolev_hint: DEFAULT_SOBOLEV_HINT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HmnDecomposition {
    /// keyed by (m, n), 0 <= m < |n|, n != 0
    pub components: BTreeMap<(i64, i64), HmnComponent>,
    /// modes with n = 0, keyed by a
    pub abelian: BTreeMap<i64, Complex64>,
}

impl HmnDecomposition {
    /// Reassemble; exact on coefficients.
    pub fn reassemble(&self) -> FourierObservable {
        let mut coeffs = BTreeMap::new();
        for comp in self.components.values() {
            for (&j, &c) in &comp.coeffs {
                coeffs.insert((comp.m + j * comp.n, comp.n), c);
            }
        }
        for (&a, &c) in &self.abelian {
            coeffs.insert((a, 0), c);
        }
        FourierObservable {
            coeffs,
            sobolev_hint: DEFAULT_SOBOLEV_HINT,
        }
    }
}

/// Partition the modes into H_{m,n} components plus the abelian remainder
/// (modes with n = 0, including the mean).
pub fn decompose_hmn(obs: &FourierObservable) -> HmnDecomposition {
    let mut components: BTreeMap<(i64, i64), HmnComponent> = BTreeMap::new();
    let mut abelian = BTreeMap::new();
    for (&(a, b), &c) in &obs.coeffs {
        if b == 0 {
            abelian.insert(a, c);
            continue;
        }
        let n = b;
        let m = a.rem_euclid(n.abs());
        let j = (a - m) / n;
        components
            .entry((m, n))
            .or_insert_with(|| HmnComponent {
                m,
                n,
                coeffs: BTreeMap::new(),
            })
            .coeffs
            .insert(j, c);
    }
    HmnDecomposition {
        components,
        abelian,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Coefficientwise derivative: multiply by 2 pi i a (X) or 2 pi i b (Y).
pub fn partial_derivative(obs: &FourierObservable, axis: Axis) -> FourierObservable {
    let mut coeffs = BTreeMap::new();
    for (&(a, b), &c) in obs.coefficients() {
        let k = match axis {
            Axis::X => a,
            Axis::Y => b,
        };
        let d = c * Complex64::new(0.0, TAU * k as f64);
        if d.norm() > 0.0 {
            coeffs.insert((a, b), d);
        }
    }
    FourierObservable {
        coeffs,
        sobolev_hint: (obs.sobolev_hint - 1.0).max(0.0),
    }
}

/// (sum (1 + a^2 + b^2)^s |c|^2)^{1/2}
pub fn sobolev_norm(obs: &FourierObservable, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Precondition("sobolev_norm needs s >= 0".into()));
    }
    Ok(obs
        .coefficients()
        .iter()
        .map(|(&(a, b), c)| (1.0 + (a * a + b * b) as f64).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Result of a positivity certification over a grid with Lipschitz margin.
#[derive(Clone, Copy, Debug)]
pub struct PositivityCertificate {
    pub grid_min: f64,
    pub grid_max: f64,
    pub margin: f64,
}

/// Scan an n x n grid and return min/max together with the Lipschitz safety
/// margin; f is then certified within [grid_min - margin, grid_max + margin].
pub fn certify_range(obs: &FourierObservable, grid: usize) -> Result<PositivityCertificate> {
    if grid < 2 {
        return Err(Error::Precondition("grid resolution must be >= 2".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..grid {
        for j in 0..grid {
            let p = TorusPoint::from_f64(i as f64 / grid as f64, j as f64 / grid as f64);
            let v = evaluate_unchecked(obs, &p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    // any torus point is within 1/(2 grid) of a grid node in each coordinate
    let margin = obs.lipschitz_bound() / (2.0 * grid as f64);
    Ok(PositivityCertificate {
        grid_min: lo,
        grid_max: hi,
        margin,
    })
}

/// Shift by the smallest constant C >= 0 such that the grid minimum minus
/// the Lipschitz margin is at least `floor`.
pub fn make_positive_roof(
    obs: &FourierObservable,
    floor: f64,
    grid: usize,
) -> Result<FourierObservable> {
    if floor <= 0.0 {
        return Err(Error::Precondition("roof floor must be positive".into()));
    }
    if obs.is_zero() {
        return Ok(FourierObservable::constant(floor));
    }
    let cert = certify_range(obs, grid)?;
    let shift = (floor - (cert.grid_min - cert.margin)).max(0.0);
    let mut out = obs.clone();
    let c00 = out.coefficient(0, 0) + Complex64::new(shift, 0.0);
    out.set_coefficient(0, 0, c00);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exchange format: lines of `a b re im`, `#` comments, order-insensitive
// ---------------------------------------------------------------------------

pub fn to_exchange_text(obs: &FourierObservable) -> String {
    let mut out = String::from("# a b re im\n");
    for (&(a, b), c) in obs.coefficients() {
        out.push_str(&format!("{a} {b} {:.17e} {:.17e}\n", c.re, c.im));
    }
    out
}

pub fn from_exchange_text(text: &str) -> Result<FourierObservable> {
    let mut coeffs = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "line {}: expected `a b re im`, got {line:?}",
                lineno + 1
            )));
        }
        let a: i64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad integer", lineno + 1)))?;
        let b: i64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad integer", lineno + 1)))?;
        let re: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad real", lineno + 1)))?;
        let im: f64 = fields[3]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad real", lineno + 1)))?;
        coeffs.insert((a, b), Complex64::new(re, im));
    }
    FourierObservable::from_coefficients(coeffs, DEFAULT_SOBOLEV_HINT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_observable(rng: &mut ChaCha8Rng, radius: i64, modes: usize) -> FourierObservable {
        let mut obs = FourierObservable::zero();
        for _ in 0..modes {
            let a = rng.gen_range(-radius..=radius);
            let b = rng.gen_range(-radius..=radius);
            if a == 0 && b == 0 {
                continue;
            }
            let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            obs.set_coefficient(a, b, obs.coefficient(a, b) + c);
            obs.set_coefficient(-a, -b, obs.coefficient(-a, -b) + c.conj());
        }
        obs
    }

    #[test]
    fn evaluate_basic() {
        let cos_x = FourierObservable::cosine(1, 0, 1.0);
        let p = TorusPoint::from_f64(0.0, 0.37);
        assert!((evaluate(&cos_x, &p).unwrap() - 1.0).abs() < 1e-14);
        let c = FourierObservable::constant(3.0);
        assert!((evaluate(&c, &p).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn evaluate_rejects_non_hermitian() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((1, 2), Complex64::new(1.0, 0.0));
        let obs = FourierObservable {
            coeffs,
            sobolev_hint: 4.0,
        };
        assert!(evaluate(&obs, &TorusPoint::from_f64(0.1, 0.2)).is_err());
    }

    #[test]
    fn evaluate_matches_direct_trig_oracle() {
        // termwise real cos/sin summation, a different order and route
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let obs = random_observable(&mut rng, 10, 20);
        for _ in 0..20 {
            let p = TorusPoint::from_f64(rng.gen(), rng.gen());
            let mut want = 0.0;
            for (&(a, b), c) in obs.coefficients() {
                let th = TAU * (a as f64 * p.x_f64() + b as f64 * p.y_f64());
                want += c.re * th.cos() - c.im * th.sin();
            }
            let got = evaluate(&obs, &p).unwrap();
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn project_zero_mean_cases() {
        let c = FourierObservable::constant(5.0);
        assert!(project_zero_mean(&c).is_zero());
        let g = FourierObservable::cosine(1, 0, 1.0);
        assert_eq!(project_zero_mean(&g), g);
        let mix = FourierObservable::constant(3.0).add(&g);
        assert_eq!(project_zero_mean(&mix), g);
    }

    #[test]
    fn decompose_single_modes() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((2, 3), Complex64::new(0.5, 0.0));
        coeffs.insert((-2, -3), Complex64::new(0.5, 0.0));
        let obs = FourierObservable::from_coefficients(coeffs, 4.0).unwrap();
        let dec = decompose_hmn(&obs);
        // e_{2,3}: (m,n) = (2,3), j = 0
        let c = dec.components.get(&(2, 3)).unwrap();
        assert_eq!(c.coeffs.keys().copied().collect::<Vec<_>>(), vec![0]);
        // mirror mode e_{-2,-3}: m = (-2).rem_euclid(3) = 1, j = (-2-1)/(-3) = 1
        let cm = dec.components.get(&(1, -3)).unwrap();
        assert_eq!(cm.coeffs.keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn decompose_e53_lands_in_component_2_3() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((5, 3), Complex64::new(1.0, 0.0));
        coeffs.insert((-5, -3), Complex64::new(1.0, 0.0));
        let obs = FourierObservable::from_coefficients(coeffs, 4.0).unwrap();
        let dec = decompose_hmn(&obs);
        let c = dec.components.get(&(2, 3)).unwrap();
        assert_eq!(c.coeffs.keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn decompose_abelian_remainder() {
        let obs = FourierObservable::cosine(4, 0, 2.0);
        let dec = decompose_hmn(&obs);
        assert!(dec.components.is_empty());
        assert_eq!(dec.abelian.len(), 2);
    }

    #[test]
    fn decompose_reassemble_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let obs = random_observable(&mut rng, 12, 30);
            let back = decompose_hmn(&obs).reassemble();
            assert_eq!(back.coefficients(), obs.coefficients());
        }
    }

    #[test]
    fn derivative_cases() {
        // d/dy cos(2 pi y) = -2 pi sin(2 pi y)
        let g = FourierObservable::cosine(0, 1, 1.0);
        let dg = partial_derivative(&g, Axis::Y);
        let want = FourierObservable::sine(0, 1, -TAU);
        for (k, c) in want.coefficients() {
            assert!((dg.coefficient(k.0, k.1) - c).norm() < 1e-14);
        }
        // d/dx of a pure-y observable is 0
        assert!(partial_derivative(&g, Axis::X).is_zero());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let obs = random_observable(&mut rng, 6, 12);
        let dx = partial_derivative(&obs, Axis::X);
        let dy = partial_derivative(&obs, Axis::Y);
        let h = 1e-6;
        for _ in 0..10 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let fdx = (evaluate_unchecked(&obs, &TorusPoint::from_f64(x + h, y))
                - evaluate_unchecked(&obs, &TorusPoint::from_f64(x - h, y)))
                / (2.0 * h);
            let fdy = (evaluate_unchecked(&obs, &TorusPoint::from_f64(x, y + h))
                - evaluate_unchecked(&obs, &TorusPoint::from_f64(x, y - h)))
                / (2.0 * h);
            let p = TorusPoint::from_f64(x, y);
            let vx = evaluate_unchecked(&dx, &p);
            let vy = evaluate_unchecked(&dy, &p);
            assert!((fdx - vx).abs() < 1e-6 * (1.0 + vx.abs()));
            assert!((fdy - vy).abs() < 1e-6 * (1.0 + vy.abs()));
        }
    }

    #[test]
    fn derivative_commutes_with_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let obs = random_observable(&mut rng, 8, 16);
        let d_then_dec = decompose_hmn(&partial_derivative(&obs, Axis::Y));
        let dec = decompose_hmn(&obs);
        for (key, comp) in &dec.components {
            let derived = decompose_hmn(&partial_derivative(&comp.to_observable(), Axis::Y));
            let direct = d_then_dec.components.get(key).unwrap();
            let via = derived.components.get(key).unwrap();
            assert_eq!(direct.coeffs, via.coeffs);
        }
    }

    #[test]
    fn sobolev_norm_cases() {
        let e = FourierObservable::cosine(1, 0, 2.0); // c = 1 at (1,0) and (-1,0)
                                                      // ||e_{a,b}||_0 = 1 per mode; here two unit modes
        assert!((sobolev_norm(&e, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        // ||e_{1,0}||_1 = sqrt(2): single mode
        let mut single = FourierObservable::zero();
        single.set_coefficient(1, 0, Complex64::new(1.0, 0.0));
        single.set_coefficient(-1, 0, Complex64::new(1.0, 0.0));
        // per-mode factor (1+1)^{1/2}; two modes of unit size
        assert!((sobolev_norm(&single, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(sobolev_norm(&e, -1.0).is_err());
    }

    #[test]
    fn sobolev_norm_monotone_in_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let obs = random_observable(&mut rng, 9, 14);
        let n0 = sobolev_norm(&obs, 0.5).unwrap();
        let n1 = sobolev_norm(&obs, 1.5).unwrap();
        let n2 = sobolev_norm(&obs, 3.0).unwrap();
        assert!(n0 <= n1 && n1 <= n2);
    }

    #[test]
    fn roof_construction() {
        let zero = FourierObservable::zero();
        let r = make_positive_roof(&zero, 1.0, 64).unwrap();
        assert_eq!(r, FourierObservable::constant(1.0));

        let g = FourierObservable::cosine(1, 0, 1.0);
        let r = make_positive_roof(&g, 0.5, 256).unwrap();
        // grid min is -1 (+ margin): constant shift ~ 1.5 + margin
        let shift = r.mean();
        assert!(shift >= 1.5 && shift < 1.6, "shift = {shift}");
        let cert = certify_range(&r, 256).unwrap();
        assert!(cert.grid_min - cert.margin >= 0.5 - 1e-12);

        // already far above floor: unchanged
        let f = FourierObservable::constant(10.0).add(&g);
        let r = make_positive_roof(&f, 0.5, 128).unwrap();
        assert_eq!(r, f);
    }

    #[test]
    fn zero_mean_grid_average_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let obs = project_zero_mean(&random_observable(&mut rng, 12, 20));
        let n = 256;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = TorusPoint::from_f64(i as f64 / n as f64, j as f64 / n as f64);
                acc += evaluate_unchecked(&obs, &p);
            }
        }
        let mean = acc / (n * n) as f64;
        assert!(mean.abs() <= 1e-10, "grid mean {mean}");
    }

    #[test]
    fn exchange_format_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let obs = random_observable(&mut rng, 7, 10);
        let text = to_exchange_text(&obs);
        let back = from_exchange_text(&text).unwrap();
        for (k, c) in obs.coefficients() {
            assert!((back.coefficient(k.0, k.1) - c).norm() < 1e-15);
        }
        // comments and blank lines are tolerated, bad rows are not
        assert!(from_exchange_text("# comment\n\n1 0 0.5 0.0\n-1 0 0.5 0.0\n").is_ok());
        assert!(from_exchange_text("1 0 0.5\n").is_err());
    }
}
