//! Moebius function sieve and Moebius-weighted averages sampled along a
//! special-flow trajectory.

use crate::birkhoff::Kahan;
use crate::error::{Error, Result};
use crate::experiments::FlowObservable;
use crate::specialflow::{FlowCursor, RoofFunction, SpecialFlowState};
use crate::torus::SkewShiftParams;

/// Largest supported sieve range.
pub const MAX_SIEVE: usize = 100_000_000;

/// mu(1..=N) as signed bytes.
#[derive(Clone, Debug)]
pub struct MoebiusTable {
    values: Vec<i8>,
}

impl MoebiusTable {
    /// Largest argument covered.
    pub fn len(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mu(&self, n: usize) -> i32 {
        self.values[n] as i32
    }

    /// Mertens partial sum M(n) = sum_{k<=n} mu(k).
    pub fn mertens(&self, n: usize) -> i64 {
        self.values[1..=n].iter().map(|&v| v as i64).sum()
    }
}

/// Linear sieve of the Moebius function over 1..=n.
pub fn moebius_sieve(n: usize) -> Result<MoebiusTable> {
    if n == 0 || n > MAX_SIEVE {
        return Err(Error::Precondition(format!(
            "sieve range {n} outside 1..={MAX_SIEVE}"
        )));
    }
    let mut mu = vec![0i8; n + 1];
    mu[1] = 1;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u32);
            mu[i] = -1;
        }
        for &p in &primes {
            let p = p as usize;
            if i * p > n {
                break;
            }
            composite[i * p] = true;
            if i % p == 0 {
                mu[i * p] = 0;
                break;
            }
            mu[i * p] = -mu[i];
        }
    }
    Ok(MoebiusTable { values: mu })
}

/// Weight sequence for the flow average.
#[derive(Clone, Copy, Debug)]
pub enum Weighting<'a> {
    /// mu(n) from a sieved table.
    Moebius(&'a MoebiusTable),
    /// Constant weight 1 (plain Birkhoff average along the time-t samples).
    Ones,
}

/// Partial averages (1/K) sum_{n<=K} w(n) F(Phi^f_{nt} x0) at power-of-two
/// checkpoints K and at K = N.
pub fn moebius_sum(
    big_f: &FlowObservable,
    f: &RoofFunction,
    params: &SkewShiftParams,
    x0: &SpecialFlowState,
    t: f64,
    n: usize,
    weights: &Weighting,
) -> Result<Vec<(usize, f64)>> {
    if !(t > 0.0) {
        return Err(Error::Precondition("sampling time must be positive".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    if let Weighting::Moebius(table) = weights {
        if table.len() < n {
            return Err(Error::Precondition(format!(
                "sieve covers 1..={} but {n} samples requested",
                table.len()
            )));
        }
    }
    let mut cursor = FlowCursor::new(f, params, x0)?;
    let mut acc = Kahan::default();
    let mut out = Vec::new();
    for k in 1..=n {
        cursor.advance(t)?;
        let v = big_f.evaluate(f, &cursor.state());
        let w = match weights {
            Weighting::Moebius(table) => table.mu(k) as f64,
            Weighting::Ones => 1.0,
        };
        acc.add(w * v);
        if k.is_power_of_two() || k == n {
            out.push((k, acc.value() / k as f64));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{PhaseAngle, RotationNumber};
    use crate::experiments::presets::{preset_observable, preset_roof};
    use crate::experiments::FiberWindow;
    use crate::observables::FourierObservable;
    use crate::torus::TorusPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> SkewShiftParams {
        SkewShiftParams {
            alpha: RotationNumber::golden(30),
            beta: PhaseAngle::from_decimal_str("0.3").unwrap(),
        }
    }

    /// mu by trial factorization.
    fn mu_oracle(mut n: u64) -> i32 {
        let mut factors = 0;
        let mut d = 2u64;
        while d * d <= n {
            if n % d == 0 {
                n /= d;
                if n % d == 0 {
                    return 0;
                }
                factors += 1;
            }
            d += 1;
        }
        if n > 1 {
            factors += 1;
        }
        if factors % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn sieve_spot_values() {
        let t = moebius_sieve(100).unwrap();
        assert_eq!(t.mu(1), 1);
        assert_eq!(t.mu(2), -1);
        assert_eq!(t.mu(3), -1);
        assert_eq!(t.mu(4), 0);
        assert_eq!(t.mu(6), 1);
        assert_eq!(t.mu(12), 0);
        assert_eq!(t.mu(30), -1);
        assert!(moebius_sieve(0).is_err());
    }

    #[test]
    fn sieve_matches_factorization_oracle() {
        let t = moebius_sieve(10_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10_000usize);
            assert_eq!(t.mu(n), mu_oracle(n as u64), "n = {n}");
        }
        // Mertens sum is reproducible from the table itself
        let direct: i64 = (1..=10_000u64).map(|n| mu_oracle(n) as i64).sum();
        assert_eq!(t.mertens(10_000), direct);
    }

    #[test]
    fn constant_observable_gives_mertens_average() {
        let pr = params();
        let f = preset_roof("nontrivial", &pr).unwrap();
        let table = moebius_sieve(10_000).unwrap();
        let big_f = FlowObservable::new(FourierObservable::constant(1.0), FiberWindow::Flat);
        let x0 = SpecialFlowState::new(&f, TorusPoint::from_f64(0.2, 0.4), 0.0).unwrap();
        let partials = moebius_sum(
            &big_f,
            &f,
            &pr,
            &x0,
            0.7,
            10_000,
            &Weighting::Moebius(&table),
        )
        .unwrap();
        for &(k, avg) in &partials {
            let mertens = table.mertens(k) as f64 / k as f64;
            assert!((avg - mertens).abs() < 1e-12, "K={k}: {avg} vs {mertens}");
        }
        let (_, last) = *partials.last().unwrap();
        assert!(last.abs() <= 0.05, "Mertens average {last}");
    }

    #[test]
    fn ones_weighting_recovers_the_space_average() {
        let pr = params();
        let f = preset_roof("nontrivial", &pr).unwrap();
        let g = preset_observable("noncoboundary", &pr).unwrap();
        let big_f = FlowObservable::new(g, FiberWindow::SinSq);
        let x0 = SpecialFlowState::new(&f, TorusPoint::from_f64(0.81, 0.37), 0.0).unwrap();
        let partials = moebius_sum(&big_f, &f, &pr, &x0, 0.7, 20_000, &Weighting::Ones).unwrap();
        let (_, avg) = *partials.last().unwrap();
        // integral of F over the suspension with normalized volume:
        // fiber integral of sin^2 is f/2, so the value is
        // (1/2) int g f dx dy / int f dx dy = (1/2)(0.2) = 0.1
        assert!((avg - 0.1).abs() < 0.05, "time average {avg}");
    }

    #[test]
    fn moebius_weighted_average_is_small() {
        let pr = params();
        let f = preset_roof("nontrivial", &pr).unwrap();
        let g = preset_observable("noncoboundary", &pr).unwrap();
        let table = moebius_sieve(10_000).unwrap();
        let big_f = FlowObservable::new(g, FiberWindow::SinSq);
        let x0 = SpecialFlowState::new(&f, TorusPoint::from_f64(0.55, 0.66), 0.0).unwrap();
        let partials = moebius_sum(
            &big_f,
            &f,
            &pr,
            &x0,
            0.7,
            10_000,
            &Weighting::Moebius(&table),
        )
        .unwrap();
        let (_, avg) = *partials.last().unwrap();
        assert!(avg.abs() <= 0.05, "Moebius average {avg}");
    }
}
