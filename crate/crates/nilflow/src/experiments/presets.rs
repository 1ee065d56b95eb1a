//! Named observable and roof presets used by the CLI corpus and the
//! integration suite. All presets are small trigonometric polynomials so
//! every run is reproducible from a one-word name.

use crate::cohomology::coboundary_of;
use crate::error::{Error, Result};
use crate::observables::FourierObservable;
use crate::specialflow::RoofFunction;
use crate::torus::SkewShiftParams;

/// Grid used to certify preset roofs.
const PRESET_CERT_GRID: usize = 512;

/// Zero-mean observables by name:
/// - `noncoboundary`: g = 2 cos(2 pi (x + y)); a single pair of modes with
///   invariant-distribution value D_{1,1}(g) = 1.
/// - `coboundary`: g = u o Phi - u for u = cos(2 pi (x + y)); exactly a
///   coboundary, so all invariant distributions vanish.
pub fn preset_observable(name: &str, params: &SkewShiftParams) -> Result<FourierObservable> {
    match name {
        "noncoboundary" => Ok(FourierObservable::cosine(1, 1, 2.0)),
        "coboundary" => Ok(coboundary_of(&FourierObservable::cosine(1, 1, 1.0), params)),
        other => Err(Error::Parse(format!("unknown observable preset {other:?}"))),
    }
}

/// Positive roofs by name:
/// - `nontrivial`: f = 1 + 0.2 cos(2 pi (x + y)); not cohomologous to a
///   constant (the perturbation carries D_{1,1} = 0.2 != 0).
/// - `trivial`: f = 1 + (u o Phi - u) for u = 0.2 cos(2 pi y); cohomologous
///   to the constant 1 with a transfer function of sup norm 0.2, so
///   telescoping bounds every Birkhoff-sum difference by 0.8 < 1.
/// - `unit`: the constant roof 1.
pub fn preset_roof(name: &str, params: &SkewShiftParams) -> Result<RoofFunction> {
    match name {
        "nontrivial" => RoofFunction::new(
            FourierObservable::constant(1.0).add(&FourierObservable::cosine(1, 1, 0.2)),
            PRESET_CERT_GRID,
        ),
        "trivial" => {
            let u = FourierObservable::cosine(0, 1, 0.2);
            RoofFunction::new(
                FourierObservable::constant(1.0).add(&coboundary_of(&u, params)),
                PRESET_CERT_GRID,
            )
        }
        "unit" => RoofFunction::constant(1.0),
        other => Err(Error::Parse(format!("unknown roof preset {other:?}"))),
    }
}
