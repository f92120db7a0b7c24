//! Discrete function model: band-limited trigonometric sums, quadratic
//! symbols, sampling grids and frequency-side norms.

mod field;
mod grid;
pub mod io;
mod symbol;

pub use field::{
    annulus_project, dyadic_level, indicator_box_field, littlewood_paley, random_annulus_field,
    BandLimitedField, BoxSpec,
};
pub use grid::{Point, SpatialGrid};
pub use symbol::{QuadraticSymbol, ThirdAxisSign};

use crate::error::Result;
use crate::quad::{integrate, QuadOptions};

/// Sobolev weight used by [`box_hs_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevWeight {
    /// `(1+|ξ|²)^s`
    Inhomogeneous,
    /// `|ξ|^{2s}`
    Homogeneous,
}

/// `(∫_box w_s(ξ)·amplitude² dξ)^{1/2}` evaluated by nested adaptive
/// quadrature, independent of any lattice. Works for 1 to 3 axes.
pub fn box_hs_norm(spec: &BoxSpec, s: f64, weight: SobolevWeight) -> Result<f64> {
    let w = move |r2: f64| match weight {
        SobolevWeight::Inhomogeneous => (1.0 + r2).powf(s),
        SobolevWeight::Homogeneous => {
            if r2 == 0.0 {
                if s == 0.0 { 1.0 } else { 0.0 }
            } else {
                r2.powf(s)
            }
        }
    };
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 400 };
    let lo = spec.lo();
    let hi = spec.hi();
    let integral = match spec.dim() {
        1 => integrate(|a| w(a * a), lo[0], hi[0], opts)?,
        2 => nested2(&w, lo, hi, 0.0, opts)?,
        3 => {
            let mut err = None;
            let v = integrate(
                |c| match nested2(&w, lo, hi, c * c, opts) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                lo[2],
                hi[2],
                opts,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            v
        }
        d => {
            return Err(crate::Error::param("box", format!("box norms support 1 to 3 axes, got {d}")))
        }
    };
    Ok(spec.amplitude().abs() * integral.sqrt())
}

fn nested2(w: &impl Fn(f64) -> f64, lo: &[f64], hi: &[f64], extra: f64, opts: QuadOptions) -> Result<f64> {
    let mut err = None;
    let v = integrate(
        |b| match integrate(|a| w(a * a + b * b + extra), lo[0], hi[0], opts) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        lo[1],
        hi[1],
        opts,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}
