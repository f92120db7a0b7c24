//! Semi-analytic evaluation of `amplitude·∫_box e^{i(x·ξ + tP(ξ))} dξ` for the
//! nonelliptic symbols `ξ₁ξ₂` and `ξ₁ξ₂ ± ξ₃²`.
//!
//! The `ξ₁` integral is done in closed form, which removes the fast
//! oscillation at the box scale; the remaining axes are unit-length in the
//! counterexample and go through adaptive quadrature.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{BoxSpec, QuadraticSymbol, ThirdAxisSign};
use crate::quad::{integrate_complex, QuadOptions};

/// Below this `|aL|` the closed form switches to its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// `∫_{lo}^{lo+len} e^{iaξ} dξ`.
pub fn oscillatory_segment(a: f64, lo: f64, len: f64) -> Complex64 {
    let z = a * len;
    let scaled = if z.abs() < SERIES_CUTOFF {
        // len·(1 + iz/2 − z²/6)
        Complex64::new(1.0 - z * z / 6.0, 0.5 * z)
    } else {
        let half = 0.5 * z;
        Complex64::cis(half) * (half.sin() / half)
    };
    Complex64::cis(a * lo) * scaled * len
}

fn third_axis_sign(symbol: &QuadraticSymbol) -> Result<Option<ThirdAxisSign>> {
    if *symbol == QuadraticSymbol::nonelliptic_2d() {
        return Ok(None);
    }
    for sign in [ThirdAxisSign::Plus, ThirdAxisSign::Minus] {
        if *symbol == QuadraticSymbol::nonelliptic_3d(sign) {
            return Ok(Some(sign));
        }
    }
    Err(Error::param("symbol", "the box oracle supports ξ₁ξ₂ and ξ₁ξ₂ ± ξ₃² only"))
}

/// `amplitude·∫_box e^{i(x·ξ + tP(ξ))} dξ` with absolute tolerance `tol`.
pub fn oracle_box_eval(spec: &BoxSpec, symbol: &QuadraticSymbol, x: &[f64], t: f64, tol: f64) -> Result<Complex64> {
    let sign = third_axis_sign(symbol)?;
    let dim = symbol.dim();
    if spec.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: spec.dim() });
    }
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    let amp = spec.amplitude();
    if amp == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (lo, hi) = (spec.lo(), spec.hi());
    let len1 = hi[0] - lo[0];
    let len2 = hi[1] - lo[1];

    // ξ₂ = lo₂ + η; the e^{i x₂ lo₂} factor is pulled out of the integral.
    let base = x[0] + t * lo[1];
    let slow = |eta: f64| Complex64::cis(x[1] * eta) * oscillatory_segment(base + t * eta, lo[0], len1);

    let (third, third_scale) = match sign {
        None => (Complex64::new(1.0, 0.0), 1.0),
        Some(sign) => {
            let s = sign.value();
            let len3 = hi[2] - lo[2];
            let v = integrate_complex(
                |c| Complex64::cis(x[2] * c + s * t * c * c),
                lo[2],
                hi[2],
                QuadOptions::absolute(tol / (amp.abs() * len1 * len2).max(f64::MIN_POSITIVE)),
            )?;
            (v, len3)
        }
    };
    let opts = QuadOptions::absolute(tol / (amp.abs() * third_scale).max(f64::MIN_POSITIVE));
    let inner = integrate_complex(slow, 0.0, len2, opts)?;
    Ok(Complex64::cis(x[1] * lo[1]) * inner * third * amp)
}

/// `|oracle| / |amplitude × volume|`: the modulus in units of the value at
/// zero phase.
pub fn normalized_modulus(spec: &BoxSpec, symbol: &QuadraticSymbol, x: &[f64], t: f64, tol: f64) -> Result<f64> {
    Ok(oracle_box_eval(spec, symbol, x, t, tol)?.norm() / spec.mass().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx_box(lambda: f64) -> BoxSpec {
        BoxSpec::new(vec![0.0, -lambda - 1.0], vec![lambda, -lambda], 1.0 / lambda).unwrap()
    }

    #[test]
    fn zero_phase_gives_mass() {
        let p = QuadraticSymbol::nonelliptic_2d();
        for lambda in [4.0, 17.12, 5.4e5] {
            let v = oracle_box_eval(&cx_box(lambda), &p, &[0.0, 0.0], 0.0, 1e-9).unwrap();
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{lambda}: {v}");
        }
    }

    #[test]
    fn segment_branches_agree_near_cutoff() {
        let len = 3.0;
        let below = oscillatory_segment(0.999 * SERIES_CUTOFF / len, 0.5, len);
        let above = oscillatory_segment(1.001 * SERIES_CUTOFF / len, 0.5, len);
        assert!((below - above).norm() < 1e-6 * len);
        let exact = |a: f64| (Complex64::cis(a * 3.5) - Complex64::cis(a * 0.5)) / Complex64::new(0.0, a);
        assert!((oscillatory_segment(2.0, 0.5, len) - exact(2.0)).norm() < 1e-14);
        assert_eq!(oscillatory_segment(0.0, 0.5, len), Complex64::new(len, 0.0));
    }

    #[test]
    fn t_zero_factorizes() {
        let p = QuadraticSymbol::nonelliptic_2d();
        let spec = cx_box(16.0);
        for x in [[0.3, -0.2], [0.05, 0.9], [-0.7, 0.01]] {
            let v = oracle_box_eval(&spec, &p, &x, 0.0, 1e-12).unwrap();
            let want = oscillatory_segment(x[0], 0.0, 16.0) * oscillatory_segment(x[1], -17.0, 1.0) / 16.0;
            assert!((v - want).norm() < 1e-10, "{x:?}");
        }
    }

    #[test]
    fn rejects_other_symbols() {
        let r = oracle_box_eval(&cx_box(4.0), &QuadraticSymbol::elliptic(2), &[0.0, 0.0], 0.1, 1e-9);
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn three_dimensional_factor() {
        let lambda = 8.0;
        let spec = BoxSpec::new(vec![0.0, -lambda - 1.0, 0.0], vec![lambda, -lambda, 1.0], 1.0 / lambda).unwrap();
        let p3 = QuadraticSymbol::nonelliptic_3d(ThirdAxisSign::Plus);
        let v0 = oracle_box_eval(&spec, &p3, &[0.0, 0.0, 0.0], 0.0, 1e-9).unwrap();
        assert!((v0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // With x₃ = 0 and t = 0 the third factor is 1.
        let x = [0.02, 0.3, 0.0];
        let v3 = oracle_box_eval(&spec, &p3, &x, 0.0, 1e-10).unwrap();
        let v2 = oracle_box_eval(&cx_box(lambda), &QuadraticSymbol::nonelliptic_2d(), &x[..2], 0.0, 1e-10).unwrap();
        assert!((v3 - v2).norm() < 1e-9);
    }
}
