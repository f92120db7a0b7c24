//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals kept by the adaptive loop.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-9, rel_tol: 0.0, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn absolute(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self { abs_tol: 0.0, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm())
}

/// Integrates a complex-valued function over `[a, b]`.
///
/// Stops once the summed Kronrod–Gauss error estimate is below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_complex<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (value, error) = kronrod(&mut f, a, b);
    let mut segments = vec![Segment { a, b, value, error }];
    loop {
        let total: Complex64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            return Ok(total);
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::QuadratureBudget {
                tol,
                budget: opts.max_intervals,
                estimate: err,
            });
        }
        // Worst segment, first index on ties.
        let mut worst = 0;
        for (i, s) in segments.iter().enumerate() {
            if s.error > segments[worst].error {
                worst = i;
            }
        }
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(Error::QuadratureBudget { tol, budget: segments.len(), estimate: err });
        }
        let (lv, le) = kronrod(&mut f, seg.a, mid);
        let (rv, re) = kronrod(&mut f, mid, seg.b);
        segments[worst] = Segment { a: seg.a, b: mid, value: lv, error: le };
        segments.insert(worst + 1, Segment { a: mid, b: seg.b, value: rv, error: re });
    }
}

/// Real-valued convenience wrapper around [`integrate_complex`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, opts).map(|z| z.re)
}
