//! Exact spectral evolution `e^{itP(D)}` on band-limited fields, evaluation
//! on grids, maximal functions over time sets and ball-restricted L² norms.

mod chain;
pub(crate) mod kernel;
mod oracle;

pub use chain::{sobolev_chain_report, ChainReport, CHAIN_SLACK};
pub use oracle::{normalized_modulus, oracle_box_eval, oscillatory_segment};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{BandLimitedField, QuadraticSymbol, SpatialGrid};
use crate::sum::pairwise_sum;
use kernel::{scan, PhaseTable, ScanRequest};

/// Default lower bound on the number of samples used for a sup over an interval.
pub const DEFAULT_SUP_SAMPLES_MIN: usize = 64;

/// Multiplies each amplitude by `e^{itP(ξ_k)}`.
pub fn evolve(f: &BandLimitedField, symbol: &QuadraticSymbol, t: f64) -> Result<BandLimitedField> {
    check_dim(f.dim(), symbol.dim())?;
    if !t.is_finite() {
        return Err(Error::param("t", "must be finite"));
    }
    let amps = f
        .freqs()
        .zip(f.amplitudes())
        .map(|(xi, c)| c * Complex64::cis(t * symbol.eval(xi)))
        .collect();
    f.with_amplitudes(amps)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Values attached to the active points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleArray<'g, T> {
    grid: &'g SpatialGrid,
    values: Vec<T>,
}

impl<'g, T> SampleArray<'g, T> {
    pub fn new(grid: &'g SpatialGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &'g SpatialGrid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Squared modulus of a sample.
pub trait SampleValue: Copy + Send + Sync {
    fn modulus_sq(self) -> f64;
}

impl SampleValue for f64 {
    fn modulus_sq(self) -> f64 {
        self * self
    }
}

impl SampleValue for Complex64 {
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
}

/// `Σ_k c_k e^{i x_p·ξ_k}` at every active grid point.
pub fn evaluate<'g>(f: &BandLimitedField, grid: &'g SpatialGrid) -> Result<SampleArray<'g, Complex64>> {
    check_dim(grid.dim(), f.dim())?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|p| evaluate_at(f, &grid.point(p)[..f.dim()]))
        .collect();
    SampleArray::new(grid, values)
}

/// `Σ_k c_k e^{i x·ξ_k}` at a single point.
pub fn evaluate_at(f: &BandLimitedField, x: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (xi, c) in f.freqs().zip(f.amplitudes()) {
        let ph: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
        acc += c * Complex64::cis(ph);
    }
    acc
}

/// A time interval `[a, b] ⊂ [0, 1]` with the number of uniform samples used
/// to approximate a supremum over it (both endpoints included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    a: f64,
    b: f64,
    samples: usize,
}

impl TimeInterval {
    pub fn new(a: f64, b: f64, samples: usize) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::param("interval", format!("need 0 ≤ a < b ≤ 1, got [{a}, {b}]")));
        }
        if samples < 2 {
            return Err(Error::param("samples", "need at least two samples"));
        }
        Ok(Self { a, b, samples })
    }

    /// Sample count `max(min_samples, ⌈8λ²|I|⌉)`: for frequencies with
    /// `|P(ξ)| ≤ 2λ²` the phase moves by at most `|I|/4` between samples.
    pub fn for_scale(a: f64, b: f64, lambda: f64, min_samples: usize) -> Result<Self> {
        let rule = (8.0 * lambda * lambda * (b - a)).ceil();
        let samples = min_samples.max(2).max(rule as usize);
        Self::new(a, b, samples)
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        let step = self.length() / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|j| if j + 1 == self.samples { self.b } else { self.a + j as f64 * step })
            .collect()
    }

    /// Trapezoid weights matching [`TimeInterval::times`].
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let step = self.length() / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|j| if j == 0 || j + 1 == self.samples { 0.5 * step } else { step })
            .collect()
    }
}

/// The set of times a supremum is taken over.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSet {
    Interval(TimeInterval),
    Points(Vec<f64>),
}

impl TimeSet {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeSet::Interval(i) => i.times(),
            TimeSet::Points(p) => p.clone(),
        }
    }
}

impl From<TimeInterval> for TimeSet {
    fn from(i: TimeInterval) -> Self {
        TimeSet::Interval(i)
    }
}

pub(crate) fn evolution_table(f: &BandLimitedField, symbol: &QuadraticSymbol, times: &[f64]) -> PhaseTable {
    let symbols: Vec<f64> = f.freqs().map(|xi| symbol.eval(xi)).collect();
    PhaseTable::build(f.len(), times.len(), |r, k| Complex64::cis(times[r] * symbols[k]))
}

/// `x ↦ max_{t ∈ times} |e^{itP(D)} f(x)|` on the active grid points.
pub fn maximal_over_times<'g>(
    f: &BandLimitedField,
    symbol: &QuadraticSymbol,
    times: &TimeSet,
    grid: &'g SpatialGrid,
) -> Result<SampleArray<'g, f64>> {
    check_dim(f.dim(), symbol.dim())?;
    check_dim(grid.dim(), f.dim())?;
    let ts = times.times();
    if ts.is_empty() {
        return Err(Error::param("times", "time set is empty"));
    }
    let table = evolution_table(f, symbol, &ts);
    let stats = scan(f, grid, &ScanRequest { table: &table, aux: None, weights: None });
    SampleArray::new(grid, stats.into_iter().map(|s| s.max_sq.sqrt()).collect())
}

/// `(Σ_{|x_p| ≤ ρ} |v_p|² w)^{1/2}` with pairwise summation in point order.
pub fn l2_ball_norm<T: SampleValue>(samples: &SampleArray<'_, T>, radius: f64) -> Result<f64> {
    let grid = samples.grid();
    if !grid.covers_ball(radius) {
        return Err(Error::GridDoesNotCoverBall { radius });
    }
    let r2 = radius * radius;
    let terms: Vec<f64> = grid
        .points()
        .zip(samples.values())
        .filter(|(p, _)| p.iter().map(|v| v * v).sum::<f64>() <= r2)
        .map(|(_, v)| v.modulus_sq())
        .collect();
    Ok((pairwise_sum(&terms) * grid.weight()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{random_annulus_field, BoxSpec};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evolve_identity_and_single_phase() {
        let p = QuadraticSymbol::nonelliptic_2d();
        let f = random_annulus_field(8.0, 10, 3).unwrap();
        assert_eq!(evolve(&f, &p, 0.0).unwrap(), f);
        let w = BandLimitedField::plane_wave(&[1.0, 1.0], c(1.0, 0.0)).unwrap();
        let z = evolve(&w, &p, PI).unwrap().amp(0);
        assert!((z - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn evolve_rejects_dimension_mismatch() {
        let f = BandLimitedField::plane_wave(&[1.0, 1.0, 0.0], c(1.0, 0.0)).unwrap();
        let r = evolve(&f, &QuadraticSymbol::nonelliptic_2d(), 1.0);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn plane_wave_has_unit_modulus_everywhere() {
        let grid = SpatialGrid::cube(2, 1.0, 16).unwrap();
        let f = BandLimitedField::plane_wave(&[7.0, -3.0], c(1.0, 0.0)).unwrap();
        let v = evaluate(&f, &grid).unwrap();
        assert!(v.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn box_field_at_origin_is_its_mass() {
        let spec = BoxSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let f = crate::fields::indicator_box_field(&spec, 1.0 / 8.0).unwrap();
        assert!((evaluate_at(&f, &[0.0, 0.0]) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn maximal_single_frequency_is_constant() {
        let grid = SpatialGrid::unit_ball(2, 20).unwrap();
        let f = BandLimitedField::plane_wave(&[4.0, 5.0], c(0.0, 2.0)).unwrap();
        let times = TimeSet::Interval(TimeInterval::new(0.0, 0.5, 40).unwrap());
        let m = maximal_over_times(&f, &QuadraticSymbol::nonelliptic_2d(), &times, &grid).unwrap();
        assert!(m.values().iter().all(|v| (v - 2.0).abs() < 1e-13));
    }

    #[test]
    fn maximal_singleton_matches_evaluate() {
        let p = QuadraticSymbol::nonelliptic_2d();
        let grid = SpatialGrid::unit_ball(2, 24).unwrap();
        let f = random_annulus_field(8.0, 12, 9).unwrap();
        let t0 = 0.0123;
        let m = maximal_over_times(&f, &p, &TimeSet::Points(vec![t0]), &grid).unwrap();
        let u = evaluate(&evolve(&f, &p, t0).unwrap(), &grid).unwrap();
        let scale: f64 = f.amplitudes().iter().map(|c| c.norm()).sum();
        for (a, b) in m.values().iter().zip(u.values()) {
            assert!((a - b.norm()).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn interval_sample_rule() {
        let i = TimeInterval::for_scale(0.0, 1.0 / 128.0, 128.0, 64).unwrap();
        assert_eq!(i.sample_count(), 1024);
        let j = TimeInterval::for_scale(0.0, 1.0 / (128.0 * 128.0), 128.0, 64).unwrap();
        assert_eq!(j.sample_count(), 64);
        let ts = i.times();
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 1.0 / 128.0);
        let w: f64 = i.trapezoid_weights().iter().sum();
        assert!((w - 1.0 / 128.0).abs() < 1e-15);
        assert!(TimeInterval::new(0.5, 0.5, 4).is_err());
        assert!(TimeInterval::new(0.0, 0.5, 1).is_err());
    }

    #[test]
    fn l2_ball_norm_of_constants() {
        let grid = SpatialGrid::cube(2, 1.0, 256).unwrap();
        let ones = SampleArray::new(&grid, vec![1.0; grid.len()]).unwrap();
        let v = l2_ball_norm(&ones, 1.0).unwrap();
        assert!((v - PI.sqrt()).abs() < 0.02 * PI.sqrt());
        let zeros = SampleArray::new(&grid, vec![0.0; grid.len()]).unwrap();
        assert_eq!(l2_ball_norm(&zeros, 1.0).unwrap(), 0.0);
        let threes = SampleArray::new(&grid, vec![c(0.0, -3.0); grid.len()]).unwrap();
        assert!((l2_ball_norm(&threes, 1.0).unwrap() - 3.0 * v).abs() <= 1e-14 * v);
        assert!(matches!(l2_ball_norm(&ones, 2.0), Err(Error::GridDoesNotCoverBall { .. })));
    }
}
