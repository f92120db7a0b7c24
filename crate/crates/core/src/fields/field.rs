use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sum::pairwise_sum_by;

/// A finite trigonometric sum `f(x) = Σ c_k e^{i x·ξ_k}`.
///
/// Amplitudes follow the Riemann-sum convention `c_k = ĝ(ξ_k)·hᴺ` for a
/// Fourier density `ĝ` sampled on a lattice of spacing `h`, so frequency-side
/// norms are Riemann sums of the corresponding integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedField {
    dim: usize,
    spacing: f64,
    freqs: Vec<f64>,
    amps: Vec<Complex64>,
    annulus: Option<u32>,
}

impl BandLimitedField {
    /// Builds a field from a flat frequency table (`dim` coordinates per entry).
    pub fn from_parts(dim: usize, spacing: f64, freqs: Vec<f64>, amps: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidSpacing { spacing, reason: "must be positive and finite".into() });
        }
        if freqs.len() != dim * amps.len() {
            return Err(Error::DimensionMismatch { expected: dim * amps.len(), found: freqs.len() });
        }
        if freqs.iter().any(|v| !v.is_finite()) || amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::param("entries", "frequencies and amplitudes must be finite"));
        }
        let mut seen = HashSet::with_capacity(amps.len());
        for xi in freqs.chunks_exact(dim) {
            // +0.0 and -0.0 are the same frequency.
            let key: Vec<u64> = xi.iter().map(|v| (v + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::param("entries", format!("duplicate frequency {xi:?}")));
            }
        }
        Ok(Self { dim, spacing, freqs, amps, annulus: None })
    }

    pub fn new(dim: usize, spacing: f64, entries: &[(Vec<f64>, Complex64)]) -> Result<Self> {
        let mut freqs = Vec::with_capacity(dim * entries.len());
        for (xi, _) in entries {
            if xi.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: xi.len() });
            }
            freqs.extend_from_slice(xi);
        }
        let amps = entries.iter().map(|(_, c)| *c).collect();
        Self::from_parts(dim, spacing, freqs, amps)
    }

    pub fn empty(dim: usize, spacing: f64) -> Result<Self> {
        Self::from_parts(dim, spacing, Vec::new(), Vec::new())
    }

    /// Single plane wave `c·e^{i x·ξ}` on a unit lattice.
    pub fn plane_wave(xi: &[f64], amp: Complex64) -> Result<Self> {
        Self::from_parts(xi.len(), 1.0, xi.to_vec(), vec![amp])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn freq(&self, k: usize) -> &[f64] {
        &self.freqs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn freqs(&self) -> impl Iterator<Item = &[f64]> {
        self.freqs.chunks_exact(self.dim)
    }

    pub fn amp(&self, k: usize) -> Complex64 {
        self.amps[k]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn annulus(&self) -> Option<u32> {
        self.annulus
    }

    /// Tags the field as supported in the dyadic annulus of level `k`.
    /// Fails if some frequency lies outside `[2^{k−1}, 2^{k+1}]` (or `|ξ| ≤ 1` for `k = 0`).
    pub fn with_annulus(mut self, k: u32) -> Result<Self> {
        for xi in self.freqs() {
            let r2 = norm_sq(xi);
            let ok = if k == 0 {
                r2 <= 1.0
            } else {
                let lo = pow4(k - 1);
                r2 >= lo && r2 <= pow4(k + 1)
            };
            if !ok {
                return Err(Error::param("annulus", format!("frequency {xi:?} outside level {k}")));
            }
        }
        self.annulus = Some(k);
        Ok(self)
    }

    /// Same frequencies, new amplitudes.
    pub fn with_amplitudes(&self, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != self.amps.len() {
            return Err(Error::DimensionMismatch { expected: self.amps.len(), found: amps.len() });
        }
        Ok(Self { amps, ..self.clone() })
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self { amps: self.amps.iter().map(|c| c * alpha).collect(), ..self.clone() }
    }

    /// Largest `|ξ_k|`, zero for an empty field.
    pub fn max_frequency(&self) -> f64 {
        self.freqs().map(|xi| norm_sq(xi).sqrt()).fold(0.0, f64::max)
    }

    pub(crate) fn select(&self, keep: impl Fn(&[f64]) -> bool) -> Self {
        let mut freqs = Vec::new();
        let mut amps = Vec::new();
        for (xi, c) in self.freqs().zip(&self.amps) {
            if keep(xi) {
                freqs.extend_from_slice(xi);
                amps.push(*c);
            }
        }
        Self { dim: self.dim, spacing: self.spacing, freqs, amps, annulus: None }
    }

    /// Frequency-side L² norm `(Σ|c_k|²/hᴺ)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.spacing.powi(self.dim as i32);
        let idx: Vec<usize> = (0..self.len()).collect();
        (pairwise_sum_by(&idx, |&k| self.amps[k].norm_sqr() * 1.0) / cell).sqrt()
    }

    /// Inhomogeneous Sobolev norm `(Σ(1+|ξ_k|²)^s|c_k|²/hᴺ)^{1/2}`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let cell = self.spacing.powi(self.dim as i32);
        let idx: Vec<usize> = (0..self.len()).collect();
        let total = pairwise_sum_by(&idx, |&k| {
            (1.0 + norm_sq(self.freq(k))).powf(s) * self.amps[k].norm_sqr()
        });
        (total / cell).sqrt()
    }

    /// Homogeneous variant `(Σ|ξ_k|^{2s}|c_k|²/hᴺ)^{1/2}`.
    pub fn homogeneous_hs_norm(&self, s: f64) -> f64 {
        let cell = self.spacing.powi(self.dim as i32);
        let idx: Vec<usize> = (0..self.len()).collect();
        let total = pairwise_sum_by(&idx, |&k| {
            let r2 = norm_sq(self.freq(k));
            let w = if r2 == 0.0 { if s == 0.0 { 1.0 } else { 0.0 } } else { r2.powf(s) };
            w * self.amps[k].norm_sqr()
        });
        (total / cell).sqrt()
    }

    /// Sum of the amplitudes, i.e. the value at `x = 0`.
    pub fn mass(&self) -> Complex64 {
        let idx: Vec<usize> = (0..self.len()).collect();
        let re = pairwise_sum_by(&idx, |&k| self.amps[k].re);
        let im = pairwise_sum_by(&idx, |&k| self.amps[k].im);
        Complex64::new(re, im)
    }
}

pub(crate) fn norm_sq(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum()
}

fn pow4(k: u32) -> f64 {
    4f64.powi(k as i32)
}

/// Dyadic level of a frequency: 0 for `|ξ| ≤ 1`, otherwise the `k` with
/// `2^{k−1} < |ξ| ≤ 2^k`. Decided on `|ξ|²` against exact powers of four.
pub fn dyadic_level(xi: &[f64]) -> u32 {
    let r2 = norm_sq(xi);
    if r2 <= 1.0 {
        return 0;
    }
    let mut k = 1;
    while r2 > pow4(k) {
        k += 1;
    }
    k
}

/// Littlewood–Paley piece with sharp cutoff: the entries at dyadic level `k`.
pub fn annulus_project(f: &BandLimitedField, k: u32) -> BandLimitedField {
    let mut piece = f.select(|xi| dyadic_level(xi) == k);
    piece.annulus = Some(k);
    piece
}

/// All nonempty and empty pieces `f_0, …, f_K` where `K` is the top level present.
pub fn littlewood_paley(f: &BandLimitedField) -> Vec<BandLimitedField> {
    let top = f.freqs().map(dyadic_level).max().unwrap_or(0);
    (0..=top).map(|k| annulus_project(f, k)).collect()
}

/// Axis-aligned box with a constant amplitude: `amplitude·χ_box(ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    amplitude: f64,
}

impl BoxSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, amplitude: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidBox("bounds must have the same nonzero length".into()));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite()) || a >= b {
                return Err(Error::InvalidBox(format!("axis {i}: need a < b, got [{a}, {b}]")));
            }
        }
        if !amplitude.is_finite() {
            return Err(Error::InvalidBox("amplitude must be finite".into()));
        }
        Ok(Self { lo, hi, amplitude })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// `amplitude × volume`, the value of the inverse transform at `x = 0, t = 0`.
    pub fn mass(&self) -> f64 {
        self.amplitude * self.volume()
    }

    pub fn shortest_side(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min)
    }
}

// Cells of width h from `a`; a trailing partial cell keeps its covered
// fraction as weight and is sampled at the midpoint of the covered part.
fn axis_cells(a: f64, b: f64, h: f64) -> Vec<(f64, f64)> {
    let ratio = (b - a) / h;
    let full = (ratio + 1e-9).floor() as usize;
    let mut cells: Vec<(f64, f64)> = (0..full).map(|i| (a + (i as f64 + 0.5) * h, 1.0)).collect();
    let covered = a + full as f64 * h;
    let frac = (b - covered) / h;
    if frac > 1e-9 {
        cells.push((covered + 0.5 * (b - covered), frac));
    }
    cells
}

/// Lattice Riemann-sum discretization of `amplitude·χ_box` with spacing `h`.
pub fn indicator_box_field(spec: &BoxSpec, h: f64) -> Result<BandLimitedField> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidSpacing { spacing: h, reason: "must be positive and finite".into() });
    }
    if h > spec.shortest_side() {
        return Err(Error::InvalidSpacing {
            spacing: h,
            reason: format!("larger than the shortest box side {}", spec.shortest_side()),
        });
    }
    let dim = spec.dim();
    let axes: Vec<Vec<(f64, f64)>> =
        (0..dim).map(|i| axis_cells(spec.lo[i], spec.hi[i], h)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let cell = h.powi(dim as i32) * spec.amplitude;
    let mut freqs = Vec::with_capacity(total * dim);
    let mut amps = Vec::with_capacity(total);
    let mut index = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for (axis, &i) in axes.iter().zip(&index) {
            freqs.push(axis[i].0);
            w *= axis[i].1;
        }
        amps.push(Complex64::new(cell * w, 0.0));
        // Odometer, last axis fastest.
        for d in (0..dim).rev() {
            index[d] += 1;
            if index[d] < axes[d].len() {
                break;
            }
            index[d] = 0;
        }
    }
    BandLimitedField::from_parts(dim, h, freqs, amps)
}

/// Random two-dimensional field on the unit lattice with frequencies in
/// `λ/2 < |ξ| ≤ 2λ` and complex standard-normal amplitudes.
pub fn random_annulus_field(lambda: f64, count: usize, seed: u64) -> Result<BandLimitedField> {
    if !(lambda >= 2.0 && lambda.is_finite()) {
        return Err(Error::InvalidScale(format!("annulus scale must be at least 2, got {lambda}")));
    }
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let inner2 = lambda * lambda / 4.0;
    let outer2 = 4.0 * lambda * lambda;
    let reach = (2.0 * lambda).floor() as i64;
    let inside = |i: i64, j: i64| {
        let r2 = (i * i + j * j) as f64;
        r2 > inner2 && r2 <= outer2
    };
    let available = (-reach..=reach)
        .flat_map(|i| (-reach..=reach).map(move |j| (i, j)))
        .filter(|&(i, j)| inside(i, j))
        .count();
    if count > available {
        return Err(Error::param(
            "count",
            format!("{count} exceeds the {available} lattice points in the annulus"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut freqs = Vec::with_capacity(2 * count);
    let mut amps = Vec::with_capacity(count);
    while amps.len() < count {
        let i = rng.random_range(-reach..=reach);
        let j = rng.random_range(-reach..=reach);
        if !inside(i, j) || !seen.insert((i, j)) {
            continue;
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        freqs.push(i as f64);
        freqs.push(j as f64);
        amps.push(Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2);
    }
    let field = BandLimitedField::from_parts(2, 1.0, freqs, amps)?;
    let log = lambda.log2();
    if log.fract() == 0.0 && log >= 1.0 {
        return field.with_annulus(log as u32);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn unit_box_has_64_equal_cells() {
        let spec = BoxSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let f = indicator_box_field(&spec, 1.0 / 8.0).unwrap();
        assert_eq!(f.len(), 64);
        assert!(f.amplitudes().iter().all(|a| *a == c(1.0 / 64.0)));
        assert_eq!(f.mass(), c(1.0));
    }

    #[test]
    fn counterexample_box_has_unit_mass() {
        for (lambda, h) in [(4.0, 1.0 / 16.0), (17.12, 1.0 / 32.0), (10.0, 0.3)] {
            let spec = BoxSpec::new(vec![0.0, -lambda - 1.0], vec![lambda, -lambda], 1.0 / lambda).unwrap();
            let f = indicator_box_field(&spec, h).unwrap();
            assert!((f.mass().re - 1.0).abs() < 1e-12, "lambda {lambda}: {}", f.mass());
        }
    }

    #[test]
    fn box_rejections() {
        assert!(matches!(BoxSpec::new(vec![0.0], vec![0.0], 1.0), Err(Error::InvalidBox(_))));
        let spec = BoxSpec::new(vec![0.0, 0.0], vec![2.0, 0.5], 1.0).unwrap();
        assert!(matches!(indicator_box_field(&spec, 0.75), Err(Error::InvalidSpacing { .. })));
    }

    #[test]
    fn duplicate_frequencies_rejected() {
        let r = BandLimitedField::new(2, 1.0, &[(vec![1.0, 0.0], c(1.0)), (vec![1.0, 0.0], c(2.0))]);
        assert!(r.is_err());
    }

    #[test]
    fn projection_membership() {
        let f = BandLimitedField::plane_wave(&[3.0, 0.0], c(1.0)).unwrap();
        assert_eq!(annulus_project(&f, 2).len(), 1);
        assert!(annulus_project(&f, 1).is_empty());
        assert_eq!(annulus_project(&f, 2).annulus(), Some(2));
    }

    #[test]
    fn dyadic_boundaries_are_right_closed() {
        assert_eq!(dyadic_level(&[1.0, 0.0]), 0);
        assert_eq!(dyadic_level(&[0.0, 2.0]), 1);
        assert_eq!(dyadic_level(&[2.0, 0.5]), 2);
        assert_eq!(dyadic_level(&[0.0, 0.0]), 0);
    }

    #[test]
    fn norms_of_simple_fields() {
        assert_eq!(BandLimitedField::empty(2, 1.0).unwrap().l2_norm(), 0.0);
        let f = BandLimitedField::plane_wave(&[5.0, 1.0], c(2.0)).unwrap();
        assert_eq!(f.l2_norm(), 2.0);
        assert_eq!(f.hs_norm(0.0), f.l2_norm());
    }

    #[test]
    fn unit_box_l2_and_hs0() {
        let spec = BoxSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let f = indicator_box_field(&spec, 1.0 / 32.0).unwrap();
        assert!((f.hs_norm(0.0) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn box_family_l2_norm() {
        // ∫|λ⁻¹χ|² over area λ is λ⁻¹.
        for lambda in [4.0, 16.0, 64.0] {
            let spec = BoxSpec::new(vec![0.0, -lambda - 1.0], vec![lambda, -lambda], 1.0 / lambda).unwrap();
            let f = indicator_box_field(&spec, 1.0 / 16.0).unwrap();
            let ratio = f.l2_norm() / lambda.powf(-0.5);
            assert!((1.0 / 1.1..1.1).contains(&ratio), "lambda {lambda}: ratio {ratio}");
        }
    }

    #[test]
    fn box_family_hs_norm_near_power_law() {
        let lambda = 17.1;
        let spec = BoxSpec::new(vec![0.0, -lambda - 1.0], vec![lambda, -lambda], 1.0 / lambda).unwrap();
        let f = indicator_box_field(&spec, 1.0 / 32.0).unwrap();
        let ratio = f.hs_norm(0.25) / lambda.powf(-0.25);
        assert!((1.0 / 1.5..1.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn random_field_is_deterministic_and_supported() {
        let a = random_annulus_field(16.0, 50, 1).unwrap();
        let b = random_annulus_field(16.0, 50, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.annulus(), Some(4));
        for xi in a.freqs() {
            let r = norm_sq(xi).sqrt();
            assert!(r > 8.0 && r <= 32.0, "{r}");
        }
        assert!(random_annulus_field(64.0, 200, 7).unwrap().l2_norm() > 0.0);
        assert!(matches!(random_annulus_field(1.5, 3, 0), Err(Error::InvalidScale(_))));
    }

    fn arb_field() -> impl Strategy<Value = BandLimitedField> {
        proptest::collection::btree_map(
            (-40i32..40, -40i32..40),
            (-3.0f64..3.0, -3.0f64..3.0),
            1..20,
        )
        .prop_map(|m| {
            let entries: Vec<(Vec<f64>, Complex64)> = m
                .into_iter()
                .map(|((i, j), (re, im))| (vec![i as f64 * 0.5, j as f64 * 0.5], Complex64::new(re, im)))
                .collect();
            BandLimitedField::new(2, 0.5, &entries).unwrap()
        })
    }

    proptest! {
        #[test]
        fn projections_partition(f in arb_field()) {
            let pieces = littlewood_paley(&f);
            let total: usize = pieces.iter().map(BandLimitedField::len).sum();
            prop_assert_eq!(total, f.len());
            let mut got: Vec<(u64, u64, u64, u64)> = pieces
                .iter()
                .flat_map(|p| (0..p.len()).map(move |k| {
                    let xi = p.freq(k);
                    (xi[0].to_bits(), xi[1].to_bits(), p.amp(k).re.to_bits(), p.amp(k).im.to_bits())
                }))
                .collect();
            let mut want: Vec<_> = (0..f.len()).map(|k| {
                let xi = f.freq(k);
                (xi[0].to_bits(), xi[1].to_bits(), f.amp(k).re.to_bits(), f.amp(k).im.to_bits())
            }).collect();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn norms_homogeneous_and_monotone(f in arb_field(), alpha in 0.1f64..4.0, s1 in -1.0f64..1.0, ds in 0.0f64..1.0) {
            let g = f.scaled(Complex64::new(0.0, alpha));
            prop_assert!((g.l2_norm() - alpha * f.l2_norm()).abs() <= 1e-12 * alpha * f.l2_norm());
            prop_assert!((g.hs_norm(s1) - alpha * f.hs_norm(s1)).abs() <= 1e-12 * alpha * f.hs_norm(s1));
            prop_assert!(f.hs_norm(s1) <= f.hs_norm(s1 + ds));
        }
    }
}
