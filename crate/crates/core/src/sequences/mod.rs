//! Weak Lorentz sequence space `ℓ^{r,∞}(N)` for decreasing time sequences:
//! quasi-norms, the dyadic time blocks `A_l`, gap profiles and extraction of
//! clustering scales `(b, M)`.

mod blocks;
mod sequence;

pub use blocks::{block_bound, block_decompose, level_boundary, level_of, Block, BlockDecomposition, UNBOUNDED_TREND};
pub use sequence::{TimeSequence, CLAMPED_FIRST, MAX_EXPLICIT_LEN};

use crate::error::{Error, Result};

/// `r(s) = s/(1−s)`.
pub fn rate_from_smoothness(s: f64) -> f64 {
    s / (1.0 - s)
}

/// `s(r) = r/(r+1)`, the inverse of [`rate_from_smoothness`].
pub fn smoothness_from_rate(r: f64) -> f64 {
    r / (r + 1.0)
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param("r", format!("must lie in (0, 1), got {r}")));
    }
    Ok(())
}

/// `sup_n N(n)·t_n^r` over a nonincreasing slice, where `N(n)` is the last
/// index holding the value `t_n`. Equals `sup_{b>0} b^r·#{n : t_n > b}`.
pub fn quasinorm_of_values(values: &[f64], r: f64) -> f64 {
    let mut best = 0.0f64;
    let mut n = 0;
    while n < values.len() {
        let mut last = n;
        while last + 1 < values.len() && values[last + 1] == values[n] {
            last += 1;
        }
        best = best.max((last + 1) as f64 * values[n].powf(r));
        n = last + 1;
    }
    best
}

/// `sup_{n ≤ depth} n·t_n^r`.
///
/// For power families the product is evaluated from the generator as
/// `n^{1−ar}` for every `n` (the stored clamp of `t_1` is ignored), so the
/// critical exponent `ar = 1` gives exactly 1 at every depth.
pub fn lorentz_quasinorm(seq: &TimeSequence, r: f64, depth: u64) -> Result<f64> {
    check_rate(r)?;
    if depth == 0 || depth > seq.len() {
        return Err(Error::param("depth", format!("must lie in 1..={}, got {depth}", seq.len())));
    }
    match seq {
        TimeSequence::Explicit { values, .. } => Ok(quasinorm_of_values(&values[..depth as usize], r)),
        TimeSequence::Power { exponent, .. } => {
            let e = 1.0 - exponent * r;
            // n^e is monotone in n, so the sup over 1..=depth sits at an end.
            Ok(if e >= 0.0 { (depth as f64).powf(e) } else { 1.0 })
        }
    }
}

/// Largest gap `t_n − t_{n+1}` among indices with `t_n ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapProfile {
    pub max_gap: f64,
    /// Index `n` where the largest gap starts.
    pub at: u64,
    /// Whether the gaps were found nonincreasing over the inspected range.
    pub monotone: bool,
    /// Last index inspected.
    pub checked_to: u64,
}

/// Window inspected directly for analytic families.
pub const GAP_WINDOW: u64 = 100_000;

pub fn gap_profile(seq: &TimeSequence, b: f64) -> Result<GapProfile> {
    let start = seq.count_greater(b) + 1;
    if start >= seq.len() {
        return Err(Error::param("b", format!("no gap t_n − t_(n+1) with t_n ≤ {b} in the sequence")));
    }
    let end = match seq {
        TimeSequence::Explicit { .. } => seq.len() - 1,
        TimeSequence::Power { .. } => (start + GAP_WINDOW).min(seq.len() - 1),
    };
    let mut best = GapProfile { max_gap: f64::NEG_INFINITY, at: start, monotone: true, checked_to: end };
    let mut prev = f64::INFINITY;
    for n in start..=end {
        let g = seq.value(n) - seq.value(n + 1);
        if g > best.max_gap {
            best.max_gap = g;
            best.at = n;
        }
        if g > prev + gap_tolerance(seq.value(n)) {
            best.monotone = false;
        }
        prev = g;
    }
    // Explicit lists also report monotonicity of the whole list.
    if let TimeSequence::Explicit { gaps_decreasing, .. } = seq {
        best.monotone &= *gaps_decreasing;
    }
    Ok(best)
}

// Differences of neighbouring values carry rounding of order ε·t.
pub(crate) fn gap_tolerance(t: f64) -> f64 {
    8.0 * f64::EPSILON * t
}

/// A clustering scale: `count = #{n : b < t_n ≤ 2b}` with weight `m`
/// satisfying `count ≥ m·b^{−r}` and `m·b^{1−r} ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadScale {
    pub b: f64,
    pub m: f64,
    pub count: u64,
    pub r: f64,
    /// `m < 1`: the scale does not witness non-membership.
    pub weak: bool,
}

impl BadScale {
    /// Both defining inequalities, evaluated exactly as stored.
    pub fn is_consistent(&self) -> bool {
        self.count as f64 >= self.m * self.b.powf(-self.r) && self.m * self.b.powf(1.0 - self.r) <= 1.0
    }
}

/// Evaluates each candidate scale; `m = min(count·b^r, b^{−(1−r)})`, nudged
/// down by ulps if rounding would break either inequality.
pub fn extract_bad_scales(seq: &TimeSequence, r: f64, scales: &[f64]) -> Result<Vec<BadScale>> {
    check_rate(r)?;
    scales
        .iter()
        .map(|&b| {
            if !(b > 0.0 && b < 0.5) {
                return Err(Error::param("scale", format!("must lie in (0, 1/2), got {b}")));
            }
            let below = seq.count_greater(b);
            if below >= seq.len() {
                return Err(Error::param(
                    "scale",
                    format!("sequence of length {} does not reach below {b}", seq.len()),
                ));
            }
            let count = below - seq.count_greater(2.0 * b);
            let mut m = (count as f64 * b.powf(r)).min(b.powf(-(1.0 - r)));
            let mut scale = BadScale { b, m, count, r, weak: false };
            while !scale.is_consistent() && m > 0.0 {
                m = m.next_down();
                scale.m = m;
            }
            scale.weak = m < 1.0;
            Ok(scale)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_conversions_are_inverse() {
        assert!((rate_from_smoothness(0.25) - 1.0 / 3.0).abs() < 1e-16);
        for s in [0.05, 0.25, 0.4, 0.49] {
            assert!((smoothness_from_rate(rate_from_smoothness(s)) - s).abs() < 1e-15);
        }
    }

    #[test]
    fn quasinorm_of_inverse_squares_at_half() {
        let seq = TimeSequence::power(2.0, 1_000_000).unwrap();
        for depth in [1, 2, 10, 1000, 1_000_000] {
            assert_eq!(lorentz_quasinorm(&seq, 0.5, depth).unwrap(), 1.0);
        }
    }

    #[test]
    fn quasinorm_of_geometric_sequence() {
        let values: Vec<f64> = (1..=20).map(|n| 2f64.powi(-n)).collect();
        let seq = TimeSequence::explicit(values).unwrap();
        let q = lorentz_quasinorm(&seq, 0.5, 20).unwrap();
        let brute = (1..=20).map(|n| n as f64 * 2f64.powi(-n).sqrt()).fold(0.0, f64::max);
        assert_eq!(q, brute);
        assert!((q - 3.0 * 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn quasinorm_homogeneity() {
        let values: Vec<f64> = (1..=50).map(|n| 0.9 / (n as f64).powf(1.7)).collect();
        let seq = TimeSequence::explicit(values.clone()).unwrap();
        let c = 0.3;
        let scaled = TimeSequence::explicit(values.iter().map(|v| c * v).collect()).unwrap();
        let r = 0.4;
        let q = lorentz_quasinorm(&seq, r, 50).unwrap();
        let qc = lorentz_quasinorm(&scaled, r, 50).unwrap();
        assert!((qc - c.powf(r) * q).abs() < 1e-14);
    }

    #[test]
    fn quasinorm_rejects_bad_rate_and_depth() {
        let seq = TimeSequence::power(2.0, 10).unwrap();
        assert!(lorentz_quasinorm(&seq, 1.0, 5).is_err());
        assert!(lorentz_quasinorm(&seq, 0.0, 5).is_err());
        assert!(lorentz_quasinorm(&seq, 0.5, 0).is_err());
        assert!(lorentz_quasinorm(&seq, 0.5, 11).is_err());
    }

    #[test]
    fn ties_count_last_index() {
        assert_eq!(quasinorm_of_values(&[0.5, 0.25, 0.25, 0.25], 1.0 / 2.0), 4.0 * 0.5);
    }

    #[test]
    fn gap_profile_inverse_squares() {
        let seq = TimeSequence::power(2.0, 1_000_000_000).unwrap();
        let g = gap_profile(&seq, 1e-4).unwrap();
        assert_eq!(g.at, 100);
        let want = 1.0 / 10000.0 - 1.0 / 10201.0;
        assert!((g.max_gap - want).abs() < 1e-18);
        assert!((g.max_gap - 2e-6).abs() < 0.05 * 2e-6);
        assert!(g.monotone);
    }

    #[test]
    fn gap_profile_explicit_tail() {
        let seq = TimeSequence::explicit(vec![0.9, 0.5, 0.4, 0.32, 0.26, 0.22]).unwrap();
        let g = gap_profile(&seq, 0.5).unwrap();
        assert!((g.max_gap - 0.1).abs() < 1e-15);
        assert_eq!(g.at, 2);
        assert!(g.monotone);
        assert!(gap_profile(&seq, 0.05).is_err());
    }

    #[test]
    fn power_gaps_monotone() {
        for a in [0.5, 1.0, 2.0, 3.0] {
            let seq = TimeSequence::power(a, 10_000_000).unwrap();
            assert!(gap_profile(&seq, 0.9).unwrap().monotone, "a = {a}");
        }
    }

    #[test]
    fn bad_scale_inverse_squares() {
        let seq = TimeSequence::power(2.0, 1_000_000_000_000).unwrap();
        let scales = extract_bad_scales(&seq, 1.0 / 3.0, &[1e-6]).unwrap();
        let s = scales[0];
        // n ∈ [708, 999]: t_1000 = 10⁻⁶ is not strictly above b.
        assert_eq!(s.count, 292);
        assert!((s.m - 2.92).abs() < 1e-12);
        assert!(s.is_consistent() && !s.weak);
    }

    #[test]
    fn bad_scale_requires_reach() {
        let seq = TimeSequence::power(2.0, 100).unwrap();
        assert!(extract_bad_scales(&seq, 1.0 / 3.0, &[1e-6]).is_err());
    }

    #[test]
    fn member_sequence_scales_are_weak() {
        let seq = TimeSequence::power(3.0, 1_000_000_000_000).unwrap();
        let scales = extract_bad_scales(&seq, 1.0 / 3.0, &[1e-6, 1e-9, 1e-12, 1e-15]).unwrap();
        for s in scales {
            assert!(s.weak && s.m <= 0.27, "{s:?}");
            assert!(s.is_consistent());
        }
    }
}
