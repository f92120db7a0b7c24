use num_complex::Complex64;

use super::kernel::{scan, PhaseTable, ScanRequest};
use super::{check_dim, evolution_table, TimeInterval};
use crate::error::{Error, Result};
use crate::fields::{BandLimitedField, QuadraticSymbol, SpatialGrid};
use crate::sum::pairwise_sum_by;

/// Default relative slack for the chain inequality.
pub const CHAIN_SLACK: f64 = 0.05;

/// The four quantities of the Sobolev-embedding bound for the local maximal
/// function, plus the derived checks.
///
/// * `a`: `‖sup_{t∈I}|e^{itP(D)}f|‖_{L²(B)}`
/// * `b`: ball-normalised Plancherel norm `(|B|·Σ|c_k|²)^{1/2}`
/// * `c`: `‖e^{itP(D)}f‖_{L²(B×I)}`
/// * `d`: `‖∂_t e^{itP(D)}f‖_{L²(B×I)}` (amplitudes `P(ξ_k)c_k`)
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub lambda: f64,
    pub interval: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Frequency-side `l2_norm(f)`.
    pub l2_norm: f64,
    /// `‖f‖_{L²(B)}` at the left endpoint.
    pub b_local: f64,
    /// `a / (b + √(cd))`
    pub chain_ratio: f64,
    /// `a / (λ|I|^{1/2}·b)`, the constant in the local maximal estimate.
    pub bound_constant: f64,
    pub slack: f64,
    pub chain_holds: bool,
    /// `a² ≤ b_local² + 2cd`, the sharp form of the embedding step.
    pub sharp_chain_holds: bool,
}

/// Traces the Sobolev-embedding chain for a field tagged with dyadic scale `λ`
/// over the interval `I` with `λ⁻² ≤ |I| ≤ λ⁻¹`. The grid should be masked
/// to the ball the norms are taken over.
pub fn sobolev_chain_report(
    f: &BandLimitedField,
    symbol: &QuadraticSymbol,
    interval: &TimeInterval,
    grid: &SpatialGrid,
    slack: f64,
) -> Result<ChainReport> {
    check_dim(f.dim(), symbol.dim())?;
    check_dim(grid.dim(), f.dim())?;
    let level = f
        .annulus()
        .ok_or_else(|| Error::param("field", "needs an annulus tag to fix the scale λ"))?;
    let lambda = 2f64.powi(level as i32);
    let len = interval.length();
    let eps = 1e-12;
    if len < lambda.powi(-2) * (1.0 - eps) || len > lambda.recip() * (1.0 + eps) {
        return Err(Error::param("interval", format!("|I| = {len} outside [λ⁻², λ⁻¹] for λ = {lambda}")));
    }

    let times = interval.times();
    let weights = interval.trapezoid_weights();
    let table = evolution_table(f, symbol, &times);
    let symbols: Vec<f64> = f.freqs().map(|xi| symbol.eval(xi)).collect();
    let dt_table = PhaseTable::build(f.len(), times.len(), |r, k| {
        Complex64::new(0.0, symbols[k]) * Complex64::cis(times[r] * symbols[k])
    });
    let stats = scan(f, grid, &ScanRequest { table: &table, aux: Some(&dt_table), weights: Some(&weights) });

    let w = grid.weight();
    let a = (pairwise_sum_by(&stats, |s| s.max_sq) * w).sqrt();
    let c = (pairwise_sum_by(&stats, |s| s.int_sq) * w).sqrt();
    let d = (pairwise_sum_by(&stats, |s| s.int_aux_sq) * w).sqrt();
    let b_local = (pairwise_sum_by(&stats, |s| s.first_sq) * w).sqrt();
    let b = (grid.measure() * pairwise_sum_by(f.amplitudes(), |z| z.norm_sqr())).sqrt();

    let chain_rhs = b + (c * d).sqrt();
    let chain_ratio = a / chain_rhs;
    Ok(ChainReport {
        lambda,
        interval: len,
        a,
        b,
        c,
        d,
        l2_norm: f.l2_norm(),
        b_local,
        chain_ratio,
        bound_constant: a / (lambda * len.sqrt() * b),
        slack,
        chain_holds: a <= (1.0 + slack) * chain_rhs,
        sharp_chain_holds: a * a <= (1.0 + slack) * (b_local * b_local + 2.0 * c * d),
    })
}
