//! Scaling experiments for the maximal estimates and the three-term
//! decomposition of the sufficiency argument.

mod report;

pub use report::{ExperimentReport, ReportRow, RowKey};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{dyadic_level, littlewood_paley, random_annulus_field, BandLimitedField, QuadraticSymbol, SpatialGrid};
use crate::propagator::kernel::{scan, PhaseTable, ScanRequest};
use crate::propagator::{l2_ball_norm, maximal_over_times, SampleArray, TimeInterval, TimeSet, DEFAULT_SUP_SAMPLES_MIN};
use crate::sequences::{block_decompose, level_of, lorentz_quasinorm, rate_from_smoothness, TimeSequence};
use crate::sum::fit_line;

/// Least-squares line through `(log₂ scale, log₂ value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log₂ units.
    pub residual: f64,
}

pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if pairs.len() < 2 {
        return Err(Error::param("pairs", format!("need at least 2 pairs, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::param("pairs", format!("scale and value must be positive and finite, got ({x}, {y})")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.log2()).collect();
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::param("pairs", "all scales are equal"));
    }
    let (slope, intercept, residual) = fit_line(&xs, &ys);
    Ok(ExponentFit { slope, intercept, residual })
}

/// Seed for one independent stream of a run.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

fn lambda_stream(lambda: f64, trial: usize) -> u64 {
    lambda.to_bits().rotate_left(17) ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Median of a nonempty list (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Refuses grids coarser than four points per shortest wavelength `2π/(2λ)`.
pub fn check_resolution(grid: &SpatialGrid, lambda: f64) -> Result<()> {
    let max_step = std::f64::consts::PI / (4.0 * lambda);
    let step = grid.max_step();
    if step > max_step {
        return Err(Error::UnderResolvedGrid { lambda, step, max_step });
    }
    Ok(())
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::param("lambdas", "empty list"));
    }
    if let Some(l) = lambdas.iter().find(|&&l| !(l >= 16.0 && l.is_finite())) {
        return Err(Error::InvalidScale(format!("lambda must be at least 16, got {l}")));
    }
    Ok(())
}

/// `‖sup_{t∈I}|e^{itP(D)}f|‖_{L²(B(0,1))}`.
pub fn maximal_ball_norm(f: &BandLimitedField, symbol: &QuadraticSymbol, interval: TimeInterval, grid: &SpatialGrid) -> Result<f64> {
    let m = maximal_over_times(f, symbol, &TimeSet::Interval(interval), grid)?;
    l2_ball_norm(&m, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thm14Config {
    pub lambdas: Vec<f64>,
    /// Interval lengths `|I| = λ^{−e}` for each exponent `e ∈ [1, 2]`.
    pub interval_exponents: Vec<f64>,
    pub trials: usize,
    /// Grid points per axis on `[−1, 1]²`.
    pub grid_points: usize,
    /// Frequencies per random field.
    pub count: usize,
    pub seed: u64,
    pub sup_samples_min: usize,
    /// Largest accepted slope of the maximal norm at `|I| = λ⁻¹`.
    pub slope_max: f64,
    /// Largest accepted `max/min − 1` of the median ratio at `|I| = λ⁻²`.
    pub spread_max: f64,
}

impl Default for Thm14Config {
    fn default() -> Self {
        Self {
            lambdas: vec![16.0, 32.0, 64.0, 128.0],
            interval_exponents: vec![1.0, 2.0],
            trials: 20,
            grid_points: 1024,
            count: 8,
            seed: 1,
            sup_samples_min: DEFAULT_SUP_SAMPLES_MIN,
            slope_max: 0.6,
            spread_max: 0.25,
        }
    }
}

struct Trial {
    seed: u64,
    ratio: f64,
    raw: f64,
}

/// Local maximal estimate on intervals of length between `λ⁻²` and `λ⁻¹`.
///
/// Per trial, `R = ‖sup_I |e^{it□}f|‖_{L²(B)} / (λ|I|^{1/2}‖f‖₂)`; the raw
/// column is the same norm divided by `‖f‖₂` only.
pub fn theorem14_experiment(cfg: &Thm14Config) -> Result<ExperimentReport> {
    check_lambdas(&cfg.lambdas)?;
    if cfg.trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    if let Some(e) = cfg.interval_exponents.iter().find(|e| !(**e >= 1.0 && **e <= 2.0)) {
        return Err(Error::param("interval_exponents", format!("must lie in [1, 2], got {e}")));
    }
    let grid = SpatialGrid::unit_ball(2, cfg.grid_points)?;
    for &l in &cfg.lambdas {
        check_resolution(&grid, l)?;
    }
    let symbol = QuadraticSymbol::nonelliptic_2d();
    let mut report = ExperimentReport::new("thm14");
    for &e in &cfg.interval_exponents {
        let mut medians = Vec::new();
        let mut raw_medians = Vec::new();
        for &lambda in &cfg.lambdas {
            let len = lambda.powf(-e);
            let trials: Vec<Trial> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| -> Result<Trial> {
                    let seed = derive_seed(cfg.seed, lambda_stream(lambda, trial));
                    let f = random_annulus_field(lambda, cfg.count, seed)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ e.to_bits());
                    let a = rng.random::<f64>() * (1.0 - len);
                    let interval = TimeInterval::for_scale(a, a + len, lambda, cfg.sup_samples_min)?;
                    let norm = maximal_ball_norm(&f, &symbol, interval, &grid)?;
                    let l2 = f.l2_norm();
                    Ok(Trial { seed, ratio: norm / (lambda * len.sqrt() * l2), raw: norm / l2 })
                })
                .collect::<Result<_>>()?;
            for t in &trials {
                let key = RowKey { lambda: Some(lambda), interval: Some(len), seed: Some(t.seed), grid: Some(cfg.grid_points), ..Default::default() };
                report.push(key, "ratio", t.ratio, None);
                report.push(key, "maximal_norm", t.raw, None);
            }
            let ratios: Vec<f64> = trials.iter().map(|t| t.ratio).collect();
            let raws: Vec<f64> = trials.iter().map(|t| t.raw).collect();
            let key = RowKey { lambda: Some(lambda), interval: Some(len), seed: Some(cfg.seed), grid: Some(cfg.grid_points), ..Default::default() };
            report.push(key, "ratio_max", max_of(&ratios), None);
            report.push(key, "ratio_median", median(&ratios), None);
            report.push(key, "maximal_norm_median", median(&raws), None);
            medians.push(median(&ratios));
            raw_medians.push((lambda, median(&raws)));
        }
        let key = RowKey { seed: Some(cfg.seed), grid: Some(cfg.grid_points), ..Default::default() };
        let tag = exponent_tag(e);
        if cfg.lambdas.len() >= 2 {
            let fit = fit_exponent(&raw_medians)?;
            let pass = (e == 1.0).then_some(fit.slope <= cfg.slope_max);
            report.push(key, format!("maximal_slope_e{tag}"), fit.slope, pass);
        }
        let spread = max_of(&medians) / medians.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
        let pass = (e == 2.0).then_some(spread <= cfg.spread_max);
        report.push(key, format!("ratio_spread_e{tag}"), spread, pass);
    }
    Ok(report)
}

fn exponent_tag(e: f64) -> String {
    if e.fract() == 0.0 {
        format!("{}", e as i64)
    } else {
        format!("{e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalConfig {
    pub lambdas: Vec<f64>,
    pub trials: usize,
    pub grid_points: usize,
    pub count: usize,
    pub seed: u64,
    pub sup_samples_min: usize,
    pub slope_max: f64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![16.0, 32.0, 64.0, 128.0],
            trials: 3,
            grid_points: 336,
            count: 8,
            seed: 1,
            sup_samples_min: DEFAULT_SUP_SAMPLES_MIN,
            slope_max: 0.6,
        }
    }
}

/// `‖sup_{0<t<1}|e^{it□}f|‖_{L²(B)} / ‖f‖₂` with the interval sampled per the
/// scale rule for `λ`.
pub fn global_maximal_ratio(f: &BandLimitedField, lambda: f64, grid: &SpatialGrid, sup_samples_min: usize) -> Result<f64> {
    let interval = TimeInterval::for_scale(0.0, 1.0, lambda, sup_samples_min)?;
    Ok(maximal_ball_norm(f, &QuadraticSymbol::nonelliptic_2d(), interval, grid)? / f.l2_norm())
}

/// Global maximal estimate on `(0, 1)`; fits the slope of the median ratio.
pub fn global_maximal_experiment(cfg: &GlobalConfig) -> Result<ExperimentReport> {
    check_lambdas(&cfg.lambdas)?;
    if cfg.trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    let grid = SpatialGrid::unit_ball(2, cfg.grid_points)?;
    for &l in &cfg.lambdas {
        check_resolution(&grid, l)?;
    }
    let mut report = ExperimentReport::new("global-max");
    let mut medians = Vec::new();
    for &lambda in &cfg.lambdas {
        let trials: Vec<(u64, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| -> Result<(u64, f64)> {
                let seed = derive_seed(cfg.seed, lambda_stream(lambda, trial));
                let f = random_annulus_field(lambda, cfg.count, seed)?;
                Ok((seed, global_maximal_ratio(&f, lambda, &grid, cfg.sup_samples_min)?))
            })
            .collect::<Result<_>>()?;
        for &(seed, ratio) in &trials {
            let key = RowKey { lambda: Some(lambda), interval: Some(1.0), seed: Some(seed), grid: Some(cfg.grid_points), ..Default::default() };
            report.push(key, "global_ratio", ratio, None);
        }
        let ratios: Vec<f64> = trials.iter().map(|t| t.1).collect();
        let key = RowKey { lambda: Some(lambda), interval: Some(1.0), seed: Some(cfg.seed), grid: Some(cfg.grid_points), ..Default::default() };
        report.push(key, "global_ratio_max", max_of(&ratios), None);
        report.push(key, "global_ratio_median", median(&ratios), None);
        medians.push((lambda, median(&ratios)));
    }
    if medians.len() >= 2 {
        let fit = fit_exponent(&medians)?;
        let key = RowKey { interval: Some(1.0), seed: Some(cfg.seed), grid: Some(cfg.grid_points), ..Default::default() };
        report.push(key, "global_slope", fit.slope, Some(fit.slope <= cfg.slope_max));
    }
    Ok(report)
}

/// Class of a frequency piece `k` at time level `l`: 0 for `k ≥ l`, 1 for
/// `l/(1+r) ≤ k < l`, 2 for `k < l/(1+r)`.
pub fn term_class(k: u32, l: u32, r: f64) -> usize {
    if k >= l {
        0
    } else if k as f64 >= l as f64 / (1.0 + r) {
        1
    } else {
        2
    }
}

const TERMS: [&str; 3] = ["I", "II", "III"];

/// Three-term split of `sup_n |e^{it_n□}f|` by time block and frequency
/// piece, over `t_1, …, t_depth`.
///
/// Rows: per nonempty level the block size and the number of active entries
/// in each term; then the `L²(B)` norm of each term, of the full maximal
/// function, and of the displayed bounds, all divided by `‖f‖_{H^s}`.
pub fn decomposition_trace(
    f: &BandLimitedField,
    seq: &TimeSequence,
    s: f64,
    grid: &SpatialGrid,
    depth: u64,
) -> Result<ExperimentReport> {
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::param("s", format!("must lie in (0, 1/2), got {s}")));
    }
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: f.dim() });
    }
    let r = rate_from_smoothness(s);
    let depth = depth.min(seq.len());
    if depth == 0 {
        return Err(Error::InvalidSequence("empty block structure: no times to trace".into()));
    }
    let times = seq.values(1, depth);
    let levels: Vec<u32> = times.iter().map(|&t| level_of(t, r)).collect();
    let top = *levels.iter().max().unwrap_or(&0);
    let blocks = block_decompose(seq, r, top)?;
    if blocks.unbounded {
        return Err(Error::InvalidSequence(format!(
            "block counts grow against 2^(2rl/(r+1)) (trend {:.3}); sequence is not in the weak Lorentz space at r = {r}",
            blocks.trend
        )));
    }
    let quasinorm = lorentz_quasinorm(seq, r, depth)?;

    let symbol = QuadraticSymbol::nonelliptic_2d();
    let pieces: Vec<u32> = f.freqs().map(dyadic_level).collect();
    let p: Vec<f64> = f.freqs().map(|xi| symbol.eval(xi)).collect();
    let tables: Vec<PhaseTable> = (0..3)
        .map(|c| {
            PhaseTable::build(f.len(), times.len(), |row, k| {
                if term_class(pieces[k], levels[row], r) == c {
                    crate::Complex64::cis(times[row] * p[k])
                } else {
                    crate::Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let full = PhaseTable::build(f.len(), times.len(), |row, k| crate::Complex64::cis(times[row] * p[k]));

    let norm_of = |table: &PhaseTable| -> Result<f64> {
        let stats = scan(f, grid, &ScanRequest { table, aux: None, weights: None });
        let samples = SampleArray::new(grid, stats.into_iter().map(|s| s.max_sq.sqrt()).collect())?;
        l2_ball_norm(&samples, 1.0)
    };
    let hs = f.hs_norm(s);
    if hs == 0.0 {
        return Err(Error::param("f", "field has zero Sobolev norm"));
    }
    let terms: Vec<f64> = tables.iter().map(norm_of).collect::<Result<_>>()?;
    let total = norm_of(&full)?;

    let mut report = ExperimentReport::new("decompose-trace");
    let key = RowKey { s: Some(s), r: Some(r), grid: Some(grid.counts()[0]), ..Default::default() };

    let mut level_counts: Vec<(u32, u64)> = Vec::new();
    for &l in &levels {
        match level_counts.last_mut() {
            Some((last, c)) if *last == l => *c += 1,
            _ => level_counts.push((l, 1)),
        }
    }
    for &(l, count) in &level_counts {
        report.push(key, format!("level{l}_count"), count as f64, None);
        for (c, name) in TERMS.iter().enumerate() {
            let active = pieces
                .iter()
                .zip(f.amplitudes())
                .filter(|(&k, a)| term_class(k, l, r) == c && a.norm_sqr() > 0.0)
                .count();
            report.push(key, format!("level{l}_active_{name}"), active as f64, None);
        }
    }

    let piece_norms = piece_norms(f);
    let piece = |k: i64| -> f64 {
        if k < 0 {
            0.0
        } else {
            piece_norms.get(k as usize).copied().unwrap_or(0.0)
        }
    };
    let kmax = piece_norms.len() as i64;
    let bound_i: f64 = (0..kmax)
        .map(|m| {
            level_counts
                .iter()
                .map(|&(l, c)| c as f64 * piece(l as i64 + m).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    let lmax = level_counts.last().map_or(0, |x| x.0) as i64;
    let bound_ii: f64 = (1..=lmax)
        .map(|j| {
            level_counts
                .iter()
                .filter(|&&(l, _)| l as f64 >= (r + 1.0) * j as f64 / r)
                .map(|&(l, _)| {
                    let l = l as f64;
                    let jf = j as f64;
                    2f64.powf(2.0 * (l - jf) - 2.0 * l / (r + 1.0)) * piece(l as i64 - j).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    let bound_iii: f64 = (0..kmax)
        .filter(|&k| level_counts.iter().any(|&(l, _)| l as f64 > (1.0 + r) * k as f64))
        .map(piece)
        .sum();

    for (name, value) in TERMS.iter().zip(&terms) {
        report.push(key, format!("term_{name}_ratio"), value / hs, None);
    }
    let sum: f64 = terms.iter().sum();
    report.push(key, "total_ratio", total / hs, Some(total <= sum * (1.0 + 1e-12)));
    for (name, value) in TERMS.iter().zip([bound_i, bound_ii, bound_iii]) {
        report.push(key, format!("bound_{name}_ratio"), value / hs, None);
    }
    report.push(key, "quasinorm", quasinorm, None);
    report.push(key, "block_constant", blocks.constant, None);
    Ok(report)
}

/// `‖f_k‖₂` for each Littlewood–Paley level `k = 0, …`.
fn piece_norms(f: &BandLimitedField) -> Vec<f64> {
    let pieces = littlewood_paley(f);
    pieces.iter().map(|p| p.l2_norm()).collect()
}

/// `e^{iθ} − 1` without cancellation for small `θ`.
fn cis_minus_one(theta: f64) -> crate::Complex64 {
    let h = (0.5 * theta).sin();
    crate::Complex64::new(-2.0 * h * h, theta.sin())
}

/// For each tail start `m`, the grid median and maximum of
/// `sup_{m ≤ n ≤ depth} |e^{it_nP(D)}f(x) − f(x)|`.
pub fn convergence_probe(
    f: &BandLimitedField,
    symbol: &QuadraticSymbol,
    seq: &TimeSequence,
    grid: &SpatialGrid,
    tails: &[u64],
    depth: u64,
) -> Result<ExperimentReport> {
    if f.dim() != symbol.dim() {
        return Err(Error::DimensionMismatch { expected: symbol.dim(), found: f.dim() });
    }
    if grid.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: grid.dim() });
    }
    let depth = depth.min(seq.len());
    let p: Vec<f64> = f.freqs().map(|xi| symbol.eval(xi)).collect();
    let mut report = ExperimentReport::new("converge");
    for &m in tails {
        if m == 0 || m > depth {
            return Err(Error::OutOfRange(format!("tail start {m} outside 1..={depth}")));
        }
        let times = seq.values(m, depth);
        let table = PhaseTable::build(f.len(), times.len(), |row, k| cis_minus_one(times[row] * p[k]));
        let stats = scan(f, grid, &ScanRequest { table: &table, aux: None, weights: None });
        let errors: Vec<f64> = stats.iter().map(|s| s.max_sq.sqrt()).collect();
        let key = RowKey { grid: Some(grid.counts()[0]), ..Default::default() };
        report.push(key, format!("tail_error_median_m{m}"), median(&errors), None);
        report.push(key, format!("tail_error_max_m{m}"), max_of(&errors), None);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{annulus_project, BandLimitedField};
    use crate::Complex64;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law_fit() {
        let fit = fit_exponent(&[(16.0, 4.0), (32.0, 4.0 * 2f64.sqrt()), (64.0, 8.0)]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-14);
        assert!(fit.residual < 1e-14);
        let flat = fit_exponent(&[(2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_exponent(&[(1.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
        assert!(fit_exponent(&[(-1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn under_resolved_grid_is_refused() {
        let cfg = Thm14Config { lambdas: vec![64.0], grid_points: 64, trials: 1, ..Default::default() };
        assert!(matches!(theorem14_experiment(&cfg), Err(Error::UnderResolvedGrid { .. })));
        let cfg = Thm14Config { lambdas: vec![8.0], grid_points: 64, trials: 1, ..Default::default() };
        assert!(matches!(theorem14_experiment(&cfg), Err(Error::InvalidScale(_))));
    }

    #[test]
    fn single_frequency_ratio_is_closed_form() {
        let lambda: f64 = 16.0;
        let grid = SpatialGrid::unit_ball(2, 96).unwrap();
        let f = BandLimitedField::plane_wave(&[10.0, 7.0], Complex64::new(0.6, 0.8)).unwrap();
        let len = lambda.powi(-2);
        let interval = TimeInterval::for_scale(0.1, 0.1 + len, lambda, 64).unwrap();
        let norm = maximal_ball_norm(&f, &QuadraticSymbol::nonelliptic_2d(), interval, &grid).unwrap();
        let ratio = norm / (lambda * len.sqrt() * f.l2_norm());
        let want = grid.measure().sqrt() / (lambda * len.sqrt());
        assert!((ratio - want).abs() < 1e-12 * want);
        assert!((ratio - std::f64::consts::PI.sqrt()).abs() < 0.02 * ratio);
    }

    #[test]
    fn single_frequency_global_slope_is_zero() {
        let grid = SpatialGrid::unit_ball(2, 64).unwrap();
        let pairs: Vec<(f64, f64)> = [16.0, 32.0]
            .iter()
            .map(|&l| {
                let f = BandLimitedField::plane_wave(&[l, 0.5 * l], Complex64::new(1.0, 0.0)).unwrap();
                (l, global_maximal_ratio(&f, l, &grid, 64).unwrap())
            })
            .collect();
        assert!(fit_exponent(&pairs).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn thm14_small_run_is_reproducible() {
        let cfg = Thm14Config { lambdas: vec![16.0, 32.0], trials: 2, grid_points: 96, ..Default::default() };
        let a = theorem14_experiment(&cfg).unwrap();
        let b = theorem14_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite());
        assert!(a.find("maximal_slope_e1", None).is_some());
        assert!(a.find("ratio_spread_e2", None).is_some());
    }

    #[test]
    fn more_trials_keep_earlier_rows() {
        let base = GlobalConfig { lambdas: vec![16.0], trials: 1, grid_points: 64, ..Default::default() };
        let more = GlobalConfig { trials: 2, ..base.clone() };
        let a = global_maximal_experiment(&base).unwrap();
        let b = global_maximal_experiment(&more).unwrap();
        assert_eq!(a.rows()[0], b.rows()[0]);
    }

    #[test]
    fn term_classes_partition_levels() {
        let r = 1.0 / 3.0;
        assert_eq!(term_class(5, 5, r), 0);
        assert_eq!(term_class(3, 4, r), 1);
        assert_eq!(term_class(3, 5, r), 2);
        for l in 0..40 {
            for k in 0..40 {
                let c = term_class(k, l, r);
                assert!(c < 3);
            }
        }
    }

    #[test]
    fn single_piece_has_one_active_term_per_level() {
        let f = annulus_project(&random_annulus_field(8.0, 6, 11).unwrap(), 3);
        let seq = TimeSequence::power(3.0, 10_000).unwrap();
        let grid = SpatialGrid::unit_ball(2, 32).unwrap();
        let rep = decomposition_trace(&f, &seq, 0.25, &grid, 10_000).unwrap();
        let mut levels = 0;
        for row in rep.rows().iter().filter(|r| r.metric.ends_with("_count")) {
            let l = row.metric.trim_start_matches("level").trim_end_matches("_count");
            let active: Vec<f64> = TERMS
                .iter()
                .map(|t| rep.find(&format!("level{l}_active_{t}"), None).unwrap().value)
                .collect();
            assert_eq!(active.iter().filter(|&&a| a > 0.0).count(), 1, "level {l}");
            levels += 1;
        }
        assert!(levels > 5);
        assert!(rep.passed());
        let total = rep.find("total_ratio", None).unwrap().value;
        assert!(total.is_finite() && total > 0.0);
    }

    #[test]
    fn decomposition_refuses_non_member() {
        let f = BandLimitedField::plane_wave(&[3.0, 0.0], Complex64::new(1.0, 0.0)).unwrap();
        let grid = SpatialGrid::unit_ball(2, 16).unwrap();
        let slow = TimeSequence::power(1.5, 1_000_000).unwrap();
        assert!(decomposition_trace(&f, &slow, 0.25, &grid, 1_000_000).is_err());
    }

    #[test]
    fn single_frequency_terms_bounded_by_constant_modulus() {
        let c = Complex64::new(0.3, -0.4);
        let f = BandLimitedField::plane_wave(&[5.0, 2.0], c).unwrap();
        let grid = SpatialGrid::unit_ball(2, 32).unwrap();
        let seq = TimeSequence::power(3.0, 2000).unwrap();
        let rep = decomposition_trace(&f, &seq, 0.25, &grid, 2000).unwrap();
        let hs = f.hs_norm(0.25);
        let cap = c.norm() * grid.measure().sqrt() * (1.0 + 1e-12);
        for t in TERMS {
            assert!(rep.find(&format!("term_{t}_ratio"), None).unwrap().value * hs <= cap);
        }
    }

    #[test]
    fn single_frequency_probe_is_closed_form() {
        let p = QuadraticSymbol::nonelliptic_2d();
        let c = Complex64::new(0.0, 2.0);
        let f = BandLimitedField::plane_wave(&[6.0, 4.0], c).unwrap();
        let grid = SpatialGrid::cube(2, 1.0, 8).unwrap();
        let seq = TimeSequence::power(2.0, 100).unwrap();
        let rep = convergence_probe(&f, &p, &seq, &grid, &[1, 10, 100], 100).unwrap();
        for m in [1u64, 10, 100] {
            let want = (m..=100)
                .map(|n| (Complex64::cis(seq.value(n) * 24.0) - 1.0).norm() * 2.0)
                .fold(0.0, f64::max);
            let got = rep.find(&format!("tail_error_max_m{m}"), None).unwrap().value;
            assert!((got - want).abs() < 1e-13, "m = {m}");
        }
    }

    #[test]
    fn probe_errors_shrink_for_smooth_data() {
        let f = random_annulus_field(8.0, 8, 5).unwrap();
        let grid = SpatialGrid::unit_ball(2, 24).unwrap();
        let seq = TimeSequence::power(2.0, 10_000).unwrap();
        let rep = convergence_probe(&f, &QuadraticSymbol::nonelliptic_2d(), &seq, &grid, &[1, 1000], 10_000).unwrap();
        let first = rep.find("tail_error_max_m1", None).unwrap().value;
        let late = rep.find("tail_error_max_m1000", None).unwrap().value;
        assert!(late < first);
    }

    #[test]
    fn small_angle_difference_is_accurate() {
        let z = cis_minus_one(1e-12);
        assert!((z.re + 5e-25).abs() < 1e-38);
        assert_eq!(z.im, 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn probe_errors_scale_linearly(alpha in 0.1f64..10.0, phase in 0.0f64..std::f64::consts::TAU) {
            let f = random_annulus_field(4.0, 4, 2).unwrap();
            let g = f.scaled(Complex64::from_polar(alpha, phase));
            let grid = SpatialGrid::cube(2, 1.0, 6).unwrap();
            let seq = TimeSequence::power(2.0, 50).unwrap();
            let p = QuadraticSymbol::nonelliptic_2d();
            let a = convergence_probe(&f, &p, &seq, &grid, &[1, 5], 50).unwrap();
            let b = convergence_probe(&g, &p, &seq, &grid, &[1, 5], 50).unwrap();
            for (x, y) in a.rows().iter().zip(b.rows()) {
                prop_assert!((y.value - alpha * x.value).abs() <= 1e-12 * alpha * x.value.max(1e-300));
            }
        }
    }
}
