//! The divergence construction: at each bad scale `(b, M)` a box datum `f_j`
//! whose evolution stays above `1/2` on a set `U_j` whose measure, against
//! `‖f_j‖²_{H^s}`, grows like `M^{1−s}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimates::{fit_exponent, ExponentFit};
use crate::fields::{box_hs_norm, BoxSpec, QuadraticSymbol, SobolevWeight, SpatialGrid, ThirdAxisSign};
use crate::propagator::normalized_modulus;
use crate::sequences::{extract_bad_scales, gap_profile, rate_from_smoothness, BadScale, TimeSequence};

/// Margin used for the amplitude of `λ`, the transverse extent of `U_j` and
/// each phase bound.
pub const DEFAULT_MARGIN: f64 = 1e-3;
pub const DEFAULT_POINTS: usize = 32;
pub const DENSE_POINTS: usize = 256;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;
/// Allowed shortfall of the modulus against `cos(total phase)`.
const COS_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CxOptions {
    pub margin: f64,
    pub sign: ThirdAxisSign,
    pub oracle_tol: f64,
}

impl Default for CxOptions {
    fn default() -> Self {
        Self { margin: DEFAULT_MARGIN, sign: ThirdAxisSign::Plus, oracle_tol: DEFAULT_ORACLE_TOL }
    }
}

/// One stage of the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CxParams {
    pub s: f64,
    pub r: f64,
    pub dim: usize,
    pub b: f64,
    pub m: f64,
    pub lambda: f64,
    /// `λb/2`
    pub u_width: f64,
    pub margin: f64,
    pub sign: ThirdAxisSign,
    /// `M·b^{1−r} ≤ 1`
    pub weight_ok: bool,
    /// `λb ≤ margin`
    pub phase_ok: bool,
    /// `U_j ⊂ B(0,1)`
    pub subset_ok: bool,
}

impl CxParams {
    /// `margin·M^{1/2}·b^{−(r+1)/2}`
    pub fn lambda_for(m: f64, b: f64, r: f64, margin: f64) -> f64 {
        margin * m.sqrt() * b.powf(-(r + 1.0) / 2.0)
    }

    /// Builds a stage with an arbitrary `λ` and records the flags without
    /// rejecting anything. Used to exercise the failure paths.
    pub fn unchecked(s: f64, b: f64, m: f64, lambda: f64, dim: usize, opts: &CxOptions) -> Self {
        let r = rate_from_smoothness(s);
        let u_width = lambda * b / 2.0;
        let transverse = opts.margin * opts.margin * (dim as f64 - 1.0);
        Self {
            s,
            r,
            dim,
            b,
            m,
            lambda,
            u_width,
            margin: opts.margin,
            sign: opts.sign,
            weight_ok: m * b.powf(1.0 - r) <= 1.0,
            phase_ok: lambda * b <= opts.margin,
            subset_ok: u_width < 1.0 && u_width * u_width + transverse < 1.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.weight_ok && self.phase_ok && self.subset_ok
    }

    pub fn symbol(&self) -> QuadraticSymbol {
        if self.dim == 3 {
            QuadraticSymbol::nonelliptic_3d(self.sign)
        } else {
            QuadraticSymbol::nonelliptic_2d()
        }
    }

    /// `|U_j|`
    pub fn u_measure(&self) -> f64 {
        let t = 2.0 * self.margin;
        let base = self.u_width * t;
        if self.dim == 3 {
            base * t
        } else {
            base
        }
    }
}

pub fn build_params(s: f64, bad: &BadScale, dim: usize, opts: &CxOptions) -> Result<CxParams> {
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::param("s", format!("must lie in (0, 1/2), got {s}")));
    }
    if dim != 2 && dim != 3 {
        return Err(Error::param("dim", format!("must be 2 or 3, got {dim}")));
    }
    if !(opts.margin > 0.0 && opts.margin < 1.0) {
        return Err(Error::param("margin", format!("must lie in (0, 1), got {}", opts.margin)));
    }
    let r = rate_from_smoothness(s);
    if (bad.r - r).abs() > 1e-12 {
        return Err(Error::InvalidStage(format!("scale was extracted at r = {}, stage needs r = {r}", bad.r)));
    }
    if !(bad.b > 0.0 && bad.m > 0.0) {
        return Err(Error::InvalidStage(format!("b = {} and M = {} must be positive", bad.b, bad.m)));
    }
    if (bad.count as f64) < bad.m * bad.b.powf(-r) {
        return Err(Error::InvalidStage(format!(
            "count {} < M·b^(−r) = {}",
            bad.count,
            bad.m * bad.b.powf(-r)
        )));
    }
    let lambda = CxParams::lambda_for(bad.m, bad.b, r, opts.margin);
    let p = CxParams::unchecked(s, bad.b, bad.m, lambda, dim, opts);
    if !p.weight_ok {
        return Err(Error::InvalidStage(format!("M·b^(1−r) = {} > 1", bad.m * bad.b.powf(1.0 - r))));
    }
    if !p.phase_ok {
        return Err(Error::InvalidStage(format!("λb = {} > {}", lambda * bad.b, opts.margin)));
    }
    if !p.subset_ok {
        return Err(Error::InvalidStage(format!("U_j is not inside the unit ball (λb/2 = {})", p.u_width)));
    }
    Ok(p)
}

/// `[0,λ]×[−λ−1,−λ]` (times `[0,1]` in the third axis) with amplitude `1/λ`.
pub fn build_fj(p: &CxParams) -> Result<BoxSpec> {
    let l = p.lambda;
    let (mut lo, mut hi) = (vec![0.0, -l - 1.0], vec![l, -l]);
    if p.dim == 3 {
        lo.push(0.0);
        hi.push(1.0);
    }
    BoxSpec::new(lo, hi, 1.0 / l)
}

/// Cell-centred grid on `(0, λb/2)×(−margin, margin)` (and `(−margin, margin)`
/// in the third axis).
pub fn build_uj(p: &CxParams, points: usize) -> Result<SpatialGrid> {
    let mut lo = vec![0.0, -p.margin];
    let mut hi = vec![p.u_width, p.margin];
    if p.dim == 3 {
        lo.push(-p.margin);
        hi.push(p.margin);
    }
    SpatialGrid::new(lo, hi, vec![points; p.dim])
}

/// The unique `n` with `λt_{n+1} < x₁ ≤ λt_n`.
pub fn select_time_index(x1: f64, lambda: f64, seq: &TimeSequence) -> Result<u64> {
    if seq.is_empty() || !(x1 > 0.0 && x1 <= lambda * seq.value(1)) {
        return Err(Error::OutOfRange(format!("x₁ = {x1} outside (0, λt₁]")));
    }
    let n = seq.last_index_where(x1 / lambda, |t| lambda * t >= x1);
    if n >= seq.len() {
        return Err(Error::OutOfRange(format!("x₁ = {x1} is below λ·t_len; sequence too short")));
    }
    if !(lambda * seq.value(n + 1) < x1 && x1 <= lambda * seq.value(n)) {
        return Err(Error::OutOfRange(format!("selected index {n} does not bracket x₁ = {x1}")));
    }
    Ok(n)
}

/// Suprema over the unit `η` box of the phase terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseBounds {
    /// `λ|x₁ − λt_n|`
    pub first: f64,
    /// `|x₂|`
    pub second: f64,
    /// `λt_n`
    pub third: f64,
    /// `|x₃| + t_n` in three dimensions.
    pub extra: Option<f64>,
}

impl PhaseBounds {
    pub fn total(&self) -> f64 {
        self.first + self.second + self.third + self.extra.unwrap_or(0.0)
    }

    /// Names of the terms exceeding `margin`.
    pub fn violated(&self, margin: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.first > margin {
            out.push("first");
        }
        if self.second > margin {
            out.push("second");
        }
        if self.third > margin {
            out.push("third");
        }
        if self.extra.is_some_and(|e| e > margin) {
            out.push("third-axis");
        }
        out
    }
}

pub fn phase_bounds(p: &CxParams, x: &[f64], n: u64, seq: &TimeSequence) -> Result<PhaseBounds> {
    if x.len() < p.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, found: x.len() });
    }
    if n == 0 || n > seq.len() {
        return Err(Error::OutOfRange(format!("index {n} outside the sequence")));
    }
    let t = seq.value(n);
    Ok(PhaseBounds {
        first: p.lambda * (x[0] - p.lambda * t).abs(),
        second: x[1].abs(),
        third: p.lambda * t,
        extra: (p.dim == 3).then(|| x[2].abs() + t),
    })
}

/// `|U_j| / λ^{2s−1}`
pub fn weak_type_ratio(p: &CxParams) -> f64 {
    p.u_measure() / p.lambda.powf(2.0 * p.s - 1.0)
}

/// `margin^{3−2s}·M^{1−s}` (times `2·margin` in three dimensions).
pub fn weak_type_closed_form(p: &CxParams) -> f64 {
    let base = p.margin.powf(3.0 - 2.0 * p.s) * p.m.powf(1.0 - p.s);
    if p.dim == 3 {
        base * 2.0 * p.margin
    } else {
        base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CxStageReport {
    pub params: CxParams,
    pub points_per_axis: usize,
    pub points: usize,
    pub u_measure: f64,
    pub min_modulus: f64,
    pub argmin: [f64; 3],
    /// Largest of each phase term over the grid.
    pub phase_max: [f64; 3],
    pub extra_phase_max: Option<f64>,
    pub max_gap: f64,
    /// `2M⁻¹b^{r+1}`
    pub gap_bound: f64,
    pub hs_norm: f64,
    pub hs_norm_homogeneous: f64,
    /// `λ^{s−1/2}`
    pub hs_target: f64,
    pub wt_ratio: f64,
    pub wt_closed_form: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl CxStageReport {
    pub fn hs_ratio(&self) -> f64 {
        self.hs_norm / self.hs_target
    }

    pub fn wt_relative_error(&self) -> f64 {
        (self.wt_ratio - self.wt_closed_form).abs() / self.wt_closed_form
    }
}

struct PointOutcome {
    x: [f64; 3],
    modulus: f64,
    bounds: PhaseBounds,
    above_b: bool,
}

fn fmt_point(x: &[f64; 3], dim: usize) -> String {
    let parts: Vec<String> = x[..dim].iter().map(|v| format!("{v:.6e}")).collect();
    format!("({})", parts.join(", "))
}

/// Evaluates the stage on `grid` and checks every gate.
pub fn verify_lower_bound(p: &CxParams, seq: &TimeSequence, grid: &SpatialGrid, tol: f64) -> Result<CxStageReport> {
    if grid.dim() != p.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, found: grid.dim() });
    }
    let spec = build_fj(p)?;
    let symbol = p.symbol();
    let gap = gap_profile(seq, p.b)?;
    let gap_bound = 2.0 / p.m * p.b.powf(p.r + 1.0);

    let outcomes: Vec<PointOutcome> = (0..grid.len())
        .into_par_iter()
        .map(|i| -> Result<PointOutcome> {
            let x = grid.point(i);
            let n = select_time_index(x[0], p.lambda, seq)?;
            let t = seq.value(n);
            let bounds = phase_bounds(p, &x, n, seq)?;
            let modulus = normalized_modulus(&spec, &symbol, &x[..p.dim], t, tol)?;
            Ok(PointOutcome { x, modulus, bounds, above_b: t > p.b })
        })
        .collect::<Result<_>>()?;

    let mut failures = Vec::new();
    if !p.is_valid() {
        failures.push(format!(
            "invalid stage: weight_ok = {}, phase_ok = {}, subset_ok = {}",
            p.weight_ok, p.phase_ok, p.subset_ok
        ));
    }
    if !(gap.max_gap <= gap_bound && gap.monotone) {
        failures.push(format!(
            "gap bound: max gap {:.3e} (monotone = {}) against 2b^(r+1)/M = {gap_bound:.3e}",
            gap.max_gap, gap.monotone
        ));
    }

    let mut min_modulus = f64::INFINITY;
    let mut argmin = [0.0; 3];
    let mut phase_max = [0.0f64; 3];
    let mut extra_max: Option<f64> = None;
    let mut first_low = None;
    let mut first_cos = None;
    let mut first_above = None;
    let mut first_phase: [Option<(f64, [f64; 3])>; 4] = [None; 4];
    for o in &outcomes {
        if o.modulus < min_modulus {
            min_modulus = o.modulus;
            argmin = o.x;
        }
        let b = &o.bounds;
        phase_max[0] = phase_max[0].max(b.first);
        phase_max[1] = phase_max[1].max(b.second);
        phase_max[2] = phase_max[2].max(b.third);
        if let Some(e) = b.extra {
            extra_max = Some(extra_max.map_or(e, |m: f64| m.max(e)));
        }
        if o.modulus <= 0.5 && first_low.is_none() {
            first_low = Some((o.modulus, o.x));
        }
        if o.modulus < b.total().cos() - COS_SLACK && first_cos.is_none() {
            first_cos = Some((o.modulus, b.total().cos(), o.x));
        }
        if o.above_b && first_above.is_none() {
            first_above = Some(o.x);
        }
        for (slot, value) in [b.first, b.second, b.third, b.extra.unwrap_or(0.0)].into_iter().enumerate() {
            if value > p.margin && first_phase[slot].is_none() {
                first_phase[slot] = Some((value, o.x));
            }
        }
    }
    let names = ["first", "second", "third", "third-axis"];
    for (slot, hit) in first_phase.iter().enumerate() {
        if let Some((v, x)) = hit {
            failures.push(format!("{} phase term {v:.3e} > {} at x = {}", names[slot], p.margin, fmt_point(x, p.dim)));
        }
    }
    if let Some(x) = first_above {
        failures.push(format!("t_n > b at x = {}", fmt_point(&x, p.dim)));
    }
    if let Some((m, x)) = first_low {
        failures.push(format!("modulus {m:.6} ≤ 1/2 at x = {}", fmt_point(&x, p.dim)));
    }
    if let Some((m, c, x)) = first_cos {
        failures.push(format!("modulus {m:.9} below cos(total phase) = {c:.9} at x = {}", fmt_point(&x, p.dim)));
    }

    let hs_norm = box_hs_norm(&spec, p.s, SobolevWeight::Inhomogeneous)?;
    let hs_norm_homogeneous = box_hs_norm(&spec, p.s, SobolevWeight::Homogeneous)?;
    let hs_target = p.lambda.powf(p.s - 0.5);
    let ratio = hs_norm / hs_target;
    if !(1.0 / 1.5..=1.5).contains(&ratio) {
        failures.push(format!("hs norm {hs_norm:.6e} not within a factor 1.5 of λ^(s−1/2) = {hs_target:.6e}"));
    }
    let wt_ratio = weak_type_ratio(p);
    let wt_closed_form = weak_type_closed_form(p);
    if (wt_ratio - wt_closed_form).abs() > 1e-10 * wt_closed_form {
        failures.push(format!("weak-type ratio {wt_ratio:.12e} differs from closed form {wt_closed_form:.12e}"));
    }
    Ok(CxStageReport {
        params: *p,
        points_per_axis: grid.counts()[0],
        points: grid.len(),
        u_measure: p.u_measure(),
        min_modulus,
        argmin,
        phase_max,
        extra_phase_max: extra_max,
        max_gap: gap.max_gap,
        gap_bound,
        hs_norm,
        hs_norm_homogeneous,
        hs_target,
        wt_ratio,
        wt_closed_form,
        pass: failures.is_empty(),
        failures,
    })
}

/// All stages of a run and the trend checks across them.
#[derive(Debug, Clone, PartialEq)]
pub struct CxRun {
    pub stages: Vec<CxStageReport>,
    /// Slope of `log wt_ratio` against `log M` (at least two stages).
    pub fit: Option<ExponentFit>,
    /// `wt_ratio` strictly increasing along increasing `M`.
    pub increasing: bool,
}

impl CxRun {
    pub fn all_pass(&self) -> bool {
        self.stages.iter().all(|s| s.pass)
    }
}

/// Extracts the bad scales and runs each stage in order.
pub fn run_stages(
    s: f64,
    seq: &TimeSequence,
    scales: &[f64],
    dim: usize,
    points: usize,
    opts: &CxOptions,
) -> Result<CxRun> {
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::param("s", format!("must lie in (0, 1/2), got {s}")));
    }
    let r = rate_from_smoothness(s);
    let bad = extract_bad_scales(seq, r, scales)?;
    let mut stages = Vec::with_capacity(bad.len());
    for scale in &bad {
        let p = build_params(s, scale, dim, opts)?;
        let grid = build_uj(&p, points)?;
        stages.push(verify_lower_bound(&p, seq, &grid, opts.oracle_tol)?);
    }
    let fit = if stages.len() >= 2 {
        let pairs: Vec<(f64, f64)> = stages.iter().map(|st| (st.params.m, st.wt_ratio)).collect();
        fit_exponent(&pairs).ok()
    } else {
        None
    };
    let mut ordered: Vec<(f64, f64)> = stages.iter().map(|st| (st.params.m, st.wt_ratio)).collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let increasing = ordered.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
    Ok(CxRun { stages, fit, increasing })
}
