use schrodinger_means::counterexample::{
    build_params, build_uj, verify_lower_bound, CxOptions, CxStageReport, DENSE_POINTS,
};
use schrodinger_means::estimates::{
    self, convergence_probe, decomposition_trace, fit_exponent, global_maximal_experiment, theorem14_experiment,
    ExperimentReport, GlobalConfig, RowKey, Thm14Config,
};
use schrodinger_means::fields::io::read_field;
use schrodinger_means::fields::{annulus_project, random_annulus_field, BandLimitedField, QuadraticSymbol, SpatialGrid, ThirdAxisSign};
use schrodinger_means::propagator::{evaluate, evolve, l2_ball_norm, maximal_over_times, TimeInterval, TimeSet};
use schrodinger_means::sequences::{
    block_bound, block_decompose, extract_bad_scales, lorentz_quasinorm, rate_from_smoothness, TimeSequence,
};
use schrodinger_means::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, report_rows, REPORT_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum CmdError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Core(Error::InvalidStage(_)) => 1,
            _ => 2,
        }
    }
}

/// A finished table plus the names of the checks that failed.
pub struct Outcome {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn from_report(report: &ExperimentReport) -> Self {
        Self {
            columns: REPORT_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows: report_rows(report),
            failures: report.failures().map(|r| describe_row(&r.metric, r.lambda, r.value)).collect(),
        }
    }
}

fn describe_row(metric: &str, lambda: Option<f64>, value: f64) -> String {
    match lambda {
        Some(l) => format!("{metric} (lambda = {l}) = {value}"),
        None => format!("{metric} = {value}"),
    }
}

fn read_text(path: &str) -> Result<String, CmdError> {
    std::fs::read_to_string(path).map_err(|e| CmdError::Io(format!("cannot read {path}: {e}")))
}

pub fn load_field(cfg: &RunConfig) -> Result<BandLimitedField, CmdError> {
    let file = cfg.text("fields.file");
    let f = if file.is_empty() {
        random_annulus_field(cfg.float("fields.lambda"), cfg.usize("fields.count"), cfg.uint("seed"))?
    } else {
        read_field(&read_text(file)?)?
    };
    let k = cfg.int("fields.annulus");
    Ok(if k >= 0 { annulus_project(&f, k as u32) } else { f })
}

pub fn load_sequence(cfg: &RunConfig, key: &str) -> Result<TimeSequence, CmdError> {
    let spec = cfg.text(key);
    match spec.strip_prefix("csv:") {
        Some(path) => Ok(TimeSequence::from_csv(&read_text(path)?)?),
        None => Ok(TimeSequence::parse_spec(spec)?),
    }
}

fn parse_sign(text: &str) -> Result<ThirdAxisSign, ConfigError> {
    match text {
        "+" | "plus" => Ok(ThirdAxisSign::Plus),
        "-" | "minus" => Ok(ThirdAxisSign::Minus),
        other => Err(ConfigError::BadValue { key: "counterexample.sign".into(), reason: format!("expected + or -, got `{other}`") }),
    }
}

pub fn symbol(cfg: &RunConfig, dim: usize) -> Result<QuadraticSymbol, CmdError> {
    let name = cfg.text("propagator.symbol");
    let p = match name {
        "nonelliptic" if dim == 3 => QuadraticSymbol::nonelliptic_3d(ThirdAxisSign::Plus),
        "nonelliptic" => QuadraticSymbol::nonelliptic_2d(),
        "nonelliptic3+" => QuadraticSymbol::nonelliptic_3d(ThirdAxisSign::Plus),
        "nonelliptic3-" => QuadraticSymbol::nonelliptic_3d(ThirdAxisSign::Minus),
        "elliptic2" => QuadraticSymbol::elliptic(2),
        "elliptic3" => QuadraticSymbol::elliptic(3),
        other => {
            return Err(ConfigError::BadValue { key: "propagator.symbol".into(), reason: format!("unknown symbol `{other}`") }.into())
        }
    };
    Ok(p)
}

fn interval(cfg: &RunConfig) -> Result<(f64, f64), CmdError> {
    match cfg.floats("propagator.interval") {
        [a, b] => Ok((*a, *b)),
        other => Err(ConfigError::BadValue {
            key: "propagator.interval".into(),
            reason: format!("expected two values a,b, got {}", other.len()),
        }
        .into()),
    }
}

pub fn propagate(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let f = load_field(cfg)?;
    let p = symbol(cfg, f.dim())?;
    let g = evolve(&f, &p, cfg.float("propagator.t"))?;
    let grid = SpatialGrid::cube(f.dim(), 1.0, cfg.usize("fields.grid"))?;
    let values = evaluate(&g, &grid)?;
    let mut columns: Vec<String> = (1..=f.dim()).map(|i| format!("x{i}")).collect();
    columns.extend(["re", "im", "modulus"].map(String::from));
    let rows = grid
        .points()
        .zip(values.values())
        .map(|(x, z)| {
            let mut row: Vec<String> = x[..f.dim()].iter().map(|v| num(*v)).collect();
            row.extend([num(z.re), num(z.im), num(z.norm())]);
            row
        })
        .collect();
    Ok(Outcome { columns, rows, failures: Vec::new() })
}

pub fn maximal(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let f = load_field(cfg)?;
    let p = symbol(cfg, f.dim())?;
    let (a, b) = interval(cfg)?;
    let lambda = f.max_frequency().max(1.0);
    let i = TimeInterval::for_scale(a, b, lambda, cfg.usize("propagator.sup_samples_min"))?;
    let grid = SpatialGrid::unit_ball(f.dim(), cfg.usize("fields.grid"))?;
    let m = maximal_over_times(&f, &p, &TimeSet::Interval(i), &grid)?;
    let norm = l2_ball_norm(&m, 1.0)?;
    let mut rep = ExperimentReport::new("maximal");
    let key = RowKey { lambda: Some(lambda), interval: Some(i.length()), seed: Some(cfg.uint("seed")), grid: Some(cfg.usize("fields.grid")), ..Default::default() };
    rep.push(key, "samples", i.sample_count() as f64, None);
    rep.push(key, "maximal_l2_ball", norm, None);
    rep.push(key, "l2_norm", f.l2_norm(), None);
    rep.push(key, "ratio", norm / (lambda * i.length().sqrt() * f.l2_norm()), None);
    Ok(Outcome::from_report(&rep))
}

pub fn lorentz(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let seq = load_sequence(cfg, "sequences.sequence")?;
    let r = cfg.float("sequences.r");
    let mut rep = ExperimentReport::new("lorentz");
    let key = RowKey { r: Some(r), ..Default::default() };
    let mut pairs = Vec::new();
    for &d in cfg.uints("sequences.depths") {
        let q = lorentz_quasinorm(&seq, r, d)?;
        rep.push(key, format!("quasinorm_depth{d}"), q, None);
        pairs.push((d as f64, q));
    }
    if pairs.len() >= 2 {
        if let Ok(fit) = fit_exponent(&pairs) {
            rep.push(key, "quasinorm_log_slope", fit.slope, None);
        }
    }
    Ok(Outcome::from_report(&rep))
}

pub fn blocks(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let seq = load_sequence(cfg, "sequences.sequence")?;
    let r = cfg.float("sequences.r");
    let d = block_decompose(&seq, r, cfg.uint("sequences.max_level") as u32)?;
    let mut rep = ExperimentReport::new("blocks");
    let key = RowKey { r: Some(r), ..Default::default() };
    for b in &d.blocks {
        rep.push(key, format!("level{}_count", b.level), b.count as f64, None);
        rep.push(key, format!("level{}_normalized", b.level), b.count as f64 / block_bound(b.level, r), None);
    }
    rep.push(key, "constant", d.constant, None);
    rep.push(key, "trend", d.trend, None);
    rep.push(key, "unbounded", if d.unbounded { 1.0 } else { 0.0 }, None);
    Ok(Outcome::from_report(&rep))
}

pub fn thm14(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let c = Thm14Config {
        lambdas: cfg.floats("estimates.lambdas").to_vec(),
        interval_exponents: cfg.floats("estimates.intervals").to_vec(),
        trials: cfg.usize("estimates.trials"),
        grid_points: cfg.usize("estimates.grid"),
        count: cfg.usize("estimates.count"),
        seed: cfg.uint("seed"),
        sup_samples_min: cfg.usize("propagator.sup_samples_min"),
        slope_max: cfg.float("estimates.slope_max"),
        spread_max: cfg.float("estimates.spread_max"),
    };
    Ok(Outcome::from_report(&theorem14_experiment(&c)?))
}

pub fn global_max(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let c = GlobalConfig {
        lambdas: cfg.floats("estimates.lambdas").to_vec(),
        trials: cfg.usize("estimates.global_trials"),
        grid_points: cfg.usize("estimates.global_grid"),
        count: cfg.usize("estimates.count"),
        seed: cfg.uint("seed"),
        sup_samples_min: cfg.usize("propagator.sup_samples_min"),
        slope_max: cfg.float("estimates.slope_max"),
    };
    Ok(Outcome::from_report(&global_maximal_experiment(&c)?))
}

pub fn decompose_trace(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let f = load_field(cfg)?;
    let seq = load_sequence(cfg, "sequences.sequence")?;
    let grid = SpatialGrid::unit_ball(2, cfg.usize("fields.grid"))?;
    let rep = decomposition_trace(&f, &seq, cfg.float("estimates.s"), &grid, cfg.uint("estimates.depth"))?;
    Ok(Outcome::from_report(&rep))
}

pub fn converge(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let f = load_field(cfg)?;
    let p = symbol(cfg, f.dim())?;
    let seq = load_sequence(cfg, "sequences.sequence")?;
    let grid = SpatialGrid::unit_ball(f.dim(), cfg.usize("fields.grid"))?;
    let rep = convergence_probe(&f, &p, &seq, &grid, cfg.uints("estimates.tails"), cfg.uint("estimates.depth"))?;
    Ok(Outcome::from_report(&rep))
}

pub const STAGE_COLUMNS: [&str; 10] = ["b", "M", "lambda", "min_modulus", "phase1", "phase2", "phase3", "hs_norm", "wt_ratio", "pass"];

fn stage_row(st: &CxStageReport) -> Vec<String> {
    let p = &st.params;
    vec![
        num(p.b),
        num(p.m),
        num(p.lambda),
        num(st.min_modulus),
        num(st.phase_max[0]),
        num(st.phase_max[1]),
        num(st.phase_max[2]),
        num(st.hs_norm),
        num(st.wt_ratio),
        st.pass.to_string(),
    ]
}

/// Runs every stage; a stage that cannot be built is reported as a failed row
/// and the remaining stages still run.
pub fn counterexample(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    let s = cfg.float("counterexample.s");
    let seq = load_sequence(cfg, "counterexample.sequence")?;
    let dim = cfg.usize("counterexample.dim");
    let points = if cfg.flag("counterexample.dense") { DENSE_POINTS } else { cfg.usize("counterexample.points") };
    let opts = CxOptions {
        margin: cfg.float("counterexample.margin"),
        sign: parse_sign(cfg.text("counterexample.sign"))?,
        oracle_tol: cfg.float("propagator.quad_tol"),
    };
    if !(s > 0.0 && s < 0.5) {
        return Err(ConfigError::BadValue { key: "counterexample.s".into(), reason: format!("must lie in (0, 1/2), got {s}") }.into());
    }
    let bad = extract_bad_scales(&seq, rate_from_smoothness(s), cfg.floats("counterexample.scales"))?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut pairs = Vec::new();
    for scale in &bad {
        let stage = build_params(s, scale, dim, &opts)
            .and_then(|p| build_uj(&p, points).and_then(|g| verify_lower_bound(&p, &seq, &g, opts.oracle_tol)));
        match stage {
            Ok(st) => {
                failures.extend(st.failures.iter().map(|f| format!("stage b = {}: {f}", st.params.b)));
                pairs.push((st.params.m, st.wt_ratio));
                rows.push(stage_row(&st));
            }
            Err(e) => {
                failures.push(format!("stage b = {}: {e}", scale.b));
                let mut row = vec![num(scale.b), num(scale.m)];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push("false".into());
                rows.push(row);
            }
        }
    }
    if pairs.len() >= 2 {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let fit = estimates::fit_exponent(&pairs)?;
        if (fit.slope - (1.0 - s)).abs() > 0.05 {
            failures.push(format!("weak-type slope {} differs from 1 - s = {} by more than 0.05", fit.slope, 1.0 - s));
        }
        if !pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1) {
            failures.push("weak-type ratio is not strictly increasing in M".into());
        }
    }
    Ok(Outcome { columns: STAGE_COLUMNS.iter().map(|s| s.to_string()).collect(), rows, failures })
}
