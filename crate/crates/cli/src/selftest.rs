//! Quick checks of the closed-form examples of every module.

use schrodinger_means::counterexample::{build_params, select_time_index, weak_type_closed_form, weak_type_ratio, CxOptions};
use schrodinger_means::estimates::{fit_exponent, maximal_ball_norm};
use schrodinger_means::fields::io::{read_field, write_field};
use schrodinger_means::fields::{indicator_box_field, random_annulus_field, BandLimitedField, BoxSpec, QuadraticSymbol, SpatialGrid};
use schrodinger_means::propagator::{evaluate, evaluate_at, evolve, normalized_modulus, TimeInterval};
use schrodinger_means::sequences::{block_decompose, extract_bad_scales, lorentz_quasinorm, quasinorm_of_values, TimeSequence};
use schrodinger_means::{Complex64, Result};

use crate::output::num;

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

fn rel_diff(a: &BandLimitedField, b: &BandLimitedField) -> f64 {
    let scale: f64 = a.amplitudes().iter().map(|c| c.norm()).sum();
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn checks(semigroup_tol: f64) -> Result<Vec<Check>> {
    let p = QuadraticSymbol::nonelliptic_2d();
    let mut out = Vec::new();
    let mut push = |name, value: f64, pass: bool| out.push(Check { name, value, pass });

    let f = random_annulus_field(16.0, 12, 7)?;
    let g = evolve(&f, &p, 0.0)?;
    push("identity", rel_diff(&f, &g), g == f);

    let g = evolve(&f, &p, 0.37)?;
    let worst = f
        .amplitudes()
        .iter()
        .zip(g.amplitudes())
        .map(|(a, b)| (a.norm() - b.norm()).abs() / a.norm())
        .fold(0.0, f64::max);
    push("modulus", worst, worst <= 4.0 * f64::EPSILON);

    let two_step = evolve(&evolve(&f, &p, 0.21)?, &p, 0.16)?;
    let one_step = evolve(&f, &p, 0.37)?;
    let err = rel_diff(&one_step, &two_step);
    push("semigroup", err, err < semigroup_tol);

    let y = [0.3, -0.2];
    let shifted = f.with_amplitudes(
        f.freqs().zip(f.amplitudes()).map(|(xi, c)| c * Complex64::cis(-(y[0] * xi[0] + y[1] * xi[1]))).collect(),
    )?;
    let x = [0.1, 0.05];
    let a = evaluate_at(&shifted, &[x[0] + y[0], x[1] + y[1]]);
    let b = evaluate_at(&f, &x);
    let scale: f64 = f.amplitudes().iter().map(|c| c.norm()).sum();
    let err = (a - b).norm() / scale;
    push("translation", err, err <= 1e-12);

    let w = BandLimitedField::plane_wave(&[7.0, -3.0], Complex64::new(1.0, 0.0))?;
    let grid = SpatialGrid::cube(2, 1.0, 8)?;
    let v = evaluate(&evolve(&w, &p, 0.5)?, &grid)?;
    let worst = v.values().iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    push("plane_wave_modulus", worst, worst <= 1e-15);

    let spec = BoxSpec::new(vec![0.0, -5.0], vec![4.0, -4.0], 0.25)?;
    let lattice = indicator_box_field(&spec, 0.125)?;
    let err = (lattice.mass() - Complex64::new(1.0, 0.0)).norm();
    push("box_mass", err, err <= 1e-14);

    let m = normalized_modulus(&spec, &p, &[0.0, 0.0], 0.0, 1e-12)?;
    push("oracle_zero_phase", (m - 1.0).abs(), (m - 1.0).abs() <= 1e-12);

    let lambda: f64 = 16.0;
    let ball = SpatialGrid::unit_ball(2, 96)?;
    let len = lambda.powi(-2);
    let wave = BandLimitedField::plane_wave(&[10.0, 7.0], Complex64::new(0.6, 0.8))?;
    let norm = maximal_ball_norm(&wave, &p, TimeInterval::for_scale(0.0, len, lambda, 64)?, &ball)?;
    let err = (norm - ball.measure().sqrt()).abs() / norm;
    push("single_frequency_maximal", err, err <= 1e-12);

    let text = write_field(&f);
    let back = read_field(&text)?;
    let same = back.len() == f.len() && back.freqs().eq(f.freqs()) && back.amplitudes() == f.amplitudes();
    push("field_roundtrip", rel_diff(&f, &back), same);

    let cube = TimeSequence::power(3.0, 1_000_000)?;
    let q = lorentz_quasinorm(&cube, 1.0 / 3.0, 1_000_000)?;
    push("quasinorm_power", q, q == 1.0);

    let list = [0.5, 0.25, 0.25, 0.125];
    let q = quasinorm_of_values(&list, 0.5);
    let want = (1..=4).map(|n| n as f64 * list[n - 1].sqrt()).fold(0.0, f64::max);
    push("quasinorm_values", q, q == want);

    let single = TimeSequence::explicit(vec![0.5])?;
    let d = block_decompose(&single, 0.5, 4)?;
    let nonempty = d.blocks.iter().filter(|b| b.count > 0).count();
    push("blocks_singleton", d.constant, nonempty == 1 && d.constant == 1.0);

    let square = TimeSequence::power(2.0, 1_000_000_000_000)?;
    let bad = extract_bad_scales(&square, 1.0 / 3.0, &[1e-6])?[0];
    push("bad_scale_count", bad.count as f64, bad.count == 292 && bad.is_consistent());

    let fit = fit_exponent(&[(16.0, 4.0), (32.0, 4.0 * 2f64.sqrt()), (64.0, 8.0)])?;
    push("fit_exponent", fit.slope, (fit.slope - 0.5).abs() <= 1e-14 && fit.residual <= 1e-14);

    let n = select_time_index(0.05, 10.0, &TimeSequence::power(2.0, 1000)?)?;
    push("time_index", n as f64, n == 14);

    let params = build_params(0.25, &bad, 2, &CxOptions::default())?;
    let rel = (weak_type_ratio(&params) / weak_type_closed_form(&params) - 1.0).abs();
    push("weak_type_law", rel, rel <= 1e-10);

    Ok(out)
}

pub fn run(semigroup_tol: f64) -> Result<(Vec<Vec<String>>, Vec<String>)> {
    let all = checks(semigroup_tol)?;
    let rows = all.iter().map(|c| vec![c.name.to_string(), num(c.value), c.pass.to_string()]).collect();
    let failed = all.iter().filter(|c| !c.pass).map(|c| c.name.to_string()).collect();
    Ok((rows, failed))
}
