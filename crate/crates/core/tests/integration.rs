use proptest::prelude::*;
use schrodinger_means::counterexample::{build_fj, run_stages, CxOptions, CxParams};
use schrodinger_means::estimates::decomposition_trace;
use schrodinger_means::fields::{
    box_hs_norm, indicator_box_field, random_annulus_field, BoxSpec, QuadraticSymbol, SobolevWeight, SpatialGrid,
};
use schrodinger_means::propagator::{evaluate_at, evolve, oracle_box_eval};
use schrodinger_means::sequences::TimeSequence;
use schrodinger_means::Complex64;

fn max_lattice_error(lambda: f64, h: f64, points: &[([f64; 2], f64)]) -> f64 {
    let p = QuadraticSymbol::nonelliptic_2d();
    let spec = BoxSpec::new(vec![0.0, -lambda - 1.0], vec![lambda, -lambda], 1.0 / lambda).unwrap();
    let lattice = indicator_box_field(&spec, h).unwrap();
    points
        .iter()
        .map(|(x, t)| {
            let a = evaluate_at(&evolve(&lattice, &p, *t).unwrap(), x);
            let b = oracle_box_eval(&spec, &p, x, *t, 1e-12).unwrap();
            (a - b).norm() / spec.mass()
        })
        .fold(0.0, f64::max)
}

fn sample_points(lambda: f64, count: usize) -> Vec<([f64; 2], f64)> {
    (0..count)
        .map(|i| {
            let u = (i as f64 + 0.5) / count as f64;
            let angle = 2.0 * std::f64::consts::PI * (0.618_033_988_75 * i as f64).fract();
            let radius = u.sqrt();
            ([radius * angle.cos(), radius * angle.sin()], u / lambda)
        })
        .collect()
}

#[test]
fn lattice_converges_to_oracle() {
    let lambda = 16.0;
    let points = sample_points(lambda, 20);
    let fine = max_lattice_error(lambda, lambda / 2048.0, &points);
    let coarse = max_lattice_error(lambda, lambda / 1024.0, &points);
    assert!(fine < 1e-3, "{fine}");
    assert!((coarse / fine).log2() >= 1.0, "{coarse} {fine}");
}

#[test]
fn three_dimensional_stages_pass() {
    let seq = TimeSequence::power(2.0, 1_000_000_000_000).unwrap();
    let run = run_stages(0.25, &seq, &[1e-6, 1e-8], 3, 12, &CxOptions::default()).unwrap();
    assert_eq!(run.stages.len(), 2);
    for st in &run.stages {
        assert!(st.pass, "{:?}", st.failures);
        assert!(st.extra_phase_max.unwrap() <= 1e-3);
    }
    assert!(run.increasing);
}

#[test]
fn stage_function_norm_tracks_target() {
    let opts = CxOptions::default();
    for lambda in [17.088, 1024.0] {
        let p = CxParams::unchecked(0.25, 1e-6, 3.0, lambda, 2, &opts);
        let spec = build_fj(&p).unwrap();
        let lattice = indicator_box_field(&spec, 0.125).unwrap();
        let target = lambda.powf(0.25 - 0.5);
        let ratio = lattice.hs_norm(0.25) / target;
        assert!((1.0 / 1.5..=1.5).contains(&ratio), "λ = {lambda}: {ratio}");
        let quad = box_hs_norm(&spec, 0.25, SobolevWeight::Inhomogeneous).unwrap();
        assert!((lattice.hs_norm(0.25) / quad - 1.0).abs() < 1e-3);
    }
}

#[test]
fn decomposition_constants_are_stable_across_scales() {
    let seq = TimeSequence::power(3.0, 1_000_000).unwrap();
    let mut totals = Vec::new();
    for k in 2..=6u32 {
        let lambda = 2f64.powi(k as i32);
        let f = random_annulus_field(lambda, 6, 11 + k as u64).unwrap();
        let grid = SpatialGrid::unit_ball(2, (3.0 * lambda) as usize + 32).unwrap();
        let rep = decomposition_trace(&f, &seq, 0.25, &grid, 2000).unwrap();
        assert!(rep.passed());
        totals.push(rep.find("total_ratio", None).unwrap().value);
    }
    let (lo, hi) = totals.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo <= 2.0, "{totals:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exact_evolution_laws(seed in any::<u64>(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, y0 in -1.0f64..1.0, y1 in -1.0f64..1.0) {
        let p = QuadraticSymbol::nonelliptic_2d();
        let f = random_annulus_field(16.0, 10, seed).unwrap();
        prop_assert_eq!(&evolve(&f, &p, 0.0).unwrap(), &f);

        let g = evolve(&f, &p, t1).unwrap();
        for (a, b) in f.amplitudes().iter().zip(g.amplitudes()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 2.0 * f64::EPSILON * a.norm());
        }

        let two = evolve(&g, &p, t2).unwrap();
        let one = evolve(&f, &p, t1 + t2).unwrap();
        for (a, b) in one.amplitudes().iter().zip(two.amplitudes()) {
            prop_assert!((a - b).norm() <= 1e-12 * a.norm());
        }

        let shifted = f
            .with_amplitudes(f.freqs().zip(f.amplitudes()).map(|(xi, c)| c * Complex64::cis(-(y0 * xi[0] + y1 * xi[1]))).collect())
            .unwrap();
        let x = [0.2, -0.1];
        let scale: f64 = f.amplitudes().iter().map(|c| c.norm()).sum();
        let err = (evaluate_at(&shifted, &[x[0] + y0, x[1] + y1]) - evaluate_at(&f, &x)).norm() / scale;
        prop_assert!(err <= 1e-12);
    }
}
