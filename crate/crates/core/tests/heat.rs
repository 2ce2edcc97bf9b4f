use std::f64::consts::PI;

use rough_pam::heat::{heat_semigroup, picard_iterate, solve_mild, window_max_norm, Scheme, SolverConfig};
use rough_pam::io::{read_trajectory, write_trajectory};
use rough_pam::noise::{mollify, synthesize};
use rough_pam::{GridFunction, GridSpec, MollifiedField, NoiseParams};

fn field(eps: f64, seed: u64) -> MollifiedField {
    let g = GridSpec::centered(8.0, 1024).unwrap();
    let p = NoiseParams::new(0.3, 1.0, seed).unwrap();
    mollify(&synthesize(&p, &g), eps).unwrap()
}

fn ones(g: GridSpec) -> GridFunction {
    GridFunction::from_fn(g, |_| 1.0)
}

fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    window_max_norm(&a.combine(1.0, b, -1.0).unwrap())
}

#[test]
fn constants_are_fixed_by_heat_flow() {
    let g = GridSpec::centered(5.0, 256).unwrap();
    let f = GridFunction::from_fn(g, |_| 2.5);
    for &t in &[0.0, 0.1, 3.0] {
        let u = heat_semigroup(&f, t).unwrap();
        assert!(u.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }
}

#[test]
fn point_mass_spreads_to_gaussian_kernel() {
    let g = GridSpec::centered(20.0, 2048).unwrap();
    let j0 = g.n / 2;
    let mut f = GridFunction::zeros(g);
    f.values[j0] = 1.0 / g.dx();
    let x0 = g.point(j0);
    let u = heat_semigroup(&f, 1.0).unwrap();
    let l1: f64 = g
        .points()
        .zip(&u.values)
        .map(|(x, v)| (v - (-(x - x0).powi(2) / 2.0).exp() / (2.0 * PI).sqrt()).abs() * g.dx())
        .sum();
    assert!(l1 < 0.01, "L1 error {l1}");
}

#[test]
fn semigroup_property() {
    let g = GridSpec::centered(10.0, 512).unwrap();
    let f = GridFunction::from_fn(g, |x| (-(x * x)).exp() * (1.0 + x.sin()) + 0.1 * (3.0 * x).cos().powi(2));
    let a = heat_semigroup(&heat_semigroup(&f, 0.3).unwrap(), 0.45).unwrap();
    let b = heat_semigroup(&f, 0.75).unwrap();
    assert!(a.combine(1.0, &b, -1.0).unwrap().max_abs() < 1e-10);
    assert_eq!(heat_semigroup(&f, 0.0).unwrap(), f);
}

#[test]
fn zero_potential_keeps_ones() {
    let g = GridSpec::centered(8.0, 256).unwrap();
    for scheme in [Scheme::Strang, Scheme::Lie, Scheme::Picard] {
        let cfg = SolverConfig::new(0.01, 0.5).with_scheme(scheme);
        let tr = solve_mild(&ones(g), &MollifiedField::zero(g), &cfg).unwrap();
        for s in &tr.snapshots {
            assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-12), "{scheme:?}");
        }
    }
}

#[test]
fn zero_potential_is_pure_heat_flow() {
    let g = GridSpec::centered(8.0, 512).unwrap();
    let u0 = GridFunction::from_fn(g, |x| (-(x * x)).exp());
    let tr = solve_mild(&u0, &MollifiedField::zero(g), &SolverConfig::new(0.02, 1.0)).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.snapshots) {
        let h = heat_semigroup(&u0, *t).unwrap();
        let err = h.values.iter().zip(s).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "t = {t}: {err}");
    }
}

#[test]
fn constant_potential_factors_out() {
    let g = GridSpec::centered(8.0, 512).unwrap();
    let c = 1.7;
    let u0 = GridFunction::from_fn(g, |x| 1.0 + (-(x * x)).exp());
    let tr = solve_mild(&u0, &MollifiedField::constant(g, c), &SolverConfig::new(0.01, 0.8)).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.snapshots) {
        let h = heat_semigroup(&u0, *t).unwrap().scaled((c * t).exp());
        for (a, b) in h.values.iter().zip(s) {
            assert!((a - b).abs() <= 1e-8 * a.abs(), "t = {t}");
        }
    }
}

#[test]
fn times_start_at_zero_and_increase() {
    let f = field(0.2, 3);
    let mut cfg = SolverConfig::new(0.01, 0.25);
    cfg.record_every = 7;
    let tr = solve_mild(&ones(*f.grid()), &f, &cfg).unwrap();
    assert_eq!(tr.times[0], 0.0);
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    assert!((tr.times.last().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(tr.times.len(), tr.snapshots.len());
    assert_eq!(tr.times.len(), 1 + 25 / 7 + 1);
}

fn convergence_rate(scheme: Scheme) -> f64 {
    let f = field(0.2, 17);
    let u0 = ones(*f.grid());
    let run = |dt: f64| solve_mild(&u0, &f, &SolverConfig::new(dt, 0.25).with_scheme(scheme)).unwrap().last();
    let (a, b, c) = (run(0.25 / 128.0), run(0.25 / 256.0), run(0.25 / 512.0));
    (max_diff(&a, &b) / max_diff(&b, &c)).log2()
}

#[test]
fn strang_self_convergence_is_second_order() {
    let r = convergence_rate(Scheme::Strang);
    assert!((1.7..=2.2).contains(&r), "rate {r}");
}

#[test]
fn lie_self_convergence_is_first_order() {
    let r = convergence_rate(Scheme::Lie);
    assert!((0.8..=1.2).contains(&r), "rate {r}");
}

#[test]
fn positivity_and_linearity() {
    let f = field(0.1, 4);
    let g = *f.grid();
    let u0 = GridFunction::from_fn(g, |x| (-(x * x)).exp() + 0.5 * (-(x - 2.0).powi(2) * 4.0).exp());
    let cfg = SolverConfig::new(0.005, 0.5);
    let a = solve_mild(&u0, &f, &cfg).unwrap();
    for s in &a.snapshots {
        let top = s.iter().cloned().fold(0.0, f64::max);
        // FFT round-off only
        assert!(s.iter().all(|v| *v >= -1e-14 * top));
    }
    let b = solve_mild(&u0.scaled(-3.5), &f, &cfg).unwrap();
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        let top = sa.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in sa.iter().zip(sb) {
            assert!((y + 3.5 * x).abs() <= 1e-10 * 3.5 * top);
        }
    }
}

#[test]
fn picard_matches_strang_on_short_horizon() {
    let f = field(0.1, 8);
    let u0 = ones(*f.grid());
    let p = picard_iterate(&u0, &f, 0.1, 25, 0.0005).unwrap();
    assert!(!p.diverged);
    let s = solve_mild(&u0, &f, &SolverConfig::new(0.0005, 0.1)).unwrap();
    let d = max_diff(&p.trajectory.last(), &s.last());
    let scale = window_max_norm(&s.last());
    assert!(d < 0.01 * scale, "{d} vs {scale}");
    // contraction regime
    assert!(p.differences.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-13), "{:?}", p.differences);
}

#[test]
fn picard_without_noise_is_heat_flow() {
    let g = GridSpec::centered(8.0, 256).unwrap();
    let u0 = GridFunction::from_fn(g, |x| (-(x * x)).exp());
    for n in [1, 2, 5] {
        let p = picard_iterate(&u0, &MollifiedField::zero(g), 0.5, n, 0.01).unwrap();
        for (t, s) in p.trajectory.times.iter().zip(&p.trajectory.snapshots) {
            let h = heat_semigroup(&u0, *t).unwrap();
            assert!(h.values.iter().zip(s).all(|(a, b)| (a - b).abs() < 1e-10));
        }
    }
    assert!(picard_iterate(&u0, &MollifiedField::zero(g), 0.5, 0, 0.01).is_err());
}

#[test]
fn picard_flags_divergence() {
    let g = GridSpec::centered(4.0, 128).unwrap();
    let f = MollifiedField::constant(g, 40.0);
    let p = picard_iterate(&ones(g), &f, 1.0, 200, 0.01).unwrap();
    assert!(p.diverged);
    assert!(p.iterations < 200);
}

#[test]
fn trajectory_exports() {
    let f = field(0.2, 2);
    let mut cfg = SolverConfig::new(0.05, 0.2);
    cfg.record_every = 2;
    let tr = solve_mild(&ones(*f.grid()), &f, &cfg).unwrap();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &tr.to_data()).unwrap();
    let back = read_trajectory(buf.as_slice()).unwrap();
    assert_eq!(back, tr.to_data());

    let mut csv = Vec::new();
    tr.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,u"));
    let rows: Vec<&str> = lines.collect();
    let per = tr.grid.points().filter(|x| tr.grid.in_interior(*x)).count();
    assert_eq!(rows.len(), per * tr.times.len());
    let cols: Vec<f64> = rows[0].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(cols.len(), 3);
    assert_eq!(cols[0], 0.0);
}
