use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rough_pam::lpblocks::{
    besov_norm, block, build_partition, noise_regularity_scan, rho, weighted_lp, ScanConfig, WeightSpec,
};
use rough_pam::{GridFunction, GridSpec, NoiseParams};

fn grid() -> GridSpec {
    GridSpec::centered(32.0, 4096).unwrap()
}

fn smooth_f(g: GridSpec) -> GridFunction {
    GridFunction::from_fn(g, |x| (-0.5 * x * x).exp() * (1.0 + (3.0 * x).sin()) + 0.3 * (-(x - 4.0).powi(2)).exp())
}

#[test]
fn partition_sums_to_one_on_resolved_band() {
    let pu = build_partition(&grid()).unwrap();
    let band = pu.resolved_band();
    assert!(band <= grid().nyquist());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let xi: f64 = rng.random_range(-band..=band);
        let s: f64 = pu.levels().map(|j| pu.chi_j(j, xi)).sum();
        assert!((s - 1.0).abs() < 1e-8, "xi = {xi}: {s}");
    }
}

#[test]
fn partition_supports_and_range() {
    let pu = build_partition(&grid()).unwrap();
    for i in 0..=20_000 {
        let xi = i as f64 * 1e-3;
        let c = pu.chi(xi);
        if !(0.75..=8.0 / 3.0).contains(&xi) {
            assert_eq!(c, 0.0, "xi = {xi}");
        }
        assert!((0.0..=1.0 + 1e-12).contains(&c));
        let t = pu.chi_tilde(xi);
        assert!((0.0..=1.0 + 1e-12).contains(&t));
        if xi >= 4.0 / 3.0 {
            assert_eq!(t, 0.0);
        }
    }
    assert_eq!(rho(0.75), 1.0);
}

#[test]
fn j_max_follows_nyquist() {
    let g = grid(); // Nyquist = 64 pi ~ 201
    let pu = build_partition(&g).unwrap();
    assert_eq!(pu.j_max, (g.nyquist()).log2().floor() as i32 - 1);
    assert_eq!(pu.j_max, 6);
}

#[test]
fn blocks_reconstruct_smooth_function() {
    let g = grid();
    let pu = build_partition(&g).unwrap();
    let f = smooth_f(g);
    let mut sum = vec![0.0; g.n];
    for j in pu.levels() {
        for (s, v) in sum.iter_mut().zip(block(&f, j, &pu).unwrap().values) {
            *s += v;
        }
    }
    let err = sum.iter().zip(&f.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-7, "max error {err}");
}

#[test]
fn sinusoid_inside_one_annulus_is_its_own_block() {
    let g = grid();
    let pu = build_partition(&g).unwrap();
    // level 3 is the only chi_j equal to one at 2^3 * 1.6 = 12.8; take the nearest grid frequency
    let k = (12.8 / g.freq_step()).round();
    let xi = k * g.freq_step();
    assert_eq!(pu.chi_j(3, xi), 1.0);
    let f = GridFunction::from_fn(g, |x| (xi * x).cos());
    for j in pu.levels() {
        let b = block(&f, j, &pu).unwrap();
        let err = if j == 3 {
            b.combine(1.0, &f, -1.0).unwrap().max_abs()
        } else {
            b.max_abs()
        };
        assert!(err < 1e-7, "level {j}: {err}");
    }
}

#[test]
fn block_energies_nearly_orthogonal() {
    let g = grid();
    let pu = build_partition(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let (a, b, c, w): (f64, f64, f64, f64) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.3..2.0),
        );
        let f = GridFunction::from_fn(g, |x| (a + b * (c * x).sin()) * (-0.5 * (x / w).powi(2)).exp());
        let e: f64 = pu.levels().map(|j| block(&f, j, &pu).unwrap().l2_norm().powi(2)).sum();
        let n2 = f.l2_norm().powi(2);
        assert!((e / n2 - 1.0).abs() < 0.05, "{e} vs {n2}");
    }
}

#[test]
fn besov_norm_basic_properties() {
    let g = grid();
    let pu = build_partition(&g).unwrap();
    let f = smooth_f(g);
    let w = WeightSpec::polynomial(1.0).unwrap();
    let inf = f64::INFINITY;

    let z = besov_norm(&GridFunction::zeros(g), 0.5, inf, inf, &w, &pu).unwrap();
    assert_eq!(z.total, 0.0);

    let lo = besov_norm(&f, -0.5, inf, inf, &w, &pu).unwrap();
    let hi = besov_norm(&f, 0.5, inf, inf, &w, &pu).unwrap();
    assert!(lo.total <= hi.total);
    assert!(lo.block_norms.iter().all(|b| *b >= 0.0));

    let a = -3.7;
    let s = besov_norm(&f.scaled(a), 0.5, 2.0, 2.0, &w, &pu).unwrap();
    let base = besov_norm(&f, 0.5, 2.0, 2.0, &w, &pu).unwrap();
    assert!((s.total - a.abs() * base.total).abs() < 1e-12 * s.total);

    // smaller weight, smaller norm
    let w1 = WeightSpec::polynomial(2.0).unwrap();
    let w2 = WeightSpec::polynomial(1.0).unwrap();
    for &(p, q) in &[(inf, inf), (2.0, 2.0), (1.0, 3.0)] {
        let n1 = besov_norm(&f, 0.2, p, q, &w1, &pu).unwrap().total;
        let n2 = besov_norm(&f, 0.2, p, q, &w2, &pu).unwrap().total;
        assert!(n1 <= n2);
    }
    let e1 = WeightSpec::exponential(1.0, 0.5).unwrap();
    let e2 = WeightSpec::exponential(0.5, 0.5).unwrap();
    assert!(besov_norm(&f, 0.0, inf, 1.0, &e1, &pu).unwrap().total <= besov_norm(&f, 0.0, inf, 1.0, &e2, &pu).unwrap().total);
    assert!(WeightSpec::exponential(1.0, 1.0).is_err());
    assert!(WeightSpec::polynomial(0.0).is_err());
}

#[test]
fn unweighted_l2_norm_matches_plancherel() {
    let g = grid();
    let pu = build_partition(&g).unwrap();
    // band-limited: Gaussian of width 1 carries nothing above xi ~ 9
    let f = GridFunction::from_fn(g, |x| (-0.5 * x * x).exp() * (2.0 * x).cos());
    let b = besov_norm(&f, 0.0, 2.0, 2.0, &WeightSpec::None, &pu).unwrap();
    let exact = (PI.sqrt() / 2.0 * (1.0 + (-4.0f64).exp())).sqrt();
    assert!((f.l2_norm() - exact).abs() < 1e-10);
    assert!((b.total / exact - 1.0).abs() < 0.1);
}

#[test]
fn weighted_sup_is_discrete_max() {
    let g = GridSpec::centered(4.0, 64).unwrap();
    let f = GridFunction::from_fn(g, |x| x);
    let w = WeightSpec::polynomial(1.0).unwrap();
    let expect = g
        .points()
        .map(|x| x.abs() / (1.0 + x * x).sqrt())
        .fold(0.0, f64::max);
    assert_eq!(weighted_lp(&f, f64::INFINITY, &w), expect);
}

#[test]
fn small_scan_runs_and_scales_with_amplitude() {
    let p = NoiseParams::new(0.25, 1.0, 11).unwrap();
    let mut cfg = ScanConfig::new(p, vec![1024, 2048], vec![0.85], 10);
    cfg.half_width = 16.0;
    let a = noise_regularity_scan(&cfg).unwrap();
    assert_eq!(a.rows.len(), 20);
    cfg.params.c_h = 2.0;
    let b = noise_regularity_scan(&cfg).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(ra.seed, rb.seed);
        let r = rb.sup_block_norm / ra.sup_block_norm;
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }
    cfg.replicas = 5;
    assert!(noise_regularity_scan(&cfg).is_err());
}
