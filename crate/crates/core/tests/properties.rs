use proptest::prelude::*;
use rough_pam::fk::{sample_path, z_functional};
use rough_pam::heat::heat_semigroup;
use rough_pam::rng::derive_seed;
use rough_pam::stats::linear_fit;
use rough_pam::variational::energy;
use rough_pam::{GridFunction, GridSpec, NoiseParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_fit_recovers_exact_lines(a in -10.0f64..10.0, b in -10.0f64..10.0, n in 3usize..20) {
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sqrt() + 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        prop_assert!((f.slope - b).abs() < 1e-9 && (f.intercept - a).abs() < 1e-9);
        prop_assert!(f.rms_residual < 1e-9);
    }

    #[test]
    fn derived_seeds_separate_coordinates(g in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(g, &[i]), derive_seed(g, &[j]));
        prop_assert_ne!(derive_seed(g, &[i, j]), derive_seed(g, &[j, i]));
        prop_assert_eq!(derive_seed(g, &[i, j]), derive_seed(g, &[i, j]));
    }

    #[test]
    fn heat_flow_keeps_bumps_nonnegative(c in -3.0f64..3.0, w in 0.2f64..2.0, t in 0.0f64..2.0) {
        let g = GridSpec::centered(16.0, 512).unwrap();
        let f = GridFunction::from_fn(g, |x| (-((x - c) / w).powi(2)).exp());
        let u = heat_semigroup(&f, t).unwrap();
        let max = u.values.iter().cloned().fold(0.0, f64::max);
        prop_assert!(u.values.iter().all(|v| *v >= -1e-14 * max));
        // mass is conserved on the torus
        let m0: f64 = f.values.iter().sum();
        let m1: f64 = u.values.iter().sum();
        prop_assert!((m0 - m1).abs() <= 1e-10 * m0);
    }

    #[test]
    fn energy_is_quartic(a in 0.1f64..5.0, w in 0.5f64..2.0, h in 0.05f64..0.49) {
        let g = GridSpec::centered(32.0, 1024).unwrap();
        let f = GridFunction::from_fn(g, |x| (-(x / w).powi(2)).exp());
        let e1 = energy(&f, h).unwrap();
        let ea = energy(&f.scaled(a), h).unwrap();
        prop_assert!((ea - a.powi(4) * e1).abs() <= 1e-10 * ea);
    }

    #[test]
    fn z_is_subadditive(seed in any::<u64>(), s in 1usize..64, t in 1usize..64) {
        let p = NoiseParams::new(0.3, 1.0, 0).unwrap();
        let path = sample_path(0.0, 1.0, 1.0 / 128.0, seed).unwrap();
        let z = z_functional(&path, &p, 20.0).unwrap();
        let rhs = z.values[s] + z.window(s, s + t);
        prop_assert!(z.values[s + t] <= rhs + 1e-10 * rhs.max(1.0));
    }
}
