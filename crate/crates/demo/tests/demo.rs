use rpam_demo::{box_eigenvalue, field_window, fk_mean};

#[test]
fn window_pairs_cover_the_middle_half() {
    let v = field_window(0.3, 1.0, 1, 1024, 8.0, 0.2).unwrap();
    assert_eq!(v.len() % 2, 0);
    let xs: Vec<f64> = v.iter().step_by(2).cloned().collect();
    assert!(xs.iter().all(|x| x.abs() <= 8.0));
    assert!(xs.len() >= 500);
    assert_eq!(v, field_window(0.3, 1.0, 1, 1024, 8.0, 0.2).unwrap());
}

#[test]
fn zero_noise_eigenvalue_is_analytic() {
    let l = box_eigenvalue(0.3, 1.0, 0, 1.0, 1.0, true).unwrap();
    let exact = -std::f64::consts::PI.powi(2) / 8.0;
    assert!((l - exact).abs() < 1e-4 * exact.abs(), "{l}");
    assert!(box_eigenvalue(0.7, 1.0, 0, 1.0, 1.0, false).is_err());
}

#[test]
fn fk_mean_is_at_least_one() {
    // E exp(V) >= exp(E V) = 1 path by path
    let r = fk_mean(0.3, 1.0, 2, 0.1, 0.1, 200).unwrap();
    assert!(r[0] >= 1.0 && r[1] >= 0.0);
}
