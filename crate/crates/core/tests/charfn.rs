use std::f64::consts::PI;

use symstat::charfn::{cramer_rho, verify_alpha_bound, CharFunction, Provenance, SmoothingKernel, RHO_GRID};
use symstat::hoeffding::known;
use symstat::Distribution;

fn sinc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { x.sin() / x }
}

#[test]
fn named_laws_match_closed_forms() {
    let normal = CharFunction::of_map(&Distribution::normal(1.0, 2.0).unwrap(), |x| x);
    let closed = CharFunction::normal(1.0, 2.0);
    let uni = CharFunction::of_map(&Distribution::uniform(-0.5, 0.5).unwrap(), |x| x);
    assert_eq!(uni.provenance(), Provenance::Quadrature);
    for &t in &[0.0, 0.4, 1.7, 6.0] {
        assert!((normal.eval(t) - closed.eval(t)).norm() < 1e-10);
        assert!((uni.eval(t).re - sinc(t / 2.0)).abs() < 1e-10);
        assert!(uni.eval(t).im.abs() < 1e-10);
    }
}

#[test]
fn finite_law_is_exact_and_monte_carlo_is_within_noise() {
    let d = Distribution::finite(&[(-1.0, 0.2), (0.5, 0.5), (2.0, 0.3)]).unwrap();
    let exact = CharFunction::of_map(&d, |x| x);
    assert_eq!(exact.provenance(), Provenance::ExactFiniteSupport);
    let mc = CharFunction::monte_carlo(&d, |x| x, 200_000, 4);
    for &t in &[0.3, 1.0, 3.0] {
        let want = 0.2 * num_complex::Complex64::new(0.0, -t).exp()
            + 0.5 * num_complex::Complex64::new(0.0, 0.5 * t).exp()
            + 0.3 * num_complex::Complex64::new(0.0, 2.0 * t).exp();
        assert!((exact.eval(t) - want).norm() < 1e-14);
        assert!((mc.eval(t) - want).norm() < 6.0 * mc.stderr());
    }
}

#[test]
fn rho_of_uniform_is_attained_at_the_left_end() {
    // |sinc(t/2)| decreases on [0, 2 pi], and later bumps are lower
    let cf = CharFunction::of_map(&Distribution::uniform(-0.5, 0.5).unwrap(), |x| x);
    for &(a, b) in &[(0.5, 4.0), (1.0, 30.0), (3.0, 50.0)] {
        let r = cramer_rho(&cf, a, b, RHO_GRID).unwrap();
        assert!((r.rho - (1.0 - sinc(a / 2.0))).abs() < 1e-9, "{a}: {}", r.rho);
    }
    assert!(cramer_rho(&cf, 2.0, 1.0, RHO_GRID).is_err());
}

#[test]
fn lattice_law_has_zero_rho_over_a_period() {
    let cf = CharFunction::of_map(&Distribution::rademacher(), |x| x);
    let r = cramer_rho(&cf, 1.0, 4.0, RHO_GRID).unwrap();
    assert!(r.rho < 1e-9);
    assert!((r.t_max - PI).abs() < 1e-4);
}

#[test]
fn smoothing_kernels_are_probability_densities() {
    for k in [2u32, 4, 6] {
        let s = SmoothingKernel::new(1.3, k).unwrap();
        assert!((s.cf(0.0) - 1.0).abs() < 1e-8, "k={k}");
        assert_eq!(s.cf(k as f64 * 1.3 + 1e-9), 0.0);
        for &t in &[0.5, 1.5, 3.0] {
            assert!((s.cf(t) - s.cf_by_quadrature(t, 400.0)).abs() < 2e-3, "k={k} t={t}");
        }
    }
    assert!(SmoothingKernel::new(1.0, 3).is_err());
    assert!(SmoothingKernel::new(0.0, 2).is_err());
    let cal = SmoothingKernel::calibrated();
    assert!((cal.central_mass(1.0) - 0.75).abs() < 1e-9);
}

#[test]
fn alpha_bound_holds_for_a_smooth_linear_statistic() {
    let dist = Distribution::uniform(-0.5, 0.5).unwrap();
    let dec = known::linear(|x| x, 10_000, 1.0 / 12.0);
    let rep = verify_alpha_bound(&dec, &dist, 128).unwrap();
    assert!(rep.pass, "{:?}", rep.product_violations);
    assert!(rep.points.len() >= 128);
}
