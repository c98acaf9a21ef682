use proptest::prelude::*;
use symstat::edgeworth::{grid_csv, EmpiricalCdf, Expansion, Order};
use symstat::special::normal_cdf;

fn brute_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sample.len() as f64;
    let mut worst = 0.0f64;
    for &x in sample {
        let below = sample.iter().filter(|&&v| v < x).count() as f64 / n;
        let at = sample.iter().filter(|&&v| v <= x).count() as f64 / n;
        worst = worst.max((below - cdf(x)).abs()).max((at - cdf(x)).abs());
    }
    worst
}

proptest! {
    #[test]
    fn density_is_the_derivative(n in 5usize..500, k3 in -3.0f64..3.0, k4 in -3.0f64..3.0, x in -6.0f64..6.0) {
        let e = Expansion::new(n, k3, k4, Order::Two);
        let h = 1e-5;
        let fd = (e.evaluate(x + h) - e.evaluate(x - h)) / (2.0 * h);
        prop_assert!((fd - e.density(x)).abs() < 1e-7);
    }

    #[test]
    fn zero_skew_expansion_is_symmetric(n in 1usize..200, k4 in -3.0f64..3.0, x in -8.0f64..8.0) {
        let e = Expansion::new(n, 0.0, k4, Order::Two);
        prop_assert!((e.evaluate(-x) - (1.0 - e.evaluate(x))).abs() < 1e-14);
    }

    #[test]
    fn terms_add_up_by_order(n in 1usize..200, k3 in -3.0f64..3.0, k4 in -3.0f64..3.0, x in -8.0f64..8.0) {
        let e = Expansion::new(n, k3, k4, Order::Two);
        let t = e.terms(x);
        prop_assert_eq!(e.with_order(Order::Zero).evaluate(x), normal_cdf(x));
        prop_assert_eq!(e.with_order(Order::One).evaluate(x), t.normal + t.skew);
        prop_assert!((e.evaluate(x) - (t.normal + t.skew + t.skew_squared + t.kurtosis)).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_distance_matches_brute_force(sample in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let f = EmpiricalCdf::new(sample.clone()).unwrap();
        let e = Expansion::new(10, 0.7, -0.4, Order::Two);
        let fast = f.distance_to(&e);
        let slow = brute_distance(&sample, |x| e.evaluate(x));
        prop_assert!((fast - slow).abs() < 1e-15);
    }
}

#[test]
fn ties_are_handled_at_both_sides_of_the_jump() {
    let f = EmpiricalCdf::new(vec![0.0; 10]).unwrap();
    assert!((f.kolmogorov_distance(normal_cdf) - 0.5).abs() < 1e-15);
    let g = EmpiricalCdf::new(vec![-1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(g.eval(0.0), 0.75);
    assert!(EmpiricalCdf::new(vec![]).is_err());
    assert!(EmpiricalCdf::new(vec![f64::NAN]).is_err());
}

#[test]
fn fourier_transform_matches_numerical_integral() {
    let e = Expansion::new(15, 1.1, 0.8, Order::Two);
    for &t in &[0.3, 1.0, 2.5] {
        let h = 1e-3;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..=24_000 {
            let x = -12.0 + i as f64 * h;
            let w = if i == 0 || i == 24_000 { 0.5 } else { 1.0 };
            re += w * h * e.density(x) * (t * x).cos();
            im += w * h * e.density(x) * (t * x).sin();
        }
        let ft = e.fourier_transform(t);
        assert!((ft.re - re).abs() < 1e-9 && (ft.im - im).abs() < 1e-9, "{t}: {ft} vs {re} {im}");
    }
}

#[test]
fn grid_csv_has_one_row_per_point() {
    let e = Expansion::new(20, 0.5, 0.1, Order::Two);
    let csv = grid_csv(&e, &[-1.0, 0.0, 1.0]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,normal,one_term,two_term");
    assert_eq!(lines.len(), 4);
}

#[test]
fn sup_density_of_normal() {
    let d = Expansion::normal().sup_abs_density();
    assert!((d - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
}
