//! Normal, one-term and two-term Edgeworth approximations on a grid, and the
//! distance between a simulated sample and each of them.

use rand::SeedableRng;
use rand_distr::{Distribution as _, Exp1};
use symstat::edgeworth::{grid_csv, EmpiricalCdf, Expansion, Order};

fn main() -> symstat::Result<()> {
    // standardized mean of N exponentials: kappa3 = 2, kappa4 = 6
    let n = 20;
    let e = Expansion::new(n, 2.0, 6.0, Order::Two);
    let xs: Vec<f64> = (0..=16).map(|i| -4.0 + 0.5 * i as f64).collect();
    print!("{}", grid_csv(&e, &xs));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let sample: Vec<f64> = (0..200_000)
        .map(|_| {
            let s: f64 = (0..n).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum();
            (s - n as f64) / (n as f64).sqrt()
        })
        .collect();
    let ecdf = EmpiricalCdf::new(sample)?;
    for order in [Order::Zero, Order::One, Order::Two] {
        println!("{order:?}: {:.5}", ecdf.distance_to(&e.with_order(order)));
    }
    println!("G(0) = {:.15}", e.evaluate(0.0));
    Ok(())
}
