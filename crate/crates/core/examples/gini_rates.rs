//! Kolmogorov distances for the Gini mean difference of normal samples.
//!
//! cargo run --release --example gini_rates -- [reps]

use symstat::harness::{run, CumulantMode, ExperimentSpec, Family, KernelName, Standardization};
use symstat::Distribution;

fn main() -> symstat::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let spec = ExperimentSpec {
        family: Family::UStatistic { kernel: KernelName::Gini },
        distribution: Distribution::standard_normal(),
        n_list: vec![20, 50, 100, 200],
        reps,
        seed: 2024,
        cumulant_mode: CumulantMode::Exact,
        standardization: Standardization::Theoretical,
    };
    let res = run(&spec)?;
    print!("{}", res.to_csv());
    for r in &res.records {
        println!(
            "N = {:>4}  normal {:.5}  one {:.5}  two {:.5}  floor {:.5}  N*two {:.4}",
            r.n, r.delta_normal, r.delta_one, r.delta_two, r.mc_floor, r.n_times_delta_two
        );
    }
    println!("rate (two-term): {:?}", res.rates.two);
    println!("wall time {:.1}s", res.wall_time_s);
    Ok(())
}
