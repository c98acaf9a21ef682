//! Harness sanity check: a scaled sum of standard normals is exactly N(0, 1),
//! so every distance must sit at the Monte Carlo floor.

use symstat::harness::{run, CumulantMode, ExperimentSpec, Family, Standardization};
use symstat::Distribution;

fn main() -> symstat::Result<()> {
    let spec = ExperimentSpec {
        family: Family::ScaledSum,
        distribution: Distribution::standard_normal(),
        n_list: vec![5, 20, 80],
        reps: 200_000,
        seed: 1,
        cumulant_mode: CumulantMode::Exact,
        standardization: Standardization::Theoretical,
    };
    let res = run(&spec)?;
    for r in &res.records {
        println!(
            "N = {:>3}: delta_normal {:.5}  floor {:.5}  at floor: {}",
            r.n, r.delta_normal, r.mc_floor, r.at_floor(r.delta_normal)
        );
    }
    println!("rate fit: {:?}", res.rates.normal);
    Ok(())
}
