//! The moment, remainder, smoothness and separation conditions for the
//! Gini statistic on normal data, with the constants they imply.

use symstat::cumulants::{check_conditions, ConditionParams};
use symstat::harness::{Family, KernelName};
use symstat::Distribution;
use symstat::Mode;

fn main() -> symstat::Result<()> {
    let dist = Distribution::standard_normal();
    let fam = Family::UStatistic { kernel: KernelName::Gini };
    let t = fam.statistic(100, &dist)?;
    let dec = t.known_decomposition().unwrap().clone();
    let report = check_conditions(&t, &dec, &dist, ConditionParams::default(), Mode::Exact)?;
    println!("N = {}, nu = {:.3e}, delta3^2 N^2nu = {:.4}", report.n, report.nu, report.delta3_sq_n2nu);
    for item in &report.items {
        println!("condition {}: pass = {}", item.condition, item.pass);
        for (k, v) in &item.terms {
            println!("    {k:<10} {v:.6e}");
        }
        for (k, v) in &item.implied {
            println!("    => {k:<10} {v:.6e}");
        }
    }
    Ok(())
}
