//! Cramer-type sups `rho(a, b) = 1 - sup_{a <= |t| <= b} |f(t)|`, the
//! band-limited smoothing kernel, and the quadratic-part bound on the
//! Gini statistic.

use symstat::charfn::{cramer_rho, verify_alpha_bound, CharFunction, SmoothingKernel, RHO_GRID};
use symstat::harness::{Family, KernelName};
use symstat::Distribution;

fn main() -> symstat::Result<()> {
    let normal = cramer_rho(&CharFunction::standard_normal(), 1.0, 10.0, RHO_GRID)?;
    println!("normal rho(1, 10) = {:.12} (1 - e^-1/2 = {:.12})", normal.rho, 1.0 - (-0.5f64).exp());

    // |cos t| returns to 1 at t = pi: no Cramer condition on a lattice
    let rad = CharFunction::of_map(&Distribution::rademacher(), |x| x);
    let r = cramer_rho(&rad, 1.0, 4.0, RHO_GRID)?;
    println!("Rademacher rho(1, 4) = {:.3e} at t = {:.6}", r.rho, r.t_max);

    let k = SmoothingKernel::calibrated();
    println!("kernel a = {:.6}, mass on [-1, 1] = {:.6}", k.a, k.central_mass(1.0));
    for t in [0.0, 0.5 * k.a, k.a, 1.5 * k.a, 2.0 * k.a, 2.5 * k.a] {
        println!("  g^({t:.4}) = {:.6e}  by quadrature {:.6e}", k.cf(t), k.cf_by_quadrature(t, 4000.0));
    }

    let normal_law = Distribution::standard_normal();
    let gini = Family::UStatistic { kernel: KernelName::Gini }.decomposition(10_000, &normal_law)?.unwrap();
    let rep = verify_alpha_bound(&gini, &normal_law, 64)?;
    println!("alpha bound at N = 10^4: {} points, pass = {}", rep.points.len(), rep.pass);
    Ok(())
}
