//! Mass that the nearly-lattice statistic puts on `[1 - delta^2/N, 1]`.
//!
//! A valid two-term expansion would leave `O(delta / N^{3/2})` there; the
//! estimate stays of order `delta / N`.
//!
//! cargo run --release --example counterexample -- [reps]

use symstat::harness::counterexample_probe_multi;

fn main() -> symstat::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000_000);
    let deltas = [0.25, 0.5, 0.75];
    println!("N,delta,p_interval,stderr,p_interval*N/delta,P(W=1)*N,P(|V|<delta)");
    for n in [25usize, 49, 81, 121] {
        for r in counterexample_probe_multi(n, &deltas, reps, 99, true)? {
            println!(
                "{n},{},{:.4e},{:.1e},{:.5},{:.5},{:.4}",
                r.delta, r.p_interval.value, r.p_interval.stderr, r.normalized.value, r.w_one_times_n.value, r.p_v_small.value
            );
        }
    }
    Ok(())
}
