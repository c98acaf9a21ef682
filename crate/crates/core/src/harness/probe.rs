//! Probability probes for the nearly-lattice counterexample.
//!
//! On `{W_N = 1, |V_N| < delta}` the statistic equals `1 - V_N^2 / N`, so the
//! interval `[1 - delta^2/N, 1]` carries at least that much mass. The probe
//! estimates the interval mass directly together with the two factors.

use serde::Serialize;

use crate::model::{example1_parts, Distribution, Estimate};
use crate::rng;
use crate::{Error, Result};

/// Seed tag separating probe streams from experiment streams.
const PROBE_TAG: u64 = 0x7072_6f62_65;

/// Largest number of `delta` values per coupled run.
pub const MAX_DELTAS: usize = 21;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub n: usize,
    pub delta: f64,
    pub reps: u64,
    pub seed: u64,
    /// `P(1 - delta^2/N <= T_N <= 1)`
    pub p_interval: Estimate,
    /// `P(W_N = 1)`, decided on the integer sum
    pub p_w_one: Estimate,
    /// `P(|V_N| < delta)`
    pub p_v_small: Estimate,
    /// `P(W_N = 1, |V_N| < delta)`
    pub p_joint: Estimate,
    /// `P(W_N = 1) P(|V_N| < delta)`
    pub product: f64,
    /// `p_interval N / delta`
    pub normalized: Estimate,
    /// `P(W_N = 1) N`
    pub w_one_times_n: Estimate,
    pub warnings: Vec<String>,
}

impl ProbeResult {
    /// The joint event lies inside the interval event, so on the same draws
    /// its frequency can never exceed the interval frequency.
    pub fn containment_holds(&self) -> bool {
        self.p_joint.value <= self.p_interval.value
    }
}

fn is_odd_square(n: usize) -> bool {
    let r = (n as f64).sqrt().round() as usize;
    r * r == n && r % 2 == 1
}

fn validate(n: usize, deltas: &[f64], reps: u64, strict: bool) -> Result<Vec<String>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("zero replications".into()));
    }
    if n == 0 {
        return Err(Error::InvalidSize("N >= 1 required".into()));
    }
    if deltas.is_empty() || deltas.len() > MAX_DELTAS {
        return Err(Error::InvalidArgument(format!("need 1..={MAX_DELTAS} delta values")));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::InvalidArgument(format!("delta = {d} outside (0, 1)")));
    }
    let mut warnings = Vec::new();
    if !is_odd_square(n) {
        let msg = format!("N = {n} is not an odd perfect square");
        if strict {
            return Err(Error::InvalidSize(msg));
        }
        warnings.push(msg);
    }
    Ok(warnings)
}

/// Single-`delta` probe. With `strict`, a size that is not an odd square is
/// an error; otherwise it is recorded in `warnings` and the run proceeds.
pub fn counterexample_probe(n: usize, delta: f64, reps: u64, seed: u64, strict: bool) -> Result<ProbeResult> {
    Ok(counterexample_probe_multi(n, &[delta], reps, seed, strict)?.remove(0))
}

/// Probe at several `delta` values on one shared set of draws, so that the
/// estimates are coupled and monotone in `delta`.
pub fn counterexample_probe_multi(
    n: usize,
    deltas: &[f64],
    reps: u64,
    seed: u64,
    strict: bool,
) -> Result<Vec<ProbeResult>> {
    let warnings = validate(n, deltas, reps, strict)?;
    let dist = Distribution::uniform(-0.5, 0.5)?;
    let k = deltas.len();
    let nf = n as f64;
    // coordinates: [W = 1], then per delta: interval, |V| < delta, joint
    let dim = 1 + 3 * k;
    // integer counts keep nested events exactly ordered
    let blocks = rng::par_blocks(reps, rng::mix(seed, PROBE_TAG ^ n as u64), |r, len| {
        let mut counts = vec![0u64; dim];
        let mut x = vec![0.0; n];
        for _ in 0..len {
            dist.fill(r, &mut x);
            let p = example1_parts(&x);
            let w_one = p.integer_sum == n as i64;
            counts[0] += w_one as u64;
            for (j, &d) in deltas.iter().enumerate() {
                let v_small = p.v.abs() < d;
                counts[1 + 3 * j] += (p.t >= 1.0 - d * d / nf && p.t <= 1.0) as u64;
                counts[2 + 3 * j] += v_small as u64;
                counts[3 + 3 * j] += (w_one && v_small) as u64;
            }
        }
        counts
    });
    let mut counts = vec![0u64; dim];
    for b in &blocks {
        for (c, v) in counts.iter_mut().zip(b) {
            *c += v;
        }
    }
    let est = |i: usize| {
        let p = counts[i] as f64 / reps as f64;
        Estimate::new(p, (p * (1.0 - p) / reps as f64).sqrt())
    };
    let w = est(0);
    Ok(deltas
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let p_interval = est(1 + 3 * j);
            let p_v_small = est(2 + 3 * j);
            ProbeResult {
                n,
                delta: d,
                reps,
                seed,
                p_interval,
                p_w_one: w,
                p_v_small,
                p_joint: est(3 + 3 * j),
                product: w.value * p_v_small.value,
                normalized: Estimate::new(p_interval.value * nf / d, p_interval.stderr * nf / d),
                w_one_times_n: Estimate::new(w.value * nf, w.stderr * nf),
                warnings: warnings.clone(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_arguments() {
        assert!(counterexample_probe(25, 0.5, 0, 1, true).is_err());
        assert!(counterexample_probe(25, 1.5, 10, 1, true).is_err());
        assert!(counterexample_probe(24, 0.5, 10, 1, true).is_err());
        assert!(counterexample_probe(16, 0.5, 10, 1, true).is_err());
        let r = counterexample_probe(24, 0.5, 10, 1, false).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn w_one_matches_exact_lattice_probability() {
        // [3 X] is uniform on {-1, 0, 1}, so W = 1 needs all nine to be 1
        let n = 9usize;
        let r = counterexample_probe(n, 0.5, 400_000, 11, true).unwrap();
        let exact = 3f64.powi(-9);
        assert!((r.p_w_one.value - exact).abs() < 5.0 * r.p_w_one.stderr.max(1e-6), "{:?}", r.p_w_one);
        assert!(r.containment_holds());
    }

    #[test]
    fn coupled_probes_are_monotone_and_deterministic() {
        let ds = [0.1, 0.25, 0.5, 0.75];
        let a = counterexample_probe_multi(9, &ds, 50_000, 4, true).unwrap();
        let b = counterexample_probe_multi(9, &ds, 50_000, 4, true).unwrap();
        for w in a.windows(2) {
            assert!(w[0].p_interval.value <= w[1].p_interval.value);
            assert!(w[0].p_v_small.value <= w[1].p_v_small.value);
        }
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.p_interval.value.to_bits(), y.p_interval.value.to_bits());
            assert!(x.containment_holds());
        }
    }
}
