//! Monte Carlo experiments: Kolmogorov distances between a standardized
//! statistic and its normal, one-term and two-term Edgeworth approximations
//! across a list of sample sizes.
//!
//! Per-size streams are derived from the experiment seed and `N`, and all
//! randomness flows through [`rng::par_blocks`], so the CSV output is
//! byte-identical for any worker count.

mod family;
mod probe;
mod rate;

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use family::{Evaluator, Family, KernelName};
pub use probe::{counterexample_probe, counterexample_probe_multi, ProbeResult, MAX_DELTAS};
pub use rate::{rate_fit, RateOutcome, RatePoint, MIN_POINTS};

use crate::cumulants::{cumulants, exact_variance, CumulantSet};
use crate::edgeworth::{EmpiricalCdf, Expansion, Order};
use crate::model::{Distribution, Mode};
use crate::rng;
use crate::{Error, Result};

/// Smallest accepted replication count.
pub const MIN_REPS: u64 = 1000;

/// Confidence level behind the DKW noise floor.
pub const FLOOR_ALPHA: f64 = 0.05;

/// Oracle replications per experiment replication.
pub const ORACLE_FACTOR: u64 = 10;

const SAMPLE_TAG: u64 = 0x73_616d;
const ORACLE_TAG: u64 = 0x6f_7263;
const CUMULANT_TAG: u64 = 0x63_756d;

pub const CSV_HEADER: &str =
    "N,reps,delta_normal,delta_one,delta_two,mc_floor,n_times_delta_two,kappa3,kappa4,sigma2,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// Centre and scale by `E T` and `sigma_T`.
    #[default]
    Theoretical,
    /// Centre and scale by the sample mean and sample standard deviation.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CumulantMode {
    #[default]
    Exact,
    MonteCarlo { reps: u64 },
}

/// An experiment as read from JSON or TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub distribution: Distribution,
    pub n_list: Vec<usize>,
    pub reps: u64,
    pub seed: u64,
    #[serde(default)]
    pub cumulant_mode: CumulantMode,
    #[serde(default)]
    pub standardization: Standardization,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::InvalidArgument(format!("reps = {} < {MIN_REPS}", self.reps)));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidSize("empty N list".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSize("N list must be strictly increasing".into()));
        }
        if let CumulantMode::MonteCarlo { reps: 0 } = self.cumulant_mode {
            return Err(Error::InvalidArgument("zero cumulant replications".into()));
        }
        for &n in &self.n_list {
            self.family.evaluator(n)?;
        }
        if self.family == Family::Example1 {
            family::check_example1_law(&self.distribution)?;
        }
        Ok(())
    }
}

/// `sqrt(ln(2/alpha) / (2 reps))`: the DKW half-width at level `alpha`.
pub fn mc_floor(reps: u64) -> f64 {
    ((2.0 / FLOOR_ALPHA).ln() / (2.0 * reps as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaSource {
    Exact,
    MonteCarloOracle { reps: u64, seed: u64 },
}

/// Results for one `N`.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    pub delta_normal: f64,
    pub delta_one: f64,
    pub delta_two: f64,
    pub mc_floor: f64,
    pub n_times_delta_two: f64,
    pub mean_t: f64,
    pub sigma_t2: f64,
    pub sigma_source: SigmaSource,
    pub cumulants: CumulantSet,
}

impl Record {
    /// Whether a distance is within twice the noise floor, where it cannot be
    /// told apart from zero.
    pub fn at_floor(&self, delta: f64) -> bool {
        delta <= 2.0 * self.mc_floor
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Rates {
    pub normal: RateOutcome,
    pub one: RateOutcome,
    pub two: RateOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub family: String,
    pub records: Vec<Record>,
    pub rates: Rates,
    pub version: String,
    pub workers: usize,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    /// Per-`N` table; contains no timing or thread information.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.n,
                r.reps,
                r.delta_normal,
                r.delta_one,
                r.delta_two,
                r.mc_floor,
                r.n_times_delta_two,
                r.cumulants.kappa3.value,
                r.cumulants.kappa4.value,
                r.cumulants.sigma2.value,
                r.seed
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn record(&self, n: usize) -> Option<&Record> {
        self.records.iter().find(|r| r.n == n)
    }
}

/// Runs the experiment on the current rayon pool.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(spec.n_list.len());
    for &n in &spec.n_list {
        records.push(run_one(spec, n)?);
    }
    let points = |f: fn(&Record) -> f64| -> Vec<RatePoint> {
        records.iter().map(|r| RatePoint { n: r.n, delta: f(r), floor: r.mc_floor }).collect()
    };
    let rates = Rates {
        normal: rate_fit(&points(|r| r.delta_normal)),
        one: rate_fit(&points(|r| r.delta_one)),
        two: rate_fit(&points(|r| r.delta_two)),
    };
    Ok(ExperimentResult {
        spec: spec.clone(),
        family: spec.family.label(),
        records,
        rates,
        version: env!("CARGO_PKG_VERSION").to_string(),
        workers: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn run_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run(spec))
}

/// `reps` draws of the statistic at size `n`, in block order.
pub fn sample_statistic(family: &Family, dist: &Distribution, n: usize, reps: u64, seed: u64) -> Result<Vec<f64>> {
    let eval = family.evaluator(n)?;
    let blocks = rng::par_blocks(reps, seed, |r, len| {
        let mut x = vec![0.0; n];
        (0..len)
            .map(|_| {
                dist.fill(r, &mut x);
                eval.eval(&mut x)
            })
            .collect::<Vec<f64>>()
    });
    Ok(blocks.concat())
}

fn mean_and_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn run_one(spec: &ExperimentSpec, n: usize) -> Result<Record> {
    let dist = &spec.distribution;
    let seed = rng::mix(spec.seed, n as u64);
    let dec = spec.family.decomposition(n, dist)?.ok_or_else(|| {
        Error::UnsupportedMode(format!("no decomposition of {} on this law", spec.family.label()))
    })?;
    let cum_mode = match spec.cumulant_mode {
        CumulantMode::Exact => Mode::Exact,
        CumulantMode::MonteCarlo { reps } => Mode::mc(reps, rng::mix(seed, CUMULANT_TAG)),
    };
    let cum = cumulants(&dec, dist, cum_mode)?;

    let (mean_t, sigma_t2, sigma_source) = match exact_variance(&dec, dist) {
        Ok(v) => (dec.mean(), v, SigmaSource::Exact),
        Err(Error::UnsupportedMode(_)) | Err(Error::Budget { .. }) => {
            let oracle_reps = ORACLE_FACTOR * spec.reps;
            let oracle_seed = rng::mix(seed, ORACLE_TAG);
            let draws = sample_statistic(&spec.family, dist, n, oracle_reps, oracle_seed)?;
            let (m, v) = mean_and_variance(&draws);
            (m, v, SigmaSource::MonteCarloOracle { reps: oracle_reps, seed: oracle_seed })
        }
        Err(e) => return Err(e),
    };

    let mut draws = sample_statistic(&spec.family, dist, n, spec.reps, rng::mix(seed, SAMPLE_TAG))?;
    let (centre, scale) = match spec.standardization {
        Standardization::Theoretical => (mean_t, sigma_t2.sqrt()),
        Standardization::Empirical => {
            let (m, v) = mean_and_variance(&draws);
            (m, v.sqrt())
        }
    };
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("statistic has zero variance at N = {n}")));
    }
    for v in &mut draws {
        *v = (*v - centre) / scale;
    }
    let ecdf = EmpiricalCdf::new(draws)?;
    let e = Expansion::new(n, cum.kappa3.value, cum.kappa4.value, Order::Two);
    let delta_normal = ecdf.distance_to(&e.with_order(Order::Zero));
    let delta_one = ecdf.distance_to(&e.with_order(Order::One));
    let delta_two = ecdf.distance_to(&e);
    Ok(Record {
        n,
        reps: spec.reps,
        seed,
        delta_normal,
        delta_one,
        delta_two,
        mc_floor: mc_floor(spec.reps),
        n_times_delta_two: n as f64 * delta_two,
        mean_t,
        sigma_t2,
        sigma_source,
        cumulants: cum,
    })
}
