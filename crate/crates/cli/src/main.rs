//! `symstat`: run the library's computations from JSON or TOML spec files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use symstat::charfn::{cramer_rho, CharFunction, SmoothingKernel, RHO_GRID};
use symstat::concentration::{kleitman_bound, max_ball_count, symmetric_partition, SignedSumInstance};
use symstat::cumulants::{check_conditions, cumulants, reducibility, ConditionParams};
use symstat::edgeworth::{grid_csv, Expansion, Order};
use symstat::harness::{self, counterexample_probe_multi, ExperimentSpec, Family};
use symstat::hoeffding::{decompose, delta_moments, verify_appendix1};
use symstat::{Distribution, Mode, SymmetricStatistic};

const DEFAULT_SEED: u64 = 20_240_601;
const DEFAULT_REPS: u64 = 100_000;

#[derive(Parser)]
#[command(name = "symstat", version, about = "Edgeworth expansions for symmetric statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Spec file (.json or .toml)
    spec: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Monte Carlo replications; switches exact computations to Monte Carlo
    /// where both exist
    #[arg(long)]
    reps: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Hoeffding decomposition and its identity checks
    Decompose(Common),
    /// sigma^2, kappa_3, kappa_4 and the reducibility split
    Cumulants(Common),
    /// Moment, remainder, smoothness and separation conditions
    Conditions(Common),
    /// Edgeworth expansion on a grid (CSV)
    Expand(Common),
    /// Monte Carlo Kolmogorov distances (CSV plus JSON metadata)
    Simulate(Common),
    /// Interval probabilities for the nearly-lattice statistic
    Counterexample(Common),
    /// Ball counts of signed sums against the central binomial bound
    Kleitman(Common),
    /// Cramer-type sup of a characteristic function
    Charfn(Common),
}

/// A family at one size on one law.
#[derive(Deserialize)]
struct StatisticInput {
    family: Family,
    distribution: Distribution,
    n: usize,
}

impl StatisticInput {
    fn build(&self) -> Result<(SymmetricStatistic, symstat::HoeffdingDecomposition)> {
        let t = self.family.statistic(self.n, &self.distribution)?;
        let dec = match self.distribution.finite_law() {
            Some(_) => decompose(&t, &self.distribution)?,
            None => t
                .known_decomposition()
                .cloned()
                .context("no closed-form decomposition for this family on this law")?,
        };
        Ok((t, dec))
    }
}

#[derive(Deserialize)]
struct ConditionsInput {
    #[serde(flatten)]
    statistic: StatisticInput,
    #[serde(default)]
    params: ConditionParams,
}

#[derive(Deserialize)]
struct Grid {
    lo: f64,
    hi: f64,
    points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { lo: -4.0, hi: 4.0, points: 161 }
    }
}

impl Grid {
    fn values(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.lo < self.hi) {
            bail!("grid needs lo < hi and at least two points");
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.lo + step * i as f64).collect())
    }
}

#[derive(Deserialize)]
struct ExpandInput {
    n: Option<usize>,
    kappa3: Option<f64>,
    kappa4: Option<f64>,
    statistic: Option<StatisticInput>,
    #[serde(default)]
    grid: Grid,
}

#[derive(Deserialize)]
struct CounterexampleInput {
    n_list: Vec<usize>,
    deltas: Vec<f64>,
    reps: u64,
    seed: u64,
    #[serde(default = "yes")]
    strict: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
struct KleitmanInput {
    vectors: Vec<Vec<f64>>,
    r: f64,
    #[serde(default)]
    partition: bool,
}

#[derive(Deserialize)]
struct CharfnInput {
    /// Linear part of this statistic; otherwise the law itself.
    statistic: Option<StatisticInput>,
    distribution: Option<Distribution>,
    a: f64,
    b: f64,
    #[serde(default)]
    grid: Option<usize>,
    /// Also tabulate `|f(t)|` and the smoothing-kernel transform here.
    table: Option<Grid>,
}

fn read_spec<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, &s)
}

/// Exact unless `--reps` asks for Monte Carlo.
fn mode(c: &Common) -> Mode {
    match c.reps {
        Some(reps) => Mode::mc(reps, c.seed.unwrap_or(DEFAULT_SEED)),
        None => Mode::Exact,
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Decompose(c)
        | Command::Cumulants(c)
        | Command::Conditions(c)
        | Command::Expand(c)
        | Command::Simulate(c)
        | Command::Counterexample(c)
        | Command::Kleitman(c)
        | Command::Charfn(c) => c.clone(),
    };
    if let Some(w) = common.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let c = &common;
    match cli.command {
        Command::Decompose(_) => {
            let input: StatisticInput = read_spec(&c.spec)?;
            let (t, dec) = input.build()?;
            let finite = input.distribution.finite_law().is_some();
            let identities = if finite { Some(verify_appendix1(&t, &input.distribution)?) } else { None };
            let moments_mode = match (finite, mode(c)) {
                (false, Mode::Exact) => Mode::mc(DEFAULT_REPS, c.seed.unwrap_or(DEFAULT_SEED)),
                (_, m) => m,
            };
            let deltas = delta_moments(&t, &input.distribution, moments_mode)?;
            emit_json(&c.out, &json!({
                "decomposition": dec.report(),
                "identities": identities,
                "difference_moments": deltas,
            }))
        }
        Command::Cumulants(_) => {
            let input: StatisticInput = read_spec(&c.spec)?;
            let (_, dec) = input.build()?;
            let m = mode(c);
            emit_json(&c.out, &json!({
                "cumulants": cumulants(&dec, &input.distribution, m)?,
                "reducibility": reducibility(&dec, &input.distribution, m, None)?,
            }))
        }
        Command::Conditions(_) => {
            let input: ConditionsInput = read_spec(&c.spec)?;
            let (t, dec) = input.statistic.build()?;
            let report = check_conditions(&t, &dec, &input.statistic.distribution, input.params, mode(c))?;
            emit_json(&c.out, &report)
        }
        Command::Expand(_) => {
            let input: ExpandInput = read_spec(&c.spec)?;
            let e = match (&input.statistic, input.n, input.kappa3, input.kappa4) {
                (Some(s), _, _, _) => {
                    let (_, dec) = s.build()?;
                    let k = cumulants(&dec, &s.distribution, mode(c))?;
                    Expansion::new(s.n, k.kappa3.value, k.kappa4.value, Order::Two)
                }
                (None, Some(n), Some(k3), Some(k4)) => Expansion::new(n, k3, k4, Order::Two),
                _ => bail!("give either `statistic` or all of `n`, `kappa3`, `kappa4`"),
            };
            emit(&c.out, &grid_csv(&e, &input.grid.values()?))
        }
        Command::Simulate(_) => {
            let mut spec: ExperimentSpec = read_spec(&c.spec)?;
            if let Some(s) = c.seed {
                spec.seed = s;
            }
            if let Some(r) = c.reps {
                spec.reps = r;
            }
            let res = harness::run(&spec)?;
            emit(&c.out, &res.to_csv())?;
            match &c.out {
                Some(p) => std::fs::write(p.with_extension("json"), res.to_json())?,
                None => eprintln!("{}", res.to_json()),
            }
            Ok(())
        }
        Command::Counterexample(_) => {
            let mut input: CounterexampleInput = read_spec(&c.spec)?;
            if let Some(s) = c.seed {
                input.seed = s;
            }
            if let Some(r) = c.reps {
                input.reps = r;
            }
            let mut all = Vec::new();
            for &n in &input.n_list {
                all.extend(counterexample_probe_multi(n, &input.deltas, input.reps, input.seed, input.strict)?);
            }
            for w in all.iter().flat_map(|r| &r.warnings) {
                eprintln!("warning: {w}");
            }
            emit_json(&c.out, &all)
        }
        Command::Kleitman(_) => {
            let input: KleitmanInput = read_spec(&c.spec)?;
            let inst = SignedSumInstance::new(input.vectors, input.r)?;
            let ball = max_ball_count(&inst)?;
            let bound = kleitman_bound(inst.n() as u32);
            let partition = if input.partition { Some(symmetric_partition(&inst)?) } else { None };
            emit_json(&c.out, &json!({
                "n": inst.n(),
                "dim": inst.dim(),
                "bound": bound.to_string(),
                "ball": ball,
                "within_bound": (ball.count as u128) <= bound,
                "partition": partition,
            }))
        }
        Command::Charfn(_) => {
            let input: CharfnInput = read_spec(&c.spec)?;
            let cf = match (&input.statistic, &input.distribution) {
                (Some(s), _) => {
                    let (_, dec) = s.build()?;
                    CharFunction::linear_part(&dec, &s.distribution, mode(c))?
                }
                (None, Some(d)) => match mode(c) {
                    Mode::Exact => CharFunction::of_map(d, |x| x),
                    Mode::MonteCarlo { reps, seed } => CharFunction::monte_carlo(d, |x| x, reps, seed),
                },
                (None, None) => bail!("give `statistic` or `distribution`"),
            };
            let rho = cramer_rho(&cf, input.a, input.b, input.grid.unwrap_or(RHO_GRID))?;
            let table = match &input.table {
                Some(g) => {
                    let kernel = SmoothingKernel::calibrated();
                    let rows: Vec<[f64; 3]> =
                        g.values()?.into_iter().map(|t| [t, cf.eval(t).norm(), kernel.cf(t)]).collect();
                    Some(rows)
                }
                None => None,
            };
            emit_json(&c.out, &json!({
                "provenance": format!("{:?}", cf.provenance()),
                "rho": rho,
                "table_columns": ["t", "abs_cf", "kernel_transform"],
                "table": table,
            }))
        }
    }
}
