//! Observation laws, symmetric kernels and symmetric statistics, plus the
//! exact and Monte Carlo expectation oracles everything else is built on.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hoeffding::HoeffdingDecomposition;
use crate::quad::{self, Tolerance};
use crate::rng::{self, StreamRng};

/// Largest product-space size that exact enumeration will visit.
pub const ENUMERATION_BUDGET: f64 = 1e8;

/// How an expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    /// Enumerate the product measure of a finite-support law.
    Exact,
    /// Average over `reps` i.i.d. draws from the streams of `seed`.
    MonteCarlo { reps: u64, seed: u64 },
}

impl Mode {
    pub fn mc(reps: u64, seed: u64) -> Self {
        Mode::MonteCarlo { reps, seed }
    }
}

/// A value together with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr }
    }

    /// Number of standard errors separating the value from zero.
    pub fn z_score(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.value == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.value / self.stderr
        }
    }
}

pub(crate) fn check_budget(support: usize, m: usize) -> Result<()> {
    let needed = (support as f64).powi(m as i32);
    if needed > ENUMERATION_BUDGET {
        return Err(Error::Budget { needed, limit: ENUMERATION_BUDGET });
    }
    Ok(())
}

/// A law with finitely many atoms, stored sorted by atom.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    points: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FiniteLaw {
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut atoms = atoms.to_vec();
        for &(x, p) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite support point {x}")));
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} at {x} is not strictly positive"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution("support points are not distinct".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let points: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(FiniteLaw { points, probs, cumulative })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Index of the atom equal to `x`, if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.points.binary_search_by(|p| p.total_cmp(&x)).ok()
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.len() - 1)
    }
}

/// The continuous and lattice laws that can be named in a JSON description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedLaw {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Rademacher,
}

impl NamedLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NamedLaw::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            NamedLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            NamedLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Distribution of a single observation.
///
/// A finite-support law admits exact expectations; a sampler-backed law is
/// reached through seeded streams (and, for the named continuous laws, through
/// one-dimensional quadrature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub enum Distribution {
    Finite(FiniteLaw),
    Sampler { law: NamedLaw, seed: u64 },
}

impl Distribution {
    pub fn finite(atoms: &[(f64, f64)]) -> Result<Self> {
        Ok(Distribution::Finite(FiniteLaw::new(atoms)?))
    }

    /// Fair ±1 coin as a finite-support law.
    pub fn rademacher() -> Self {
        Distribution::finite(&[(-1.0, 0.5), (1.0, 0.5)]).expect("valid law")
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidDistribution(format!("normal({mean}, {sd})")));
        }
        Ok(Distribution::Sampler { law: NamedLaw::Normal { mean, sd }, seed: 0 })
    }

    pub fn standard_normal() -> Self {
        Distribution::Sampler { law: NamedLaw::Normal { mean: 0.0, sd: 1.0 }, seed: 0 }
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !(low < high && low.is_finite() && high.is_finite()) {
            return Err(Error::InvalidDistribution(format!("uniform({low}, {high})")));
        }
        Ok(Distribution::Sampler { law: NamedLaw::Uniform { low, high }, seed: 0 })
    }

    /// Rademacher law behind a sampler (no exact oracle).
    pub fn rademacher_sampler() -> Self {
        Distribution::Sampler { law: NamedLaw::Rademacher, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Distribution::Sampler { law, .. } => Distribution::Sampler { law, seed },
            finite => finite,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Distribution::Sampler { seed, .. } => *seed,
            Distribution::Finite(_) => 0,
        }
    }

    pub fn finite_law(&self) -> Option<&FiniteLaw> {
        match self {
            Distribution::Finite(f) => Some(f),
            Distribution::Sampler { .. } => None,
        }
    }

    pub(crate) fn require_finite(&self, what: &str) -> Result<&FiniteLaw> {
        self.finite_law().ok_or_else(|| {
            Error::UnsupportedMode(format!("{what} needs a finite-support distribution"))
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Finite(f) => f.points[f.sample_index(rng)],
            Distribution::Sampler { law, .. } => law.sample(rng),
        }
    }

    /// Fills `out` with i.i.d. observations.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.sample(rng);
        }
    }

    /// An endless, reproducible observation stream keyed by
    /// `(self.seed(), stream_id)`.
    pub fn stream(&self, stream_id: u64) -> Observations<'_> {
        Observations { dist: self, rng: rng::stream(self.seed(), stream_id) }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Finite(f) => f.points.iter().zip(&f.probs).map(|(x, p)| x * p).sum(),
            Distribution::Sampler { law, .. } => match *law {
                NamedLaw::Normal { mean, .. } => mean,
                NamedLaw::Uniform { low, high } => 0.5 * (low + high),
                NamedLaw::Rademacher => 0.0,
            },
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Distribution::Finite(f) => {
                let mu = self.mean();
                f.points.iter().zip(&f.probs).map(|(x, p)| p * (x - mu) * (x - mu)).sum()
            }
            Distribution::Sampler { law, .. } => match *law {
                NamedLaw::Normal { sd, .. } => sd * sd,
                NamedLaw::Uniform { low, high } => (high - low) * (high - low) / 12.0,
                NamedLaw::Rademacher => 1.0,
            },
        }
    }

    /// Interval carrying all but a negligible part of the mass (the whole
    /// support for bounded laws, ±12 standard deviations for the normal).
    pub fn effective_range(&self) -> (f64, f64) {
        match self {
            Distribution::Finite(f) => (f.points[0], f.points[f.len() - 1]),
            Distribution::Sampler { law, .. } => match *law {
                NamedLaw::Normal { mean, sd } => (mean - 12.0 * sd, mean + 12.0 * sd),
                NamedLaw::Uniform { low, high } => (low, high),
                NamedLaw::Rademacher => (-1.0, 1.0),
            },
        }
    }

    /// `E f(X)` for one observation: an exact sum for atomic laws, adaptive
    /// quadrature against the density for the named continuous laws.
    /// `breaks` lists points where `f` has kinks or jumps.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> f64 {
        let tol = Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 4000 };
        match self {
            Distribution::Finite(law) => {
                law.points.iter().zip(&law.probs).map(|(&x, &p)| p * f(x)).sum()
            }
            Distribution::Sampler { law, .. } => match *law {
                NamedLaw::Rademacher => 0.5 * (f(-1.0) + f(1.0)),
                NamedLaw::Uniform { low, high } => {
                    quad::integrate_with_breaks(&f, low, high, breaks, tol).value / (high - low)
                }
                NamedLaw::Normal { mean, sd } => {
                    let mut cuts = breaks.to_vec();
                    cuts.push(mean);
                    quad::integrate_with_breaks(
                        |x| f(x) * crate::special::normal_pdf((x - mean) / sd) / sd,
                        mean - 12.0 * sd,
                        mean + 12.0 * sd,
                        &cuts,
                        tol,
                    )
                    .value
                }
            },
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.integrate_with_breaks(f, &[])
    }
}

/// Reproducible stream of observations from one distribution.
pub struct Observations<'a> {
    dist: &'a Distribution,
    rng: StreamRng,
}

impl Iterator for Observations<'_> {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(self.dist.sample(&mut self.rng))
    }
}

/// JSON form: `{"kind":"finite","support":[[x,p],...]}` or
/// `{"kind":"sampler","name":"normal|uniform|rademacher","params":{...},"seed":u64}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    Finite {
        support: Vec<(f64, f64)>,
    },
    Sampler {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        #[serde(default)]
        seed: u64,
    },
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Finite { support } => Distribution::finite(&support),
            DistributionSpec::Sampler { name, params, seed } => {
                let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
                let dist = match name.as_str() {
                    "normal" => Distribution::normal(get("mean", 0.0), get("sd", 1.0))?,
                    "uniform" => Distribution::uniform(get("low", -0.5), get("high", 0.5))?,
                    "rademacher" => Distribution::rademacher_sampler(),
                    other => {
                        return Err(Error::InvalidDistribution(format!("unknown sampler '{other}'")))
                    }
                };
                Ok(dist.with_seed(seed))
            }
        }
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Finite(f) => DistributionSpec::Finite {
                support: f.points.iter().copied().zip(f.probs.iter().copied()).collect(),
            },
            Distribution::Sampler { law, seed } => {
                let (name, params) = match law {
                    NamedLaw::Normal { mean, sd } => {
                        ("normal", vec![("mean".to_string(), mean), ("sd".to_string(), sd)])
                    }
                    NamedLaw::Uniform { low, high } => {
                        ("uniform", vec![("low".to_string(), low), ("high".to_string(), high)])
                    }
                    NamedLaw::Rademacher => ("rademacher", vec![]),
                };
                DistributionSpec::Sampler { name: name.into(), params: params.into_iter().collect(), seed }
            }
        }
    }
}

/// `E f(X_1, ..., X_m)` under the product law.
///
/// Exact mode enumerates the `support^m` grid (at most
/// [`ENUMERATION_BUDGET`] points); Monte Carlo mode averages `reps` draws and
/// reports the standard error of the mean.
pub fn expect<F>(dist: &Distribution, f: F, m: usize, mode: Mode) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match mode {
        Mode::Exact => {
            let law = dist.require_finite("exact expectation")?;
            check_budget(law.len(), m)?;
            Ok(Estimate::exact(enumerate_product(law, m, f)))
        }
        Mode::MonteCarlo { reps, seed } => {
            if reps == 0 {
                return Err(Error::InvalidArgument("Monte Carlo with zero replications".into()));
            }
            let blocks = rng::par_blocks(reps, seed, |rng, len| {
                let mut acc = rng::MomentAccumulator::new(1);
                let mut xs = vec![0.0; m];
                for _ in 0..len {
                    dist.fill(rng, &mut xs);
                    acc.push(&[f(&xs)]);
                }
                acc
            });
            let mut acc = rng::MomentAccumulator::new(1);
            for b in &blocks {
                acc.merge(b);
            }
            Ok(Estimate::new(acc.mean(0), acc.stderr(0)))
        }
    }
}

/// Exact `sum_{x in S^m} prod p(x_i) f(x)`; parallel over the first
/// coordinate, reduced in index order.
pub(crate) fn enumerate_product<F>(law: &FiniteLaw, m: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let s = law.len();
    if m == 0 {
        return f(&[]);
    }
    let partial: Vec<f64> = (0..s)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; m];
            idx[0] = first;
            let mut xs = vec![law.points[first]; m];
            for j in 1..m {
                xs[j] = law.points[0];
            }
            let mut total = 0.0;
            loop {
                let w: f64 = idx.iter().map(|&i| law.probs[i]).product();
                total += w * f(&xs);
                // odometer over coordinates 1..m
                let mut j = m;
                loop {
                    if j == 1 {
                        return total;
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < s {
                        xs[j] = law.points[idx[j]];
                        break;
                    }
                    idx[j] = 0;
                    xs[j] = law.points[0];
                }
            }
        })
        .collect();
    partial.iter().sum()
}

type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function of `arity` real arguments that is meant to be permutation
/// invariant.
#[derive(Clone)]
pub struct SymmetricKernel {
    arity: usize,
    f: KernelFn,
    symmetry_certified: bool,
}

impl fmt::Debug for SymmetricKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricKernel")
            .field("arity", &self.arity)
            .field("symmetry_certified", &self.symmetry_certified)
            .finish()
    }
}

impl SymmetricKernel {
    pub fn new<F>(arity: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        SymmetricKernel { arity, f: Arc::new(f), symmetry_certified: false }
    }

    /// A kernel that is symmetric by construction.
    pub fn certified<F>(arity: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        SymmetricKernel { arity, f: Arc::new(f), symmetry_certified: true }
    }

    pub fn zero(arity: usize) -> Self {
        SymmetricKernel::certified(arity, |_| 0.0)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_certified(&self) -> bool {
        self.symmetry_certified
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity);
        (self.f)(x)
    }

    /// Spot-checks permutation invariance on `trials` random inputs drawn
    /// from `dist`; values must agree exactly.
    pub fn check_symmetry(&self, dist: &Distribution, trials: usize, seed: u64) -> bool {
        permutation_invariant(self.arity, |x| self.eval(x), dist, trials, seed)
    }

    /// Returns the kernel marked as certified if the spot check passes.
    pub fn certify(mut self, dist: &Distribution, trials: usize, seed: u64) -> Option<Self> {
        if self.check_symmetry(dist, trials, seed) {
            self.symmetry_certified = true;
            Some(self)
        } else {
            None
        }
    }
}

fn permutation_invariant<F: Fn(&[f64]) -> f64>(
    arity: usize,
    f: F,
    dist: &Distribution,
    trials: usize,
    seed: u64,
) -> bool {
    use rand::seq::SliceRandom;
    let mut rng = rng::stream(seed, 0);
    let mut xs = vec![0.0; arity];
    for _ in 0..trials {
        dist.fill(&mut rng, &mut xs);
        let base = f(&xs);
        let mut perm = xs.clone();
        perm.shuffle(&mut rng);
        let v = f(&perm);
        if !(v == base || (v.is_nan() && base.is_nan())) {
            return false;
        }
    }
    true
}

/// A symmetric function of `n` observations.
#[derive(Clone)]
pub struct SymmetricStatistic {
    n: usize,
    f: KernelFn,
    description: String,
    known: Option<Arc<HoeffdingDecomposition>>,
}

impl fmt::Debug for SymmetricStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricStatistic")
            .field("n", &self.n)
            .field("description", &self.description)
            .field("known_decomposition", &self.known.is_some())
            .finish()
    }
}

impl SymmetricStatistic {
    pub fn new<F>(n: usize, description: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        SymmetricStatistic { n, f: Arc::new(f), description: description.into(), known: None }
    }

    /// Attaches a decomposition known in closed form for the law this
    /// statistic is meant to be applied to.
    pub fn with_known_decomposition(mut self, dec: HoeffdingDecomposition) -> Self {
        self.known = Some(Arc::new(dec));
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn known_decomposition(&self) -> Option<&HoeffdingDecomposition> {
        self.known.as_deref()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        (self.f)(x)
    }

    /// Same statistic multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        SymmetricStatistic {
            n: self.n,
            f: Arc::new(move |x| c * f(x)),
            description: format!("{} * {c}", self.description),
            known: None,
        }
    }

    pub fn check_permutation_invariance(&self, dist: &Distribution, trials: usize, seed: u64) -> bool {
        permutation_invariant(self.n, |x| self.eval(x), dist, trials, seed)
    }
}

/// `U = (sqrt N / 2) C(N,2)^{-1} sum_{i<j} h(X_i, X_j)`.
pub fn u_statistic(h: SymmetricKernel, n: usize) -> Result<SymmetricStatistic> {
    if h.arity() != 2 {
        return Err(Error::InvalidArgument(format!("kernel arity {} != 2", h.arity())));
    }
    if n < 2 {
        return Err(Error::InvalidSize(format!("U-statistic needs N >= 2, got {n}")));
    }
    let scale = (n as f64).sqrt() / 2.0 / crate::special::binomial(n as u64, 2);
    Ok(SymmetricStatistic::new(n, format!("degree-2 U-statistic, N = {n}"), move |x| {
        let mut s = 0.0;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                s += h.eval(&[x[i], x[j]]);
            }
        }
        scale * s
    }))
}

/// The sample mean `(1/N) sum X_i`.
pub fn sample_mean(n: usize) -> Result<SymmetricStatistic> {
    if n == 0 {
        return Err(Error::InvalidSize("sample mean needs N >= 1".into()));
    }
    Ok(SymmetricStatistic::new(n, format!("sample mean, N = {n}"), |x| {
        x.iter().sum::<f64>() / x.len() as f64
    }))
}

/// Nearest-integer split `y = [y] + {y}` with ties rounded to even.
pub fn nearest_split(y: f64) -> (f64, f64) {
    let r = y.round_ties_even();
    (r, y - r)
}

/// `(W_N, V_N, T_N)` and the integer `sum_j [sqrt(N) X_j]` for the
/// nearly-lattice counterexample statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Parts {
    pub w: f64,
    pub v: f64,
    pub t: f64,
    pub integer_sum: i64,
}

pub fn example1_parts(x: &[f64]) -> Example1Parts {
    let n = x.len() as f64;
    let root = n.sqrt();
    let mut int_sum = 0i64;
    let mut frac_sum = 0.0;
    for &xi in x {
        let (r, fr) = nearest_split(root * xi);
        int_sum += r as i64;
        frac_sum += fr;
    }
    let w = int_sum as f64 / n;
    let v = frac_sum / root;
    let t = (w + v / root) * (1.0 - v / root);
    Example1Parts { w, v, t, integer_sum: int_sum }
}

/// `T_N = (W_N + N^{-1/2} V_N)(1 - N^{-1/2} V_N)` with
/// `V_N = N^{-1/2} sum {N^{1/2} X_j}` and `W_N = N^{-1} sum [N^{1/2} X_j]`,
/// intended for `X ~ Uniform(-1/2, 1/2)`. The closed-form Hoeffding
/// decomposition for that law is attached.
pub fn example1_statistic(n: usize) -> Result<SymmetricStatistic> {
    if n == 0 {
        return Err(Error::InvalidSize("example statistic needs N >= 1".into()));
    }
    let dec = crate::hoeffding::known::example1(n);
    Ok(SymmetricStatistic::new(n, format!("nearly-lattice counterexample, N = {n}"), |x| {
        example1_parts(x).t
    })
    .with_known_decomposition(dec))
}
