//! Statistic families addressable from an experiment description.
//!
//! Each family supplies two things per `N`: a fast evaluator used inside the
//! Monte Carlo loop, and (where one exists) the closed-form or tabulated
//! Hoeffding decomposition used for cumulants and standardization.

use serde::{Deserialize, Serialize};

use crate::hoeffding::{known, HoeffdingDecomposition};
use crate::model::{
    example1_parts, example1_statistic, u_statistic, Distribution, NamedLaw, SymmetricKernel,
    SymmetricStatistic,
};
use crate::special::{binomial, normal_cdf, normal_pdf};
use crate::{Error, Result};

/// Degree-2 kernels with known projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    /// `|x - y|`
    Gini,
    /// `x y`
    Product,
    /// `x + y`
    Sum,
    /// `x y + x + y`
    ProductPlusSum,
}

impl KernelName {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            KernelName::Gini => (x - y).abs(),
            KernelName::Product => x * y,
            KernelName::Sum => x + y,
            KernelName::ProductPlusSum => x * y + x + y,
        }
    }

    /// `sum_{i<j} h(x_i, x_j)` in `O(N log N)` or better. Reorders `x`.
    pub fn pair_sum(self, x: &mut [f64]) -> f64 {
        let n = x.len() as f64;
        match self {
            KernelName::Gini => {
                x.sort_unstable_by(f64::total_cmp);
                x.iter().enumerate().map(|(i, &v)| (2.0 * i as f64 - n + 1.0) * v).sum()
            }
            KernelName::Product | KernelName::ProductPlusSum => {
                let (s, s2) = x.iter().fold((0.0, 0.0), |(a, b), &v| (a + v, b + v * v));
                let prod = 0.5 * (s * s - s2);
                if self == KernelName::Product {
                    prod
                } else {
                    prod + (n - 1.0) * s
                }
            }
            KernelName::Sum => (n - 1.0) * x.iter().sum::<f64>(),
        }
    }

    /// `(h1, E h)` for a named continuous law, when known in closed form.
    fn projection(self, law: NamedLaw) -> Option<(Box<dyn Fn(f64) -> f64 + Send + Sync>, f64)> {
        let (mu, _) = law_moments(law);
        match self {
            KernelName::Product => Some((Box::new(move |x| x * mu), mu * mu)),
            KernelName::Sum => Some((Box::new(move |x| x + mu), 2.0 * mu)),
            KernelName::ProductPlusSum => {
                Some((Box::new(move |x| x * mu + x + mu), mu * mu + 2.0 * mu))
            }
            KernelName::Gini => match law {
                NamedLaw::Normal { mean, sd } => Some((
                    Box::new(move |x| {
                        let z = (x - mean) / sd;
                        sd * (2.0 * normal_pdf(z) + z * (2.0 * normal_cdf(z) - 1.0))
                    }),
                    2.0 * sd / std::f64::consts::PI.sqrt(),
                )),
                NamedLaw::Uniform { low, high } => Some((
                    Box::new(move |x| {
                        if x <= low || x >= high {
                            (x - 0.5 * (low + high)).abs()
                        } else {
                            ((x - low).powi(2) + (high - x).powi(2)) / (2.0 * (high - low))
                        }
                    }),
                    (high - low) / 3.0,
                )),
                NamedLaw::Rademacher => None,
            },
        }
    }
}

fn law_moments(law: NamedLaw) -> (f64, f64) {
    match law {
        NamedLaw::Normal { mean, sd } => (mean, sd * sd),
        NamedLaw::Uniform { low, high } => (0.5 * (low + high), (high - low).powi(2) / 12.0),
        NamedLaw::Rademacher => (0.0, 1.0),
    }
}

/// The statistic under study, as named in an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    /// `N^{-1/2} sum X_i`. With standard normal observations this is exactly
    /// `N(0, 1)`, which makes it the harness sanity check.
    ScaledSum,
    /// `(sqrt N / 2) C(N,2)^{-1} sum_{i<j} h(X_i, X_j)`.
    UStatistic { kernel: KernelName },
    /// The nearly-lattice counterexample on `Uniform(-1/2, 1/2)`.
    Example1,
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::ScaledSum => "scaled_sum".into(),
            Family::UStatistic { kernel } => {
                format!("u_statistic/{}", serde_json::to_value(kernel).unwrap().as_str().unwrap())
            }
            Family::Example1 => "example1".into(),
        }
    }

    /// Fast evaluator for Monte Carlo use. Scratch contents are clobbered.
    pub fn evaluator(&self, n: usize) -> Result<Evaluator> {
        let nf = n as f64;
        match *self {
            Family::ScaledSum => {
                if n == 0 {
                    return Err(Error::InvalidSize("N >= 1 required".into()));
                }
                Ok(Evaluator { kind: EvalKind::ScaledSum(nf.sqrt().recip()) })
            }
            Family::UStatistic { kernel } => {
                if n < 2 {
                    return Err(Error::InvalidSize(format!("U-statistic needs N >= 2, got {n}")));
                }
                let scale = nf.sqrt() / 2.0 / binomial(n as u64, 2);
                Ok(Evaluator { kind: EvalKind::Pairs(kernel, scale) })
            }
            Family::Example1 => {
                if n == 0 {
                    return Err(Error::InvalidSize("N >= 1 required".into()));
                }
                Ok(Evaluator { kind: EvalKind::Example1 })
            }
        }
    }

    /// The reference (unoptimized) statistic, with its decomposition attached
    /// when one is available for `dist`.
    pub fn statistic(&self, n: usize, dist: &Distribution) -> Result<SymmetricStatistic> {
        let base = match *self {
            Family::ScaledSum => {
                if n == 0 {
                    return Err(Error::InvalidSize("N >= 1 required".into()));
                }
                let c = (n as f64).sqrt().recip();
                SymmetricStatistic::new(n, format!("scaled sum, N = {n}"), move |x| {
                    c * x.iter().sum::<f64>()
                })
            }
            Family::UStatistic { kernel } => {
                u_statistic(SymmetricKernel::certified(2, move |x| kernel.eval(x[0], x[1])), n)?
            }
            Family::Example1 => return example1_statistic(n),
        };
        Ok(match self.decomposition(n, dist)? {
            Some(dec) => base.with_known_decomposition(dec),
            None => base,
        })
    }

    /// Closed-form or tabulated decomposition, if this family has one on `dist`.
    pub fn decomposition(&self, n: usize, dist: &Distribution) -> Result<Option<HoeffdingDecomposition>> {
        match *self {
            Family::ScaledSum => {
                let (mu, var) = (dist.mean(), dist.variance());
                let mut sk = vec![0.0; n];
                sk[0] = var / n as f64;
                let dec = HoeffdingDecomposition::from_kernels(
                    n,
                    (n as f64).sqrt() * mu,
                    SymmetricKernel::certified(1, move |x| x[0] - mu),
                    SymmetricKernel::zero(2),
                    SymmetricKernel::zero(3),
                    Some(1),
                )
                .with_component_variances(sk);
                Ok(Some(dec))
            }
            Family::UStatistic { kernel } => {
                if dist.finite_law().is_some() {
                    return known::u_statistic_exact(move |x, y| kernel.eval(x, y), dist, n).map(Some);
                }
                let Distribution::Sampler { law, .. } = dist else { unreachable!() };
                if *law == NamedLaw::Rademacher {
                    let exact = Distribution::rademacher();
                    return known::u_statistic_exact(move |x, y| kernel.eval(x, y), &exact, n).map(Some);
                }
                Ok(kernel
                    .projection(*law)
                    .map(|(h1, eh)| known::u_statistic(move |x, y| kernel.eval(x, y), h1, eh, n)))
            }
            Family::Example1 => {
                check_example1_law(dist)?;
                Ok(Some(known::example1(n)))
            }
        }
    }
}

pub(crate) fn check_example1_law(dist: &Distribution) -> Result<()> {
    match dist {
        Distribution::Sampler { law: NamedLaw::Uniform { low, high }, .. }
            if *low == -0.5 && *high == 0.5 =>
        {
            Ok(())
        }
        _ => Err(Error::InvalidDistribution(
            "the counterexample statistic is defined for Uniform(-1/2, 1/2)".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy)]
enum EvalKind {
    ScaledSum(f64),
    Pairs(KernelName, f64),
    Example1,
}

/// Allocation-free evaluator for one family at one `N`.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator {
    kind: EvalKind,
}

impl Evaluator {
    pub fn eval(&self, x: &mut [f64]) -> f64 {
        match self.kind {
            EvalKind::ScaledSum(c) => c * x.iter().sum::<f64>(),
            EvalKind::Pairs(k, scale) => scale * k.pair_sum(x),
            EvalKind::Example1 => example1_parts(x).t,
        }
    }
}
