//! Expansion inputs computed from the kernels `g`, `psi`, `chi`:
//! `sigma^2`, `beta_3`, `kappa_3`, `kappa_4`, the absolute moments
//! `gamma_t = E|psi|^t`, `zeta_t = E|chi|^t`, and the distance of `psi` from
//! the reducible kernels `b(x)g(y) + b(y)g(x)`.
//!
//! Three evaluation routes:
//!
//! * finite laws, [`Mode::Exact`]: enumeration over tabulated kernels;
//! * named continuous laws, [`Mode::Exact`]: nested adaptive quadrature
//!   (only for decompositions whose cubic part is known to vanish);
//! * any law, [`Mode::MonteCarlo`]: plain averages over independent triples,
//!   with delta-method errors for the ratios.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hoeffding::{delta_moments, HoeffdingDecomposition, TabulatedKernel};
use crate::model::{check_budget, Distribution, Estimate, FiniteLaw, Mode, SymmetricStatistic};
use crate::rng::{self, MomentAccumulator};

/// Orders `t` at which `gamma_t` and `zeta_t` are reported by [`cumulants`].
pub const DEFAULT_ORDERS: [f64; 4] = [2.0, 3.0, 4.0, 5.0];

/// Relative threshold below which `sigma^2` counts as zero in exact mode.
const DEGENERATE_TOL: f64 = 1e-12;

/// Default reducibility tolerance for exact evaluation.
pub const REDUCIBILITY_TOL: f64 = 1e-8;

/// Number of grid points carrying `b` on continuous laws.
pub const B_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Serialize)]
pub struct CumulantSet {
    pub sigma2: Estimate,
    pub beta3: Estimate,
    pub kappa3: Estimate,
    pub kappa4: Estimate,
    /// `t -> E|psi(X_1,X_2)|^t`, keyed by the order printed as a string.
    pub gamma: BTreeMap<String, Estimate>,
    /// `t -> E|chi(X_1,X_2,X_3)|^t`.
    pub zeta: BTreeMap<String, Estimate>,
    pub mode: Mode,
}

fn order_key(t: f64) -> String {
    format!("{t}")
}

impl CumulantSet {
    pub fn gamma(&self, t: f64) -> Option<Estimate> {
        self.gamma.get(&order_key(t)).copied()
    }

    pub fn zeta(&self, t: f64) -> Option<Estimate> {
        self.zeta.get(&order_key(t)).copied()
    }
}

/// Kernel tables on the atoms of a finite law.
struct Tab<'a> {
    law: &'a FiniteLaw,
    g: Vec<f64>,
    psi: Vec<f64>,
    chi: Option<Vec<f64>>,
}

impl<'a> Tab<'a> {
    fn new(dec: &HoeffdingDecomposition, law: &'a FiniteLaw) -> Result<Self> {
        let s = law.len();
        check_budget(s, 3)?;
        let pts = law.points();
        if let Some(t) = dec.tables().filter(|t| t.law() == law) {
            return Ok(Tab {
                law,
                g: t.g.values().to_vec(),
                psi: t.psi.values().to_vec(),
                chi: Some(t.chi.values().to_vec()),
            });
        }
        let g = pts.iter().map(|&x| dec.g().eval(&[x])).collect();
        let psi = (0..s * s).map(|ij| dec.psi().eval(&[pts[ij / s], pts[ij % s]])).collect();
        let chi = if dec.degree().is_some_and(|d| d <= 2) {
            None
        } else {
            Some(
                (0..s * s * s)
                    .map(|ijk| dec.chi().eval(&[pts[ijk / (s * s)], pts[(ijk / s) % s], pts[ijk % s]]))
                    .collect(),
            )
        };
        Ok(Tab { law, g, psi, chi })
    }

    fn s(&self) -> usize {
        self.law.len()
    }

    fn p(&self) -> &[f64] {
        self.law.probs()
    }

    fn e1(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.p().iter().enumerate().map(|(i, p)| p * f(i)).sum()
    }

    fn e2(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let p = self.p();
        (0..self.s()).map(|i| p[i] * (0..self.s()).map(|j| p[j] * f(i, j)).sum::<f64>()).sum()
    }

    fn psi(&self, i: usize, j: usize) -> f64 {
        self.psi[i * self.s() + j]
    }

    /// `m(x_i) = E psi(x_i, X) g(X)`.
    fn m(&self) -> Vec<f64> {
        (0..self.s()).map(|i| self.e1(|j| self.psi(i, j) * self.g[j])).collect()
    }

    fn chi_moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let Some(chi) = &self.chi else { return f(0.0) };
        let s = self.s();
        let p = self.p();
        chi.iter()
            .enumerate()
            .map(|(ijk, &c)| p[ijk / (s * s)] * p[(ijk / s) % s] * p[ijk % s] * f(c))
            .sum()
    }

    fn ggg_chi(&self) -> f64 {
        let Some(chi) = &self.chi else { return 0.0 };
        let s = self.s();
        let p = self.p();
        chi.iter()
            .enumerate()
            .map(|(ijk, &c)| {
                let (i, j, k) = (ijk / (s * s), (ijk / s) % s, ijk % s);
                p[i] * p[j] * p[k] * self.g[i] * self.g[j] * self.g[k] * c
            })
            .sum()
    }
}

/// Raw expectations entering the cumulant displays.
#[derive(Debug, Clone, Copy, Default)]
struct RawMoments {
    g2: f64,
    g3: f64,
    abs_g3: f64,
    g4: f64,
    /// `E g_1 g_2 psi_12` (= kappa of the reducibility projection).
    ggpsi: f64,
    /// `E g_1^2 g_2 psi_12`.
    g2gpsi: f64,
    /// `E g_1 g_2 psi_13 psi_23`.
    ggpsipsi: f64,
    /// `E g_1 g_2 g_3 chi_123`.
    gggchi: f64,
}

fn kappa3_of(r: &[f64]) -> f64 {
    (r[1] + 3.0 * r[4]) / r[0].powf(1.5)
}

fn kappa4_of(r: &[f64]) -> f64 {
    (r[3] + 12.0 * r[5] + 12.0 * r[6] + 4.0 * r[7]) / (r[0] * r[0]) - 3.0
}

impl RawMoments {
    fn as_vec(&self) -> [f64; 8] {
        [self.g2, self.g3, self.abs_g3, self.g4, self.ggpsi, self.g2gpsi, self.ggpsipsi, self.gggchi]
    }
}

fn check_sigma2(sigma2: f64, reference: Option<f64>) -> Result<()> {
    let scale = reference.filter(|r| *r > 0.0).unwrap_or(1.0);
    if !(sigma2 > DEGENERATE_TOL * scale) {
        return Err(Error::DegenerateLinearPart { sigma2 });
    }
    Ok(())
}

/// `E f(X_1, X_2)` by nested quadrature, splitting the inner integral at
/// the decomposition's breaks and at the diagonal, where kernels such as
/// `|x - y|` have their kink.
fn nested2(dec: &HoeffdingDecomposition, dist: &Distribution, f: impl Fn(f64, f64) -> f64) -> f64 {
    integrate(dec, dist, |x| {
        let mut br = dec.breaks().to_vec();
        br.push(x);
        dist.integrate_with_breaks(|y| f(x, y), &br)
    })
}

fn integrate(dec: &HoeffdingDecomposition, dist: &Distribution, f: impl Fn(f64) -> f64) -> f64 {
    dist.integrate_with_breaks(f, dec.breaks())
}

/// `m(x) = E psi(x, X) g(X)` by quadrature.
fn m_quad(dec: &HoeffdingDecomposition, dist: &Distribution, x: f64) -> f64 {
    let mut br = dec.breaks().to_vec();
    br.push(x);
    dist.integrate_with_breaks(|y| dec.psi().eval(&[x, y]) * dec.g().eval(&[y]), &br)
}

fn require_quadrature(dec: &HoeffdingDecomposition, dist: &Distribution) -> Result<()> {
    if dist.finite_law().is_some() {
        return Ok(());
    }
    if dec.degree().is_some_and(|d| d <= 2) {
        Ok(())
    } else {
        Err(Error::UnsupportedMode(
            "exact evaluation on a continuous law needs a decomposition without cubic part; use Monte Carlo"
                .into(),
        ))
    }
}

/// `sigma^2`, `beta_3`, `kappa_3`, `kappa_4` and `gamma_t`, `zeta_t` at
/// [`DEFAULT_ORDERS`].
pub fn cumulants(dec: &HoeffdingDecomposition, dist: &Distribution, mode: Mode) -> Result<CumulantSet> {
    cumulants_with_orders(dec, dist, mode, &DEFAULT_ORDERS)
}

pub fn cumulants_with_orders(
    dec: &HoeffdingDecomposition,
    dist: &Distribution,
    mode: Mode,
    orders: &[f64],
) -> Result<CumulantSet> {
    let exact_set = |raw: RawMoments, gam: Vec<f64>, zet: Vec<f64>| -> Result<CumulantSet> {
        check_sigma2(raw.g2, dec.sigma_t2())?;
        let r = raw.as_vec();
        Ok(CumulantSet {
            sigma2: Estimate::exact(raw.g2),
            beta3: Estimate::exact(raw.abs_g3 / raw.g2.powf(1.5)),
            kappa3: Estimate::exact(kappa3_of(&r)),
            kappa4: Estimate::exact(kappa4_of(&r)),
            gamma: orders.iter().zip(gam).map(|(t, v)| (order_key(*t), Estimate::exact(v))).collect(),
            zeta: orders.iter().zip(zet).map(|(t, v)| (order_key(*t), Estimate::exact(v))).collect(),
            mode,
        })
    };
    match mode {
        Mode::Exact => {
            if let Some(law) = dist.finite_law() {
                let tab = Tab::new(dec, law)?;
                let g = &tab.g;
                let m = tab.m();
                let raw = RawMoments {
                    g2: tab.e1(|i| g[i].powi(2)),
                    g3: tab.e1(|i| g[i].powi(3)),
                    abs_g3: tab.e1(|i| g[i].abs().powi(3)),
                    g4: tab.e1(|i| g[i].powi(4)),
                    ggpsi: tab.e1(|i| g[i] * m[i]),
                    g2gpsi: tab.e1(|i| g[i] * g[i] * m[i]),
                    ggpsipsi: tab.e1(|i| m[i] * m[i]),
                    gggchi: tab.ggg_chi(),
                };
                let gam = orders.iter().map(|&t| tab.e2(|i, j| tab.psi(i, j).abs().powf(t))).collect();
                let zet = orders.iter().map(|&t| tab.chi_moment(|c| c.abs().powf(t))).collect();
                return exact_set(raw, gam, zet);
            }
            require_quadrature(dec, dist)?;
            let g = |x: f64| dec.g().eval(&[x]);
            let m = |x: f64| m_quad(dec, dist, x);
            let raw = RawMoments {
                g2: integrate(dec, dist, |x| g(x).powi(2)),
                g3: integrate(dec, dist, |x| g(x).powi(3)),
                abs_g3: integrate(dec, dist, |x| g(x).abs().powi(3)),
                g4: integrate(dec, dist, |x| g(x).powi(4)),
                ggpsi: integrate(dec, dist, |x| g(x) * m(x)),
                g2gpsi: integrate(dec, dist, |x| g(x) * g(x) * m(x)),
                ggpsipsi: integrate(dec, dist, |x| m(x).powi(2)),
                gggchi: 0.0,
            };
            let gam = orders
                .iter()
                .map(|&t| nested2(dec, dist, |x, y| dec.psi().eval(&[x, y]).abs().powf(t)))
                .collect();
            let zet = vec![0.0; orders.len()];
            exact_set(raw, gam, zet)
        }
        Mode::MonteCarlo { reps, seed } => {
            if reps == 0 {
                return Err(Error::InvalidArgument("zero replications".into()));
            }
            let k = orders.len();
            let cubic = !dec.degree().is_some_and(|d| d <= 2);
            let acc = rng::mc_moments(reps, seed, 8 + 2 * k, |r, out| {
                let x = [dist.sample(r), dist.sample(r), dist.sample(r)];
                let g = [dec.g().eval(&x[0..1]), dec.g().eval(&x[1..2]), dec.g().eval(&x[2..3])];
                let p12 = dec.psi().eval(&[x[0], x[1]]);
                let p13 = dec.psi().eval(&[x[0], x[2]]);
                let p23 = dec.psi().eval(&[x[1], x[2]]);
                let c = if cubic { dec.chi().eval(&x) } else { 0.0 };
                out[0] = g[0] * g[0];
                out[1] = g[0].powi(3);
                out[2] = g[0].abs().powi(3);
                out[3] = g[0].powi(4);
                out[4] = g[0] * g[1] * p12;
                out[5] = g[0] * g[0] * g[1] * p12;
                out[6] = g[0] * g[1] * p13 * p23;
                out[7] = g[0] * g[1] * g[2] * c;
                for (i, &t) in orders.iter().enumerate() {
                    out[8 + i] = p12.abs().powf(t);
                    out[8 + k + i] = c.abs().powf(t);
                }
            });
            let r = acc.means();
            let (s2, se2) = (r[0], acc.stderr(0));
            if !(s2 > 3.0 * se2) || s2 <= 0.0 {
                return Err(Error::DegenerateLinearPart { sigma2: s2 });
            }
            let mut grad = vec![0.0; acc.dim()];
            grad[0] = -1.5 * (r[1] + 3.0 * r[4]) * s2.powf(-2.5);
            grad[1] = s2.powf(-1.5);
            grad[4] = 3.0 * s2.powf(-1.5);
            let k3 = Estimate::new(kappa3_of(r), acc.propagated_stderr(&grad));

            let mut grad = vec![0.0; acc.dim()];
            let num = r[3] + 12.0 * r[5] + 12.0 * r[6] + 4.0 * r[7];
            grad[0] = -2.0 * num / s2.powi(3);
            grad[3] = 1.0 / (s2 * s2);
            grad[5] = 12.0 / (s2 * s2);
            grad[6] = 12.0 / (s2 * s2);
            grad[7] = 4.0 / (s2 * s2);
            let k4 = Estimate::new(kappa4_of(r), acc.propagated_stderr(&grad));

            let mut grad = vec![0.0; acc.dim()];
            grad[0] = -1.5 * r[2] * s2.powf(-2.5);
            grad[2] = s2.powf(-1.5);
            let b3 = Estimate::new(r[2] / s2.powf(1.5), acc.propagated_stderr(&grad));

            let est = |i: usize| Estimate::new(acc.mean(i), acc.stderr(i));
            Ok(CumulantSet {
                sigma2: est(0),
                beta3: b3,
                kappa3: k3,
                kappa4: k4,
                gamma: orders.iter().enumerate().map(|(i, t)| (order_key(*t), est(8 + i))).collect(),
                zeta: orders.iter().enumerate().map(|(i, t)| (order_key(*t), est(8 + k + i))).collect(),
                mode,
            })
        }
    }
}

/// The projection coefficient `b(x) = m(x)/sigma^2 - kappa g(x)/(2 sigma^4)`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionFn {
    /// Values at the atoms of a finite law.
    Table { points: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation on a uniform grid; clamped outside.
    Grid { lo: f64, hi: f64, values: Vec<f64> },
}

impl ProjectionFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ProjectionFn::Table { points, values } => {
                match points.binary_search_by(|p| p.total_cmp(&x)) {
                    Ok(i) => values[i],
                    Err(_) => f64::NAN,
                }
            }
            ProjectionFn::Grid { lo, hi, values } => {
                let n = values.len();
                let pos = ((x - lo) / (hi - lo) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
                let i = (pos.floor() as usize).min(n - 2);
                let w = pos - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducibilityReport {
    pub sigma2: f64,
    pub sigma_t2: f64,
    /// `kappa = E psi(X_1,X_2) g(X_1) g(X_2)`.
    pub kappa: Estimate,
    /// `delta_3^2 = E psi**^2` computed from the residual kernel.
    pub delta3_sq: Estimate,
    /// `E psi^2 - 2 E m^2 / sigma^2 + kappa^2 / sigma^4`, which needs no `b`.
    pub delta3_sq_expanded: Estimate,
    pub reducible: bool,
    pub b: ProjectionFn,
    /// `psi**` on finite laws.
    #[serde(skip)]
    pub residual: Option<TabulatedKernel>,
    pub mode: Mode,
}

fn grid_range(dist: &Distribution) -> (f64, f64) {
    match dist {
        Distribution::Sampler { law: crate::model::NamedLaw::Normal { mean, sd }, .. } => {
            (mean - 8.5 * sd, mean + 8.5 * sd)
        }
        _ => dist.effective_range(),
    }
}

/// `var T` for the reducibility threshold: the exact value when known,
/// otherwise assembled from `E g^2` and `E psi^2` for degree-2 statistics.
fn sigma_t2_for(dec: &HoeffdingDecomposition, sigma2: f64, epsi2: f64) -> f64 {
    dec.sigma_t2()
        .or_else(|| dec.sigma_t2_from_moments(sigma2, epsi2, 0.0))
        .unwrap_or(sigma2)
}

/// `Var T` without sampling: from the decomposition if it carries component
/// variances, otherwise by quadrature for degree-2 statistics on the named
/// continuous laws.
pub fn exact_variance(dec: &HoeffdingDecomposition, dist: &Distribution) -> Result<f64> {
    if let Some(v) = dec.sigma_t2() {
        return Ok(v);
    }
    require_quadrature(dec, dist)?;
    let eg2 = integrate(dec, dist, |x| dec.g().eval(&[x]).powi(2));
    let epsi2 = nested2(dec, dist, |x, y| dec.psi().eval(&[x, y]).powi(2));
    dec.sigma_t2_from_moments(eg2, epsi2, 0.0)
        .ok_or_else(|| Error::UnsupportedMode("variance needs degree <= 2".into()))
}

/// Distance of `psi` from the reducible kernels. Verdict: reducible iff
/// `delta_3^2 < tol * var T` (exact mode) or `delta_3^2 < 3 stderr`
/// (Monte Carlo). `tol` defaults to [`REDUCIBILITY_TOL`].
pub fn reducibility(
    dec: &HoeffdingDecomposition,
    dist: &Distribution,
    mode: Mode,
    tol: Option<f64>,
) -> Result<ReducibilityReport> {
    let tol = tol.unwrap_or(REDUCIBILITY_TOL);
    if let (Some(law), Mode::Exact) = (dist.finite_law(), mode) {
        let tab = Tab::new(dec, law)?;
        let (s, g) = (tab.s(), &tab.g);
        let m = tab.m();
        let sigma2 = tab.e1(|i| g[i] * g[i]);
        check_sigma2(sigma2, dec.sigma_t2())?;
        let kappa = tab.e1(|i| g[i] * m[i]);
        let b: Vec<f64> =
            (0..s).map(|i| m[i] / sigma2 - kappa / (2.0 * sigma2 * sigma2) * g[i]).collect();
        let resid: Vec<f64> =
            (0..s * s).map(|ij| tab.psi[ij] - b[ij / s] * g[ij % s] - b[ij % s] * g[ij / s]).collect();
        let d3 = tab.e2(|i, j| resid[i * s + j].powi(2));
        let epsi2 = tab.e2(|i, j| tab.psi(i, j).powi(2));
        let em2 = tab.e1(|i| m[i] * m[i]);
        let expanded = epsi2 - 2.0 * em2 / sigma2 + kappa * kappa / sigma2.powi(2);
        let st2 = sigma_t2_for(dec, sigma2, epsi2);
        return Ok(ReducibilityReport {
            sigma2,
            sigma_t2: st2,
            kappa: Estimate::exact(kappa),
            delta3_sq: Estimate::exact(d3),
            delta3_sq_expanded: Estimate::exact(expanded),
            reducible: d3 < tol * st2,
            b: ProjectionFn::Table { points: law.points().to_vec(), values: b },
            residual: Some(TabulatedKernel::from_parts(law.clone(), 2, resid)),
            mode,
        });
    }

    // continuous laws (or Monte Carlo on any law): b on a grid by quadrature
    if mode == Mode::Exact {
        require_quadrature(dec, dist)?;
    }
    let g = |x: f64| dec.g().eval(&[x]);
    let sigma2 = integrate(dec, dist, |x| g(x).powi(2));
    check_sigma2(sigma2, dec.sigma_t2())?;
    let m = |x: f64| m_quad(dec, dist, x);
    let kappa_q = integrate(dec, dist, |x| g(x) * m(x));
    let (lo, hi) = grid_range(dist);
    let b_fn = match dist.finite_law() {
        Some(law) => ProjectionFn::Table {
            points: law.points().to_vec(),
            values: law
                .points()
                .iter()
                .map(|&x| m(x) / sigma2 - kappa_q / (2.0 * sigma2 * sigma2) * g(x))
                .collect(),
        },
        None => {
            use rayon::prelude::*;
            let values = (0..B_GRID_POINTS)
                .into_par_iter()
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (B_GRID_POINTS - 1) as f64;
                    m(x) / sigma2 - kappa_q / (2.0 * sigma2 * sigma2) * g(x)
                })
                .collect();
            ProjectionFn::Grid { lo, hi, values }
        }
    };
    let resid = |x: f64, y: f64| dec.psi().eval(&[x, y]) - b_fn.eval(x) * g(y) - b_fn.eval(y) * g(x);

    match mode {
        Mode::Exact => {
            // b is piecewise linear on the grid; split there so each panel is smooth
            let mut nodes = dec.breaks().to_vec();
            if let ProjectionFn::Grid { lo, hi, values } = &b_fn {
                let k = values.len() - 1;
                nodes.extend((0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64));
            }
            let d3 = dist.integrate_with_breaks(
                |x| {
                    let mut br = nodes.clone();
                    br.push(x);
                    dist.integrate_with_breaks(|y| resid(x, y).powi(2), &br)
                },
                &nodes,
            );
            let epsi2 = nested2(dec, dist, |x, y| dec.psi().eval(&[x, y]).powi(2));
            let em2 = integrate(dec, dist, |x| m(x).powi(2));
            let expanded = epsi2 - 2.0 * em2 / sigma2 + kappa_q * kappa_q / sigma2.powi(2);
            let st2 = sigma_t2_for(dec, sigma2, epsi2);
            Ok(ReducibilityReport {
                sigma2,
                sigma_t2: st2,
                kappa: Estimate::exact(kappa_q),
                delta3_sq: Estimate::exact(d3),
                delta3_sq_expanded: Estimate::exact(expanded),
                reducible: d3 < tol * st2,
                b: b_fn,
                residual: None,
                mode,
            })
        }
        Mode::MonteCarlo { reps, seed } => {
            if reps == 0 {
                return Err(Error::InvalidArgument("zero replications".into()));
            }
            // coordinates: psi**^2, psi^2, psi_31 g_1 psi_32 g_2, g_1 g_2 psi_12, g^2
            let acc: MomentAccumulator = rng::mc_moments(reps, seed, 5, |r, out| {
                let (x1, x2, x3) = (dist.sample(r), dist.sample(r), dist.sample(r));
                let (g1, g2) = (g(x1), g(x2));
                let p12 = dec.psi().eval(&[x1, x2]);
                out[0] = resid(x1, x2).powi(2);
                out[1] = p12 * p12;
                out[2] = dec.psi().eval(&[x3, x1]) * g1 * dec.psi().eval(&[x3, x2]) * g2;
                out[3] = g1 * g2 * p12;
                out[4] = g1 * g1;
            });
            let v = acc.means();
            let (s2, k) = (v[4], v[3]);
            let expanded = v[1] - 2.0 * v[2] / s2 + k * k / (s2 * s2);
            let grad = [
                0.0,
                1.0,
                -2.0 / s2,
                2.0 * k / (s2 * s2),
                2.0 * v[2] / (s2 * s2) - 2.0 * k * k / s2.powi(3),
            ];
            let d3 = Estimate::new(v[0], acc.stderr(0));
            let st2 = sigma_t2_for(dec, sigma2, v[1]);
            Ok(ReducibilityReport {
                sigma2,
                sigma_t2: st2,
                kappa: Estimate::new(k, acc.stderr(3)),
                delta3_sq: d3,
                delta3_sq_expanded: Estimate::new(expanded, acc.propagated_stderr(&grad)),
                reducible: d3.value < 3.0 * d3.stderr,
                b: b_fn,
                residual: None,
                mode,
            })
        }
    }
}

/// Parameters of the moment, remainder, smoothness and separation
/// conditions. `None` constants mean "report the implied constant only".
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ConditionParams {
    pub r: f64,
    pub s: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub delta: Option<f64>,
    pub delta_star: Option<f64>,
    pub a_star: Option<f64>,
    pub m_star: Option<f64>,
    pub d_star: Option<f64>,
}

impl Default for ConditionParams {
    fn default() -> Self {
        ConditionParams {
            r: 5.0,
            s: 3.0,
            nu1: 0.25,
            nu2: 0.25,
            delta: None,
            delta_star: None,
            a_star: None,
            m_star: None,
            d_star: None,
        }
    }
}

/// One condition with its named left-hand terms and implied constants.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionItem {
    pub condition: String,
    pub terms: BTreeMap<String, f64>,
    pub implied: BTreeMap<String, f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub n: usize,
    pub params: ConditionParams,
    pub sigma_t2: f64,
    pub nu: f64,
    /// `delta_3^2 N^{2 nu}` for the relaxed separation condition.
    pub delta3_sq_n2nu: f64,
    pub items: Vec<ConditionItem>,
}

impl ConditionReport {
    pub fn item(&self, condition: &str) -> Option<&ConditionItem> {
        self.items.iter().find(|i| i.condition == condition)
    }
}

/// Evaluates the `moment`, `remainder`, `smoothness` (Cramér) and
/// `separation` conditions at the statistic's `N`.
///
/// Passing rules when no user constant is supplied: `moment` needs
/// `E g^2 > 0` and finite moments, `remainder` a finite `Delta_4^2`,
/// `smoothness` needs `rho > 0`, and `separation` a kernel that is not
/// reducible at the default tolerance.
pub fn check_conditions(
    t: &SymmetricStatistic,
    dec: &HoeffdingDecomposition,
    dist: &Distribution,
    params: ConditionParams,
    mode: Mode,
) -> Result<ConditionReport> {
    let n = dec.n();
    let nf = n as f64;
    let (r, s) = (params.r, params.s);
    let cum = cumulants_with_orders(dec, dist, mode, &[r, s])?;
    let red = reducibility(dec, dist, mode, None)?;
    let sigma_t2 = red.sigma_t2;
    let sigma_t = sigma_t2.sqrt();
    let sigma2 = cum.sigma2.value;

    let abs_g_r = match mode {
        Mode::Exact => integrate(dec, dist, |x| dec.g().eval(&[x]).abs().powf(r)),
        Mode::MonteCarlo { reps, seed } => {
            expect_one(dist, reps, rng::mix(seed, 0x67), |x| dec.g().eval(&[x]).abs().powf(r))
        }
    };
    let gamma_r = cum.gamma(r).expect("requested order").value;
    let zeta_s = cum.zeta(s).expect("requested order").value;
    let mut items = Vec::new();

    let a_implied = sigma2 / sigma_t2;
    let m_implied = (abs_g_r / sigma_t.powf(r)).max(gamma_r / sigma_t.powf(r)).max(zeta_s / sigma_t.powf(s));
    let pass13 = a_implied > 0.0
        && m_implied.is_finite()
        && params.a_star.is_none_or(|a| a < a_implied)
        && params.m_star.is_none_or(|m| m_implied < m);
    items.push(ConditionItem {
        condition: "moment".into(),
        terms: BTreeMap::from([
            ("sigma2".into(), sigma2),
            ("sigma_t2".into(), sigma_t2),
            ("g_abs_r".into(), abs_g_r),
            ("gamma_r".into(), gamma_r),
            ("zeta_s".into(), zeta_s),
        ]),
        implied: BTreeMap::from([("A_star_sup".into(), a_implied), ("M_star_inf".into(), m_implied)]),
        pass: pass13,
    });

    let delta4_sq = if dec.degree().is_some_and(|d| d <= 3) {
        0.0
    } else {
        delta_moments(t, dist, mode)?.get(4).value
    };
    let d_implied = delta4_sq / sigma_t2 / nf.powf(1.0 - 2.0 * params.nu1);
    items.push(ConditionItem {
        condition: "remainder".into(),
        terms: BTreeMap::from([("delta4_sq".into(), delta4_sq)]),
        implied: BTreeMap::from([("D_star_inf".into(), d_implied)]),
        pass: d_implied.is_finite() && params.d_star.is_none_or(|d| d_implied <= d),
    });

    let beta3 = cum.beta3.value;
    let band = (1.0 / beta3, nf.powf(params.nu2 + 0.5));
    let rho = crate::charfn::linear_part_rho(dec, dist, band.0, band.1, mode)?;
    items.push(ConditionItem {
        condition: "smoothness".into(),
        terms: BTreeMap::from([
            ("beta3".into(), beta3),
            ("rho".into(), rho),
            ("a".into(), band.0),
            ("b".into(), band.1),
        ]),
        implied: BTreeMap::from([("delta_sup".into(), rho)]),
        pass: rho > 1e-9 && params.delta.is_none_or(|d| rho >= d),
    });

    let d3 = red.delta3_sq.value;
    let ds_implied = (d3.max(0.0) / sigma_t2).sqrt();
    items.push(ConditionItem {
        condition: "separation".into(),
        terms: BTreeMap::from([("delta3_sq".into(), d3), ("kappa".into(), red.kappa.value)]),
        implied: BTreeMap::from([("delta_star_sup".into(), ds_implied)]),
        pass: !red.reducible && params.delta_star.is_none_or(|d| ds_implied >= d),
    });

    let nu = params.nu1.min(params.nu2).min(s - 2.0).min(r - 4.0) / 600.0;
    Ok(ConditionReport {
        n,
        params,
        sigma_t2,
        nu,
        delta3_sq_n2nu: d3 * nf.powf(2.0 * nu),
        items,
    })
}

fn expect_one(dist: &Distribution, reps: u64, seed: u64, f: impl Fn(f64) -> f64 + Sync) -> f64 {
    rng::mc_moments(reps, seed, 1, |r, out| out[0] = f(dist.sample(r))).mean(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoeffding::{decompose, known};
    use crate::model::{sample_mean, u_statistic, SymmetricKernel};

    fn rademacher_linear(n: usize) -> HoeffdingDecomposition {
        decompose(&sample_mean(n).unwrap(), &Distribution::rademacher()).unwrap()
    }

    #[test]
    fn linear_rademacher() {
        let c = cumulants(&rademacher_linear(4), &Distribution::rademacher(), Mode::Exact).unwrap();
        assert_eq!(c.kappa3.value, 0.0);
        assert!((c.kappa4.value + 2.0).abs() < 1e-14);
        assert!((c.beta3.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_coin() {
        let d = Distribution::finite(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let dec = decompose(&sample_mean(3).unwrap(), &d).unwrap();
        let c = cumulants(&dec, &d, Mode::Exact).unwrap();
        // g = sqrt(3) (x - 1/2) / 3 scaled; kappa's are scale free
        assert!(c.kappa3.value.abs() < 1e-14);
        assert!((c.kappa4.value + 2.0).abs() < 1e-13);
    }

    fn xy_plus(n: usize) -> SymmetricStatistic {
        u_statistic(SymmetricKernel::certified(2, |x| x[0] * x[1] + x[0] + x[1]), n).unwrap()
    }

    #[test]
    fn reducible_kernel_kappa3() {
        let n = 5;
        let r = Distribution::rademacher();
        let dec = decompose(&xy_plus(n), &r).unwrap();
        let c = cumulants(&dec, &r, Mode::Exact).unwrap();
        // g(x) = x (times U-normalization 1), psi = N/(N-1) xy
        let g1 = dec.g().eval(&[1.0]);
        let p11 = dec.psi().eval(&[1.0, 1.0]);
        let expected = 3.0 * g1 * g1 * p11 / g1.powi(3);
        assert!((c.kappa3.value - expected).abs() < 1e-12);
        assert!((p11 / g1 - n as f64 / (n as f64 - 1.0)).abs() < 1e-12);

        let red = reducibility(&dec, &r, Mode::Exact, None).unwrap();
        assert!(red.delta3_sq.value <= 1e-10);
        assert!(red.reducible);
    }

    #[test]
    fn zero_quadratic_part_is_reducible() {
        let red = reducibility(&rademacher_linear(4), &Distribution::rademacher(), Mode::Exact, None).unwrap();
        assert_eq!(red.delta3_sq.value, 0.0);
        assert!(red.reducible);
    }

    #[test]
    fn degenerate_linear_part() {
        let d = Distribution::finite(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let t = u_statistic(SymmetricKernel::certified(2, |x| (x[0] - x[1]).abs()), 4).unwrap();
        let dec = decompose(&t, &d).unwrap();
        assert!(matches!(cumulants(&dec, &d, Mode::Exact), Err(Error::DegenerateLinearPart { .. })));
        assert!(matches!(reducibility(&dec, &d, Mode::Exact, None), Err(Error::DegenerateLinearPart { .. })));
    }

    fn skewed() -> Distribution {
        Distribution::finite(&[(-1.0, 0.2), (0.0, 0.3), (0.5, 0.1), (2.0, 0.4)]).unwrap()
    }

    fn mixed_stat(n: usize) -> SymmetricStatistic {
        SymmetricStatistic::new(n, "mixed", |x| {
            let s: f64 = x.iter().sum();
            let m = x.iter().cloned().fold(f64::MIN, f64::max);
            s + 0.3 * s * s / x.len() as f64 + 0.2 * m
        })
    }

    #[test]
    fn residual_orthogonality() {
        let d = skewed();
        let dec = decompose(&mixed_stat(4), &d).unwrap();
        let red = reducibility(&dec, &d, Mode::Exact, None).unwrap();
        let res = red.residual.as_ref().unwrap();
        let law = d.finite_law().unwrap();
        let (pts, p) = (law.points(), law.probs());
        let g: Vec<f64> = pts.iter().map(|&x| dec.g().eval(&[x])).collect();
        let b: Vec<f64> = pts.iter().map(|&x| red.b.eval(x)).collect();
        let s = pts.len();
        for f in [&g, &b] {
            let mut ip = 0.0;
            for i in 0..s {
                for j in 0..s {
                    ip += p[i] * p[j] * res.at(&[i, j]) * (f[i] * g[j] + f[j] * g[i]);
                }
            }
            assert!(ip.abs() < 1e-9, "{ip}");
        }
        for i in 0..s {
            let cond: f64 = (0..s).map(|j| p[j] * res.at(&[i, j])).sum();
            assert!(cond.abs() < 1e-9);
            let cond_g: f64 = (0..s).map(|j| p[j] * res.at(&[j, i]) * g[j]).sum();
            assert!(cond_g.abs() < 1e-9);
        }
        assert!((red.delta3_sq.value - red.delta3_sq_expanded.value).abs() < 1e-9);
        assert!(!red.reducible);
    }

    #[test]
    fn scaling_invariance() {
        let d = skewed();
        let t = mixed_stat(4);
        let c = 3.7;
        let a = decompose(&t, &d).unwrap();
        let b = decompose(&t.scaled(c), &d).unwrap();
        let (ca, cb) = (cumulants(&a, &d, Mode::Exact).unwrap(), cumulants(&b, &d, Mode::Exact).unwrap());
        assert!((ca.kappa3.value - cb.kappa3.value).abs() < 1e-10);
        assert!((ca.kappa4.value - cb.kappa4.value).abs() < 1e-10);
        assert!((ca.beta3.value - cb.beta3.value).abs() < 1e-10);
        assert!((cb.sigma2.value / ca.sigma2.value - c * c).abs() < 1e-9);
        let (ra, rb) = (
            reducibility(&a, &d, Mode::Exact, None).unwrap(),
            reducibility(&b, &d, Mode::Exact, None).unwrap(),
        );
        assert!((rb.delta3_sq.value / ra.delta3_sq.value - c * c).abs() < 1e-8);
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let d = skewed();
        let dec = decompose(&mixed_stat(4), &d).unwrap();
        let ex = cumulants(&dec, &d, Mode::Exact).unwrap();
        let mc = cumulants(&dec, &d, Mode::mc(400_000, 5)).unwrap();
        for (e, m) in [(ex.kappa3, mc.kappa3), (ex.kappa4, mc.kappa4), (ex.beta3, mc.beta3), (ex.sigma2, mc.sigma2)] {
            assert!((e.value - m.value).abs() < 5.0 * m.stderr, "{e:?} vs {m:?}");
        }
        let g3 = (ex.gamma(3.0).unwrap(), mc.gamma(3.0).unwrap());
        assert!((g3.0.value - g3.1.value).abs() < 5.0 * g3.1.stderr);
        let re = reducibility(&dec, &d, Mode::Exact, None).unwrap();
        let rm = reducibility(&dec, &d, Mode::mc(400_000, 6), None).unwrap();
        assert!((re.delta3_sq.value - rm.delta3_sq.value).abs() < 5.0 * rm.delta3_sq.stderr);
        assert!(
            (re.delta3_sq.value - rm.delta3_sq_expanded.value).abs() < 5.0 * rm.delta3_sq_expanded.stderr
        );
    }

    #[test]
    fn quadrature_route_on_continuous_linear_law() {
        let n = 10;
        let d = Distribution::uniform(-1.0, 1.0).unwrap();
        let dec = known::linear(|x| x, n, 1.0 / 3.0);
        let c = cumulants(&dec, &d, Mode::Exact).unwrap();
        assert!((c.sigma2.value - 1.0 / 3.0).abs() < 1e-12);
        assert!(c.kappa3.value.abs() < 1e-12);
        // uniform excess kurtosis
        assert!((c.kappa4.value + 1.2).abs() < 1e-10);
    }

    #[test]
    fn conditions_for_linear_statistic() {
        let n = 6;
        let d = Distribution::finite(&[(-1.5, 0.25), (-0.2, 0.25), (0.4, 0.25), (1.3, 0.25)]).unwrap();
        let t = sample_mean(n).unwrap();
        let dec = decompose(&t, &d).unwrap();
        let rep = check_conditions(&t, &dec, &d, ConditionParams::default(), Mode::Exact).unwrap();
        assert!(rep.item("moment").unwrap().pass);
        assert!(rep.item("remainder").unwrap().pass);
        assert!(!rep.item("separation").unwrap().pass);
        let json = serde_json::to_value(&rep).unwrap();
        assert!(json["items"][0]["terms"]["gamma_r"].is_number());
        assert!(json["items"][1]["terms"]["delta4_sq"].is_number());
        assert!(json["items"][2]["terms"]["rho"].is_number());
        assert!(json["items"][3]["terms"]["delta3_sq"].is_number());
        assert!((rep.nu - 0.25 / 600.0).abs() < 1e-15);
    }
}
