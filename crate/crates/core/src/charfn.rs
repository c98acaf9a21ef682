//! Characteristic functions of the linear part, the Cramér characteristic
//! `rho(a, b) = 1 - sup_{a <= |t| <= b} |E exp(it g(X)/sigma)|`, the
//! band-limited smoothing kernels `g_{a,k}` and the small-`t` decay bound
//! `|alpha(t)| <= 1 - t^2/4N`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cumulants::cumulants_with_orders;
use crate::error::{Error, Result};
use crate::hoeffding::HoeffdingDecomposition;
use crate::model::{Distribution, Mode, NamedLaw};
use crate::quad;
use crate::rng;

/// Where the values of a [`CharFunction`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    ExactFiniteSupport,
    Quadrature,
    MonteCarlo { reps: u64, seed: u64 },
}

#[derive(Clone)]
enum Source {
    Normal { mean: f64, sd: f64 },
    Finite { points: Vec<f64>, probs: Vec<f64> },
    Quadrature { dist: Distribution, map: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
    Samples(Arc<Vec<f64>>),
}

/// `t -> E exp(itY)` for a real random variable `Y`.
#[derive(Clone)]
pub struct CharFunction {
    source: Source,
    provenance: Provenance,
}

impl std::fmt::Debug for CharFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CharFunction").field("provenance", &self.provenance).finish()
    }
}

impl CharFunction {
    pub fn normal(mean: f64, sd: f64) -> Self {
        CharFunction { source: Source::Normal { mean, sd }, provenance: Provenance::ClosedForm }
    }

    pub fn standard_normal() -> Self {
        Self::normal(0.0, 1.0)
    }

    /// Law of `Y = map(X)` for `X ~ dist`: exact on finite laws, quadrature
    /// on the named continuous laws.
    pub fn of_map<F>(dist: &Distribution, map: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        match dist.finite_law() {
            Some(law) => CharFunction {
                source: Source::Finite {
                    points: law.points().iter().map(|&x| map(x)).collect(),
                    probs: law.probs().to_vec(),
                },
                provenance: Provenance::ExactFiniteSupport,
            },
            None => match dist {
                Distribution::Sampler { law: NamedLaw::Rademacher, .. } => CharFunction {
                    source: Source::Finite { points: vec![map(-1.0), map(1.0)], probs: vec![0.5, 0.5] },
                    provenance: Provenance::ExactFiniteSupport,
                },
                _ => CharFunction {
                    source: Source::Quadrature { dist: dist.clone(), map: Arc::new(map) },
                    provenance: Provenance::Quadrature,
                },
            },
        }
    }

    /// Empirical characteristic function of `reps` draws of `map(X)`.
    pub fn monte_carlo<F>(dist: &Distribution, map: F, reps: u64, seed: u64) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let blocks = rng::par_blocks(reps, seed, |r, len| {
            (0..len).map(|_| map(dist.sample(r))).collect::<Vec<f64>>()
        });
        CharFunction {
            source: Source::Samples(Arc::new(blocks.concat())),
            provenance: Provenance::MonteCarlo { reps, seed },
        }
    }

    /// Characteristic function of `g(X)/sigma`, `sigma^2 = E g^2`.
    pub fn linear_part(dec: &HoeffdingDecomposition, dist: &Distribution, mode: Mode) -> Result<Self> {
        let sigma2 = match mode {
            Mode::Exact => dist.integrate(|x| dec.g().eval(&[x]).powi(2)),
            Mode::MonteCarlo { reps, seed } => {
                let g = dec.g().clone();
                rng::mc_moments(reps, rng::mix(seed, 0xc0), 1, |r, out| {
                    out[0] = g.eval(&[dist.sample(r)]).powi(2)
                })
                .mean(0)
            }
        };
        if !(sigma2 > 0.0) {
            return Err(Error::DegenerateLinearPart { sigma2 });
        }
        let sigma = sigma2.sqrt();
        let g = dec.g().clone();
        let map = move |x: f64| g.eval(&[x]) / sigma;
        Ok(match mode {
            Mode::Exact => Self::of_map(dist, map),
            Mode::MonteCarlo { reps, seed } => Self::monte_carlo(dist, map, reps, seed),
        })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Standard error of `eval` (zero unless Monte Carlo).
    pub fn stderr(&self) -> f64 {
        match &self.source {
            Source::Samples(s) => 1.0 / (s.len() as f64).sqrt(),
            _ => 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match &self.source {
            Source::Normal { mean, sd } => {
                Complex64::from_polar((-0.5 * sd * sd * t * t).exp(), t * mean)
            }
            Source::Finite { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(&y, &p)| Complex64::from_polar(p, t * y))
                .sum(),
            Source::Quadrature { dist, map } => Complex64::new(
                dist.integrate(|x| (t * map(x)).cos()),
                dist.integrate(|x| (t * map(x)).sin()),
            ),
            Source::Samples(s) => {
                let sum: Complex64 = s.iter().map(|&y| Complex64::from_polar(1.0, t * y)).sum();
                sum / s.len() as f64
            }
        }
    }

    /// `1 - |eval(t)|`, computed without cancellation for small `t` from
    /// `1 - Re = 2 E sin^2(tY/2)`.
    pub fn one_minus_abs(&self, t: f64) -> f64 {
        let (one_minus_re, im) = match &self.source {
            Source::Normal { sd, .. } => return -(-0.5 * sd * sd * t * t).exp_m1(),
            Source::Finite { points, probs } => (
                points.iter().zip(probs).map(|(&y, &p)| 2.0 * p * (0.5 * t * y).sin().powi(2)).sum(),
                points.iter().zip(probs).map(|(&y, &p)| p * (t * y).sin()).sum::<f64>(),
            ),
            Source::Quadrature { dist, map } => (
                dist.integrate(|x| 2.0 * (0.5 * t * map(x)).sin().powi(2)),
                dist.integrate(|x| (t * map(x)).sin()),
            ),
            Source::Samples(_) => return 1.0 - self.eval(t).norm(),
        };
        let re = 1.0 - one_minus_re;
        let one_minus_sq = one_minus_re * (1.0 + re) - im * im;
        let abs = (1.0 - one_minus_sq).max(0.0).sqrt();
        one_minus_sq / (1.0 + abs)
    }
}

/// Default number of base grid points for the supremum search.
pub const RHO_GRID: usize = 4096;
/// Relative width at which golden-section refinement stops.
pub const RHO_REFINE_WIDTH: f64 = 1e-6;
const REFINE_PEAKS: usize = 8;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoResult {
    pub rho: f64,
    /// `|t|` at which the supremum was found.
    pub t_max: f64,
    pub sup_abs: f64,
    pub grid_points: usize,
    pub refine_width: f64,
}

/// Base grid on `[a, b]`: half geometric, half linear, merged and sorted.
fn hybrid_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    let half = (points / 2).max(2);
    let mut ts: Vec<f64> = (0..half).map(|i| a + (b - a) * i as f64 / (half - 1) as f64).collect();
    if a > 0.0 {
        let ratio = (b / a).ln();
        ts.extend((0..half).map(|i| a * (ratio * i as f64 / (half - 1) as f64).exp()));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > rel * hi.abs().max(1e-300) {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 { (x1, f1) } else { (x2, f2) }
}

/// `rho(a, b) = 1 - sup{|cf(t)| : a <= |t| <= b}`.
///
/// `|cf(-t)| = |cf(t)|`, so only `t > 0` is swept. The best local maxima of
/// the base grid are refined by golden-section search on their brackets.
pub fn cramer_rho(cf: &CharFunction, a: f64, b: f64, grid: usize) -> Result<RhoResult> {
    if !(a >= 0.0 && a < b) {
        return Err(Error::InvalidRange { a, b });
    }
    let ts = hybrid_grid(a, b, grid);
    let vals: Vec<f64> = ts.par_iter().map(|&t| cf.eval(t).norm()).collect();
    let mut peaks: Vec<usize> = (0..ts.len())
        .filter(|&i| (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == ts.len() || vals[i] >= vals[i + 1]))
        .collect();
    peaks.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    peaks.truncate(REFINE_PEAKS);
    let refined: Vec<(f64, f64)> = peaks
        .par_iter()
        .map(|&i| {
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(ts.len() - 1)];
            let (t, v) = golden_max(|t| cf.eval(t).norm(), lo, hi, RHO_REFINE_WIDTH);
            if v > vals[i] { (t, v) } else { (ts[i], vals[i]) }
        })
        .collect();
    let (t_max, sup_abs) = refined
        .into_iter()
        .fold((ts[0], vals[0]), |best, c| if c.1 > best.1 { c } else { best });
    Ok(RhoResult {
        rho: (1.0 - sup_abs).max(0.0),
        t_max,
        sup_abs,
        grid_points: ts.len(),
        refine_width: RHO_REFINE_WIDTH,
    })
}

/// `rho(a, b)` for the linear part `g(X)/sigma` of a decomposition.
pub fn linear_part_rho(
    dec: &HoeffdingDecomposition,
    dist: &Distribution,
    a: f64,
    b: f64,
    mode: Mode,
) -> Result<f64> {
    let cf = CharFunction::linear_part(dec, dist, mode)?;
    Ok(cramer_rho(&cf, a, b, RHO_GRID)?.rho)
}

/// The probability density `g_{a,k}(x) = a c(k) (sin(ax)/(ax))^k`, whose
/// Fourier transform vanishes outside `|t| <= ka`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingKernel {
    pub a: f64,
    pub k: u32,
    pub c: f64,
}

/// `int_R (sin u / u)^k du` by quadrature over `[0, L]` plus the averaged
/// tail `2 m_k / ((k-1) L^{k-1})`, `m_k` the mean of `sin^k`.
fn sinc_power_integral(k: u32) -> f64 {
    let periods = 400usize;
    let l = periods as f64 * PI;
    let body = quad::composite(
        |u: f64| if u == 0.0 { 1.0 } else { (u.sin() / u).powi(k as i32) },
        0.0,
        l,
        4 * periods,
    );
    // mean of sin^k over a period: C(k, k/2) / 2^k
    let mk = crate::special::binomial(k as u64, (k / 2) as u64) / 2f64.powi(k as i32);
    2.0 * (body + mk / ((k - 1) as f64 * l.powi(k as i32 - 1)))
}

impl SmoothingKernel {
    /// `k` must be 2, 4 or 6.
    pub fn new(a: f64, k: u32) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth a must be positive, got {a}")));
        }
        if !matches!(k, 2 | 4 | 6) {
            return Err(Error::UnsupportedMode(format!("smoothing kernel order k = {k}; supported: 2, 4, 6")));
        }
        let c = if k == 2 { 1.0 / PI } else { 1.0 / sinc_power_integral(k) };
        Ok(SmoothingKernel { a, k, c })
    }

    /// The `k = 2` kernel whose law puts mass 3/4 on `[-1, 1]`.
    pub fn calibrated() -> Self {
        SmoothingKernel::new(calibrate_a(0.75), 2).expect("valid bandwidth")
    }

    pub fn density(&self, x: f64) -> f64 {
        let u = self.a * x;
        if u == 0.0 {
            self.a * self.c
        } else {
            self.a * self.c * (u.sin() / u).powi(self.k as i32)
        }
    }

    /// `2 pi a c(k)` times the density at `t` of a sum of `k` independent
    /// uniforms on `[-a, a]`.
    pub fn cf(&self, t: f64) -> f64 {
        let (a, k) = (self.a, self.k as i32);
        let s = (t + k as f64 * a) / (2.0 * a);
        if s <= 0.0 || s >= k as f64 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut fact = 1.0;
        for i in 1..k {
            fact *= i as f64;
        }
        for j in 0..=(s.floor() as i32) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * crate::special::binomial(k as u64, j as u64) * (s - j as f64).powi(k - 1);
        }
        let irwin_hall = acc / fact / (2.0 * a);
        2.0 * PI * a * self.c * irwin_hall
    }

    /// `int e^{itx} g(x) dx` by composite quadrature over `|x| <= cutoff`.
    pub fn cf_by_quadrature(&self, t: f64, cutoff: f64) -> f64 {
        let panels = (cutoff * self.a.max(t.abs()).max(1.0) * 2.0).ceil() as usize;
        2.0 * quad::composite(|x| self.density(x) * (t * x).cos(), 0.0, cutoff, panels)
    }

    /// `mu([-x, x])` for the smoothing law.
    pub fn central_mass(&self, x: f64) -> f64 {
        2.0 * quad::integrate(|u| self.density(u), 0.0, x).value
    }
}

/// Bandwidth `a` of the `k = 2` kernel with `mu([-1, 1]) = mass`, i.e.
/// `(2/pi) int_0^a sin^2 u / u^2 du = mass`, by bisection.
pub fn calibrate_a(mass: f64) -> f64 {
    let f = |a: f64| {
        2.0 / PI * quad::integrate(|u: f64| if u == 0.0 { 1.0 } else { (u.sin() / u).powi(2) }, 0.0, a).value
            - mass
    };
    let (mut lo, mut hi) = (1e-6, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaPoint {
    pub t: f64,
    pub one_minus_abs_alpha: f64,
    pub bound_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaReport {
    pub n: usize,
    pub beta3: f64,
    pub sigma_t2: f64,
    /// Largest admissible `t`, `N^{1/2} / (10^3 beta_3)`.
    pub t_max: f64,
    pub points: Vec<AlphaPoint>,
    /// `(|B|, t)` pairs where `|alpha|^{|B|} <= exp(-|B| t^2/4N)` failed.
    pub product_violations: Vec<(usize, f64)>,
    pub pass: bool,
}

/// Checks `|alpha(t)| <= 1 - t^2/4N` with `alpha(t) = E exp(it g(X)/(sigma_T N^{1/2}))`
/// on `grid` points of `0 <= t <= N^{1/2}/(10^3 beta_3)`, and the product form
/// `|alpha(t)|^{|B|} <= exp(-|B| t^2/4N)` for subset sizes `|B|` spread over `1..=N`.
pub fn verify_alpha_bound(dec: &HoeffdingDecomposition, dist: &Distribution, grid: usize) -> Result<AlphaReport> {
    let n = dec.n();
    let nf = n as f64;
    let cum = cumulants_with_orders(dec, dist, Mode::Exact, &[2.0])?;
    let sigma_t2 = dec
        .sigma_t2()
        .or_else(|| dec.sigma_t2_from_moments(cum.sigma2.value, cum.gamma(2.0).unwrap().value, 0.0))
        .ok_or_else(|| Error::InvalidArgument("var T unknown for this decomposition".into()))?;
    let scale = 1.0 / (sigma_t2.sqrt() * nf.sqrt());
    let g = dec.g().clone();
    let cf = CharFunction::of_map(dist, move |x| g.eval(&[x]) * scale);
    let beta3 = cum.beta3.value;
    let t_max = nf.sqrt() / (1e3 * beta3);
    let grid = grid.max(2);
    let points: Vec<AlphaPoint> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let t = t_max * i as f64 / (grid - 1) as f64;
            let d = cf.one_minus_abs(t);
            let gap = d - t * t / (4.0 * nf);
            // both sides vanish at t = 0
            AlphaPoint { t, one_minus_abs_alpha: d, bound_gap: gap, pass: gap >= -1e-15 }
        })
        .collect();
    let sizes: Vec<usize> = {
        let mut v = vec![1, 2, (n / 10).max(1), (n / 2).max(1), n];
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut product_violations = Vec::new();
    for p in &points {
        let log_abs = (-p.one_minus_abs_alpha).ln_1p();
        for &b in &sizes {
            let lhs = b as f64 * log_abs;
            let rhs = -(b as f64) * p.t * p.t / (4.0 * nf);
            if lhs > rhs + 1e-15 {
                product_violations.push((b, p.t));
            }
        }
    }
    let pass = points.iter().all(|p| p.pass) && product_violations.is_empty();
    Ok(AlphaReport { n, beta3, sigma_t2, t_max, points, product_violations, pass })
}

/// CSV with columns `t,abs_cf,bound`.
pub fn cf_table(cf: &CharFunction, ts: &[f64], bound: impl Fn(f64) -> f64) -> String {
    let mut out = String::from("t,abs_cf,bound\n");
    for &t in ts {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", t, cf.eval(t).norm(), bound(t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoeffding::known;

    #[test]
    fn rho_examples() {
        let r = cramer_rho(&CharFunction::standard_normal(), 1.0, 10.0, RHO_GRID).unwrap();
        assert!((r.rho - (1.0 - (-0.5f64).exp())).abs() < 1e-6);
        assert!((r.rho - 0.3934693).abs() < 1e-6);

        let rad = CharFunction::of_map(&Distribution::rademacher(), |x| x);
        let r = cramer_rho(&rad, 1.0, 4.0, RHO_GRID).unwrap();
        assert!(r.rho <= 1e-6, "{r:?}");
        assert!((r.t_max - PI).abs() < 1e-3);

        assert!(matches!(cramer_rho(&rad, 2.0, 2.0, 16), Err(Error::InvalidRange { .. })));
        let narrow = cramer_rho(&CharFunction::standard_normal(), 1.0, 1.0 + 1e-9, 16).unwrap();
        assert!((narrow.rho - (1.0 - (-0.5f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn rho_is_monotone_in_the_interval() {
        let d = Distribution::finite(&[(0.0, 0.3), (1.0, 0.5), (2.7, 0.2)]).unwrap();
        let cf = CharFunction::of_map(&d, |x| x);
        let wide = cramer_rho(&cf, 0.5, 12.0, 2048).unwrap().rho;
        let inner = cramer_rho(&cf, 2.0, 6.0, 2048).unwrap().rho;
        assert!(wide <= inner + 1e-12);
    }

    #[test]
    fn cf_invariants() {
        let d = Distribution::finite(&[(-1.0, 0.25), (0.3, 0.5), (2.0, 0.25)]).unwrap();
        let cfs = [
            CharFunction::of_map(&d, |x| x * x - 0.5),
            CharFunction::of_map(&Distribution::uniform(-1.0, 2.0).unwrap(), |x| x),
            CharFunction::normal(0.3, 1.7),
            CharFunction::monte_carlo(&d, |x| x, 20_000, 1),
        ];
        for cf in &cfs {
            assert!((cf.eval(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            for t in [0.1, 0.9, 3.3, 12.0] {
                let (p, m) = (cf.eval(t), cf.eval(-t));
                assert!((p - m.conj()).norm() < 1e-12);
                assert!(p.norm() <= 1.0 + 4.0 * cf.stderr() + 1e-12);
                let d = cf.one_minus_abs(t);
                assert!((d - (1.0 - p.norm())).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn smoothing_kernel_constants() {
        let k2 = SmoothingKernel::new(1.0, 2).unwrap();
        assert!((k2.density(0.0) - 1.0 / PI).abs() < 1e-15);
        assert!((k2.cf(0.0) - 1.0).abs() < 1e-14);
        assert_eq!(k2.cf(2.0), 0.0);
        assert_eq!(k2.cf(-2.5), 0.0);
        assert!((SmoothingKernel::new(1.0, 4).unwrap().c - 3.0 / (2.0 * PI)).abs() < 1e-9);
        assert!((SmoothingKernel::new(1.0, 6).unwrap().c - 20.0 / (11.0 * PI)).abs() < 1e-9);
        assert!(matches!(SmoothingKernel::new(1.0, 3), Err(Error::UnsupportedMode(_))));
        for k in [4, 6] {
            let s = SmoothingKernel::new(0.7, k).unwrap();
            assert!((s.cf(0.0) - 1.0).abs() < 1e-8);
            assert!(s.cf(k as f64 * 0.7).abs() < 1e-12);
            assert_eq!(s.cf(k as f64 * 0.7 + 1e-9), 0.0);
        }
    }

    #[test]
    fn k2_transform_is_triangular() {
        let a = 1.3;
        let s = SmoothingKernel::new(a, 2).unwrap();
        for t in [0.0f64, 0.4, 1.0, 2.2, 2.59] {
            let tri = 2.0 * PI * a / PI * (2.0 * a - t.abs()) / (4.0 * a * a);
            assert!((s.cf(t) - tri).abs() < 1e-14);
        }
    }

    #[test]
    fn transform_is_unimodal() {
        for k in [2, 4, 6] {
            let s = SmoothingKernel::new(0.9, k).unwrap();
            let ts: Vec<f64> = (0..=400).map(|i| i as f64 * k as f64 * 0.9 / 400.0).collect();
            for w in ts.windows(2) {
                assert!(s.cf(w[1]) <= s.cf(w[0]) + 1e-15);
            }
        }
    }

    #[test]
    fn calibration_hits_three_quarters() {
        let s = SmoothingKernel::calibrated();
        assert!((s.central_mass(1.0) - 0.75).abs() < 1e-10);
    }

    #[test]
    fn alpha_bound_examples() {
        for n in [10_000usize, 1_000_000] {
            let normal = known::linear(|x| x, n, 1.0);
            let rep = verify_alpha_bound(&normal, &Distribution::standard_normal(), 129).unwrap();
            assert!(rep.pass, "{:?} {:?}", rep.points.iter().filter(|p| !p.pass).take(3).collect::<Vec<_>>(), rep.product_violations.iter().take(3).collect::<Vec<_>>());
            let t = rep.t_max;
            let closed = 1.0 - (-t * t / (2.0 * n as f64)).exp();
            assert!((rep.points.last().unwrap().one_minus_abs_alpha - closed).abs() < 1e-12);

            let rad = known::linear(|x| x, n, 1.0);
            let rep = verify_alpha_bound(&rad, &Distribution::rademacher(), 129).unwrap();
            assert!(rep.pass);
            assert!((rep.t_max - (n as f64).sqrt() / 1e3).abs() < 1e-12);
            assert_eq!(rep.points[0].one_minus_abs_alpha, 0.0);
        }
    }

    #[test]
    fn table_has_header() {
        let csv = cf_table(&CharFunction::standard_normal(), &[0.0, 1.0], |_| 1.0);
        assert!(csv.starts_with("t,abs_cf,bound\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
