//! Hoeffding decomposition of symmetric statistics.
//!
//! For a finite-support law the canonical components are computed exactly by
//! subset Möbius inversion of the conditional expectations
//! `c_j(x_1..x_j) = E(T | X_1 = x_1, ..., X_j = x_j)`:
//!
//! ```text
//! T_A(x_A) = sum_{B ⊆ A} (-1)^{|A|-|B|} c_{|B|}(x_B)
//!          = prod_{i in A} (I - E_i) c_{|A|}
//! ```
//!
//! By exchangeability `T_A` only depends on `|A|`, so one table per order is
//! enough. The second form is what the code evaluates: each `(I - E_i)` is a
//! single pass over a `S^k` table. The stored kernels follow the scaling
//! `g = N^{1/2} T_1`, `psi = N^{3/2} T_2`, `chi = N^{5/2} T_3`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    check_budget, Distribution, Estimate, FiniteLaw, Mode, SymmetricKernel, SymmetricStatistic,
};
use crate::rng::{self, MomentAccumulator};
use crate::special::binomial;

/// A kernel of `arity` arguments tabulated on the atoms of a finite law.
/// Index order puts the first argument in the most significant position.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    law: FiniteLaw,
    arity: usize,
    values: Vec<f64>,
}

impl TabulatedKernel {
    pub(crate) fn from_parts(law: FiniteLaw, arity: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), law.len().pow(arity as u32));
        TabulatedKernel { law, arity, values }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn law(&self) -> &FiniteLaw {
        &self.law
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at support indices.
    pub fn at(&self, idx: &[usize]) -> f64 {
        let s = self.law.len();
        self.values[idx.iter().fold(0, |acc, &i| acc * s + i)]
    }

    /// Value at support points; `NaN` when an argument is not an atom.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s = self.law.len();
        let mut flat = 0;
        for &xi in x {
            match self.law.index_of(xi) {
                Some(i) => flat = flat * s + i,
                None => return f64::NAN,
            }
        }
        self.values[flat]
    }

    /// `E K(X_1..X_k)^2`.
    pub fn mean_square(&self) -> f64 {
        weighted_sum(&self.law, self.arity, &self.values, |v| v * v)
    }

    pub fn scaled(&self, c: f64) -> TabulatedKernel {
        TabulatedKernel {
            law: self.law.clone(),
            arity: self.arity,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn to_kernel(&self) -> SymmetricKernel {
        let me = self.clone();
        SymmetricKernel::certified(self.arity, move |x| me.eval(x))
    }

    /// Nested arrays (`k`-dimensional) for JSON output.
    pub fn to_nested(&self) -> serde_json::Value {
        fn nest(values: &[f64], s: usize, depth: usize) -> serde_json::Value {
            if depth == 0 {
                return serde_json::json!(values[0]);
            }
            let chunk = values.len() / s;
            serde_json::Value::Array(
                (0..s).map(|i| nest(&values[i * chunk..(i + 1) * chunk], s, depth - 1)).collect(),
            )
        }
        nest(&self.values, self.law.len(), self.arity)
    }
}

/// `sum_idx prod p(idx) f(table[idx])` over a `k`-dimensional table.
fn weighted_sum<F: Fn(f64) -> f64>(law: &FiniteLaw, k: usize, table: &[f64], f: F) -> f64 {
    let s = law.len();
    let p = law.probs();
    if k == 0 {
        return f(table[0]);
    }
    // peel the last axis: weights of the leading k-1 axes times p[last]
    let mut total = 0.0;
    let mut idx = vec![0usize; k];
    for (flat, &v) in table.iter().enumerate() {
        let mut rem = flat;
        for j in (0..k).rev() {
            idx[j] = rem % s;
            rem /= s;
        }
        let w: f64 = idx.iter().map(|&i| p[i]).product();
        total += w * f(v);
    }
    total
}

/// Integrates out the last axis of a `k`-dimensional table.
fn marginalize_last(law: &FiniteLaw, table: &[f64]) -> Vec<f64> {
    let s = law.len();
    let p = law.probs();
    table.chunks_exact(s).map(|c| c.iter().zip(p).map(|(v, w)| v * w).sum()).collect()
}

/// Replaces `table` by `(I - E_axis) table` for a `k`-dimensional table.
fn apply_difference(law: &FiniteLaw, table: &mut [f64], k: usize, axis: usize) {
    let s = law.len();
    let p = law.probs();
    let stride = s.pow((k - 1 - axis) as u32);
    let block = stride * s;
    table.par_chunks_mut(block).for_each(|chunk| {
        for o in 0..stride {
            let mean: f64 = (0..s).map(|i| p[i] * chunk[i * stride + o]).sum();
            for i in 0..s {
                chunk[i * stride + o] -= mean;
            }
        }
    });
}

/// Evaluates `T` on every point of `S^N`.
fn full_table(t: &SymmetricStatistic, law: &FiniteLaw) -> Result<Vec<f64>> {
    let n = t.n();
    check_budget(law.len(), n)?;
    let s = law.len();
    let total = s.pow(n as u32);
    let pts = law.points();
    let mut table = vec![0.0; total];
    let chunk = s.pow(n.min(4) as u32).max(1);
    table.par_chunks_mut(chunk).enumerate().for_each(|(c, out)| {
        let mut x = vec![0.0; n];
        for (o, slot) in out.iter_mut().enumerate() {
            let mut rem = c * chunk + o;
            for j in (0..n).rev() {
                x[j] = pts[rem % s];
                rem /= s;
            }
            *slot = t.eval(&x);
        }
    });
    Ok(table)
}

/// Conditional expectation tables `c_0, ..., c_N` (index `j` has `S^j`
/// entries).
fn conditional_tables(law: &FiniteLaw, full: Vec<f64>, n: usize) -> Vec<Vec<f64>> {
    let mut tables = vec![Vec::new(); n + 1];
    tables[n] = full;
    for j in (0..n).rev() {
        tables[j] = marginalize_last(law, &tables[j + 1]);
    }
    tables
}

fn canonical_from_conditional(law: &FiniteLaw, c_k: &[f64], k: usize) -> Vec<f64> {
    let mut t = c_k.to_vec();
    for axis in 0..k {
        apply_difference(law, &mut t, k, axis);
    }
    t
}

fn validate_indices(indices: &[usize], n: usize) -> Result<()> {
    for (i, &a) in indices.iter().enumerate() {
        if a >= n {
            return Err(Error::InvalidArgument(format!("index {a} out of range for N = {n}")));
        }
        if indices[..i].contains(&a) {
            return Err(Error::InvalidArgument(format!("duplicate index {a}")));
        }
    }
    Ok(())
}

/// The canonical component `T_A` for an index set `A` (zero-based, distinct),
/// as a kernel on `|A|` arguments.
pub fn canonical_component(
    t: &SymmetricStatistic,
    dist: &Distribution,
    a: &[usize],
) -> Result<TabulatedKernel> {
    let law = dist.require_finite("canonical components")?;
    validate_indices(a, t.n())?;
    let k = a.len();
    let tables = conditional_tables(law, full_table(t, law)?, t.n());
    Ok(TabulatedKernel {
        law: law.clone(),
        arity: k,
        values: canonical_from_conditional(law, &tables[k], k),
    })
}

/// Exact tables of the scaled kernels `g`, `psi`, `chi` on a finite law.
#[derive(Debug, Clone)]
pub struct KernelTables {
    pub g: TabulatedKernel,
    pub psi: TabulatedKernel,
    pub chi: TabulatedKernel,
}

impl KernelTables {
    pub fn law(&self) -> &FiniteLaw {
        self.g.law()
    }
}

/// Hoeffding decomposition `T - ET = L + Q + K + R` with
/// `L = N^{-1/2} sum g`, `Q = N^{-3/2} sum psi`, `K = N^{-5/2} sum chi`.
#[derive(Debug, Clone)]
pub struct HoeffdingDecomposition {
    n: usize,
    mean: f64,
    g: SymmetricKernel,
    psi: SymmetricKernel,
    chi: SymmetricKernel,
    component_variances: Option<Vec<f64>>,
    sigma_t2: Option<f64>,
    degree: Option<usize>,
    tables: Option<Arc<KernelTables>>,
    breaks: Vec<f64>,
}

impl HoeffdingDecomposition {
    /// A decomposition known in closed form. `degree` is the order of the
    /// highest nonzero component when it is at most 3 (so `R = 0`).
    pub fn from_kernels(
        n: usize,
        mean: f64,
        g: SymmetricKernel,
        psi: SymmetricKernel,
        chi: SymmetricKernel,
        degree: Option<usize>,
    ) -> Self {
        HoeffdingDecomposition {
            n,
            mean,
            g,
            psi,
            chi,
            component_variances: None,
            sigma_t2: None,
            degree,
            tables: None,
            breaks: Vec::new(),
        }
    }

    /// Points where `g` and `psi` (in each argument) may jump or kink;
    /// quadrature splits there.
    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub(crate) fn with_tables(mut self, tables: KernelTables) -> Self {
        self.tables = Some(Arc::new(tables));
        self
    }

    pub(crate) fn with_component_variances(mut self, sigma_k2: Vec<f64>) -> Self {
        let total = sigma_k2
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0.0)
            .map(|(i, s)| binomial(self.n as u64, (i + 1) as u64) * s)
            .sum();
        self.sigma_t2 = Some(total);
        self.component_variances = Some(sigma_k2);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `E T`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn g(&self) -> &SymmetricKernel {
        &self.g
    }

    pub fn psi(&self) -> &SymmetricKernel {
        &self.psi
    }

    pub fn chi(&self) -> &SymmetricKernel {
        &self.chi
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn tables(&self) -> Option<&KernelTables> {
        self.tables.as_deref()
    }

    /// `sigma_k^2 = E g_k^2` for `k = 1..=N`, when computed exactly.
    pub fn component_variances(&self) -> Option<&[f64]> {
        self.component_variances.as_deref()
    }

    pub fn component_variance(&self, k: usize) -> Option<f64> {
        self.component_variances.as_ref().and_then(|v| v.get(k.checked_sub(1)?).copied())
    }

    /// `Var T` assembled from the component variances.
    pub fn sigma_t2(&self) -> Option<f64> {
        self.sigma_t2
    }

    /// Sets `Var T` from `E g^2`, `E psi^2`, `E chi^2` for statistics of
    /// degree at most three.
    pub fn sigma_t2_from_moments(&self, eg2: f64, epsi2: f64, echi2: f64) -> Option<f64> {
        if self.degree? > 3 {
            return None;
        }
        let n = self.n as f64;
        Some(
            eg2 + binomial(self.n as u64, 2) * epsi2 / n.powi(3)
                + binomial(self.n as u64, 3) * echi2 / n.powi(5),
        )
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            n: self.n,
            mean: self.mean,
            sigma_t2: self.sigma_t2,
            component_variances: self.component_variances.clone(),
            support: self.tables.as_ref().map(|t| t.law().points().to_vec()),
            g: self.tables.as_ref().map(|t| t.g.to_nested()),
            psi: self.tables.as_ref().map(|t| t.psi.to_nested()),
            chi: self.tables.as_ref().map(|t| t.chi.to_nested()),
        }
    }
}

/// JSON view of a decomposition: component variances and kernel tables
/// indexed by support points.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub mean: f64,
    pub sigma_t2: Option<f64>,
    pub component_variances: Option<Vec<f64>>,
    pub support: Option<Vec<f64>>,
    pub g: Option<serde_json::Value>,
    pub psi: Option<serde_json::Value>,
    pub chi: Option<serde_json::Value>,
}

/// Full decomposition of `T`. Exact on finite-support laws; for sampler-backed
/// laws only a decomposition attached to the statistic can be returned.
pub fn decompose(t: &SymmetricStatistic, dist: &Distribution) -> Result<HoeffdingDecomposition> {
    let Some(law) = dist.finite_law() else {
        return t.known_decomposition().cloned().ok_or_else(|| {
            Error::UnsupportedMode(
                "decomposition of a sampler-backed law needs a known decomposition".into(),
            )
        });
    };
    let n = t.n();
    let tables = conditional_tables(law, full_table(t, law)?, n);
    let sigma_k2: Vec<f64> = (1..=n)
        .map(|k| {
            let tk = canonical_from_conditional(law, &tables[k], k);
            weighted_sum(law, k, &tk, |v| v * v)
        })
        .collect();
    let nf = n as f64;
    let component = |k: usize, scale: f64| {
        let values = if k <= n {
            canonical_from_conditional(law, &tables[k], k).iter().map(|v| v * scale).collect()
        } else {
            vec![0.0; law.len().pow(k as u32)]
        };
        TabulatedKernel { law: law.clone(), arity: k, values }
    };
    let kt = KernelTables {
        g: component(1, nf.sqrt()),
        psi: component(2, nf.powf(1.5)),
        chi: component(3, nf.powf(2.5)),
    };
    Ok(HoeffdingDecomposition::from_kernels(
        n,
        tables[0][0],
        kt.g.to_kernel(),
        kt.psi.to_kernel(),
        kt.chi.to_kernel(),
        None,
    )
    .with_component_variances(sigma_k2)
    .with_tables(kt))
}

/// `(D_{i_1} ... D_{i_m} T)(x) = sum_{S ⊆ indices} (-1)^{|S|} (E_S T)(x)`.
pub fn difference_op(
    t: &SymmetricStatistic,
    dist: &Distribution,
    indices: &[usize],
    x: &[f64],
    mode: Mode,
) -> Result<Estimate> {
    let n = t.n();
    validate_indices(indices, n)?;
    if x.len() != n {
        return Err(Error::InvalidArgument(format!("x has {} entries, N = {n}", x.len())));
    }
    let m = indices.len();
    match mode {
        Mode::Exact => {
            let law = dist.require_finite("exact difference operators")?;
            check_budget(law.len(), m)?;
            let s = law.len();
            let mut total = 0.0;
            let mut y = x.to_vec();
            for mask in 0u32..(1 << m) {
                let chosen: Vec<usize> =
                    (0..m).filter(|j| mask & (1 << j) != 0).map(|j| indices[j]).collect();
                let sign = if chosen.len() % 2 == 0 { 1.0 } else { -1.0 };
                // E_S T(x): integrate the chosen coordinates
                let mut es = 0.0;
                let mut idx = vec![0usize; chosen.len()];
                loop {
                    let mut w = 1.0;
                    for (c, &i) in chosen.iter().zip(&idx) {
                        y[*c] = law.points()[i];
                        w *= law.probs()[i];
                    }
                    es += w * t.eval(&y);
                    let mut j = chosen.len();
                    let done = loop {
                        if j == 0 {
                            break true;
                        }
                        j -= 1;
                        idx[j] += 1;
                        if idx[j] < s {
                            break false;
                        }
                        idx[j] = 0;
                    };
                    if done {
                        break;
                    }
                }
                for &c in &chosen {
                    y[c] = x[c];
                }
                total += sign * es;
            }
            Ok(Estimate::exact(total))
        }
        Mode::MonteCarlo { reps, seed } => {
            if reps == 0 {
                return Err(Error::InvalidArgument("zero replications".into()));
            }
            let acc = rng::mc_moments(reps, seed, 1, |r, out| {
                let fresh: Vec<f64> = (0..m).map(|_| dist.sample(r)).collect();
                let mut y = x.to_vec();
                let mut v = 0.0;
                for mask in 0u32..(1 << m) {
                    let mut odd = false;
                    for j in 0..m {
                        if mask & (1 << j) != 0 {
                            y[indices[j]] = fresh[j];
                            odd = !odd;
                        } else {
                            y[indices[j]] = x[indices[j]];
                        }
                    }
                    let val = t.eval(&y);
                    v += if odd { -val } else { val };
                }
                out[0] = v;
            });
            Ok(Estimate::new(acc.mean(0), acc.stderr(0)))
        }
    }
}

/// `Delta_m^2 = E |N^{m-1/2} D_1 ... D_m T|^2` for `m = 1..=4`.
#[derive(Debug, Clone, Serialize)]
pub struct DifferenceMoments {
    pub delta: [Estimate; 4],
    pub mode: Mode,
}

impl DifferenceMoments {
    /// `Delta_m^2` for `m` in `1..=4`.
    pub fn get(&self, m: usize) -> Estimate {
        self.delta[m - 1]
    }
}

/// `Delta_m^2 = N^{2m-1} sum_{k>=m} sigma_k^2 C(N-m, k-m)`, the component
/// form of the difference moments.
pub fn delta_from_components(sigma_k2: &[f64], m: usize) -> f64 {
    let n = sigma_k2.len();
    if m > n {
        return 0.0;
    }
    let s: f64 = (m..=n)
        .filter(|&k| sigma_k2[k - 1] != 0.0)
        .map(|k| sigma_k2[k - 1] * binomial((n - m) as u64, (k - m) as u64))
        .sum();
    (n as f64).powi(2 * m as i32 - 1) * s
}

/// Difference moments `Delta_1^2..Delta_4^2`. Orders above `N` are zero.
///
/// Exact mode applies `(I - E_1) ... (I - E_m)` to the full table of `T`.
/// Monte Carlo mode uses the symmetrised estimator
/// `2^{-m} E (sum_{S ⊆ [m]} (-1)^{|S|} T(X^S))^2`, where `X^S` replaces the
/// coordinates in `S` by independent copies; it is unbiased because the
/// terms for different `S` are orthogonal.
pub fn delta_moments(
    t: &SymmetricStatistic,
    dist: &Distribution,
    mode: Mode,
) -> Result<DifferenceMoments> {
    let n = t.n();
    let mmax = n.min(4);
    let nf = n as f64;
    let mut delta = [Estimate::exact(0.0); 4];
    match mode {
        Mode::Exact => {
            let law = dist.require_finite("exact difference moments")?;
            let mut table = full_table(t, law)?;
            for m in 1..=mmax {
                apply_difference(law, &mut table, n, m - 1);
                let ms = weighted_sum(law, n, &table, |v| v * v);
                delta[m - 1] = Estimate::exact(nf.powi(2 * m as i32 - 1) * ms);
            }
        }
        Mode::MonteCarlo { reps, seed } => {
            if reps == 0 {
                return Err(Error::InvalidArgument("zero replications".into()));
            }
            let acc = rng::mc_moments(reps, seed, 4, |r, out| {
                let mut x = vec![0.0; n];
                dist.fill(r, &mut x);
                let fresh: Vec<f64> = (0..mmax).map(|_| dist.sample(r)).collect();
                let mut y = x.clone();
                for m in 1..=4 {
                    if m > mmax {
                        out[m - 1] = 0.0;
                        continue;
                    }
                    let mut v = 0.0;
                    for mask in 0u32..(1 << m) {
                        let mut odd = false;
                        for j in 0..m {
                            if mask & (1 << j) != 0 {
                                y[j] = fresh[j];
                                odd = !odd;
                            } else {
                                y[j] = x[j];
                            }
                        }
                        let val = t.eval(&y);
                        v += if odd { -val } else { val };
                    }
                    out[m - 1] = v * v / (1u32 << m) as f64;
                }
            });
            for m in 1..=mmax {
                let scale = nf.powi(2 * m as i32 - 1);
                delta[m - 1] = Estimate::new(scale * acc.mean(m - 1), scale * acc.stderr(m - 1));
            }
        }
    }
    Ok(DifferenceMoments { delta, mode })
}

/// One checked relation of the variance identity / remainder inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub n: usize,
    pub items: Vec<CheckItem>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

const IDENTITY_TOL: f64 = 1e-9;

fn leq(lhs: f64, rhs: f64) -> bool {
    // equality cases (e.g. linear statistics) must not fail on rounding
    lhs <= rhs + 1e-12 * rhs.abs().max(lhs.abs()) + 1e-300
}

/// Checks, on an exact decomposition:
///
/// * `var T = sum_k C(N,k) sigma_k^2` (identity, tolerance `1e-9`),
/// * `E R_m^2 <= N^{-(m-1)} Delta_m^2` for `m = 1..=min(4, N)`,
/// * `Delta_m^2 <= N^{2m-1} sigma_m^2 + N^{-1} Delta_{m+1}^2` for `m = 1..=3`,
/// * `Delta_m^2` by definition equals its component form (identity),
/// * `0 <= 1 - sigma^2 / var T`.
pub fn verify_appendix1(t: &SymmetricStatistic, dist: &Distribution) -> Result<IdentityReport> {
    let law = dist.require_finite("exact remainder checks")?;
    let n = t.n();
    let nf = n as f64;
    let dec = decompose(t, dist)?;
    let sk = dec.component_variances().expect("exact decomposition").to_vec();
    let full = full_table(t, law)?;
    let mean = weighted_sum(law, n, &full, |v| v);
    let var_direct = weighted_sum(law, n, &full, |v| (v - mean) * (v - mean));
    let var_components: f64 =
        sk.iter().enumerate().map(|(i, s)| binomial(n as u64, (i + 1) as u64) * s).sum();
    let deltas = delta_moments(t, dist, Mode::Exact)?;
    let delta = |m: usize| if m <= 4 { deltas.get(m).value } else { 0.0 };

    let close = |a: f64, b: f64| (a - b).abs() <= IDENTITY_TOL * a.abs().max(b.abs()).max(1.0);
    let mut items = vec![CheckItem {
        name: "variance_identity".into(),
        lhs: var_direct,
        rhs: var_components,
        pass: close(var_direct, var_components),
    }];
    for m in 1..=n.min(4) {
        let r2: f64 = (m..=n).map(|k| binomial(n as u64, k as u64) * sk[k - 1]).sum();
        let rhs = nf.powi(-(m as i32 - 1)) * delta(m);
        items.push(CheckItem { name: format!("remainder m={m}"), lhs: r2, rhs, pass: leq(r2, rhs) });
    }
    for m in 1..=n.min(3) {
        let rhs = nf.powi(2 * m as i32 - 1) * sk[m - 1] + delta(m + 1) / nf;
        items.push(CheckItem { name: format!("difference_chain m={m}"), lhs: delta(m), rhs, pass: leq(delta(m), rhs) });
    }
    for m in 1..=n.min(4) {
        let comp = delta_from_components(&sk, m);
        items.push(CheckItem {
            name: format!("difference_components m={m}"),
            lhs: delta(m),
            rhs: comp,
            pass: close(delta(m), comp),
        });
    }
    let sigma2 = nf * sk[0];
    let gap = if var_direct > 0.0 { 1.0 - sigma2 / var_direct } else { 0.0 };
    items.push(CheckItem { name: "linear_share".into(), lhs: 0.0, rhs: gap, pass: leq(0.0, gap) });
    Ok(IdentityReport { n, items })
}

/// Decompositions known in closed form.
pub mod known {
    use super::*;
    use crate::model::{nearest_split, Distribution};

    /// Degree-2 U-statistic `(sqrt N/2) C(N,2)^{-1} sum h(X_i,X_j)` given the
    /// projection `h1(x) = E h(x, X)` and `eh = E h(X_1, X_2)`:
    /// `g = h1 - eh`, `psi = N/(N-1) (h - h1(x) - h1(y) + eh)`.
    pub fn u_statistic<H, P>(h: H, h1: P, eh: f64, n: usize) -> HoeffdingDecomposition
    where
        H: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let h1 = Arc::new(h1);
        let h1g = h1.clone();
        let g = SymmetricKernel::certified(1, move |x| h1g(x[0]) - eh);
        let c = n as f64 / (n as f64 - 1.0);
        let psi = SymmetricKernel::certified(2, move |x| {
            c * (h(x[0], x[1]) - h1(x[0]) - h1(x[1]) + eh)
        });
        let mean = (n as f64).sqrt() / 2.0 * eh;
        HoeffdingDecomposition::from_kernels(n, mean, g, psi, SymmetricKernel::zero(3), Some(2))
    }

    /// Exact decomposition of a degree-2 U-statistic on a finite law, valid
    /// for any `N` (only `g` and `psi` are nonzero).
    pub fn u_statistic_exact<H>(h: H, dist: &Distribution, n: usize) -> Result<HoeffdingDecomposition>
    where
        H: Fn(f64, f64) -> f64,
    {
        let law = dist.require_finite("exact U-statistic decomposition")?;
        if n < 2 {
            return Err(Error::InvalidSize(format!("U-statistic needs N >= 2, got {n}")));
        }
        let s = law.len();
        let (pts, p) = (law.points(), law.probs());
        let htab: Vec<f64> = (0..s * s).map(|ij| h(pts[ij / s], pts[ij % s])).collect();
        let h1: Vec<f64> =
            (0..s).map(|i| (0..s).map(|j| p[j] * htab[i * s + j]).sum()).collect();
        let eh: f64 = (0..s).map(|i| p[i] * h1[i]).sum();
        let nf = n as f64;
        let c = nf / (nf - 1.0);
        let g = TabulatedKernel { law: law.clone(), arity: 1, values: h1.iter().map(|v| v - eh).collect() };
        let psi = TabulatedKernel {
            law: law.clone(),
            arity: 2,
            values: (0..s * s)
                .map(|ij| c * (htab[ij] - h1[ij / s] - h1[ij % s] + eh))
                .collect(),
        };
        let chi = TabulatedKernel { law: law.clone(), arity: 3, values: vec![0.0; s * s * s] };
        let mut sk = vec![0.0; n];
        sk[0] = g.mean_square() / nf;
        sk[1] = psi.mean_square() / nf.powi(3);
        let dec = HoeffdingDecomposition::from_kernels(
            n,
            nf.sqrt() / 2.0 * eh,
            g.to_kernel(),
            psi.to_kernel(),
            chi.to_kernel(),
            Some(2),
        )
        .with_component_variances(sk)
        .with_tables(KernelTables { g, psi, chi });
        Ok(dec)
    }

    /// Linear statistic `N^{-1/2} sum g(X_i)` with centered `g`.
    pub fn linear<G>(g: G, n: usize, sigma2: f64) -> HoeffdingDecomposition
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut sk = vec![0.0; n];
        sk[0] = sigma2 / n as f64;
        HoeffdingDecomposition::from_kernels(
            n,
            0.0,
            SymmetricKernel::certified(1, move |x| g(x[0])),
            SymmetricKernel::zero(2),
            SymmetricKernel::zero(3),
            Some(1),
        )
        .with_component_variances(sk)
    }

    /// Closed-form decomposition of the nearly-lattice counterexample
    /// `T = (A + B)(1 - B)` with `A = sum a_j`, `B = sum f_j`,
    /// `a = [sqrt N x]/N`, `f = {sqrt N x}/N`, for `X ~ Uniform(-1/2, 1/2)`.
    ///
    /// With `alpha`, `phi` the centered `a`, `f` and `cA = N E a`,
    /// `cB = N E f`:
    ///
    /// ```text
    /// T - ET = sum [alpha(1-cB) + phi(1-cA-2cB) - (alpha phi - E) - (phi^2 - E)]
    ///        - sum_{i<j} [alpha_i phi_j + alpha_j phi_i + 2 phi_i phi_j]
    /// ```
    pub fn example1(n: usize) -> HoeffdingDecomposition {
        let nf = n as f64;
        let root = nf.sqrt();
        let unif = Distribution::uniform(-0.5, 0.5).expect("valid law");
        let parts = move |x: f64| {
            let (r, fr) = nearest_split(root * x);
            (r / nf, fr / nf)
        };
        // jumps of [sqrt N x] sit at half-integers / sqrt N
        let half = (0.5 * root).ceil() as i64 + 1;
        let breaks: Vec<f64> = (-half..=half).map(|k| (k as f64 + 0.5) / root).collect();
        let ea = unif.integrate_with_breaks(|x| parts(x).0, &breaks);
        let ef = unif.integrate_with_breaks(|x| parts(x).1, &breaks);
        let eaf = unif.integrate_with_breaks(|x| { let (a, f) = parts(x); a * f }, &breaks);
        let ef2 = unif.integrate_with_breaks(|x| parts(x).1.powi(2), &breaks);
        let (ca, cb) = (nf * ea, nf * ef);
        let cov_af = eaf - ea * ef;
        let var_f = ef2 - ef * ef;
        let mean = ca + cb - ca * cb - cb * cb - nf * cov_af - nf * var_f;
        let g = SymmetricKernel::certified(1, move |x| {
            let (a, f) = parts(x[0]);
            let (al, ph) = (a - ea, f - ef);
            root * (al * (1.0 - cb) + ph * (1.0 - ca - 2.0 * cb) - (al * ph - cov_af) - (ph * ph - var_f))
        });
        let psi_scale = nf.powf(1.5);
        let psi = SymmetricKernel::certified(2, move |x| {
            let (a1, f1) = parts(x[0]);
            let (a2, f2) = parts(x[1]);
            let (al1, ph1, al2, ph2) = (a1 - ea, f1 - ef, a2 - ea, f2 - ef);
            -psi_scale * (al1 * ph2 + al2 * ph1 + 2.0 * ph1 * ph2)
        });
        HoeffdingDecomposition::from_kernels(n, mean, g, psi, SymmetricKernel::zero(3), Some(2))
            .with_breaks(breaks)
    }
}

/// Block-parallel Monte Carlo estimate of `E T` and `Var T`, used as the
/// standardization oracle for laws without an exact decomposition.
pub fn mc_mean_variance(
    t: &SymmetricStatistic,
    dist: &Distribution,
    reps: u64,
    seed: u64,
) -> (Estimate, f64) {
    let n = t.n();
    let blocks = rng::par_blocks(reps, seed, |r, len| {
        let mut acc = MomentAccumulator::new(1);
        let mut x = vec![0.0; n];
        for _ in 0..len {
            dist.fill(r, &mut x);
            acc.push(&[t.eval(&x)]);
        }
        acc
    });
    let mut acc = MomentAccumulator::new(1);
    for b in &blocks {
        acc.merge(b);
    }
    (Estimate::new(acc.mean(0), acc.stderr(0)), acc.covariance(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_mean, u_statistic, Distribution};

    fn coin01() -> Distribution {
        Distribution::finite(&[(0.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    fn uniform3() -> Distribution {
        Distribution::finite(&[(-1.0, 1.0 / 3.0), (0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0)]).unwrap()
    }

    #[test]
    fn sample_mean_components() {
        let d = Distribution::finite(&[(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)]).unwrap();
        let mu = d.mean();
        let t = sample_mean(4).unwrap();
        let c1 = canonical_component(&t, &d, &[2]).unwrap();
        for &x in d.finite_law().unwrap().points() {
            assert!((c1.eval(&[x]) - (x - mu) / 4.0).abs() < 1e-15);
        }
        let c2 = canonical_component(&t, &d, &[0, 3]).unwrap();
        assert!(c2.values().iter().all(|v| v.abs() < 1e-15));

        let dec = decompose(&t, &d).unwrap();
        for &x in d.finite_law().unwrap().points() {
            assert!((dec.g().eval(&[x]) - (x - mu) / 2.0).abs() < 1e-15);
        }
        assert!(dec.tables().unwrap().psi.values().iter().all(|v| v.abs() < 1e-14));
        assert!(dec.tables().unwrap().chi.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn product_kernel_components() {
        let r = Distribution::rademacher();
        let t = u_statistic(SymmetricKernel::certified(2, |x| x[0] * x[1]), 4).unwrap();
        let c1 = canonical_component(&t, &r, &[0]).unwrap();
        assert!(c1.values().iter().all(|v| v.abs() < 1e-15));
        let c2 = canonical_component(&t, &r, &[1, 2]).unwrap();
        // proportional to xy: U = (sqrt4/2)/6 sum x_i x_j
        let coef = c2.at(&[1, 1]);
        assert!((coef - 1.0 / 6.0).abs() < 1e-15);
        for (i, x) in [-1.0, 1.0].iter().enumerate() {
            for (j, y) in [-1.0, 1.0].iter().enumerate() {
                assert!((c2.at(&[i, j]) - coef * x * y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_statistic_has_no_components() {
        let t = SymmetricStatistic::new(3, "constant", |_| 2.5);
        let d = uniform3();
        for k in 1..=3 {
            let idx: Vec<usize> = (0..k).collect();
            let c = canonical_component(&t, &d, &idx).unwrap();
            assert!(c.values().iter().all(|v| v.abs() < 1e-15));
        }
        let dec = decompose(&t, &d).unwrap();
        assert_eq!(dec.mean(), 2.5);
        assert_eq!(dec.sigma_t2(), Some(0.0));
    }

    #[test]
    fn gini_on_fair_coin_has_no_linear_part() {
        let t = u_statistic(SymmetricKernel::certified(2, |x| (x[0] - x[1]).abs()), 5).unwrap();
        let dec = decompose(&t, &coin01()).unwrap();
        assert!(dec.tables().unwrap().g.values().iter().all(|v| v.abs() < 1e-14));
        let sk = dec.component_variances().unwrap();
        assert!(sk[0].abs() < 1e-28);
        assert!((binomial(5, 2) * sk[1] - dec.sigma_t2().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn additive_kernel_has_no_quadratic_part() {
        let r = Distribution::rademacher();
        let t = u_statistic(SymmetricKernel::certified(2, |x| x[0] + x[1]), 5).unwrap();
        let dec = decompose(&t, &r).unwrap();
        assert!(dec.tables().unwrap().psi.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn index_validation() {
        let t = sample_mean(3).unwrap();
        let d = uniform3();
        assert!(matches!(canonical_component(&t, &d, &[0, 0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(canonical_component(&t, &d, &[3]), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            difference_op(&t, &d, &[1, 1], &[0.0; 3], Mode::Exact),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            decompose(&t, &Distribution::standard_normal()),
            Err(Error::UnsupportedMode(_))
        ));
    }

    #[test]
    fn difference_examples() {
        let r = Distribution::rademacher();
        let d = uniform3();
        let mean = sample_mean(4).unwrap();
        let x = [1.0, -1.0, 0.0, 1.0];
        assert!(difference_op(&mean, &d, &[0, 2], &x, Mode::Exact).unwrap().value.abs() < 1e-15);

        let u = u_statistic(SymmetricKernel::certified(2, |x| x[0] * x[0] * x[1] + x[0] * x[1] * x[1]), 4)
            .unwrap();
        assert!(difference_op(&u, &d, &[0, 1, 3], &x, Mode::Exact).unwrap().value.abs() < 1e-14);

        let pairs = SymmetricStatistic::new(3, "sum_{i<j} x_i x_j", |x| {
            x[0] * x[1] + x[0] * x[2] + x[1] * x[2]
        });
        let v = difference_op(&pairs, &r, &[0, 1], &[1.0, 1.0, 1.0], Mode::Exact).unwrap();
        assert!((v.value - 1.0).abs() < 1e-15);
        let mc = difference_op(&pairs, &r, &[0, 1], &[1.0, 1.0, 1.0], Mode::mc(40_000, 3)).unwrap();
        assert!((mc.value - 1.0).abs() < 4.0 * mc.stderr.max(1e-12));
    }

    #[test]
    fn delta_moment_examples() {
        let d = uniform3();
        let dm = delta_moments(&sample_mean(5).unwrap(), &d, Mode::Exact).unwrap();
        for m in 2..=4 {
            assert!(dm.get(m).value.abs() < 1e-20);
        }
        // D_1 T = (X_1 - mu) / N, so Delta_1^2 = var X / N
        assert!((dm.get(1).value - d.variance() / 5.0).abs() < 1e-14);

        let u = u_statistic(SymmetricKernel::certified(2, |x| (x[0] - x[1]).abs()), 5).unwrap();
        let dm = delta_moments(&u, &d, Mode::Exact).unwrap();
        assert!(dm.get(2).value > 0.0);
        assert!(dm.get(3).value.abs() < 1e-18);
        assert!(dm.get(4).value.abs() < 1e-18);
    }

    #[test]
    fn mc_delta_moments_agree_with_exact() {
        let d = uniform3();
        let t = SymmetricStatistic::new(4, "max + sum^3", |x| {
            x.iter().cloned().fold(f64::MIN, f64::max) + x.iter().sum::<f64>().powi(3) / 10.0
        });
        let exact = delta_moments(&t, &d, Mode::Exact).unwrap();
        let mc = delta_moments(&t, &d, Mode::mc(200_000, 9)).unwrap();
        for m in 1..=4 {
            let (e, s) = (exact.get(m).value, mc.get(m));
            assert!((s.value - e).abs() < 5.0 * s.stderr + 1e-12, "m={m}: {e} vs {s:?}");
        }
    }

    #[test]
    fn identity_report_examples() {
        let rep = verify_appendix1(&sample_mean(4).unwrap(), &uniform3()).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        let u = u_statistic(SymmetricKernel::certified(2, |x| (x[0] - x[1]).abs()), 5).unwrap();
        let rep = verify_appendix1(&u, &uniform3()).unwrap();
        let var = rep.item("variance_identity").unwrap();
        assert!((var.lhs - var.rhs).abs() < 1e-10);
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn exact_u_statistic_shortcut_matches_full_decomposition() {
        let d = Distribution::finite(&[(-1.0, 0.3), (0.5, 0.3), (2.0, 0.4)]).unwrap();
        let h = |x: f64, y: f64| (x - y).abs() + x * y;
        let n = 5;
        let full = decompose(&u_statistic(SymmetricKernel::certified(2, move |z| h(z[0], z[1])), n).unwrap(), &d)
            .unwrap();
        let fast = known::u_statistic_exact(h, &d, n).unwrap();
        assert!((full.mean() - fast.mean()).abs() < 1e-13);
        assert!((full.sigma_t2().unwrap() - fast.sigma_t2().unwrap()).abs() < 1e-13);
        let (a, b) = (full.tables().unwrap(), fast.tables().unwrap());
        for (x, y) in a.g.values().iter().zip(b.g.values()) {
            assert!((x - y).abs() < 1e-13);
        }
        for (x, y) in a.psi.values().iter().zip(b.psi.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn report_nests_tables() {
        let dec = decompose(&sample_mean(3).unwrap(), &uniform3()).unwrap();
        let rep = serde_json::to_value(dec.report()).unwrap();
        assert_eq!(rep["psi"].as_array().unwrap().len(), 3);
        assert_eq!(rep["chi"][0][0].as_array().unwrap().len(), 3);
        assert_eq!(rep["component_variances"].as_array().unwrap().len(), 3);
    }
}
