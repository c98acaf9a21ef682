//! The two-term Edgeworth expansion
//!
//! ```text
//! G(x) = Phi(x) - kappa3/(6 sqrt N) He2(x) phi(x)
//!        - (1/N) (kappa3^2/72 He5(x) + kappa4/24 He3(x)) phi(x)
//! ```
//!
//! with `He2 = x^2 - 1`, `He3 = x^3 - 3x`, `He5 = x^5 - 10x^3 + 15x`, its
//! one-term truncation and the normal baseline, plus exact Kolmogorov
//! distances to empirical distribution functions.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{hermite, normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `Phi`.
    Zero,
    /// `Phi` plus the `N^{-1/2}` term.
    One,
    /// The full two-term expansion.
    Two,
}

/// The separate pieces of `G(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terms {
    pub normal: f64,
    /// `-kappa3/(6 sqrt N) He2(x) phi(x)`.
    pub skew: f64,
    /// `-(1/N) kappa3^2/72 He5(x) phi(x)`.
    pub skew_squared: f64,
    /// `-(1/N) kappa4/24 He3(x) phi(x)`.
    pub kurtosis: f64,
}

impl Terms {
    pub fn sum(&self, order: Order) -> f64 {
        match order {
            Order::Zero => self.normal,
            Order::One => self.normal + self.skew,
            Order::Two => self.normal + self.skew + self.skew_squared + self.kurtosis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub n: usize,
    pub kappa3: f64,
    pub kappa4: f64,
    pub order: Order,
}

impl Expansion {
    pub fn new(n: usize, kappa3: f64, kappa4: f64, order: Order) -> Self {
        Expansion { n, kappa3, kappa4, order }
    }

    pub fn normal() -> Self {
        Expansion { n: 1, kappa3: 0.0, kappa4: 0.0, order: Order::Zero }
    }

    pub fn with_order(self, order: Order) -> Self {
        Expansion { order, ..self }
    }

    pub fn terms(&self, x: f64) -> Terms {
        let nf = self.n as f64;
        let phi = normal_pdf(x);
        Terms {
            normal: normal_cdf(x),
            skew: -self.kappa3 / (6.0 * nf.sqrt()) * hermite(2, x) * phi,
            skew_squared: -self.kappa3 * self.kappa3 / (72.0 * nf) * hermite(5, x) * phi,
            kurtosis: -self.kappa4 / (24.0 * nf) * hermite(3, x) * phi,
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.terms(x).sum(self.order)
    }

    /// `G'(x) = phi(x) [1 + kappa3/(6 sqrt N) He3 + (1/N)(kappa3^2/72 He6 + kappa4/24 He4)]`.
    pub fn density(&self, x: f64) -> f64 {
        let nf = self.n as f64;
        let mut poly = 1.0;
        if self.order != Order::Zero {
            poly += self.kappa3 / (6.0 * nf.sqrt()) * hermite(3, x);
        }
        if self.order == Order::Two {
            poly += (self.kappa3 * self.kappa3 / 72.0 * hermite(6, x) + self.kappa4 / 24.0 * hermite(4, x)) / nf;
        }
        normal_pdf(x) * poly
    }

    /// `int e^{itx} dG(x) = e^{-t^2/2}[1 + kappa3/6 (it)^3/sqrt N
    /// + kappa4/24 (it)^4/N + kappa3^2/72 (it)^6/N]`.
    pub fn fourier_transform(&self, t: f64) -> Complex64 {
        let nf = self.n as f64;
        let it = Complex64::new(0.0, t);
        let mut poly = Complex64::new(1.0, 0.0);
        if self.order != Order::Zero {
            poly += self.kappa3 / 6.0 * it.powu(3) / nf.sqrt();
        }
        if self.order == Order::Two {
            poly += (self.kappa4 / 24.0 * it.powu(4) + self.kappa3 * self.kappa3 / 72.0 * it.powu(6)) / nf;
        }
        poly * (-0.5 * t * t).exp()
    }

    /// `sup_x |G'(x)|`, located on a grid over `[-12, 12]` and refined by
    /// golden-section search.
    pub fn sup_abs_density(&self) -> f64 {
        let f = |x: f64| self.density(x).abs();
        let h = 24.0 / 4800.0;
        let mut best = (0.0, f(0.0));
        for i in 0..=4800 {
            let x = -12.0 + i as f64 * h;
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        let (mut lo, mut hi) = (best.0 - h, best.0 + h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-12 {
            let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if f(x1) >= f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        f(0.5 * (lo + hi)).max(best.1)
    }
}

/// Step function of a sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empirical CDF of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in sample".into()));
        }
        values.par_sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(x) = #{X_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// `sup_x |F(x) - cdf(x)|` for a continuous `cdf`. At each distinct jump
    /// point `v` both `F(v-)` and `F(v)` are compared with `cdf(v)`.
    pub fn kolmogorov_distance<F: Fn(f64) -> f64 + Sync>(&self, cdf: F) -> f64 {
        let n = self.len();
        let nf = n as f64;
        let s = &self.sorted;
        // start index of each run of equal values
        let starts: Vec<usize> = (0..n).filter(|&i| i == 0 || s[i] != s[i - 1]).collect();
        starts
            .par_iter()
            .enumerate()
            .map(|(j, &lo)| {
                let hi = starts.get(j + 1).copied().unwrap_or(n);
                let c = cdf(s[lo]);
                (lo as f64 / nf - c).abs().max((hi as f64 / nf - c).abs())
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `sup_x |F(x) - H(x)|` between two step functions, attained at one of
    /// their jump points.
    pub fn distance_to_ecdf(&self, other: &EmpiricalCdf) -> f64 {
        self.sorted
            .iter()
            .chain(&other.sorted)
            .map(|&x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Distance to an expansion at its own order.
    pub fn distance_to(&self, e: &Expansion) -> f64 {
        self.kolmogorov_distance(|x| e.evaluate(x))
    }
}

/// CSV with columns `x,normal,one_term,two_term`.
pub fn grid_csv(e: &Expansion, xs: &[f64]) -> String {
    let mut out = String::from("x,normal,one_term,two_term\n");
    for &x in xs {
        let t = e.terms(x);
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            x,
            t.sum(Order::Zero),
            t.sum(Order::One),
            t.sum(Order::Two)
        );
    }
    out
}
