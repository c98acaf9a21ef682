//! Brute-force oracles shared by the integration and acceptance tests.
//! Everything here works straight from the full table of T on S^N and does
//! not call the library's decomposition code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symstat::{Distribution, SymmetricStatistic};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random law on 2..=max_support distinct points with probabilities summing
/// to one.
pub fn random_law(r: &mut ChaCha8Rng, max_support: usize) -> Distribution {
    let s = r.random_range(2..=max_support);
    let mut pts: Vec<f64> = Vec::new();
    while pts.len() < s {
        let x = (r.random_range(-20..=20) as f64) / 8.0;
        if !pts.contains(&x) {
            pts.push(x);
        }
    }
    let w: Vec<f64> = (0..s).map(|_| r.random_range(0.2..1.0)).collect();
    let tot: f64 = w.iter().sum();
    let mut atoms: Vec<(f64, f64)> = pts.iter().zip(&w).map(|(&x, &wi)| (x, wi / tot)).collect();
    // push the rounding residue onto the last atom
    let sum: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.last_mut().unwrap().1 += 1.0 - sum;
    Distribution::finite(&atoms).unwrap()
}

/// Random symmetric statistic built from power sums, a product and the max.
pub fn random_statistic(r: &mut ChaCha8Rng, n: usize) -> SymmetricStatistic {
    let c: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
    SymmetricStatistic::new(n, "random polynomial statistic", move |x| {
        let p1: f64 = x.iter().sum();
        let p2: f64 = x.iter().map(|v| v * v).sum();
        let p3: f64 = x.iter().map(|v| v * v * v).sum();
        let prod: f64 = x.iter().map(|v| 1.0 + v / 4.0).product();
        let mx = x.iter().cloned().fold(f64::MIN, f64::max);
        c[0] * p1 + c[1] * p1 * p1 / n as f64 + c[2] * p3 + c[3] * p1 * p2 / n as f64 + c[4] * prod + c[5] * mx
    })
}

/// `T` tabulated on `S^N` (row-major in support indices) with the law.
pub struct Oracle {
    pub n: usize,
    pub pts: Vec<f64>,
    pub probs: Vec<f64>,
    pub table: Vec<f64>,
}

impl Oracle {
    pub fn new(t: &SymmetricStatistic, dist: &Distribution) -> Self {
        let law = dist.finite_law().unwrap();
        let (pts, probs) = (law.points().to_vec(), law.probs().to_vec());
        let n = t.n();
        let s = pts.len();
        let total = s.pow(n as u32);
        let mut x = vec![0.0; n];
        let table = (0..total)
            .map(|mut code| {
                for i in (0..n).rev() {
                    x[i] = pts[code % s];
                    code /= s;
                }
                t.eval(&x)
            })
            .collect();
        Oracle { n, pts, probs, table }
    }

    pub fn s(&self) -> usize {
        self.pts.len()
    }

    pub fn digits(&self, mut code: usize, len: usize) -> Vec<usize> {
        let s = self.s();
        let mut d = vec![0; len];
        for i in (0..len).rev() {
            d[i] = code % s;
            code /= s;
        }
        d
    }

    pub fn code(&self, d: &[usize]) -> usize {
        d.iter().fold(0, |a, &i| a * self.s() + i)
    }

    pub fn prob(&self, d: &[usize]) -> f64 {
        d.iter().map(|&i| self.probs[i]).product()
    }

    pub fn mean(&self) -> f64 {
        (0..self.table.len()).map(|c| self.prob(&self.digits(c, self.n)) * self.table[c]).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (0..self.table.len()).map(|c| self.prob(&self.digits(c, self.n)) * (self.table[c] - m).powi(2)).sum()
    }

    /// `E(T | X_1..X_j = head)` by summing over all tails.
    pub fn cond_first(&self, head: &[usize]) -> f64 {
        let j = head.len();
        let tail = self.n - j;
        let s = self.s();
        (0..s.pow(tail as u32))
            .map(|c| {
                let t = self.digits(c, tail);
                let mut full = head.to_vec();
                full.extend(&t);
                self.prob(&t) * self.table[self.code(&full)]
            })
            .sum()
    }

    /// `g_k` on `S^k` by Moebius inversion of the conditional means; by
    /// exchangeability `E(T | X_B)` only depends on the values in `B`.
    pub fn component(&self, k: usize) -> Vec<f64> {
        let s = self.s();
        let mut cache = std::collections::HashMap::new();
        (0..s.pow(k as u32))
            .map(|c| {
                let d = self.digits(c, k);
                let mut v = 0.0;
                for b in 0u32..(1 << k) {
                    let head: Vec<usize> = (0..k).filter(|i| b >> i & 1 == 1).map(|i| d[i]).collect();
                    let sign = if (k - head.len()) % 2 == 0 { 1.0 } else { -1.0 };
                    let e = *cache.entry(head.clone()).or_insert_with(|| self.cond_first(&head));
                    v += sign * e;
                }
                v
            })
            .collect()
    }

    /// `sigma_k^2 = E g_k^2` from a component table.
    pub fn component_variance(&self, k: usize, comp: &[f64]) -> f64 {
        (0..comp.len()).map(|c| self.prob(&self.digits(c, k)) * comp[c].powi(2)).sum()
    }

    /// `E|N^{m-1/2} D_1..D_m T|^2` straight from the definition
    /// `D_1..D_m T = sum_{S in [m]} (-1)^{|S|} E_S T`.
    pub fn delta_sq(&self, m: usize) -> f64 {
        let n = self.n;
        let s = self.s();
        let stride: Vec<usize> = (0..n).map(|i| s.pow((n - 1 - i) as u32)).collect();
        // for each S: the replacement offsets and their probabilities
        let subsets: Vec<(f64, Vec<usize>, Vec<(usize, f64)>)> = (0u32..(1 << m))
            .map(|set| {
                let idx: Vec<usize> = (0..m).filter(|i| set >> i & 1 == 1).collect();
                let sign = if idx.len() % 2 == 0 { 1.0 } else { -1.0 };
                let reps = (0..s.pow(idx.len() as u32))
                    .map(|r| {
                        let y = self.digits(r, idx.len());
                        let off = idx.iter().zip(&y).map(|(&i, &v)| v * stride[i]).sum();
                        (off, self.prob(&y))
                    })
                    .collect();
                (sign, idx, reps)
            })
            .collect();
        let mut acc = 0.0;
        for c in 0..self.table.len() {
            let x = self.digits(c, n);
            let mut d = 0.0;
            for (sign, idx, reps) in &subsets {
                let base = c - idx.iter().map(|&i| x[i] * stride[i]).sum::<usize>();
                d += sign * reps.iter().map(|&(off, p)| p * self.table[base + off]).sum::<f64>();
            }
            acc += self.prob(&x) * d * d;
        }
        (n as f64).powi(2 * m as i32 - 1) * acc
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}
