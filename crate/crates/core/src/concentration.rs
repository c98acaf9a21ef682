//! Concentration of signed sums `x_A = sum_{i in A} x_i - sum_{i not in A} x_i`
//! of vectors with norm at least `r`: at most `C(n, floor(n/2))` of the `2^n`
//! sums lie in any open ball of radius `r`.
//!
//! Sign patterns are bitmasks (`bit i` set means `+x_i`).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::central_binomial;

/// Largest `2^n * d` that the enumeration will hold in memory.
pub const SUM_BUDGET: f64 = (1u64 << 25) as f64;
/// Largest `n` accepted by [`symmetric_partition`].
pub const PARTITION_MAX_N: usize = 20;
/// Cap on midpoint centers tried in dimension > 1.
pub const MIDPOINT_BUDGET: usize = 250_000;
/// Relative slack applied to `r` so that rounding never lets a point count
/// as inside when it is at distance exactly `r`.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct SignedSumInstance {
    vectors: Vec<Vec<f64>>,
    r: f64,
}

#[derive(Deserialize)]
struct RawInstance {
    vectors: Vec<Vec<f64>>,
    r: f64,
}

impl TryFrom<RawInstance> for SignedSumInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        SignedSumInstance::new(raw.vectors, raw.r)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl SignedSumInstance {
    pub fn new(vectors: Vec<Vec<f64>>, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        let d = vectors.first().map_or(1, Vec::len);
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidArgument("vectors must share one positive dimension".into()));
        }
        for (index, v) in vectors.iter().enumerate() {
            let nv = norm(v);
            if !(nv >= r * (1.0 - SLACK)) {
                return Err(Error::NormPrecondition { index, norm: nv, r });
            }
        }
        Ok(SignedSumInstance { vectors, r })
    }

    /// Vectors on the real line.
    pub fn line(values: &[f64], r: f64) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect(), r)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(1, Vec::len)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.vectors.iter().map(|v| v.iter().map(|x| c * x).collect()).collect(), c * self.r)
    }

    fn check_budget(&self) -> Result<()> {
        let needed = 2f64.powi(self.n() as i32) * self.dim() as f64;
        if self.n() > 30 || needed > SUM_BUDGET {
            return Err(Error::Budget { needed, limit: SUM_BUDGET });
        }
        Ok(())
    }

    /// All `2^n` signed sums, flattened with stride `dim`; sum `mask` sits at
    /// `mask * dim`.
    pub fn signed_sums(&self) -> Result<Vec<f64>> {
        self.check_budget()?;
        let (n, d) = (self.n(), self.dim());
        let mut out = vec![0.0; d << n];
        for v in &self.vectors {
            for k in 0..d {
                out[k] -= v[k];
            }
        }
        // adding bit i flips x_i from - to +
        for i in 0..n {
            let half = 1usize << i;
            for mask in half..(half << 1) {
                for k in 0..d {
                    out[mask * d + k] = out[(mask - half) * d + k] + 2.0 * self.vectors[i][k];
                }
            }
        }
        Ok(out)
    }
}

/// `C(n, floor(n/2))`.
pub fn kleitman_bound(n: u32) -> u128 {
    central_binomial(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct BallCount {
    pub count: u64,
    pub center: Vec<f64>,
    /// `true` for the exact 1-D sweep; in higher dimension the count is a
    /// lower bound from the candidate centers tried.
    pub exact: bool,
    pub centers_tried: usize,
}

/// Maximum number of signed sums inside one open ball of radius `r`.
///
/// On the line the answer is exact: a sorted sliding window over spans
/// `< 2r`. In dimension `d > 1` the centers tried are the distinct sums and
/// the midpoints of close pairs, so the count is a certified lower bound.
pub fn max_ball_count(inst: &SignedSumInstance) -> Result<BallCount> {
    let sums = inst.signed_sums()?;
    let r = inst.r * (1.0 - SLACK);
    let d = inst.dim();
    if d == 1 {
        let mut s = sums;
        s.par_sort_unstable_by(f64::total_cmp);
        let (mut best, mut at) = (0usize, (0usize, 0usize));
        let mut i = 0;
        for j in 0..s.len() {
            while s[j] - s[i] >= 2.0 * r {
                i += 1;
            }
            if j + 1 - i > best {
                best = j + 1 - i;
                at = (i, j);
            }
        }
        return Ok(BallCount {
            count: best as u64,
            center: vec![0.5 * (s[at.0] + s[at.1])],
            exact: true,
            centers_tried: s.len(),
        });
    }

    if d > 8 {
        return Err(Error::UnsupportedMode(format!("ball search in dimension {d} (at most 8)")));
    }
    // distinct points with multiplicities
    let mut uniq: HashMap<Vec<u64>, u64> = HashMap::new();
    for p in sums.chunks_exact(d) {
        *uniq.entry(p.iter().map(|x| (x + 0.0).to_bits()).collect()).or_default() += 1;
    }
    let mut points: Vec<(Vec<f64>, u64)> =
        uniq.into_iter().map(|(k, m)| (k.into_iter().map(f64::from_bits).collect(), m)).collect();
    // fixed order so results do not depend on hash iteration
    points.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let grid = Grid::new(&points, r)?;

    let count_at = |c: &[f64]| -> u64 {
        grid.neighbours(c, 1).filter(|&k| dist2(&points[k].0, c) < r * r).map(|k| points[k].1).sum()
    };
    let at_points: Vec<u64> = points.par_iter().map(|(p, _)| count_at(p)).collect();
    let mut best = (0usize, 0u64);
    for (k, &c) in at_points.iter().enumerate() {
        if c > best.1 {
            best = (k, c);
        }
    }
    let mut center = points[best.0].0.clone();
    let mut count = best.1;
    let mut tried = points.len();

    // close pairs (distance < 2r) give midpoint centers; pairs further apart
    // cannot share an open ball of radius r
    let close_pairs = |k: usize| -> Vec<(usize, usize)> {
        grid.neighbours(&points[k].0, 2)
            .filter(|&l| l > k && dist2(&points[k].0, &points[l].0) < 4.0 * r * r)
            .map(|l| (k, l))
            .collect()
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| at_points[b].cmp(&at_points[a]).then(a.cmp(&b)));
    for &k in &order {
        let more = close_pairs(k);
        if pairs.len() + more.len() > MIDPOINT_BUDGET {
            break;
        }
        pairs.extend(more);
    }
    let mids: Vec<(u64, Vec<f64>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let m: Vec<f64> = points[a].0.iter().zip(&points[b].0).map(|(x, y)| 0.5 * (x + y)).collect();
            (count_at(&m), m)
        })
        .collect();
    tried += mids.len();
    for (c, m) in mids {
        if c > count {
            count = c;
            center = m;
        }
    }
    Ok(BallCount { count, center, exact: false, centers_tried: tried })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Uniform hash grid with cell side `r`. Cells are keyed by their
/// row-major index inside the bounding box of the points, so lookups do not
/// allocate.
struct Grid {
    cell: f64,
    lo: Vec<i64>,
    extent: Vec<i64>,
    cells: HashMap<u128, Vec<usize>>,
    dim: usize,
}

impl Grid {
    fn new(points: &[(Vec<f64>, u64)], r: f64) -> Result<Self> {
        let dim = points.first().map_or(1, |p| p.0.len());
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for (p, _) in points {
            for (i, x) in p.iter().enumerate() {
                let c = (x / r).floor() as i64;
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        // two spare cells on each side so neighbour offsets stay in the box
        let lo: Vec<i64> = lo.iter().map(|l| l - 2).collect();
        let extent: Vec<i64> = hi.iter().zip(&lo).map(|(h, l)| h - l + 3).collect();
        let cells_total = extent.iter().try_fold(1u128, |a, &e| a.checked_mul(e as u128));
        if cells_total.is_none() {
            return Err(Error::Budget { needed: f64::INFINITY, limit: u128::MAX as f64 });
        }
        let mut grid = Grid { cell: r, lo, extent, cells: HashMap::new(), dim };
        for (k, (p, _)) in points.iter().enumerate() {
            let key = grid.key(p).expect("inside the box");
            grid.cells.entry(key).or_default().push(k);
        }
        Ok(grid)
    }

    fn key(&self, p: &[f64]) -> Option<u128> {
        self.key_offset(p, &[])
    }

    fn key_offset(&self, p: &[f64], off: &[i64]) -> Option<u128> {
        let mut key = 0u128;
        for i in 0..self.dim {
            let c = (p[i] / self.cell).floor() as i64 + off.get(i).copied().unwrap_or(0) - self.lo[i];
            if c < 0 || c >= self.extent[i] {
                return None;
            }
            key = key * self.extent[i] as u128 + c as u128;
        }
        Some(key)
    }

    /// Indices in the cells within `reach` cells of `c` along every axis.
    fn neighbours<'a>(&'a self, c: &'a [f64], reach: i64) -> impl Iterator<Item = usize> + 'a {
        let width = (2 * reach + 1) as usize;
        let total = width.pow(self.dim as u32);
        (0..total).flat_map(move |code| {
            let mut rem = code;
            let mut off = [0i64; 8];
            for o in off.iter_mut().take(self.dim) {
                *o = (rem % width) as i64 - reach;
                rem /= width;
            }
            self.key_offset(c, &off[..self.dim.min(8)])
                .and_then(|k| self.cells.get(&k))
                .into_iter()
                .flatten()
                .copied()
        })
    }
}

/// A partition of all `2^n` sign patterns into classes whose signed sums
/// are pairwise at distance at least `2r`.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricPartition {
    pub n: usize,
    pub classes: Vec<Vec<u32>>,
    /// Smallest within-class distance between distinct sums (infinite when
    /// every class is a singleton).
    pub min_within_distance: f64,
    /// Every within-class pair is at distance `>= 2r (1 - 1e-12)` and the
    /// classes are disjoint and cover all patterns.
    pub certified: bool,
}

impl SymmetricPartition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Builds the partition inductively. Given the classes for `x_1..x_{j}`,
/// every class `C` is split using `x_{j+1}`: with `A*` minimizing
/// `<y_A, x_{j+1}>` over `C`, one class is `{y_A + x_{j+1}} ∪ {y_{A*} - x_{j+1}}`
/// and the other `{y_A - x_{j+1} : A != A*}` (dropped if empty). The new
/// cross distances are at least `2|x_{j+1}|` because `A*` is the minimizer,
/// and class sizes follow the symmetric chain recursion, so there are
/// exactly `C(n, floor(n/2))` classes.
pub fn symmetric_partition(inst: &SignedSumInstance) -> Result<SymmetricPartition> {
    let n = inst.n();
    if n > PARTITION_MAX_N {
        return Err(Error::Budget { needed: n as f64, limit: PARTITION_MAX_N as f64 });
    }
    let d = inst.dim();
    let v = inst.vectors();
    // y_A over the first j vectors
    let partial = |mask: u32, j: usize| -> Vec<f64> {
        (0..d)
            .map(|k| (0..j).map(|i| if mask >> i & 1 == 1 { v[i][k] } else { -v[i][k] }).sum())
            .collect()
    };
    let mut classes: Vec<Vec<u32>> = vec![vec![0]];
    for j in 0..n {
        let xj = &v[j];
        let bit = 1u32 << j;
        let mut next = Vec::with_capacity(classes.len() * 2);
        for class in classes {
            let star = *class
                .iter()
                .min_by(|&&a, &&b| {
                    let ia: f64 = partial(a, j).iter().zip(xj).map(|(y, x)| y * x).sum();
                    let ib: f64 = partial(b, j).iter().zip(xj).map(|(y, x)| y * x).sum();
                    ia.total_cmp(&ib).then(a.cmp(&b))
                })
                .expect("classes are nonempty");
            let mut up: Vec<u32> = class.iter().map(|&a| a | bit).collect();
            up.push(star);
            let down: Vec<u32> = class.into_iter().filter(|&a| a != star).collect();
            next.push(up);
            if !down.is_empty() {
                next.push(down);
            }
        }
        classes = next;
    }
    let sums = inst.signed_sums()?;
    let at = |m: u32| &sums[m as usize * d..(m as usize + 1) * d];
    let min_within = classes
        .par_iter()
        .map(|c| {
            let mut best = f64::INFINITY;
            for (i, &a) in c.iter().enumerate() {
                for &b in &c[i + 1..] {
                    best = best.min(dist2(at(a), at(b)).sqrt());
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    let mut seen = vec![false; 1usize << n];
    let mut disjoint = true;
    for c in &classes {
        for &m in c {
            disjoint &= !std::mem::replace(&mut seen[m as usize], true);
        }
    }
    let covering = seen.iter().all(|&s| s);
    let certified = disjoint && covering && min_within >= 2.0 * inst.r * (1.0 - SLACK);
    Ok(SymmetricPartition { n, classes, min_within_distance: min_within, certified })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert_eq!(kleitman_bound(0), 1);
        assert_eq!(kleitman_bound(3), 3);
        assert_eq!(kleitman_bound(12), 924);
    }

    #[test]
    fn line_examples() {
        let c = max_ball_count(&SignedSumInstance::line(&[1.0, 1.0], 1.0).unwrap()).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.exact);
        let c = max_ball_count(&SignedSumInstance::line(&[1.0, 1.0, 1.0], 1.0).unwrap()).unwrap();
        assert_eq!(c.count, 3);
        let c = max_ball_count(&SignedSumInstance::line(&[-2.5], 1.0).unwrap()).unwrap();
        assert_eq!(c.count, 1);
    }

    #[test]
    fn sums_in_mask_order() {
        let inst = SignedSumInstance::line(&[1.0, 10.0], 1.0).unwrap();
        assert_eq!(inst.signed_sums().unwrap(), vec![-11.0, -9.0, 9.0, 11.0]);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            SignedSumInstance::line(&[1.0, 0.5], 1.0),
            Err(Error::NormPrecondition { index: 1, .. })
        ));
        assert!(SignedSumInstance::new(vec![vec![1.0], vec![1.0, 0.0]], 1.0).is_err());
        let big = SignedSumInstance::new(vec![vec![1.0, 0.0, 0.0, 0.0]; 24], 1.0).unwrap();
        assert!(matches!(max_ball_count(&big), Err(Error::Budget { .. })));
    }

    #[test]
    fn json_instances() {
        let inst = SignedSumInstance::from_json(r#"{"vectors":[[1.0,0.0],[0.0,2.0]],"r":1.0}"#).unwrap();
        assert_eq!(inst.dim(), 2);
        assert!(SignedSumInstance::from_json(r#"{"vectors":[[0.1]],"r":1.0}"#).is_err());
    }

    #[test]
    fn all_equal_vectors_attain_bound() {
        for n in 1..=16u32 {
            let inst = SignedSumInstance::line(&vec![1.0; n as usize], 1.0).unwrap();
            assert_eq!(max_ball_count(&inst).unwrap().count as u128, kleitman_bound(n));
        }
    }

    #[test]
    fn plane_equal_vectors() {
        let inst = SignedSumInstance::new(vec![vec![0.6, 0.8]; 6], 1.0).unwrap();
        let c = max_ball_count(&inst).unwrap();
        assert_eq!(c.count, 20);
        assert!(!c.exact);
    }

    #[test]
    fn partition_examples() {
        let p = symmetric_partition(&SignedSumInstance::line(&[1.7], 1.0).unwrap()).unwrap();
        assert_eq!(p.classes, vec![vec![1, 0]]);
        assert!(p.certified);
        let p = symmetric_partition(&SignedSumInstance::line(&[1.0, 1.0], 1.0).unwrap()).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.certified);
        assert!(p.min_within_distance >= 2.0);
    }

    #[test]
    fn partition_in_three_dimensions() {
        let vs: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let (a, b) = (i as f64 * 0.77, i as f64 * 1.31);
                vec![a.cos() * b.sin(), a.sin() * b.sin(), b.cos()]
            })
            .collect();
        let inst = SignedSumInstance::new(vs, 1.0).unwrap();
        let p = symmetric_partition(&inst).unwrap();
        assert_eq!(p.len() as u128, kleitman_bound(10));
        assert!(p.certified);
    }

    #[test]
    fn scale_invariance() {
        let inst = SignedSumInstance::new(
            vec![vec![1.0, 0.2], vec![-0.3, 1.1], vec![0.9, 0.9], vec![1.2, -0.4], vec![0.0, 1.0]],
            1.0,
        )
        .unwrap();
        let base = max_ball_count(&inst).unwrap().count;
        for c in [0.125, 3.0, 1024.0] {
            assert_eq!(max_ball_count(&inst.scaled(c).unwrap()).unwrap().count, base);
        }
    }
}
