mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use symstat::concentration::{kleitman_bound, max_ball_count, symmetric_partition, SignedSumInstance};

/// Largest number of signed sums strictly within `r` of some sum, trying
/// every sum as the centre. A lower bound on the true maximum.
fn naive_centered_count(inst: &SignedSumInstance) -> u64 {
    let sums = inst.signed_sums().unwrap();
    let d = inst.dim();
    let pts: Vec<&[f64]> = sums.chunks(d).collect();
    let r2 = inst.r() * inst.r();
    pts.iter()
        .map(|c| pts.iter().filter(|p| p.iter().zip(c.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < r2).count() as u64)
        .max()
        .unwrap()
}

/// Exact 1-D count: best window of sums with span `< 2r`.
fn naive_line_count(inst: &SignedSumInstance) -> u64 {
    let mut s = inst.signed_sums().unwrap();
    s.sort_by(f64::total_cmp);
    let mut best = 0;
    for i in 0..s.len() {
        let c = s[i..].iter().take_while(|&&v| v - s[i] < 2.0 * inst.r()).count();
        best = best.max(c);
    }
    best as u64
}

#[test]
fn central_binomial_values() {
    let want = [1u128, 1, 2, 3, 6, 10, 20, 35, 70, 126, 252];
    for (n, &w) in want.iter().enumerate() {
        assert_eq!(kleitman_bound(n as u32), w);
    }
    assert_eq!(kleitman_bound(40), 137_846_528_820);
}

#[test]
fn line_counts_match_sliding_window_oracle() {
    let mut r = rng(31);
    for _ in 0..40 {
        let n = r.random_range(1..=10);
        let v: Vec<f64> = (0..n).map(|_| r.random_range(1.0..3.0) * if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let inst = SignedSumInstance::line(&v, 1.0).unwrap();
        let b = max_ball_count(&inst).unwrap();
        assert!(b.exact);
        assert_eq!(b.count, naive_line_count(&inst));
        assert!((b.count as u128) <= kleitman_bound(n as u32));
    }
}

#[test]
fn planar_counts_dominate_the_centred_oracle() {
    let mut r = rng(32);
    for _ in 0..20 {
        let n = r.random_range(2..=8);
        let v: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let th: f64 = r.random_range(0.0..std::f64::consts::TAU);
                let len: f64 = r.random_range(1.0..1.5);
                vec![len * th.cos(), len * th.sin()]
            })
            .collect();
        let inst = SignedSumInstance::new(v, 1.0).unwrap();
        let b = max_ball_count(&inst).unwrap();
        assert!(b.count >= naive_centered_count(&inst));
        assert!((b.count as u128) <= kleitman_bound(n as u32));
    }
}

#[test]
fn equal_vectors_attain_the_bound() {
    for n in 1..=12 {
        let inst = SignedSumInstance::line(&vec![1.0; n], 1.0).unwrap();
        assert_eq!(max_ball_count(&inst).unwrap().count as u128, kleitman_bound(n as u32));
    }
}

#[test]
fn short_vectors_are_rejected() {
    assert!(SignedSumInstance::line(&[1.0, 0.5], 1.0).is_err());
    assert!(SignedSumInstance::new(vec![vec![1.0, 0.0], vec![1.0]], 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn partition_is_certified(v in prop::collection::vec((1.0f64..2.0, -1.0f64..1.0), 1..9)) {
        let vecs: Vec<Vec<f64>> = v.iter().map(|&(a, b)| {
            let norm = (a * a + b * b).sqrt();
            vec![a / norm * a, b / norm * a]
        }).collect();
        let inst = SignedSumInstance::new(vecs, 1.0).unwrap();
        let p = symmetric_partition(&inst).unwrap();
        prop_assert!(p.certified);
        prop_assert_eq!(p.len() as u128, kleitman_bound(inst.n() as u32));
        let mut seen: Vec<u32> = p.classes.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..1u32 << inst.n()).collect::<Vec<_>>());
    }
}
