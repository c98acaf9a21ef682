//! Ball counts of signed sums against the central binomial coefficient, in
//! one and three dimensions, plus a certified symmetric-chain partition.

use rand::{Rng, SeedableRng};
use symstat::concentration::{kleitman_bound, max_ball_count, symmetric_partition, SignedSumInstance};

fn random_unit_vectors(n: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            // norms land in [1, 2)
            let scale = rng.random_range(1.0..2.0) / norm;
            v.iter().map(|x| x * scale).collect()
        })
        .collect()
}

fn main() -> symstat::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    for n in [6usize, 10, 14] {
        let line = SignedSumInstance::line(&vec![1.0; n], 1.0)?;
        let b = max_ball_count(&line)?;
        println!("all-ones n = {n:>2}: {} of {} sums in one ball (bound {})", b.count, 1u64 << n, kleitman_bound(n as u32));
    }
    for d in [1usize, 3] {
        let inst = SignedSumInstance::new(random_unit_vectors(12, d, &mut rng), 1.0)?;
        let b = max_ball_count(&inst)?;
        println!("random d = {d}, n = 12: max count {} (exact search: {}), bound {}", b.count, b.exact, kleitman_bound(12));
    }
    let inst = SignedSumInstance::new(random_unit_vectors(10, 2, &mut rng), 1.0)?;
    let p = symmetric_partition(&inst)?;
    println!(
        "partition: {} classes, min within-class distance {:.4} (2r = 2), certified = {}",
        p.classes.len(),
        p.min_within_distance,
        p.certified
    );
    Ok(())
}
