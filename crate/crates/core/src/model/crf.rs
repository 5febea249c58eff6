//! Linear-chain CRF decoding on plain matrices.
//!
//! `emissions` is `n × K`; `transitions` is `(K+1) × K` with the START row
//! last, indexed `(previous, current)`.

use crate::numerics::{log_sum_exp_slice, Tensor2};

/// Score of one tag path: emissions plus transitions from START, no stop.
pub fn path_score(emissions: &Tensor2, transitions: &Tensor2, tags: &[usize]) -> f64 {
    let k = emissions.cols();
    let mut prev = k;
    let mut s = 0.0;
    for (t, &y) in tags.iter().enumerate() {
        s += transitions.get(prev, y) + emissions.get(t, y);
        prev = y;
    }
    s
}

/// Forward-algorithm log-partition.
pub fn log_partition(emissions: &Tensor2, transitions: &Tensor2) -> f64 {
    let (n, k) = emissions.shape();
    let mut alpha: Vec<f64> = (0..k)
        .map(|j| transitions.get(k, j) + emissions.get(0, j))
        .collect();
    let mut buf = vec![0.0; k];
    for t in 1..n {
        let next: Vec<f64> = (0..k)
            .map(|j| {
                for i in 0..k {
                    buf[i] = alpha[i] + transitions.get(i, j);
                }
                log_sum_exp_slice(&buf) + emissions.get(t, j)
            })
            .collect();
        alpha = next;
    }
    log_sum_exp_slice(&alpha)
}

/// Highest-scoring path; ties go to the lowest tag id.
pub fn viterbi(emissions: &Tensor2, transitions: &Tensor2) -> Vec<usize> {
    let (n, k) = emissions.shape();
    if n == 0 {
        return Vec::new();
    }
    let mut delta: Vec<f64> = (0..k)
        .map(|j| transitions.get(k, j) + emissions.get(0, j))
        .collect();
    let mut back = vec![vec![0usize; k]; n];
    for t in 1..n {
        let mut next = vec![0.0; k];
        for j in 0..k {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for i in 0..k {
                let v = delta[i] + transitions.get(i, j);
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            back[t][j] = best;
            next[j] = best_v + emissions.get(t, j);
        }
        delta = next;
    }
    let mut last = 0;
    for j in 1..k {
        if delta[j] > delta[last] {
            last = j;
        }
    }
    let mut path = vec![last; n];
    for t in (1..n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_paths(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..k).map(move |y| {
                        let mut q = p.clone();
                        q.push(y);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
        Tensor2::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn direct_forward_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=5);
            let k = rng.random_range(1..=4);
            let e = random(n, k, &mut rng);
            let t = random(k + 1, k, &mut rng);
            let scores: Vec<f64> = all_paths(n, k)
                .iter()
                .map(|p| path_score(&e, &t, p))
                .collect();
            assert!((log_partition(&e, &t) - log_sum_exp_slice(&scores)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_scores_decode_to_lowest_tag() {
        let e = Tensor2::zeros(4, 3);
        let t = Tensor2::zeros(4, 3);
        assert_eq!(viterbi(&e, &t), vec![0; 4]);
        assert_eq!(
            viterbi(&Tensor2::zeros(3, 1), &Tensor2::zeros(2, 1)),
            vec![0; 3]
        );
    }
}
