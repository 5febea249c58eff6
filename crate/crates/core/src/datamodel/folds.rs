use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fold id for every item, indexed like the corpus records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn fold_of(&self, item: usize) -> usize {
        self.folds[item]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.folds {
            s[f] += 1;
        }
        s
    }

    /// Item indices in fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] == f)
            .collect()
    }

    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] != f)
            .collect()
    }
}

/// Shuffles `0..n` with `seed` and deals the permutation round-robin into
/// `k` folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Invalid(format!(
            "k-folds must be at least 2, got {k}"
        )));
    }
    if k > n {
        return Err(Error::Invalid(format!(
            "{k} folds requested for {n} records"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &item) in order.iter().enumerate() {
        folds[item] = pos % k;
    }
    Ok(FoldAssignment { k, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seven_into_five() {
        let f = make_folds(7, 5, 3).unwrap();
        let mut s = f.sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(s, vec![2, 2, 1, 1, 1]);
    }

    #[test]
    fn seven_hundred_into_five() {
        assert_eq!(make_folds(700, 5, 1).unwrap().sizes(), vec![140; 5]);
    }

    #[test]
    fn bad_k_rejected() {
        assert!(make_folds(10, 1, 0).is_err());
        assert!(make_folds(3, 4, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_balance(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let a = make_folds(n, k, seed).unwrap();
            prop_assert_eq!(&a, &make_folds(n, k, seed).unwrap());
            let sizes = a.sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut seen = vec![false; n];
            for f in 0..k {
                for i in a.test_indices(f) {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }
    }
}
