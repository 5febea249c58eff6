use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::AggregatedDataset;
use crate::numerics::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            min_leaf: 2,
            max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A CART classification tree with Gini splits.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Weighted impurity decrease per feature.
    pub importance: Vec<f64>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    data: &'a AggregatedDataset,
    min_leaf: usize,
    mtry: usize,
    total: f64,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.data.num_classes];
        for &i in idx {
            c[self.data.y[i]] += 1;
        }
        c
    }

    /// Best `(gain, feature, threshold)` over the candidate features.
    fn best_split(
        &self,
        idx: &[usize],
        features: &[usize],
        parent: f64,
    ) -> Option<(f64, usize, f64)> {
        let n = idx.len();
        let k = self.data.num_classes;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.to_vec();
        for &f in features {
            sorted.sort_by(|&a, &b| self.data.x.get(a, f).total_cmp(&self.data.x.get(b, f)));
            let mut left = vec![0usize; k];
            let mut right = self.counts(idx);
            for pos in 0..n - 1 {
                let i = sorted[pos];
                left[self.data.y[i]] += 1;
                right[self.data.y[i]] -= 1;
                let (nl, nr) = (pos + 1, n - pos - 1);
                let (v, next) = (self.data.x.get(i, f), self.data.x.get(sorted[pos + 1], f));
                if v == next || nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let child = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let gain = parent - child;
                if gain > 1e-15 && best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, 0.5 * (v + next)));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(&idx);
        let impurity = gini(&counts, idx.len());
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
        });
        if impurity == 0.0 || idx.len() < 2 * self.min_leaf {
            return id;
        }
        let d = self.data.dim();
        let features: Vec<usize> = sample(rng, d, self.mtry.min(d)).into_vec();
        let Some((gain, feature, threshold)) = self.best_split(&idx, &features, impurity) else {
            return id;
        };
        self.importance[feature] += gain * idx.len() as f64 / self.total;
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.data.x.get(i, feature) <= threshold);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl Tree {
    pub fn fit(
        data: &AggregatedDataset,
        sample_idx: Vec<usize>,
        config: &ForestConfig,
        seed: u64,
    ) -> Tree {
        let d = data.dim();
        let mtry = config
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .max(1);
        let mut b = Builder {
            data,
            min_leaf: config.min_leaf.max(1),
            mtry,
            total: sample_idx.len() as f64,
            nodes: Vec::new(),
            importance: vec![0.0; d],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        b.grow(sample_idx, &mut rng);
        Tree {
            nodes: b.nodes,
            importance: b.importance,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Trees are grown in parallel from seeds derived per tree.
    pub fn fit(data: &AggregatedDataset, config: &ForestConfig, seed: u64) -> Forest {
        let m = data.len();
        let trees = (0..config.trees.max(1))
            .into_par_iter()
            .map(|t| {
                let tree_seed = derive_seed(seed, &[t as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(tree_seed, &[0xb007]));
                let boot: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
                Tree::fit(data, boot, config, tree_seed)
            })
            .collect();
        Forest { trees }
    }

    /// Mean impurity decrease per feature across trees, summing to 1.
    pub fn importances(&self) -> Vec<f64> {
        let d = self.trees[0].importance.len();
        let mut imp = vec![0.0; d];
        for t in &self.trees {
            for (a, b) in imp.iter_mut().zip(&t.importance) {
                *a += b / self.trees.len() as f64;
            }
        }
        super::scores::normalize_scores(&mut imp);
        imp
    }

    pub fn predict_row(&self, row: &[f64], num_classes: usize) -> usize {
        let mut votes = vec![0usize; num_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        majority(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor2;

    fn planted(m: usize, d: usize, j: usize, seed: u64) -> AggregatedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<usize> = (0..m).map(|_| rng.random_range(0..3)).collect();
        let mut x = Tensor2::zeros(m, d);
        for r in 0..m {
            for c in 0..d {
                let v = if c == j {
                    y[r] as f64 + rng.random_range(0.0..0.5)
                } else {
                    rng.random_range(-1.0..1.0)
                };
                x.set(r, c, v);
            }
        }
        AggregatedDataset::new(x, y, 3).unwrap()
    }

    #[test]
    fn determining_feature_dominates() {
        let data = planted(300, 8, 5, 3);
        let f = Forest::fit(&data, &ForestConfig::default(), 9);
        let imp = f.importances();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // splits on noise still happen when the feature is not a candidate
        assert!(imp[5] > 0.75, "{imp:?}");
        assert!(
            imp.iter().enumerate().all(|(j, &v)| j == 5 || v < 0.05),
            "{imp:?}"
        );
        let acc = (0..300)
            .filter(|&r| f.predict_row(data.x.row(r), 3) == data.y[r])
            .count();
        assert!(acc > 290);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let data = planted(120, 6, 1, 4);
        let a = Forest::fit(&data, &ForestConfig::default(), 17);
        let b = Forest::fit(&data, &ForestConfig::default(), 17);
        assert_eq!(a, b);
        assert_eq!(a.importances(), b.importances());
    }

    #[test]
    fn unused_feature_has_zero_importance() {
        let mut data = planted(150, 5, 0, 8);
        for r in 0..150 {
            data.x.set(r, 3, 1.0);
        }
        let f = Forest::fit(
            &data,
            &ForestConfig {
                trees: 20,
                ..Default::default()
            },
            2,
        );
        assert_eq!(f.importances()[3], 0.0);
        for t in &f.trees {
            assert!(!t.split_features().contains(&3));
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 0], 5), 0.0);
        assert!((gini(&[1, 1], 2) - 0.5).abs() < 1e-15);
    }
}
