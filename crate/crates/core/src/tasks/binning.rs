use serde::{Deserialize, Serialize};

/// Tertile thresholds fitted on a training split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin3 {
    pub t1: f64,
    pub t2: f64,
}

pub const BIN_LABELS: [&str; 3] = ["low", "mid", "high"];

impl Bin3 {
    /// Thresholds at the 1/3 and 2/3 empirical quantiles. `None` with fewer
    /// than three distinct values.
    pub fn fit(values: &[f64]) -> Option<Bin3> {
        let mut s: Vec<f64> = values.to_vec();
        s.sort_by(f64::total_cmp);
        let mut distinct = s.clone();
        distinct.dedup();
        if distinct.len() < 3 {
            return None;
        }
        let n = s.len();
        let t1 = s[n.div_ceil(3) - 1];
        let t2 = s[(2 * n).div_ceil(3) - 1];
        Some(Bin3 { t1, t2 })
    }

    pub fn assign(&self, v: f64) -> usize {
        if v <= self.t1 {
            0
        } else if v <= self.t2 {
            1
        } else {
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Smallest sample value whose empirical CDF reaches `q`, by scanning.
    fn quantile_by_scan(values: &[f64], q_num: usize, q_den: usize) -> f64 {
        let n = values.len();
        let mut candidates = values.to_vec();
        candidates.sort_by(f64::total_cmp);
        for &c in &candidates {
            let at_or_below = values.iter().filter(|&&v| v <= c).count();
            if at_or_below * q_den >= q_num * n {
                return c;
            }
        }
        unreachable!()
    }

    fn brute_counts(values: &[f64]) -> [usize; 3] {
        let t1 = quantile_by_scan(values, 1, 3);
        let t2 = quantile_by_scan(values, 2, 3);
        let mut c = [0; 3];
        for &v in values {
            let b = if v <= t1 {
                0
            } else if v <= t2 {
                1
            } else {
                2
            };
            c[b] += 1;
        }
        c
    }

    fn counts(b: &Bin3, values: &[f64]) -> [usize; 3] {
        let mut c = [0; 3];
        for &v in values {
            c[b.assign(v)] += 1;
        }
        c
    }

    #[test]
    fn one_to_nine() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let b = Bin3::fit(&v).unwrap();
        let labels: Vec<usize> = v.iter().map(|&x| b.assign(x)).collect();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn heavy_ties_match_scan() {
        let v = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let b = Bin3::fit(&v).unwrap();
        assert_eq!(counts(&b, &v), brute_counts(&v));
        assert_eq!(counts(&b, &v), [4, 0, 2]);
    }

    #[test]
    fn too_few_distinct() {
        assert!(Bin3::fit(&[1.0, 1.0, 2.0, 2.0]).is_none());
        assert!(Bin3::fit(&[1.0, 2.0]).is_none());
    }

    proptest! {
        #[test]
        fn all_distinct_balanced(mut v in prop::collection::vec(-1e3f64..1e3, 3..200)) {
            v.sort_by(f64::total_cmp);
            v.dedup();
            prop_assume!(v.len() >= 3);
            let b = Bin3::fit(&v).unwrap();
            let c = counts(&b, &v);
            let (lo, hi) = (c.iter().min().unwrap(), c.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "{:?}", c);
        }

        #[test]
        fn tied_values_match_scan(v in prop::collection::vec(0u8..6, 3..60)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            if let Some(b) = Bin3::fit(&v) {
                prop_assert_eq!(counts(&b, &v), brute_counts(&v));
            }
        }
    }
}
