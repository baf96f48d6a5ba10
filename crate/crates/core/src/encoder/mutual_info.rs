//! Plug-in mutual information between a real column and class labels.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Per-component importance `I(X_d; y)` in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ImportanceScores<T> {
    pub scores: Vec<T>,
}

impl<T: Real> ImportanceScores<T> {
    pub fn new(scores: Vec<T>) -> Self {
        debug_assert!(scores.iter().all(|s| s.is_finite() && *s >= T::zero()));
        Self { scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// `clamp(floor(sqrt(s)), 8, 256)`.
pub fn default_bins(s: usize) -> usize {
    ((s as f64).sqrt().floor() as usize).clamp(8, 256)
}

/// Equal-frequency histogram estimate of `I(column; labels)` in bits.
///
/// Rows are ranked by value and rank `r` falls in bin `floor(r * bins / s)`; tied values
/// all take the bin of their lowest rank, so a constant column lands in one bin and
/// scores 0. The estimate depends only on the ranks of `column`, so any strictly
/// increasing rescaling of the column leaves it unchanged.
pub fn estimate_mutual_information<T: Real>(
    column: &[T],
    labels: &[usize],
    bins: Option<usize>,
) -> T {
    let s = column.len();
    assert_eq!(s, labels.len(), "column and labels differ in length");
    if s < 2 {
        return T::zero();
    }
    let n_bins = bins.unwrap_or_else(|| default_bins(s)).max(1);
    let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;

    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).expect("finite column"));
    let mut bin_of = vec![0usize; s];
    let mut rank = 0;
    while rank < s {
        let value = column[order[rank]];
        let bin = rank * n_bins / s;
        let mut end = rank;
        while end < s && column[order[end]] == value {
            bin_of[order[end]] = bin;
            end += 1;
        }
        rank = end;
    }

    let mut joint = vec![0usize; n_bins * n_classes];
    let mut bin_count = vec![0usize; n_bins];
    let mut class_count = vec![0usize; n_classes];
    for (i, &y) in labels.iter().enumerate() {
        joint[bin_of[i] * n_classes + y] += 1;
        bin_count[bin_of[i]] += 1;
        class_count[y] += 1;
    }
    let total = T::of_usize(s);
    let mut mi = T::zero();
    for b in 0..n_bins {
        for y in 0..n_classes {
            let nby = joint[b * n_classes + y];
            if nby == 0 {
                continue;
            }
            // p(b,y) log2( n(b,y) s / (n(b) n(y)) )
            let ratio = T::of_usize(nby) * total
                / (T::of_usize(bin_count[b]) * T::of_usize(class_count[y]));
            mi += T::of_usize(nby) / total * ratio.log2();
        }
    }
    mi.max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synthetic;

    #[test]
    fn deterministic_dependence_is_one_bit() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let column: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let mi = estimate_mutual_information(&column, &labels, None);
        assert!((mi - 1.0).abs() < 1e-9, "{mi}");
    }

    #[test]
    fn constant_column_is_zero() {
        let labels: Vec<usize> = (0..100).map(|i| i % 3).collect();
        let column = vec![4.2f64; 100];
        assert_eq!(estimate_mutual_information(&column, &labels, None), 0.0);
    }

    #[test]
    fn independent_column_is_near_zero() {
        let d = make_synthetic::<f64>(10_000, 1, 2, 0.0, 11).unwrap();
        let col = d.features().column(0).to_vec();
        let mi = estimate_mutual_information(&col, d.labels(), None);
        assert!(mi < 0.02, "{mi}");
    }

    #[test]
    fn independent_small_sample() {
        let d = make_synthetic::<f64>(1000, 3, 2, 0.0, 12).unwrap();
        for j in 0..3 {
            let col = d.features().column(j).to_vec();
            let mi = estimate_mutual_information(&col, d.labels(), None);
            assert!(mi < 0.05, "feature {j}: {mi}");
        }
    }

    #[test]
    fn invariant_to_monotone_rescaling() {
        let d = make_synthetic::<f64>(500, 1, 3, 1.0, 13).unwrap();
        let col = d.features().column(0).to_vec();
        let scaled: Vec<f64> = col.iter().map(|x| (x * 0.5 + 3.0).exp()).collect();
        let a = estimate_mutual_information(&col, d.labels(), None);
        let b = estimate_mutual_information(&scaled, d.labels(), None);
        assert_eq!(a, b);
    }

    #[test]
    fn default_bin_clamp() {
        assert_eq!(default_bins(10), 8);
        assert_eq!(default_bins(1000), 31);
        assert_eq!(default_bins(1_000_000), 256);
    }
}
