use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use ndarray::ArrayView2;

/// Empirical CDF per component, stored as the sorted training values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CopulaModel<T> {
    columns: Vec<Vec<T>>,
}

impl<T: Real> CopulaModel<T> {
    pub fn fit(train: ArrayView2<T>) -> Self {
        let columns = train
            .columns()
            .into_iter()
            .map(|c| {
                let mut v = c.to_vec();
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
                v
            })
            .collect();
        Self { columns }
    }

    /// Builds a model from per-component samples (sorted here).
    pub fn from_columns(mut columns: Vec<Vec<T>>) -> Self {
        for c in &mut columns {
            c.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        }
        Self { columns }
    }

    pub fn n_components(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, d: usize) -> &[T] {
        &self.columns[d]
    }

    /// `#{train <= value} / (s + 1)`.
    pub fn apply(&self, value: T, component: usize) -> Result<T> {
        let col = self.columns.get(component).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "component {component} out of range ({} components)",
                self.columns.len()
            ))
        })?;
        Ok(self.cdf(col, value))
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, value: T, component: usize) -> T {
        self.cdf(&self.columns[component], value)
    }

    fn cdf(&self, col: &[T], value: T) -> T {
        let below = col.partition_point(|&v| v <= value);
        T::of_usize(below) / T::of_usize(col.len() + 1)
    }
}

/// Fits the copula on min-max normalized, reduced training rows.
pub fn fit_copula<T: Real>(reduced_normalized_train: ArrayView2<T>) -> CopulaModel<T> {
    CopulaModel::fit(reduced_normalized_train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn stores_sorted_columns() {
        let m = fit_copula(array![[3.0f64], [1.0], [2.0]].view());
        assert_eq!(m.column(0), &[1.0, 2.0, 3.0]);
        let m = fit_copula(array![[1.0f64], [2.0], [1.0], [1.0]].view());
        assert_eq!(m.column(0), &[1.0, 1.0, 1.0, 2.0]);
        let again = fit_copula(array![[1.0f64], [2.0], [1.0], [1.0]].view());
        assert_eq!(m, again);
    }

    #[test]
    fn rank_over_s_plus_one() {
        let m = fit_copula(array![[1.0f64], [2.0], [3.0], [4.0]].view());
        assert_eq!(m.apply(2.0, 0).unwrap(), 0.4);
        assert_eq!(m.apply(0.5, 0).unwrap(), 0.0);
        assert_eq!(m.apply(10.0, 0).unwrap(), 0.8);
        assert!(m.apply(1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn monotone(values in prop::collection::vec(-10.0f64..10.0, 1..50), a in -12.0f64..12.0, b in -12.0f64..12.0) {
            let x = Array2::from_shape_vec((values.len(), 1), values).unwrap();
            let m = fit_copula(x.view());
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let flo = m.apply(lo, 0).unwrap();
            let fhi = m.apply(hi, 0).unwrap();
            prop_assert!(flo <= fhi);
            prop_assert!(fhi >= 0.0 && fhi < 1.0);
        }
    }
}
