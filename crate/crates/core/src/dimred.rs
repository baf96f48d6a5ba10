//! Dimensionality reduction fitted on training data and applied to any split:
//! identity, PCA, truncated SVD (LSA), and PCA accumulated over streamed batches.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    None,
    Pca,
    Lsa,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Scheme::None),
            "pca" => Ok(Scheme::Pca),
            "lsa" | "svd" => Ok(Scheme::Lsa),
            other => Err(Error::InvalidArgument(format!(
                "unknown reduction scheme {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::None => "none",
            Scheme::Pca => "pca",
            Scheme::Lsa => "lsa",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducerSpec {
    pub scheme: Scheme,
    pub n_components: usize,
}

impl ReducerSpec {
    pub fn new(scheme: Scheme, n_components: usize) -> Self {
        Self {
            scheme,
            n_components,
        }
    }

    /// Keeps every original feature.
    pub fn full(scheme: Scheme, n_features: usize) -> Self {
        Self::new(scheme, n_features)
    }
}

/// A fitted linear map `x -> (x - center) * components^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReducerFile<T>", into = "ReducerFile<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct FittedReducer<T> {
    scheme: Scheme,
    center: Vec<T>,
    components: Array2<T>,
    explained_variance: Vec<T>,
    warnings: Vec<String>,
}

impl<T: Real> FittedReducer<T> {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_features(&self) -> usize {
        self.components.ncols()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    /// D x n, orthonormal rows.
    pub fn components(&self) -> ArrayView2<'_, T> {
        self.components.view()
    }

    /// Eigenvalues of the sample covariance (PCA), squared singular values over `s - 1`
    /// (LSA), or per-feature sample variances (identity).
    pub fn explained_variance(&self) -> &[T] {
        &self.explained_variance
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Projects rows of `features`. Each output entry is summed over features in index
    /// order, so the result for a row never depends on what else is in the batch.
    pub fn transform(&self, features: ArrayView2<T>) -> Result<Array2<T>> {
        let n = self.n_features();
        if features.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: features.ncols(),
            });
        }
        if self.scheme == Scheme::None {
            return Ok(features.to_owned());
        }
        let d = self.n_components();
        let mut out = Array2::<T>::zeros((features.nrows(), d));
        let mut centered = vec![T::zero(); n];
        for (i, row) in features.rows().into_iter().enumerate() {
            for (j, (&x, &c)) in row.iter().zip(&self.center).enumerate() {
                centered[j] = x - c;
            }
            for k in 0..d {
                let comp = self.components.row(k);
                let mut acc = T::zero();
                for j in 0..n {
                    acc += centered[j] * comp[j];
                }
                out[[i, k]] = acc;
            }
        }
        Ok(out)
    }
}

/// Fits the reducer on training rows.
pub fn fit_reducer<T: Real>(spec: &ReducerSpec, train: ArrayView2<T>) -> Result<FittedReducer<T>> {
    let (s, n) = train.dim();
    if s < 2 {
        return Err(Error::InvalidArgument(format!(
            "reducer needs at least 2 samples, got {s}"
        )));
    }
    let d = spec.n_components;
    match spec.scheme {
        Scheme::None => {
            if d != n {
                return Err(Error::InvalidArgument(format!(
                    "identity reducer keeps all {n} features, {d} components requested"
                )));
            }
            let mean = column_means(train);
            let var = (0..n)
                .map(|j| {
                    let m = mean[j];
                    let ss = train
                        .column(j)
                        .iter()
                        .fold(T::zero(), |acc, &x| acc + (x - m) * (x - m));
                    ss / T::of_usize(s - 1)
                })
                .collect();
            Ok(FittedReducer {
                scheme: Scheme::None,
                center: vec![T::zero(); n],
                components: Array2::eye(n),
                explained_variance: var,
                warnings: Vec::new(),
            })
        }
        Scheme::Pca | Scheme::Lsa => {
            if d == 0 || d > s.min(n) {
                return Err(Error::InvalidArgument(format!(
                    "{} components requested; must be in 1..={}",
                    d,
                    s.min(n)
                )));
            }
            let center = if spec.scheme == Scheme::Pca {
                column_means(train)
            } else {
                vec![T::zero(); n]
            };
            // Second moment about `center`, upper triangle.
            let mut scatter = Array2::<T>::zeros((n, n));
            let mut c = vec![T::zero(); n];
            for row in train.rows() {
                for j in 0..n {
                    c[j] = row[j] - center[j];
                }
                for a in 0..n {
                    for b in a..n {
                        scatter[[a, b]] += c[a] * c[b];
                    }
                }
            }
            let denom = T::of_usize(s - 1);
            scatter.mapv_inplace(|x| x / denom);
            Ok(from_second_moment(spec.scheme, center, scatter.view(), d))
        }
    }
}

fn column_means<T: Real>(x: ArrayView2<T>) -> Vec<T> {
    let s = T::of_usize(x.nrows());
    (0..x.ncols())
        .map(|j| x.column(j).iter().fold(T::zero(), |acc, &v| acc + v) / s)
        .collect()
}

/// Eigendecomposes a (scaled) second-moment matrix and keeps the top `d` directions,
/// padding with a canonical-basis completion when the matrix has rank below `d`.
fn from_second_moment<T: Real>(
    scheme: Scheme,
    center: Vec<T>,
    moment: ArrayView2<T>,
    d: usize,
) -> FittedReducer<T> {
    let n = moment.nrows();
    let (values, vectors) = linalg::symmetric_eigen(moment);
    let top = values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let tol = top * T::epsilon() * T::of_usize(16 * n.max(1));
    let rank = values.iter().take_while(|&&v| v > tol).count();

    let mut warnings = Vec::new();
    let keep = rank.min(d);
    let kept: Vec<Vec<T>> = (0..keep).map(|k| vectors.row(k).to_vec()).collect();
    let rows = if keep < d {
        warnings.push(format!(
            "training data has rank {rank} < {d} requested components; padded with zero-variance directions"
        ));
        linalg::complete_orthonormal(&kept, n, d)
    } else {
        kept
    };
    let mut components = Array2::<T>::zeros((d, n));
    for (k, r) in rows.iter().enumerate() {
        for j in 0..n {
            components[[k, j]] = r[j];
        }
    }
    linalg::fix_row_signs(&mut components);
    let explained_variance = (0..d)
        .map(|k| {
            if k < keep {
                values[k].max(T::zero())
            } else {
                T::zero()
            }
        })
        .collect();
    FittedReducer {
        scheme,
        center,
        components,
        explained_variance,
        warnings,
    }
}

/// Running sums for PCA over batches: row count, column sums and `sum x^T x`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalPcaState<T> {
    count: usize,
    sum: Vec<T>,
    gram: Array2<T>,
}

impl<T: Real> IncrementalPcaState<T> {
    pub fn new(n_features: usize) -> Self {
        Self {
            count: 0,
            sum: vec![T::zero(); n_features],
            gram: Array2::zeros((n_features, n_features)),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sum(&self) -> &[T] {
        &self.sum
    }

    pub fn gram(&self) -> ArrayView2<'_, T> {
        self.gram.view()
    }

    pub fn n_features(&self) -> usize {
        self.sum.len()
    }

    pub fn absorb(&mut self, batch: ArrayView2<T>) -> Result<()> {
        let n = self.n_features();
        if batch.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: batch.ncols(),
            });
        }
        for row in batch.rows() {
            for a in 0..n {
                self.sum[a] += row[a];
                for b in a..n {
                    self.gram[[a, b]] += row[a] * row[b];
                }
            }
        }
        self.mirror();
        self.count += batch.nrows();
        Ok(())
    }

    /// Adds another state's sums, e.g. from a batch processed on another thread.
    pub fn merge(&mut self, other: &IncrementalPcaState<T>) -> Result<()> {
        if other.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: other.n_features(),
            });
        }
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += *b;
        }
        self.gram += &other.gram;
        Ok(())
    }

    fn mirror(&mut self) {
        let n = self.n_features();
        for a in 0..n {
            for b in (a + 1)..n {
                self.gram[[b, a]] = self.gram[[a, b]];
            }
        }
    }

    /// Identity reducer whose explained variances are the per-feature variances of the
    /// accumulated rows.
    pub fn finalize_identity(&self) -> Result<FittedReducer<T>> {
        let n = self.n_features();
        if self.count < 2 {
            return Err(Error::InvalidArgument(format!(
                "reducer needs at least 2 samples, got {}",
                self.count
            )));
        }
        let count = T::of_usize(self.count);
        let denom = T::of_usize(self.count - 1);
        let var = (0..n)
            .map(|j| {
                let m = self.sum[j] / count;
                ((self.gram[[j, j]] - count * m * m) / denom).max(T::zero())
            })
            .collect();
        Ok(FittedReducer {
            scheme: Scheme::None,
            center: vec![T::zero(); n],
            components: Array2::eye(n),
            explained_variance: var,
            warnings: Vec::new(),
        })
    }

    /// PCA with `n_components` directions from the accumulated sums.
    pub fn finalize(&self, n_components: usize) -> Result<FittedReducer<T>> {
        let n = self.n_features();
        if self.count < 2 {
            return Err(Error::InvalidArgument(format!(
                "incremental PCA needs at least 2 samples, got {}",
                self.count
            )));
        }
        if n_components == 0 || n_components > self.count.min(n) {
            return Err(Error::InvalidArgument(format!(
                "{} components requested; must be in 1..={}",
                n_components,
                self.count.min(n)
            )));
        }
        let count = T::of_usize(self.count);
        let mean: Vec<T> = self.sum.iter().map(|&x| x / count).collect();
        let denom = T::of_usize(self.count - 1);
        let mut cov = Array2::<T>::zeros((n, n));
        for a in 0..n {
            for b in a..n {
                cov[[a, b]] = (self.gram[[a, b]] - count * mean[a] * mean[b]) / denom;
            }
        }
        Ok(from_second_moment(
            Scheme::Pca,
            mean,
            cov.view(),
            n_components,
        ))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct ReducerFile<T> {
    scheme: Scheme,
    n_features: usize,
    n_components: usize,
    center: Vec<T>,
    /// Row-major, `n_components` rows of `n_features`.
    components: Vec<T>,
    explained_variance: Vec<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl<T: Real> From<FittedReducer<T>> for ReducerFile<T> {
    fn from(r: FittedReducer<T>) -> Self {
        ReducerFile {
            scheme: r.scheme,
            n_features: r.components.ncols(),
            n_components: r.components.nrows(),
            center: r.center,
            components: r.components.iter().copied().collect(),
            explained_variance: r.explained_variance,
            warnings: r.warnings,
        }
    }
}

impl<T: Real> TryFrom<ReducerFile<T>> for FittedReducer<T> {
    type Error = String;

    fn try_from(f: ReducerFile<T>) -> std::result::Result<Self, String> {
        if f.center.len() != f.n_features || f.explained_variance.len() != f.n_components {
            return Err("reducer vector lengths disagree with its shape".into());
        }
        let components = Array2::from_shape_vec((f.n_components, f.n_features), f.components)
            .map_err(|e| format!("reducer components: {e}"))?;
        Ok(FittedReducer {
            scheme: f.scheme,
            center: f.center,
            components,
            explained_variance: f.explained_variance,
            warnings: f.warnings,
        })
    }
}
