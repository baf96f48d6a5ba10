//! Small dense kernels with a fixed summation order, so results do not depend on
//! how rows were batched.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors as the
/// rows of the second matrix. Only the upper triangle of `sym` is read.
pub fn symmetric_eigen<T: Real>(sym: ArrayView2<T>) -> (Vec<T>, Array2<T>) {
    let n = sym.nrows();
    assert_eq!(n, sym.ncols(), "symmetric_eigen needs a square matrix");
    let mut a = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            a[[i, j]] = sym[[i, j]];
            a[[j, i]] = sym[[i, j]];
        }
    }
    let mut v = Array2::<T>::eye(n);

    let norm = a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let tol = T::epsilon() * norm;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= tol || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let two = T::one() + T::one();
                let theta = (a[[q, q]] - a[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                a[[p, q]] = T::zero();
                a[[q, p]] = T::zero();
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep their column order.
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::<T>::zeros((n, n));
    for (row, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[row, k]] = v[[k, i]];
        }
    }
    (values, vectors)
}

/// Flips each row so its largest-magnitude entry is positive (first index wins ties).
pub fn fix_row_signs<T: Real>(rows: &mut Array2<T>) {
    for mut row in rows.rows_mut() {
        let mut best = 0;
        for (k, x) in row.iter().enumerate() {
            if x.abs() > row[best].abs() {
                best = k;
            }
        }
        if row[best] < T::zero() {
            row.mapv_inplace(|x| -x);
        }
    }
}

/// Extends `kept` orthonormal rows to `target` rows by Gram-Schmidt over the canonical
/// basis e_0, e_1, ... in order.
pub fn complete_orthonormal<T: Real>(kept: &[Vec<T>], n: usize, target: usize) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = kept.to_vec();
    let accept = T::of(1e-3);
    for i in 0..n {
        if basis.len() >= target {
            break;
        }
        let mut cand = vec![T::zero(); n];
        cand[i] = T::one();
        // Two passes of classical Gram-Schmidt.
        for _ in 0..2 {
            for u in &basis {
                let dot = dot(&cand, u);
                for (c, &uk) in cand.iter_mut().zip(u) {
                    *c -= dot * uk;
                }
            }
        }
        let len = dot(&cand, &cand).sqrt();
        if len > accept {
            for c in cand.iter_mut() {
                *c /= len;
            }
            basis.push(cand);
        }
    }
    basis
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
