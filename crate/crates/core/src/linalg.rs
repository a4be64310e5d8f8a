//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Graphs handled here are desk-scale (a few hundred vertices at most), so the
//! O(n³) per sweep cost is irrelevant next to the accuracy Jacobi gives on
//! small symmetric matrices: eigenvalues come out to near machine precision
//! relative to the matrix norm, and the eigenvectors are orthonormal by
//! construction.

use ndarray::{Array1, Array2};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (non-decreasing) and matching orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Decompose a symmetric matrix. Only the upper triangle is trusted; the caller
/// is responsible for passing something symmetric.
///
/// Sorting is stable, so repeated eigenvalues keep the order in which the
/// rotations left them.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> SymmetricEigen {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "symmetric_eigen needs a square matrix");

    let mut a = matrix.clone();
    for i in 0..n {
        for j in 0..i {
            a[[i, j]] = a[[j, i]];
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1 && scale > 0.0 {
        let threshold = f64::EPSILON * scale;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| a[[i, j]] * a[[i, j]])
                .sum::<f64>()
                .sqrt();
            if off <= threshold {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));

    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(src));
    }
    SymmetricEigen { values, vectors }
}

// One Jacobi rotation annihilating a[p][q] (Golub & Van Loan, Alg. 8.4.1).
fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let apq = a[[p, q]];
    if apq == 0.0 {
        return;
    }
    let app = a[[p, p]];
    let aqq = a[[q, q]];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = a.nrows();
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
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;

    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}
