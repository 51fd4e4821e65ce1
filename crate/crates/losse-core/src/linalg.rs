//! Dense symmetric positive-definite solves used by the learner.
//!
//! The block update factors submatrices no larger than the feature support
//! bound (about a hundred rows), and the batch solve factors the full
//! ridge-regularized Gram matrix. Both go through the same in-place Cholesky.

use ndarray::Array2;

use crate::error::{LosseError, Result};

/// In-place lower Cholesky factorization of a symmetric matrix.
///
/// Fails if a pivot is not strictly positive, which with a zero ridge term
/// means the accumulated Gram matrix is singular.
pub fn cholesky_in_place(m: &mut Array2<f64>) -> Result<()> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let a = m
        .as_slice_mut()
        .expect("cholesky input must be contiguous row-major");
    for j in 0..n {
        let row_j = &mut a[j * n..(j + 1) * n];
        let mut diag = row_j[j];
        diag -= row_j[..j].iter().map(|x| x * x).sum::<f64>();
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(LosseError::Solver(format!(
                "non-positive pivot {diag:e} at column {j}; matrix is not positive definite"
            )));
        }
        let pivot = diag.sqrt();
        row_j[j] = pivot;
        for i in (j + 1)..n {
            let (upper, lower) = a.split_at_mut(i * n);
            let rj = &upper[j * n..j * n + j];
            let ri = &mut lower[..n];
            let dot: f64 = ri[..j].iter().zip(rj).map(|(x, y)| x * y).sum();
            ri[j] = (ri[j] - dot) / pivot;
        }
    }
    // Zero the strict upper triangle so the factor is exactly lower.
    let a = m.as_slice_mut().unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L L^T X = B` in place given the lower factor `L`.
pub fn cholesky_solve_in_place(l: &Array2<f64>, b: &mut Array2<f64>) {
    let n = l.nrows();
    let cols = b.ncols();
    debug_assert_eq!(b.nrows(), n);
    let lf = l.as_slice().unwrap();
    let bf = b.as_slice_mut().unwrap();
    // Forward substitution: L Z = B.
    for i in 0..n {
        let (solved, rest) = bf.split_at_mut(i * cols);
        let row_b = &mut rest[..cols];
        for k in 0..i {
            let lik = lf[i * n + k];
            if lik != 0.0 {
                let row_k = &solved[k * cols..k * cols + cols];
                for c in 0..cols {
                    row_b[c] -= lik * row_k[c];
                }
            }
        }
        let inv = 1.0 / lf[i * n + i];
        for v in row_b.iter_mut() {
            *v *= inv;
        }
    }
    // Back substitution: L^T X = Z.
    for i in (0..n).rev() {
        let (left, rest) = bf.split_at_mut((i + 1) * cols);
        let row_i = &mut left[i * cols..];
        for k in (i + 1)..n {
            let lki = lf[k * n + i];
            if lki != 0.0 {
                let row_k = &rest[(k - i - 1) * cols..(k - i) * cols];
                for c in 0..cols {
                    row_i[c] -= lki * row_k[c];
                }
            }
        }
        let inv = 1.0 / lf[i * n + i];
        for v in row_i.iter_mut() {
            *v *= inv;
        }
    }
}

/// Solves `(M) X = B` for symmetric positive-definite `M`, consuming `M`.
pub fn solve_spd(mut m: Array2<f64>, mut b: Array2<f64>) -> Result<Array2<f64>> {
    cholesky_in_place(&mut m)?;
    cholesky_solve_in_place(&m, &mut b);
    Ok(b)
}

/// Adds `eps` to the diagonal of `m`.
pub fn add_ridge(m: &mut Array2<f64>, eps: f64) {
    if eps != 0.0 {
        for i in 0..m.nrows() {
            m[[i, i]] += eps;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_known_system() {
        // M = [[4,2],[2,3]], b = [1, 2]^T; solution (−1/8, 3/4).
        let m = array![[4.0, 2.0], [2.0, 3.0]];
        let b = array![[1.0], [2.0]];
        let x = solve_spd(m, b).unwrap();
        assert!((x[[0, 0]] + 0.125).abs() < 1e-12);
        assert!((x[[1, 0]] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn multi_rhs_matches_single() {
        let m = array![[5.0, 1.0, 0.5], [1.0, 4.0, 0.2], [0.5, 0.2, 3.0]];
        let b = array![[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]];
        let x = solve_spd(m.clone(), b.clone()).unwrap();
        for col in 0..2 {
            let bi = b.column(col).insert_axis(ndarray::Axis(1)).to_owned();
            let xi = solve_spd(m.clone(), bi).unwrap();
            for row in 0..3 {
                assert!((x[[row, col]] - xi[[row, 0]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_singular_without_ridge() {
        let m = array![[1.0, 1.0], [1.0, 1.0]];
        let b = array![[1.0], [1.0]];
        assert!(solve_spd(m, b).is_err());
    }

    #[test]
    fn ridge_restores_solvability() {
        let mut m = array![[1.0, 1.0], [1.0, 1.0]];
        add_ridge(&mut m, 1e-6);
        let b = array![[1.0], [1.0]];
        assert!(solve_spd(m, b).is_ok());
    }

    #[test]
    fn residual_small_on_random_spd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let g = Array2::from_shape_fn((n, n), |_| rng.random::<f64>() - 0.5);
        let mut m = g.dot(&g.t());
        add_ridge(&mut m, 1e-3);
        let b = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>() - 0.5);
        let x = solve_spd(m.clone(), b.clone()).unwrap();
        let r = m.dot(&x) - &b;
        let worst = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(worst < 1e-9, "residual {worst}");
    }
}
