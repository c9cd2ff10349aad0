//! Scalar/vector primitives: stabilized softmax, entropy, Euclidean
//! distance and the ridge regression closed form.

use super::matrix::Matrix;
use super::NumericsError;

/// Numerically stable softmax over a slice.
///
/// Outputs are positive and sum to 1; invariant under adding a constant
/// to every input.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "softmax of empty vector");
    let max = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Shannon entropy in nats, with `0 * ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64, NumericsError> {
    if x.len() != y.len() {
        return Err(NumericsError::DimMismatch {
            context: "euclidean distance",
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Ridge regression closed form: the unique minimizer of
/// `||E W - Y||_F^2 + reg ||W||_F^2`, computed as
/// `W = E^T (E E^T + reg I)^{-1} Y` through an SPD solve.
pub fn ridge_solve(e: &Matrix, y: &Matrix, reg: f64) -> Result<Matrix, NumericsError> {
    if reg <= 0.0 {
        return Err(NumericsError::InvalidArg(format!(
            "ridge regularizer must be positive, got {reg}"
        )));
    }
    if !e.is_finite() {
        return Err(NumericsError::InvalidArg(
            "ridge design matrix contains non-finite entries".into(),
        ));
    }
    if e.rows() != y.rows() {
        return Err(NumericsError::DimMismatch {
            context: "ridge_solve targets",
            expected: e.rows(),
            got: y.rows(),
        });
    }
    let c = e.rows();
    let mut gram = e.matmul(&e.transpose());
    for i in 0..c {
        gram.set(i, i, gram.get(i, i) + reg);
    }
    let x = gram.solve_spd(y)?;
    Ok(e.transpose().matmul(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Test-only dense solver (Gaussian elimination with partial pivoting),
    /// kept independent of the Cholesky path used by `ridge_solve`.
    fn gaussian_solve(a: &Matrix, b: &Matrix) -> Matrix {
        let n = a.rows();
        let m = b.cols();
        let mut aug = Matrix::zeros(n, n + m);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, a.get(r, c));
            }
            for c in 0..m {
                aug.set(r, n + c, b.get(r, c));
            }
        }
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if aug.get(r, col).abs() > aug.get(piv, col).abs() {
                    piv = r;
                }
            }
            if piv != col {
                for c in 0..(n + m) {
                    let t = aug.get(col, c);
                    aug.set(col, c, aug.get(piv, c));
                    aug.set(piv, c, t);
                }
            }
            let d = aug.get(col, col);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = aug.get(r, col) / d;
                for c in col..(n + m) {
                    aug.set(r, c, aug.get(r, c) - f * aug.get(col, c));
                }
            }
        }
        let mut x = Matrix::zeros(n, m);
        for r in 0..n {
            for c in 0..m {
                x.set(r, c, aug.get(r, n + c) / aug.get(r, r));
            }
        }
        x
    }

    #[test]
    fn softmax_uniform_on_equal_inputs() {
        let p = softmax(&[0.0, 0.0, 0.0]);
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let a = softmax(&[0.3, -1.2, 4.5, 0.0]);
        let b = softmax(&[0.3 + 17.0, -1.2 + 17.0, 4.5 + 17.0, 17.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_known_ratio() {
        let p = softmax(&[0.0, 3.0f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn softmax_no_nan_for_large_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..8);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-700.0..700.0)).collect();
            let p = softmax(&v);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn entropy_one_hot_is_zero() {
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn entropy_uniform_four() {
        let h = entropy(&[0.25; 4]);
        assert!((h - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_half_half() {
        let h = entropy(&[0.5, 0.5, 0.0, 0.0]);
        assert!((h - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn euclidean_basics() {
        assert_eq!(euclidean(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        let d1 = euclidean(&[1.0, -2.0, 0.5], &[0.3, 0.0, 2.0]).unwrap();
        let d2 = euclidean(&[0.3, 0.0, 2.0], &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(d1, d2);
        assert!(euclidean(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ridge_identity_limit() {
        let e = Matrix::identity(3);
        let y = Matrix::identity(3);
        let w = ridge_solve(&e, &y, 1e-10).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((w.get(i, j) - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ridge_matches_primal_form() {
        // dual form E^T (E E^T + reg I)^{-1} Y vs primal (E^T E + reg I)^{-1} E^T Y
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let e = rand_matrix(&mut rng, 5, 8);
        let y = Matrix::identity(5);
        let reg = 1.0;
        let w = ridge_solve(&e, &y, reg).unwrap();

        let mut lhs = e.transpose().matmul(&e);
        for i in 0..8 {
            lhs.set(i, i, lhs.get(i, i) + reg);
        }
        let w_primal = gaussian_solve(&lhs, &e.transpose().matmul(&y));
        assert!(w.sub(&w_primal).frob_norm() < 1e-8);
    }

    #[test]
    fn ridge_stationarity() {
        // gradient of ||EW - Y||^2 + reg ||W||^2 vanishes at the solution
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = rand_matrix(&mut rng, 6, 4);
        let y = rand_matrix(&mut rng, 6, 6);
        let reg = 1.0;
        let w = ridge_solve(&e, &y, reg).unwrap();
        let grad = e
            .transpose()
            .matmul(&e.matmul(&w).sub(&y))
            .scale(2.0)
            .add(&w.scale(2.0 * reg));
        assert!(grad.frob_norm() < 1e-6 * (1.0 + w.frob_norm()));
    }

    #[test]
    fn ridge_rejects_bad_reg() {
        let e = Matrix::identity(2);
        assert!(ridge_solve(&e, &Matrix::identity(2), 0.0).is_err());
    }
}
