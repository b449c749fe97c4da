use ndarray::Array2;

use crate::error::{Error, Result};

pub const OFF_DIAGONAL_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 50;

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a[[p, q]] * a[[p, q]];
            }
        }
    }
    sum.sqrt()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Equal eigenvalues keep their diagonal order.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > OFF_DIAGONAL_TOL {
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
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
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(src));
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn random_symmetric_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = 8;
            let mut m = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    m[[i, j]] = x;
                    m[[j, i]] = x;
                }
            }
            let (vals, vecs) = symmetric_eigen(&m).unwrap();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            for (c, &lambda) in vals.iter().enumerate() {
                let v = vecs.column(c);
                let mv = m.dot(&v);
                let resid = mv.iter().zip(v.iter()).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
                assert!(resid <= 1e-8, "residual {resid}");
            }
            let gram = vecs.t().dot(&vecs);
            let err = (&gram - &Array2::<f64>::eye(n)).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(err <= 1e-8);
        }
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(symmetric_eigen(&Array2::zeros((2, 3))).is_err());
    }
}
