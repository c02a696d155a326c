//! Lyapunov solver `A X + X A^T = C` via Bartels-Stewart: one real Schur
//! decomposition plus a quasi-triangular solve.

use nalgebra::DMatrix;

use crate::linalg::dense::{fro_norm, schur, trsyl};
use crate::{Error, Result};

/// Solves `A X + X A^T = C`. Unique when no two eigenvalues of `A` sum to
/// zero, which holds for the anti-stable operators this crate produces.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(c.nrows(), n);
    assert_eq!(c.ncols(), n);
    let s = schur(a)?;
    let c_t = s.q.transpose() * c * &s.q;
    let (y, scale) = trsyl(&s.t, &s.t, &c_t, false, true, 1)?;
    if scale == 0.0 {
        return Err(Error::numerical(
            "lyapunov",
            "dtrsyl returned zero scale (singular Sylvester operator)",
        ));
    }
    let x = &s.q * y * s.q.transpose() / scale;
    Ok(x)
}

/// Relative residual `|A X + X A^T - C| / |C|`.
pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let r = a * x + x * a.transpose() - c;
    fro_norm(&r) / fro_norm(c).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_lyapunov() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let x = solve_lyapunov(&a, &c).unwrap();
        assert!(lyapunov_residual(&a, &x, &c) < 1e-13);
    }

    #[test]
    fn solves_with_complex_spectrum() {
        // Eigenvalues 1 +- 2i and 4: anti-stable, well posed.
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.3, 2.0, 1.0, -0.1, 0.0, 0.0, 4.0]);
        let c0 = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.4, 0.0, 0.4, 1.5]);
        let x = solve_lyapunov(&a, &c0).unwrap();
        assert!(lyapunov_residual(&a, &x, &c0) < 1e-12);
        // Symmetric right-hand side gives a symmetric solution.
        assert!(fro_norm(&(x.clone() - x.transpose())) < 1e-12);
    }

    #[test]
    fn random_spd_case() {
        let n = 20;
        let g = DMatrix::from_fn(n, n, |i, j| ((3 * i + 7 * j) as f64 * 0.37).sin());
        let spd = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
        // A = SPD + small skew part, spectrum in the right half plane.
        let skew = DMatrix::from_fn(n, n, |i, j| {
            if i < j {
                0.1
            } else if i > j {
                -0.1
            } else {
                0.0
            }
        });
        let a = spd.clone() * 0.1 + skew;
        let c = &g * g.transpose() + DMatrix::identity(n, n);
        let x = solve_lyapunov(&a, &c).unwrap();
        assert!(lyapunov_residual(&a, &x, &c) < 1e-11);
    }
}
