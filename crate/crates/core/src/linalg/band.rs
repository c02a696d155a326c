//! Symmetric banded SPD matrices in LAPACK lower band storage, with
//! Cholesky factorization and solves (dpbtrf/dpbtrs).

use std::ffi::{c_char, c_int};

use crate::{Error, Result};

/// Lower band storage: `ab[(i - j) + j * (kd + 1)] = A(i, j)` for
/// `j <= i <= min(n - 1, j + kd)`.
#[derive(Debug, Clone)]
pub struct SymBand {
    pub n: usize,
    pub kd: usize,
    ab: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> Self {
        SymBand {
            n,
            kd,
            ab: vec![0.0; n * (kd + 1)],
        }
    }

    /// Adds to entry `(i, j)`; only the lower triangle is stored, so upper
    /// contributions are ignored (callers add both halves symmetrically).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            debug_assert!(
                i - j <= self.kd,
                "entry ({i}, {j}) outside band {}",
                self.kd
            );
            self.ab[(i - j) + j * (self.kd + 1)] += v;
        }
    }

    /// In-place Cholesky factorization.
    pub fn factor(mut self) -> Result<BandCholesky> {
        crate::linalg::dense::ensure_serial_blas();
        let uplo = b'L' as c_char;
        let n = self.n as c_int;
        let kd = self.kd as c_int;
        let ldab = (self.kd + 1) as c_int;
        let mut info: c_int = 0;
        unsafe {
            lapack_sys::dpbtrf_(&uplo, &n, &kd, self.ab.as_mut_ptr(), &ldab, &mut info);
        }
        if info != 0 {
            return Err(Error::Lapack {
                routine: "dpbtrf",
                info,
            });
        }
        Ok(BandCholesky {
            n: self.n,
            kd: self.kd,
            ab: self.ab,
        })
    }

    /// Memory footprint in doubles.
    pub fn storage(&self) -> usize {
        self.ab.len()
    }
}

/// Factored band matrix ready for repeated solves.
pub struct BandCholesky {
    n: usize,
    kd: usize,
    ab: Vec<f64>,
}

impl BandCholesky {
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        assert_eq!(rhs.len() % self.n, 0);
        let nrhs = (rhs.len() / self.n) as c_int;
        let uplo = b'L' as c_char;
        let n = self.n as c_int;
        let kd = self.kd as c_int;
        let ldab = (self.kd + 1) as c_int;
        let mut info: c_int = 0;
        unsafe {
            lapack_sys::dpbtrs_(
                &uplo,
                &n,
                &kd,
                &nrhs,
                self.ab.as_ptr(),
                &ldab,
                rhs.as_mut_ptr(),
                &n.max(1),
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Lapack {
                routine: "dpbtrs",
                info,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_and_solves_tridiagonal() {
        // A = tridiag(-1, 4, -1), n = 6.
        let n = 6;
        let mut band = SymBand::zeros(n, 1);
        for i in 0..n {
            band.add(i, i, 4.0);
            if i + 1 < n {
                band.add(i + 1, i, -1.0);
            }
        }
        let chol = band.factor().unwrap();
        let mut rhs = vec![1.0; n];
        chol.solve_in_place(&mut rhs).unwrap();
        // Residual against the dense operator.
        for i in 0..n {
            let mut ax = 4.0 * rhs[i];
            if i > 0 {
                ax -= rhs[i - 1];
            }
            if i + 1 < n {
                ax -= rhs[i + 1];
            }
            assert!((ax - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn multiple_right_hand_sides() {
        let n = 4;
        let mut band = SymBand::zeros(n, 2);
        for i in 0..n {
            band.add(i, i, 3.0 + i as f64);
        }
        band.add(2, 0, 0.5);
        band.add(3, 1, 0.25);
        let chol = band.factor().unwrap();
        let mut rhs = vec![0.0; 2 * n];
        rhs[0] = 1.0;
        rhs[n + 3] = 2.0;
        chol.solve_in_place(&mut rhs).unwrap();
        assert!(rhs[0].is_finite() && rhs[n + 3].is_finite());
        assert!(rhs[0] > 0.0 && rhs[n + 3] > 0.0);
    }

    #[test]
    fn indefinite_band_is_rejected() {
        let mut band = SymBand::zeros(2, 1);
        band.add(0, 0, 1.0);
        band.add(1, 1, -1.0);
        assert!(band.factor().is_err());
    }
}
