//! Dense kernels on `nalgebra::DMatrix`, backed by LAPACK.
//!
//! nalgebra stores column-major, so matrices pass straight through the
//! Fortran interface. Everything here is `f64`; sizes are subdomain-scale
//! (a few hundred) or reduced global systems (a few thousand).

use nalgebra::Complex;
use nalgebra::{DMatrix, DVector};
type Complex64 = Complex<f64>;
use std::ffi::{c_char, c_int};

use crate::{Error, Result};

extern "C" {
    fn openblas_set_num_threads(n: std::ffi::c_int);
}

/// Pins OpenBLAS to one thread, once. Parallelism lives at the subdomain
/// level (rayon); OpenBLAS's own pthread pool both fights it for the two
/// cores and overflows rayon worker stacks in its recursive kernels.
pub fn ensure_serial_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| unsafe {
        openblas_set_num_threads(1);
    });
}

fn lapack_err(routine: &'static str, info: i32) -> Error {
    Error::Lapack { routine, info }
}

/// Eigenvalues (ascending) and optional eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &DMatrix<f64>, vectors: bool) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    ensure_serial_blas();
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Ok((DVector::zeros(0), vectors.then(|| DMatrix::zeros(0, 0))));
    }
    let mut work_a = a.clone();
    let mut w = vec![0.0f64; n];
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let n_i = n as c_int;
    let mut info: c_int = 0;
    // Workspace query.
    let mut wkopt = 0.0f64;
    unsafe {
        lapack_sys::dsyev_(
            &jobz,
            &uplo,
            &n_i,
            work_a.as_mut_slice().as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            &mut wkopt,
            &(-1 as c_int),
            &mut info,
        );
    }
    let lwork = wkopt as usize;
    let mut work = vec![0.0f64; lwork.max(1)];
    unsafe {
        lapack_sys::dsyev_(
            &jobz,
            &uplo,
            &n_i,
            work_a.as_mut_slice().as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &(lwork as c_int),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dsyev", info));
    }
    let values = DVector::from_vec(w);
    Ok((values, vectors.then_some(work_a)))
}

/// Real Schur decomposition `A = Q T Q^T` with the eigenvalues of the
/// quasi-triangular `T`.
pub struct Schur {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub eigenvalues: Vec<Complex64>,
}

pub fn schur(a: &DMatrix<f64>) -> Result<Schur> {
    ensure_serial_blas();
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut t = a.clone();
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let n_i = n as c_int;
    let mut sdim: c_int = 0;
    let mut info: c_int = 0;
    let jobvs = b'V' as c_char;
    let sort = b'N' as c_char;
    let mut bwork = vec![0 as c_int; n.max(1)];
    let mut wkopt = 0.0f64;
    unsafe {
        lapack_sys::dgees_(
            &jobvs,
            &sort,
            None,
            &n_i,
            t.as_mut_slice().as_mut_ptr(),
            &n_i,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            q.as_mut_slice().as_mut_ptr(),
            &n_i,
            &mut wkopt,
            &(-1 as c_int),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    let lwork = (wkopt as usize).max(3 * n);
    let mut work = vec![0.0f64; lwork];
    unsafe {
        lapack_sys::dgees_(
            &jobvs,
            &sort,
            None,
            &n_i,
            t.as_mut_slice().as_mut_ptr(),
            &n_i,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            q.as_mut_slice().as_mut_ptr(),
            &n_i,
            work.as_mut_ptr(),
            &(lwork as c_int),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dgees", info));
    }
    let eigenvalues = wr
        .iter()
        .zip(&wi)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    Ok(Schur { q, t, eigenvalues })
}

/// Reorders a real Schur form so that the eigenvalues flagged in `select`
/// occupy the leading block. Returns the updated `(q, t)` and the size of
/// the selected invariant subspace.
pub fn schur_reorder(
    mut q: DMatrix<f64>,
    mut t: DMatrix<f64>,
    select: &[bool],
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    ensure_serial_blas();
    let n = t.nrows();
    assert_eq!(select.len(), n);
    let sel: Vec<c_int> = select.iter().map(|&s| s as c_int).collect();
    let n_i = n as c_int;
    let job = b'N' as c_char;
    let compq = b'V' as c_char;
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let mut m: c_int = 0;
    let mut s = 0.0f64;
    let mut sep = 0.0f64;
    let mut info: c_int = 0;
    let lwork = (n * n).max(1);
    let mut work = vec![0.0f64; lwork];
    let liwork = (n * n).max(1);
    let mut iwork = vec![0 as c_int; liwork];
    unsafe {
        lapack_sys::dtrsen_(
            &job,
            &compq,
            sel.as_ptr(),
            &n_i,
            t.as_mut_slice().as_mut_ptr(),
            &n_i,
            q.as_mut_slice().as_mut_ptr(),
            &n_i,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            &mut m,
            &mut s,
            &mut sep,
            work.as_mut_ptr(),
            &(lwork as c_int),
            iwork.as_mut_ptr(),
            &(liwork as c_int),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dtrsen", info));
    }
    Ok((q, t, m as usize))
}

/// Eigen decomposition of a general real matrix: complex eigenvalues plus
/// the LAPACK-packed right eigenvector matrix (a conjugate pair `j, j+1`
/// stores `Re v` in column `j` and `Im v` in column `j+1`).
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors_packed: DMatrix<f64>,
}

pub fn eigen(a: &DMatrix<f64>) -> Result<Eigen> {
    ensure_serial_blas();
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut work_a = a.clone();
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let mut vr = DMatrix::<f64>::zeros(n, n);
    let n_i = n as c_int;
    let jobvl = b'N' as c_char;
    let jobvr = b'V' as c_char;
    let mut info: c_int = 0;
    let mut wkopt = 0.0f64;
    unsafe {
        lapack_sys::dgeev_(
            &jobvl,
            &jobvr,
            &n_i,
            work_a.as_mut_slice().as_mut_ptr(),
            &n_i,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            &1,
            vr.as_mut_slice().as_mut_ptr(),
            &n_i,
            &mut wkopt,
            &(-1 as c_int),
            &mut info,
        );
    }
    let lwork = (wkopt as usize).max(4 * n);
    let mut work = vec![0.0f64; lwork];
    unsafe {
        lapack_sys::dgeev_(
            &jobvl,
            &jobvr,
            &n_i,
            work_a.as_mut_slice().as_mut_ptr(),
            &n_i,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            &1,
            vr.as_mut_slice().as_mut_ptr(),
            &n_i,
            work.as_mut_ptr(),
            &(lwork as c_int),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dgeev", info));
    }
    let values = wr
        .iter()
        .zip(&wi)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    Ok(Eigen {
        values,
        vectors_packed: vr,
    })
}

/// 2-norm condition number via singular values.
pub fn cond_2(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows().min(a.ncols());
    if n == 0 {
        return Ok(1.0);
    }
    let sv = singular_values(a)?;
    let smax = sv[0];
    let smin = sv[n - 1];
    if smin <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Singular values in descending order (dgesvd, values only).
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    ensure_serial_blas();
    let m = a.nrows();
    let n = a.ncols();
    let mut work_a = a.clone();
    let k = m.min(n);
    let mut s = vec![0.0f64; k];
    let jobu = b'N' as c_char;
    let jobvt = b'N' as c_char;
    let m_i = m as c_int;
    let n_i = n as c_int;
    let mut info: c_int = 0;
    let mut wkopt = 0.0f64;
    unsafe {
        lapack_sys::dgesvd_(
            &jobu,
            &jobvt,
            &m_i,
            &n_i,
            work_a.as_mut_slice().as_mut_ptr(),
            &m_i.max(1),
            s.as_mut_ptr(),
            std::ptr::null_mut(),
            &1,
            std::ptr::null_mut(),
            &1,
            &mut wkopt,
            &(-1 as c_int),
            &mut info,
        );
    }
    let lwork = (wkopt as usize).max(5 * k);
    let mut work = vec![0.0f64; lwork];
    unsafe {
        lapack_sys::dgesvd_(
            &jobu,
            &jobvt,
            &m_i,
            &n_i,
            work_a.as_mut_slice().as_mut_ptr(),
            &m_i.max(1),
            s.as_mut_ptr(),
            std::ptr::null_mut(),
            &1,
            std::ptr::null_mut(),
            &1,
            work.as_mut_ptr(),
            &(lwork as c_int),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dgesvd", info));
    }
    Ok(s)
}

/// LU factorization wrapper for repeated solves with a square matrix.
pub struct LuFactor {
    lu: DMatrix<f64>,
    ipiv: Vec<c_int>,
}

impl LuFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        ensure_serial_blas();
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut lu = a.clone();
        let mut ipiv = vec![0 as c_int; n.max(1)];
        let n_i = n as c_int;
        let mut info: c_int = 0;
        unsafe {
            lapack_sys::dgetrf_(
                &n_i,
                &n_i,
                lu.as_mut_slice().as_mut_ptr(),
                &n_i.max(1),
                ipiv.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dgetrf", info));
        }
        Ok(LuFactor { lu, ipiv })
    }

    pub fn solve_in_place(&self, b: &mut DMatrix<f64>) -> Result<()> {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n);
        let n_i = n as c_int;
        let nrhs = b.ncols() as c_int;
        let trans = b'N' as c_char;
        let mut info: c_int = 0;
        unsafe {
            lapack_sys::dgetrs_(
                &trans,
                &n_i,
                &nrhs,
                self.lu.as_slice().as_ptr(),
                &n_i.max(1),
                self.ipiv.as_ptr(),
                b.as_mut_slice().as_mut_ptr(),
                &n_i.max(1),
                &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dgetrs", info));
        }
        Ok(())
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut x = b.clone();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Dense Cholesky (lower) wrapper for SPD systems.
pub struct CholeskyFactor {
    l: DMatrix<f64>,
}

impl CholeskyFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        ensure_serial_blas();
        let n = a.nrows();
        let mut l = a.clone();
        let uplo = b'L' as c_char;
        let n_i = n as c_int;
        let mut info: c_int = 0;
        unsafe {
            lapack_sys::dpotrf_(
                &uplo,
                &n_i,
                l.as_mut_slice().as_mut_ptr(),
                &n_i.max(1),
                &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dpotrf", info));
        }
        Ok(CholeskyFactor { l })
    }

    pub fn solve_in_place(&self, b: &mut DMatrix<f64>) -> Result<()> {
        let n = self.l.nrows();
        let uplo = b'L' as c_char;
        let n_i = n as c_int;
        let nrhs = b.ncols() as c_int;
        let mut info: c_int = 0;
        unsafe {
            lapack_sys::dpotrs_(
                &uplo,
                &n_i,
                &nrhs,
                self.l.as_slice().as_ptr(),
                &n_i.max(1),
                b.as_mut_slice().as_mut_ptr(),
                &n_i.max(1),
                &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dpotrs", info));
        }
        Ok(())
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let mut x = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        self.solve_in_place(&mut x)?;
        Ok(DVector::from_column_slice(x.as_slice()))
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut x = b.clone();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// The lower factor with the strict upper triangle zeroed.
    pub fn lower(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        let mut l = self.l.clone();
        for j in 1..n {
            for i in 0..j {
                l[(i, j)] = 0.0;
            }
        }
        l
    }
}

/// Triangular solve `op(L) X = B` with the lower factor of a Cholesky
/// decomposition (dtrtrs).
pub fn solve_lower_triangular(
    l: &DMatrix<f64>,
    b: &DMatrix<f64>,
    transpose: bool,
) -> Result<DMatrix<f64>> {
    ensure_serial_blas();
    let n = l.nrows();
    assert_eq!(b.nrows(), n);
    let mut x = b.clone();
    let uplo = b'L' as c_char;
    let trans = if transpose { b'T' } else { b'N' } as c_char;
    let diag = b'N' as c_char;
    let n_i = n as c_int;
    let nrhs = b.ncols() as c_int;
    let mut info: c_int = 0;
    unsafe {
        lapack_sys::dtrtrs_(
            &uplo,
            &trans,
            &diag,
            &n_i,
            &nrhs,
            l.as_slice().as_ptr(),
            &n_i.max(1),
            x.as_mut_slice().as_mut_ptr(),
            &n_i.max(1),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dtrtrs", info));
    }
    Ok(x)
}

/// Solves the quasi-triangular Sylvester equation
/// `op(A) X + isgn * X op(B) = scale * C` (dtrsyl); returns `(X, scale)`.
pub fn trsyl(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    trans_a: bool,
    trans_b: bool,
    isgn: i32,
) -> Result<(DMatrix<f64>, f64)> {
    ensure_serial_blas();
    let m = a.nrows();
    let n = b.nrows();
    assert_eq!(c.nrows(), m);
    assert_eq!(c.ncols(), n);
    let mut x = c.clone();
    let trana = if trans_a { b'T' } else { b'N' } as c_char;
    let tranb = if trans_b { b'T' } else { b'N' } as c_char;
    let isgn_i = isgn as c_int;
    let m_i = m as c_int;
    let n_i = n as c_int;
    let mut scale = 0.0f64;
    let mut info: c_int = 0;
    unsafe {
        lapack_sys::dtrsyl_(
            &trana,
            &tranb,
            &isgn_i,
            &m_i,
            &n_i,
            a.as_slice().as_ptr(),
            &m_i.max(1),
            b.as_slice().as_ptr(),
            &n_i.max(1),
            x.as_mut_slice().as_mut_ptr(),
            &m_i.max(1),
            &mut scale,
            &mut info,
        );
    }
    // info = 1 flags perturbed near-common eigenvalues; the residual checks
    // downstream decide whether that is acceptable.
    if info < 0 {
        return Err(lapack_err("dtrsyl", info));
    }
    Ok((x, scale))
}

/// Frobenius norm.
pub fn fro_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sym_eigen_known_values() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (w, v) = sym_eigen(&a, true).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 3.0, epsilon = 1e-12);
        let v = v.unwrap();
        let res = &a * v.column(0) - w[0] * v.column(0);
        assert!(res.norm() < 1e-12);
    }

    #[test]
    fn schur_reconstructs_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 4.0, 0.5, -2.0, 0.3, 1.0, 0.0, 2.0, -1.0]);
        let s = schur(&a).unwrap();
        let rec = &s.q * &s.t * s.q.transpose();
        assert!(fro_norm(&(rec - &a)) < 1e-12);
        // Eigenvalue sum equals trace.
        let tr: f64 = (0..3).map(|i| a[(i, i)]).sum();
        let sum: Complex64 = s.eigenvalues.iter().sum();
        assert_abs_diff_eq!(sum.re, tr, epsilon = 1e-12);
        assert_abs_diff_eq!(sum.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn schur_reorder_moves_selected_eigenvalues_first() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 0.0, -5.0, 1.0, 0.0, 0.0, 2.0]);
        let s = schur(&a).unwrap();
        let select: Vec<bool> = s.eigenvalues.iter().map(|e| e.re < 0.0).collect();
        let (q, t, m) = schur_reorder(s.q, s.t, &select).unwrap();
        assert_eq!(m, 1);
        assert_abs_diff_eq!(t[(0, 0)], -5.0, epsilon = 1e-12);
        let rec = &q * &t * q.transpose();
        assert!(fro_norm(&(rec - &a)) < 1e-12);
    }

    #[test]
    fn eigen_complex_pair_layout() {
        // Rotation-ish matrix with eigenvalues 1 +- 2i.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 1.0]);
        let e = eigen(&a).unwrap();
        let mut ims: Vec<f64> = e.values.iter().map(|v| v.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ims[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ims[1], 2.0, epsilon = 1e-12);
        // Packed vectors: A (vr + i vi) = lambda (vr + i vi).
        let vr = e.vectors_packed.column(0).clone_owned();
        let vi = e.vectors_packed.column(1).clone_owned();
        let lam = e.values[0];
        let lhs_re = &a * &vr;
        let rhs_re = lam.re * &vr - lam.im * &vi;
        assert!((lhs_re - rhs_re).norm() < 1e-12);
    }

    #[test]
    fn lu_and_cholesky_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let x = LuFactor::new(&a).unwrap().solve(&b).unwrap();
        let r = &a * &x - &b;
        assert!(fro_norm(&r) < 1e-13);
        let chol = CholeskyFactor::new(&a).unwrap();
        let mut x2 = b.clone();
        chol.solve_in_place(&mut x2).unwrap();
        assert!(fro_norm(&(&a * &x2 - &b)) < 1e-13);
        let l = chol.lower();
        assert!(fro_norm(&(&l * l.transpose() - &a)) < 1e-13);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CholeskyFactor::new(&a).is_err());
    }

    #[test]
    fn cond_of_identity_is_one() {
        let a = DMatrix::<f64>::identity(5, 5);
        assert_abs_diff_eq!(cond_2(&a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trsyl_solves_triangular_sylvester() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[3.0, -0.1, 0.0, 4.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let (x, scale) = trsyl(&a, &b, &c, false, false, 1).unwrap();
        let res = &a * &x + &x * &b - scale * &c;
        assert!(fro_norm(&res) < 1e-13);
    }
}
