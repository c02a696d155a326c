//! Shift-invert Lanczos for the generalized symmetric eigenproblem
//! `K x = lambda M x` with SPD `M` and positive semidefinite `K`.
//!
//! The operator `(K + sigma M)^{-1} M` is symmetric in the M-inner
//! product; its eigenvalues `theta = 1 / (lambda + sigma)` put the lowest
//! structural modes (including rigid-body modes at `lambda = 0`) first.
//! The factorization is a banded Cholesky, so free-free problems work as
//! long as `sigma > 0`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::band::BandCholesky;
use crate::linalg::dense::sym_eigen;
use crate::linalg::sparse::SparseSym;
use crate::{Error, Result};

pub struct LanczosResult {
    /// Ascending generalized eigenvalues (lambda, not theta).
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors, one column per value.
    pub vectors: DMatrix<f64>,
    /// Lanczos steps taken.
    pub iterations: usize,
}

/// Computes the `n_modes` smallest eigenpairs.
pub fn smallest_modes(
    k: &SparseSym,
    m: &SparseSym,
    n_modes: usize,
    sigma: f64,
    rel_tol: f64,
) -> Result<LanczosResult> {
    let n = k.n;
    if n_modes == 0 || n_modes > n {
        return Err(Error::InvalidArgument(format!(
            "requested {n_modes} modes of an n = {n} system"
        )));
    }
    let factor = k
        .to_band_shifted(Some((m, sigma)))
        .factor()
        .map_err(|e| Error::numerical("lanczos", format!("shifted operator not SPD: {e}")))?;

    let mut m_steps = (2 * n_modes + 40).min(n);
    loop {
        let out = run_lanczos(k, m, &factor, n_modes, sigma, rel_tol, m_steps)?;
        if let Some(result) = out {
            return Ok(result);
        }
        if m_steps == n {
            return Err(Error::numerical(
                "lanczos",
                format!("no convergence with the full basis of {n} vectors"),
            ));
        }
        m_steps = (m_steps * 2).min(n);
    }
}

#[allow(clippy::too_many_arguments)]
fn run_lanczos(
    k: &SparseSym,
    m: &SparseSym,
    factor: &BandCholesky,
    n_modes: usize,
    sigma: f64,
    rel_tol: f64,
    max_steps: usize,
) -> Result<Option<LanczosResult>> {
    let n = k.n;
    // Deterministic start vector.
    let mut v = DVector::from_fn(n, |i, _| ((i * 7 + 13) % 101) as f64 / 101.0 - 0.5);
    let mut mv = m.matvec_v(&v);
    let norm = v.dot(&mv).sqrt();
    if !(norm > 0.0) {
        return Err(Error::numerical("lanczos", "start vector has zero M-norm"));
    }
    v /= norm;
    mv /= norm;

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_steps);
    let mut m_basis: Vec<DVector<f64>> = Vec::with_capacity(max_steps);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    for _ in 0..max_steps {
        basis.push(v.clone());
        m_basis.push(mv.clone());

        // w = (K + sigma M)^{-1} M v.
        let mut w = mv.clone();
        factor.solve_in_place(w.as_mut_slice())?;
        let mw = m.matvec_v(&w);
        let a = w.dot(&mv);
        alpha.push(a);

        let mut w_orth = w;
        let mut mw_orth = mw;
        // Full reorthogonalization in the M-inner product, twice.
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(&m_basis) {
                let c = w_orth.dot(mb);
                w_orth.axpy(-c, b, 1.0);
                mw_orth.axpy(-c, mb, 1.0);
            }
        }
        let b = w_orth.dot(&mw_orth).max(0.0).sqrt();
        if b < 1e-13 {
            break; // invariant subspace exhausted
        }
        beta.push(b);
        v = w_orth / b;
        mv = mw_orth / b;
    }

    let steps = alpha.len();
    let mut tri = DMatrix::zeros(steps, steps);
    for i in 0..steps {
        tri[(i, i)] = alpha[i];
        if i + 1 < steps && i < beta.len() {
            tri[(i, i + 1)] = beta[i];
            tri[(i + 1, i)] = beta[i];
        }
    }
    let (theta, y) = sym_eigen(&tri, true)?;
    let y = y.unwrap();

    // Largest theta corresponds to the smallest lambda.
    let mut order: Vec<usize> = (0..steps).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
    let wanted = order.into_iter().take(n_modes).collect::<Vec<_>>();
    if wanted.len() < n_modes {
        return Ok(None);
    }

    let mut values = Vec::with_capacity(n_modes);
    let mut vectors = DMatrix::zeros(n, n_modes);
    let mut scale = 0.0f64;
    for &j in &wanted {
        scale = scale.max((1.0 / theta[j] - sigma).abs());
    }
    let scale = scale.max(sigma);
    for (col, &j) in wanted.iter().enumerate() {
        let th = theta[j];
        if !(th > 0.0) {
            return Ok(None); // spurious negative theta: basis too small
        }
        let lambda = 1.0 / th - sigma;
        // Ritz vector.
        let mut x = DVector::zeros(n);
        for (i, b) in basis.iter().enumerate() {
            x.axpy(y[(i, j)], b, 1.0);
        }
        // M-normalize and check the true residual.
        let mx = m.matvec_v(&x);
        let xn = x.dot(&mx).sqrt();
        x /= xn;
        let kx = k.matvec_v(&x);
        let mx = m.matvec_v(&x);
        let resid = (&kx - lambda * &mx).norm();
        let denom = kx.norm().max(scale * mx.norm()).max(f64::MIN_POSITIVE);
        if resid / denom > rel_tol {
            return Ok(None);
        }
        values.push(lambda);
        vectors.set_column(col, &x);
    }

    // Ascending eigenvalues.
    let mut idx: Vec<usize> = (0..n_modes).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut sorted_vectors = DMatrix::zeros(n, n_modes);
    for (col, &i) in idx.iter().enumerate() {
        sorted_vectors.set_column(col, &vectors.column(i));
    }

    Ok(Some(LanczosResult {
        values: sorted_values,
        vectors: sorted_vectors,
        iterations: steps,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::Triplet;

    /// 1D chain stiffness (free-free) and lumped mass: analytic eigenvalues
    /// are 2 (1 - cos(pi j / n)) for the unit chain.
    fn chain(n: usize) -> (SparseSym, SparseSym) {
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            let mut diag = 0.0;
            if i > 0 {
                kt.push(Triplet {
                    row: i as u32,
                    col: (i - 1) as u32,
                    rank: 0,
                    val: -1.0,
                });
                diag += 1.0;
            }
            if i + 1 < n {
                kt.push(Triplet {
                    row: i as u32,
                    col: (i + 1) as u32,
                    rank: 0,
                    val: -1.0,
                });
                diag += 1.0;
            }
            kt.push(Triplet {
                row: i as u32,
                col: i as u32,
                rank: 0,
                val: diag,
            });
            mt.push(Triplet {
                row: i as u32,
                col: i as u32,
                rank: 0,
                val: 1.0,
            });
        }
        (
            SparseSym::from_triplets(n, kt),
            SparseSym::from_triplets(n, mt),
        )
    }

    #[test]
    fn finds_rigid_mode_and_lowest_band() {
        let n = 50;
        let (k, m) = chain(n);
        let res = smallest_modes(&k, &m, 5, 1e-3, 1e-9).unwrap();
        assert!(res.values[0].abs() < 1e-9, "rigid mode at zero");
        for j in 1..5 {
            let exact = 2.0 * (1.0 - (std::f64::consts::PI * j as f64 / n as f64).cos());
            assert!(
                (res.values[j] - exact).abs() < 1e-8 * exact.max(1e-3),
                "mode {j}: {} vs {exact}",
                res.values[j]
            );
        }
        // M-orthonormal vectors.
        for a in 0..5 {
            let ma = m.matvec_v(&res.vectors.column(a).clone_owned());
            for b in 0..5 {
                let dot = res.vectors.column(b).dot(&ma);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn matches_dense_reference_on_random_spd_pencil() {
        let n = 40;
        let g = DMatrix::from_fn(n, n, |i, j| ((i * 13 + j * 7) as f64 * 0.11).sin());
        let kd = &g * g.transpose();

        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            for j in 0..n {
                kt.push(Triplet {
                    row: i as u32,
                    col: j as u32,
                    rank: 0,
                    val: kd[(i, j)],
                });
            }
            mt.push(Triplet {
                row: i as u32,
                col: i as u32,
                rank: 0,
                val: 2.0,
            });
        }
        let k = SparseSym::from_triplets(n, kt);
        let m = SparseSym::from_triplets(n, mt);
        let res = smallest_modes(&k, &m, 6, 1e-4, 1e-9).unwrap();

        let (w, _) = sym_eigen(&(kd / 2.0), false).unwrap();
        for j in 0..6 {
            assert!(
                (res.values[j] - w[j]).abs() < 1e-7 * w[j].abs().max(1.0),
                "mode {j}: {} vs {}",
                res.values[j],
                w[j]
            );
        }
    }
}
