//! Modal decomposition of the subdomain operator: the Hamiltonian Z
//! matrix, its bounded (finite-at-center) invariant subspace, the static
//! stiffness `K = Psi21 Psi11^-1`, the low-order mass matrix from the
//! Lyapunov equation, and radial recovery of interior displacements.

use nalgebra::{Complex, DMatrix, DVector};

use crate::linalg::{
    cond_2, eigen, expm, fro_norm, lyapunov_residual, schur, schur_reorder, solve_lyapunov,
    sym_eigen, CholeskyFactor, LuFactor,
};
use crate::subdomain::{SubdomainOperator, DIM};
use crate::{Error, Real, Result};

type C64 = Complex<f64>;

/// Condition limit on E0 above which the subdomain is rejected.
pub const E0_COND_LIMIT: Real = 1e14;
/// Minimum distance of the spectrum from the imaginary axis; for d = 3 the
/// true gap is 0.5 (rigid translations), so anything below flags trouble.
pub const SPECTRAL_GAP_LIMIT: Real = 0.25;
/// Condition limit on Psi11 beyond which the eigenvector basis is deemed
/// near-parallel and the Schur route takes over.
pub const PSI_COND_LIMIT: Real = 1e12;
/// Acceptable relative asymmetry of K before symmetrization.
pub const K_ASYMMETRY_LIMIT: Real = 1e-8;
/// Acceptable relative residual of the Lyapunov equation for M.
pub const MASS_RESIDUAL_LIMIT: Real = 1e-9;

/// How the bounded invariant subspace is extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeExtractor {
    /// Eigen decomposition of Z (the default).
    Eigen,
    /// Ordered real Schur factorization (robust against near-parallel
    /// eigenvectors).
    Schur,
}

/// Builds the 2n x 2n first-order operator
/// `Z = [E0^-1 E1^T - 0.5(d-2) I, -E0^-1; -E2 + E1 E0^-1 E1^T, -(E1 E0^-1 - 0.5(d-2) I)]`
/// using a Cholesky factorization of E0.
pub fn build_z(op: &SubdomainOperator) -> Result<DMatrix<Real>> {
    let n = op.n;
    let cond = {
        let (w, _) = sym_eigen(&op.e0, false)?;
        if w[0] <= 0.0 {
            return Err(Error::numerical("build_z", "E0 is not positive definite"));
        }
        w[n - 1] / w[0]
    };
    if cond > E0_COND_LIMIT {
        return Err(Error::numerical(
            "build_z",
            format!("E0 condition estimate {cond:.3e} exceeds {E0_COND_LIMIT:.0e}"),
        ));
    }
    let chol = CholeskyFactor::new(&op.e0)?;
    // X = E0^-1 E1^T and E0^-1 itself.
    let e0_inv_e1t = chol.solve(&op.e1.transpose())?;
    let e0_inv = chol.solve(&DMatrix::identity(n, n))?;

    let shift = 0.5 * (DIM as Real - 2.0);
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    let z11 = &e0_inv_e1t - shift * DMatrix::identity(n, n);
    let z12 = -&e0_inv;
    let z21 = &op.e1 * &e0_inv_e1t - &op.e2;
    let z22 = -(e0_inv_e1t.transpose() - shift * DMatrix::identity(n, n));
    z.view_mut((0, 0), (n, n)).copy_from(&z11);
    z.view_mut((0, n), (n, n)).copy_from(&z12);
    z.view_mut((n, 0), (n, n)).copy_from(&z21);
    z.view_mut((n, n), (n, n)).copy_from(&z22);
    Ok(z)
}

/// Bounded modal basis of a subdomain: real matrices such that
/// `Z [Psi11; Psi21] = [Psi11; Psi21] S11`, with `S11` holding the
/// eigenvalues of negative real part (1x1 blocks for real eigenvalues,
/// 2x2 rotation-form or quasi-triangular blocks for complex pairs).
#[derive(Debug, Clone)]
pub struct BoundedModes {
    pub psi11: DMatrix<Real>,
    pub psi21: DMatrix<Real>,
    pub s11: DMatrix<Real>,
    /// All 2n eigenvalues of Z.
    pub spectrum: Vec<C64>,
    /// min |Re lambda| over the whole spectrum.
    pub spectral_gap: Real,
    /// 2-norm condition of Psi11.
    pub cond_psi11: Real,
    pub extractor: ModeExtractor,
}

/// Extracts the bounded subspace with the requested extractor.
pub fn bounded_modes(z: &DMatrix<Real>, extractor: ModeExtractor) -> Result<BoundedModes> {
    let two_n = z.nrows();
    let n = two_n / 2;
    match extractor {
        ModeExtractor::Eigen => {
            let e = eigen(z)?;
            let spectrum = e.values.clone();
            let gap = spectral_gap(&spectrum);
            // Collect bounded eigen-groups: real eigenvalues give one
            // column, conjugate pairs two real columns and a 2x2 block.
            let mut psi = DMatrix::zeros(two_n, n);
            let mut s11 = DMatrix::zeros(n, n);
            let mut col = 0usize;
            let mut j = 0usize;
            while j < two_n {
                let lam = e.values[j];
                if lam.im != 0.0 {
                    // LAPACK packs the pair (lam, conj) at columns j, j+1.
                    if lam.re < 0.0 {
                        if col + 2 > n {
                            return Err(selection_error(col + 2, n));
                        }
                        let vr = e.vectors_packed.column(j);
                        let vi = e.vectors_packed.column(j + 1);
                        psi.column_mut(col).copy_from(&vr);
                        psi.column_mut(col + 1).copy_from(&vi);
                        s11[(col, col)] = lam.re;
                        s11[(col, col + 1)] = lam.im;
                        s11[(col + 1, col)] = -lam.im;
                        s11[(col + 1, col + 1)] = lam.re;
                        col += 2;
                    }
                    j += 2;
                } else {
                    if lam.re < 0.0 {
                        if col + 1 > n {
                            return Err(selection_error(col + 1, n));
                        }
                        psi.column_mut(col).copy_from(&e.vectors_packed.column(j));
                        s11[(col, col)] = lam.re;
                        col += 1;
                    }
                    j += 1;
                }
            }
            if col != n {
                return Err(selection_error(col, n));
            }
            let psi11 = psi.view((0, 0), (n, n)).clone_owned();
            let psi21 = psi.view((n, 0), (n, n)).clone_owned();
            let cond = cond_2(&psi11)?;
            let modes = BoundedModes {
                psi11,
                psi21,
                s11,
                spectrum,
                spectral_gap: gap,
                cond_psi11: cond,
                extractor,
            };
            modes.check()?;
            Ok(modes)
        }
        ModeExtractor::Schur => {
            let s = schur(z)?;
            let select: Vec<bool> = s.eigenvalues.iter().map(|e| e.re < 0.0).collect();
            let spectrum = s.eigenvalues.clone();
            let gap = spectral_gap(&spectrum);
            let (q, t, m) = schur_reorder(s.q, s.t, &select)?;
            if m != n {
                return Err(selection_error(m, n));
            }
            let psi11 = q.view((0, 0), (n, n)).clone_owned();
            let psi21 = q.view((n, 0), (n, n)).clone_owned();
            let s11 = t.view((0, 0), (n, n)).clone_owned();
            let cond = cond_2(&psi11)?;
            let modes = BoundedModes {
                psi11,
                psi21,
                s11,
                spectrum,
                spectral_gap: gap,
                cond_psi11: cond,
                extractor,
            };
            modes.check()?;
            Ok(modes)
        }
    }
}

/// Default extraction: the eigen route, falling back to the Schur route
/// when its diagnostics trip (near-parallel eigenvectors).
pub fn bounded_modes_auto(z: &DMatrix<Real>) -> Result<BoundedModes> {
    match bounded_modes(z, ModeExtractor::Eigen) {
        Ok(m) => Ok(m),
        Err(Error::Numerical { .. }) => bounded_modes(z, ModeExtractor::Schur),
        Err(e) => Err(e),
    }
}

fn selection_error(got: usize, want: usize) -> Error {
    Error::numerical(
        "bounded_modes",
        format!("selected {got} bounded modes, expected {want}"),
    )
}

fn spectral_gap(spectrum: &[C64]) -> Real {
    spectrum
        .iter()
        .map(|e| e.re.abs())
        .fold(Real::INFINITY, Real::min)
}

impl BoundedModes {
    fn check(&self) -> Result<()> {
        if self.spectral_gap < SPECTRAL_GAP_LIMIT {
            return Err(Error::numerical(
                "bounded_modes",
                format!(
                    "spectral gap {:.3e} below {SPECTRAL_GAP_LIMIT} (ambiguous split)",
                    self.spectral_gap
                ),
            ));
        }
        if self.cond_psi11 > PSI_COND_LIMIT {
            return Err(Error::numerical(
                "bounded_modes",
                format!(
                    "cond(Psi11) = {:.3e} exceeds {PSI_COND_LIMIT:.0e} (near-parallel eigenvectors)",
                    self.cond_psi11
                ),
            ));
        }
        Ok(())
    }

    /// Largest real part over the selected (bounded) set.
    pub fn max_selected_re(&self) -> Real {
        self.spectrum
            .iter()
            .filter(|e| e.re < 0.0)
            .map(|e| e.re)
            .fold(Real::NEG_INFINITY, Real::max)
    }
}

/// Static stiffness `K = Psi21 Psi11^-1`, symmetrized; returns the
/// relative asymmetry that was removed.
pub fn stiffness(modes: &BoundedModes) -> Result<(DMatrix<Real>, Real)> {
    let lu = LuFactor::new(&modes.psi11.transpose())?;
    let kt = lu.solve(&modes.psi21.transpose())?;
    let k = kt.transpose();
    let asym = fro_norm(&(&k - &kt)) / fro_norm(&k).max(Real::MIN_POSITIVE);
    if asym > K_ASYMMETRY_LIMIT {
        return Err(Error::numerical(
            "stiffness",
            format!("asymmetry |K - K^T|/|K| = {asym:.3e} exceeds {K_ASYMMETRY_LIMIT:.0e}"),
        ));
    }
    Ok((0.5 * (&k + &kt), asym))
}

/// Residual of the algebraic Riccati identity
/// `(K - E1) E0^-1 (K - E1^T) - E2 + (d - 2) K = 0` that the exact static
/// stiffness satisfies.
pub fn riccati_residual(op: &SubdomainOperator, k: &DMatrix<Real>) -> Result<DMatrix<Real>> {
    let chol = CholeskyFactor::new(&op.e0)?;
    let right = chol.solve(&(k - &op.e1.transpose()))?;
    Ok((k - &op.e1) * right - &op.e2 + (DIM as Real - 2.0) * k)
}

/// One Newton step on the Riccati identity: solves
/// `A d + d A^T = -R(K)` with `A = (K - E1) E0^-1 + (d-2)/2 I` and applies
/// the correction when it reduces the residual. Polishes the eigenvector
/// route's K toward machine precision, which the omega^4 dynamic-stiffness
/// test depends on.
pub fn riccati_polish(op: &SubdomainOperator, k: DMatrix<Real>) -> Result<DMatrix<Real>> {
    let n = op.n;
    let r0 = riccati_residual(op, &k)?;
    let k_norm = fro_norm(&k).max(Real::MIN_POSITIVE);
    if fro_norm(&r0) <= 1e-15 * k_norm {
        return Ok(k);
    }
    let chol = CholeskyFactor::new(&op.e0)?;
    let a = chol.solve(&(&k - &op.e1).transpose())?.transpose()
        + 0.5 * (DIM as Real - 2.0) * DMatrix::identity(n, n);
    let delta = solve_lyapunov(&a, &(-&r0))?;
    let polished = 0.5 * ((&k + &delta) + (&k + &delta).transpose());
    let r1 = riccati_residual(op, &polished)?;
    if fro_norm(&r1) < fro_norm(&r0) {
        Ok(polished)
    } else {
        Ok(k)
    }
}

/// Low-order mass matrix from the Lyapunov equation
/// `(K - E1) E0^-1 M + M E0^-1 (K - E1^T) + d M = M0`,
/// solved as `A M + M A^T = M0` with `A = (K - E1) E0^-1 + (d/2) I`.
pub fn mass(op: &SubdomainOperator, k: &DMatrix<Real>) -> Result<(DMatrix<Real>, Real)> {
    let n = op.n;
    let chol = CholeskyFactor::new(&op.e0)?;
    // (K - E1) E0^-1 = solve(E0, (K - E1)^T)^T by symmetry of E0.
    let rhs = (k - &op.e1).transpose();
    let a = chol.solve(&rhs)?.transpose() + 0.5 * DIM as Real * DMatrix::identity(n, n);
    let m = solve_lyapunov(&a, &op.m0)?;
    let m = 0.5 * (&m + &m.transpose());
    let resid = lyapunov_residual(&a, &m, &op.m0);
    if resid > MASS_RESIDUAL_LIMIT {
        return Err(Error::numerical(
            "mass",
            format!("Lyapunov residual {resid:.3e} exceeds {MASS_RESIDUAL_LIMIT:.0e}"),
        ));
    }
    Ok((m, resid))
}

/// Residual of the dynamic-stiffness equation at circular frequency
/// `omega` under the low-order approximation `S(omega) = K - omega^2 M`:
/// `(S - E1) E0^-1 (S - E1^T) - E2 + (d-2) S + omega S,_omega + omega^2 M0`.
/// The static identity cancels the O(1) term and the Lyapunov equation the
/// O(omega^2) term, leaving O(omega^4).
pub fn dynamic_stiffness_residual(
    op: &SubdomainOperator,
    k: &DMatrix<Real>,
    m: &DMatrix<Real>,
    omega: Real,
) -> Result<Real> {
    let chol = CholeskyFactor::new(&op.e0)?;
    let s = k - omega * omega * m;
    let right = chol.solve(&(&s - &op.e1.transpose()))?;
    let residual = (&s - &op.e1) * right - &op.e2
        + (DIM as Real - 2.0) * &s
        + omega * (-2.0 * omega * m)
        + omega * omega * &op.m0;
    Ok(fro_norm(&residual) / fro_norm(k).max(Real::MIN_POSITIVE))
}

/// Fully processed subdomain: stiffness, mass, and the modal basis kept
/// for interior recovery.
#[derive(Debug, Clone)]
pub struct SubdomainMatrices {
    pub k: DMatrix<Real>,
    pub m: DMatrix<Real>,
    pub modes: BoundedModes,
    pub k_asymmetry: Real,
    pub mass_residual: Real,
}

/// Runs the full modal pipeline for one subdomain operator.
pub fn process_operator(op: &SubdomainOperator) -> Result<SubdomainMatrices> {
    let z = build_z(op)?;
    let modes = bounded_modes_auto(&z)?;
    let (k, k_asymmetry) = stiffness(&modes)?;
    let k = riccati_polish(op, k)?;
    let (m, mass_residual) = mass(op, &k)?;
    Ok(SubdomainMatrices {
        k,
        m,
        modes,
        k_asymmetry,
        mass_residual,
    })
}

/// Interior displacement at scaled-boundary coordinates `(xi, eta, zeta)`
/// of one boundary face: the radial solution interpolated over the face.
pub fn recover_at(
    modes: &BoundedModes,
    op: &SubdomainOperator,
    face: &crate::face_mesh::FaceElement,
    u_b: &DVector<Real>,
    xi: Real,
    eta: Real,
    zeta: Real,
) -> Result<[Real; 3]> {
    let u_xi = recover_interior(modes, u_b, xi)?;
    let shape = crate::shape::FaceShape::new(face)?;
    let ev = shape.eval(eta, zeta)?;
    let mut out = [0.0; 3];
    for (k, id) in face.nodes.iter().enumerate() {
        let local = op
            .nodes
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::Dimension(format!("face node {id} not on subdomain")))?;
        for c in 0..3 {
            out[c] += ev.values[k] * u_xi[3 * local + c];
        }
    }
    Ok(out)
}

/// Displacements on the scaled boundary at radial coordinate `xi` in
/// `(0, 1]`: `u(xi) = Psi11 xi^{-(S11 + 0.5(d-2) I)} Psi11^-1 u_b`.
pub fn recover_interior(
    modes: &BoundedModes,
    u_b: &DVector<Real>,
    xi: Real,
) -> Result<DVector<Real>> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "radial coordinate xi = {xi} outside (0, 1]"
        )));
    }
    let n = modes.psi11.nrows();
    let lu = LuFactor::new(&modes.psi11)?;
    let c1 = lu.solve(&DMatrix::from_column_slice(n, 1, u_b.as_slice()))?;
    let shift = 0.5 * (DIM as Real - 2.0);
    let exponent = (&modes.s11 + shift * DMatrix::identity(n, n)) * (-xi.ln());
    let radial = expm(&exponent)?;
    let u = &modes.psi11 * radial * c1;
    Ok(DVector::from_column_slice(u.as_slice()))
}
