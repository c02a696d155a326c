//! Analytical displacement fields for the patch tests, their Dirichlet
//! data, and finite-difference self-validation against the equilibrium
//! equations. The fields are validated inputs, not trusted
//! transcriptions: each must pass its residual oracle before a run uses
//! it.
//!
//! Coordinates: the cuboid spans `x, y` in `[-a/2, a/2] x [-b/2, b/2]`
//! and `z` in `[0, L]`. Centered cross-section coordinates make the
//! cantilever's lateral surfaces traction-free, which the residual oracle
//! enforces; the bending strain distribution is then centered on the
//! neutral axis.

use crate::material::MaterialParams;
use crate::{Error, Real, Result};

/// Which analytical case a patch run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    Uniaxial,
    Bending,
    Cantilever,
}

impl PatchKind {
    pub fn name(self) -> &'static str {
        match self {
            PatchKind::Uniaxial => "uniaxial",
            PatchKind::Bending => "bending",
            PatchKind::Cantilever => "cantilever",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniaxial" => Ok(PatchKind::Uniaxial),
            "bending" => Ok(PatchKind::Bending),
            "cantilever" => Ok(PatchKind::Cantilever),
            other => Err(Error::InvalidArgument(format!(
                "unknown patch case `{other}`"
            ))),
        }
    }
}

/// Geometry, material, and reference field of one patch test.
#[derive(Debug, Clone)]
pub struct PatchCase {
    pub kind: PatchKind,
    /// Cross-section width (x extent).
    pub a: Real,
    /// Cross-section height (y extent).
    pub b: Real,
    /// Length in z.
    pub length: Real,
    pub material: MaterialParams,
    /// Load scale `F / (E I)` of the cantilever; 0 for the other cases.
    pub f_over_ei: Real,
    /// Series truncation for the cantilever field.
    pub n_terms: usize,
}

impl PatchCase {
    /// The standard cuboid: a = b = 2, L = 4, E = 1, nu = 0.
    pub fn standard(kind: PatchKind) -> Self {
        let material = MaterialParams {
            young_modulus: 1.0,
            poisson_ratio: 0.0,
            mass_density: 1.0,
        };
        let (a, b, length): (Real, Real, Real) = (2.0, 2.0, 4.0);
        // F = 1 with I = a b^3 / 12 over the full widths; with E = 1 and
        // nu = 0 only the ratio F/(E I) scales the field and relative
        // errors are scale-invariant.
        let inertia = a * b.powi(3) / 12.0;
        PatchCase {
            kind,
            a,
            b,
            length,
            material,
            f_over_ei: 1.0 / inertia,
            n_terms: 30,
        }
    }

    /// Reference displacement at a point.
    pub fn displacement(&self, p: &[Real; 3]) -> [Real; 3] {
        let nu = self.material.poisson_ratio;
        match self.kind {
            PatchKind::Uniaxial => uniaxial_ref(p),
            PatchKind::Bending => bending_ref(p, nu),
            PatchKind::Cantilever => cantilever_ref(
                p,
                nu,
                self.f_over_ei,
                self.a / 2.0,
                self.b / 2.0,
                self.n_terms,
            ),
        }
    }

    /// Dirichlet faces at z = 0 and z = L carry the restricted field.
    pub fn dirichlet_selector(&self) -> impl Fn(&[Real; 3]) -> bool + '_ {
        let l = self.length;
        move |x| x[2].abs() < 1e-9 * l.max(1.0) || (x[2] - l).abs() < 1e-9 * l.max(1.0)
    }

    /// Interior equilibrium residual of the field by finite differences,
    /// sampled on a lattice strictly inside the domain. Must be small
    /// before the field is used as a reference. The nested central
    /// differences are exact for the polynomial fields; the step keeps the
    /// f64 roundoff amplification (eps / h^2) below the 1e-8 gate.
    pub fn equilibrium_residual(&self) -> Real {
        let field = |p: &[Real; 3]| self.displacement(p);
        let mut worst: Real = 0.0;
        let n = 5;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let frac = |t: usize| 0.15 + 0.7 * t as Real / (n - 1) as Real;
                    let p = [
                        -self.a / 2.0 + self.a * frac(i),
                        -self.b / 2.0 + self.b * frac(j),
                        self.length * frac(k),
                    ];
                    let r = stress_divergence(&field, &self.material, &p, 1e-3);
                    worst = worst.max(r.iter().map(|v| v.abs()).fold(0.0, Real::max));
                }
            }
        }
        worst
    }

    /// Worst traction magnitude on the four lateral surfaces, which are
    /// meant to be load-free.
    pub fn lateral_traction_residual(&self) -> Real {
        let field = |p: &[Real; 3]| self.displacement(p);
        let mut worst: Real = 0.0;
        let n = 7;
        for i in 0..n {
            for k in 0..n {
                let s = -0.9 + 1.8 * i as Real / (n - 1) as Real;
                let z = self.length * (0.1 + 0.8 * k as Real / (n - 1) as Real);
                // x = +-a/2 faces, normal e_x.
                for sign in [-1.0, 1.0] {
                    let p = [sign * self.a / 2.0, s * self.b / 2.0, z];
                    let sig = stress_at(&field, &self.material, &p, 1e-5);
                    let t = [sig[0], sig[3], sig[4]];
                    worst = worst.max(t.iter().map(|v| v.abs()).fold(0.0, Real::max));
                }
                // y = +-b/2 faces, normal e_y.
                for sign in [-1.0, 1.0] {
                    let p = [s * self.a / 2.0, sign * self.b / 2.0, z];
                    let sig = stress_at(&field, &self.material, &p, 1e-5);
                    let t = [sig[3], sig[1], sig[5]];
                    worst = worst.max(t.iter().map(|v| v.abs()).fold(0.0, Real::max));
                }
            }
        }
        worst
    }
}

/// Uniaxial tension: `u = (0, 0, z)`.
pub fn uniaxial_ref(p: &[Real; 3]) -> [Real; 3] {
    [0.0, 0.0, p[2]]
}

/// Pure bending (unit curvature):
/// `u = (-(z^2 + nu (x^2 - y^2))/2, -x y nu, x z)`.
pub fn bending_ref(p: &[Real; 3], nu: Real) -> [Real; 3] {
    let [x, y, z] = *p;
    [-0.5 * (z * z + nu * (x * x - y * y)), -x * y * nu, x * z]
}

/// Cantilever under end shear (weak clamping), cross-section
/// `[-a, a] x [-b, b]` in the half-width convention of the printed series.
/// Every series term carries a factor `nu`, so it vanishes identically for
/// the patch-test material.
pub fn cantilever_ref(
    p: &[Real; 3],
    nu: Real,
    f_over_ei: Real,
    half_a: Real,
    half_b: Real,
    n_terms: usize,
) -> [Real; 3] {
    let [x, y, z] = *p;
    let (a, b) = (half_a, half_b);
    let ux = -f_over_ei * nu * x * y * z;
    let uy = f_over_ei * (0.5 * nu * (x * x - y * y) * z - z * z * z / 6.0);
    let mut uz = f_over_ei
        * (0.5 * y * (nu * x * x + z * z)
            + nu * y * y * y / 6.0
            + (1.0 + nu) * (b * b * y - y * y * y / 3.0)
            - a * a * nu * y / 3.0);
    if nu != 0.0 {
        let pi = std::f64::consts::PI;
        let mut series = 0.0;
        let mut prev_mag = Real::INFINITY;
        for n in 1..=n_terms {
            let q = n as Real * pi / a;
            // sinh(q y) / cosh(q b), evaluated in scaled form to dodge
            // overflow for large arguments.
            let ratio = sinh_over_cosh(q * y, q * b);
            let term = (-1.0f64).powi(n as i32) / (n as Real).powi(3) * (q * x).cos() * ratio;
            series += term;
            let mag = term.abs();
            if mag < 1e-14 * series.abs().max(1e-300) && mag < prev_mag {
                break;
            }
            prev_mag = mag;
        }
        uz -= f_over_ei * 4.0 * a.powi(3) * nu / pi.powi(3) * series;
    }
    [ux, uy, uz]
}

/// `sinh(u) / cosh(v)` without overflow: uses exponentials shifted by `v`.
fn sinh_over_cosh(u: Real, v: Real) -> Real {
    // sinh(u)/cosh(v) = (e^{u-v} - e^{-u-v}) / (1 + e^{-2v});
    ((u - v).exp() - (-u - v).exp()) / (1.0 + (-2.0 * v).exp())
}

/// Voigt stress (xx, yy, zz, xy, xz, yz) by central differences of `u`.
pub fn stress_at(
    field: &impl Fn(&[Real; 3]) -> [Real; 3],
    material: &MaterialParams,
    p: &[Real; 3],
    h: Real,
) -> [Real; 6] {
    let mut grad = [[0.0; 3]; 3]; // grad[i][j] = du_i / dx_j
    for j in 0..3 {
        let mut pp = *p;
        let mut pm = *p;
        pp[j] += h;
        pm[j] -= h;
        let up = field(&pp);
        let um = field(&pm);
        for i in 0..3 {
            grad[i][j] = (up[i] - um[i]) / (2.0 * h);
        }
    }
    let eps = [
        grad[0][0],
        grad[1][1],
        grad[2][2],
        grad[0][1] + grad[1][0],
        grad[0][2] + grad[2][0],
        grad[1][2] + grad[2][1],
    ];
    let d = material.elasticity_matrix();
    let mut sigma = [0.0; 6];
    for i in 0..6 {
        for (j, e) in eps.iter().enumerate() {
            sigma[i] += d[(i, j)] * e;
        }
    }
    sigma
}

/// Divergence of the stress field by an outer central difference; zero for
/// an equilibrium field without body forces.
pub fn stress_divergence(
    field: &impl Fn(&[Real; 3]) -> [Real; 3],
    material: &MaterialParams,
    p: &[Real; 3],
    h: Real,
) -> [Real; 3] {
    // Voigt index of sigma_{ij}.
    const IDX: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
    let mut div = [0.0; 3];
    for j in 0..3 {
        let mut pp = *p;
        let mut pm = *p;
        pp[j] += h;
        pm[j] -= h;
        let sp = stress_at(field, material, &pp, h);
        let sm = stress_at(field, material, &pm, h);
        for i in 0..3 {
            div[i] += (sp[IDX[i][j]] - sm[IDX[i][j]]) / (2.0 * h);
        }
    }
    div
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniaxial_values() {
        assert_eq!(uniaxial_ref(&[1.0, 1.0, 2.0]), [0.0, 0.0, 2.0]);
        assert_eq!(uniaxial_ref(&[0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn uniaxial_equilibrium_oracle() {
        let case = PatchCase::standard(PatchKind::Uniaxial);
        assert!(case.equilibrium_residual() <= 1e-8);
    }

    #[test]
    fn bending_values_and_equilibrium() {
        // nu = 0 at (x, y, L): (-L^2/2, 0, x L).
        let l = 4.0;
        let u = bending_ref(&[0.7, -0.3, l], 0.0);
        assert_abs_diff_eq!(u[0], -0.5 * l * l, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[2], 0.7 * l, epsilon = 1e-15);
        // nu = 0 at z = 0, x = 0: zero.
        assert_eq!(bending_ref(&[0.0, 0.5, 0.0], 0.0), [0.0, 0.0, 0.0]);

        let case = PatchCase::standard(PatchKind::Bending);
        assert!(case.equilibrium_residual() <= 1e-8);
    }

    #[test]
    fn cantilever_nu_zero_shape() {
        let case = PatchCase::standard(PatchKind::Cantilever);
        let s = case.f_over_ei;
        let l = case.length;
        // u_x vanishes identically for nu = 0.
        for p in [[0.3, -0.8, 1.2], [-0.9, 0.2, 3.7]] {
            let u = case.displacement(&p);
            assert_abs_diff_eq!(u[0], 0.0, epsilon = 1e-15);
        }
        // At (x, y, L): (0, -F L^3 / 6 E I, F/EI (-y^3/3 + (L^2/2 + b^2) y)).
        let y = 0.4;
        let u = case.displacement(&[0.1, y, l]);
        assert_abs_diff_eq!(u[1], -s * l * l * l / 6.0, epsilon = 1e-14);
        let b = case.b / 2.0;
        assert_abs_diff_eq!(
            u[2],
            s * (-y * y * y / 3.0 + (l * l / 2.0 + b * b) * y),
            epsilon = 1e-14
        );
    }

    #[test]
    fn cantilever_equilibrium_and_traction_free_sides() {
        // This oracle arbitrates the centered-coordinate reading of the
        // printed formulas.
        let case = PatchCase::standard(PatchKind::Cantilever);
        assert!(
            case.equilibrium_residual() <= 1e-6,
            "residual {}",
            case.equilibrium_residual()
        );
        assert!(
            case.lateral_traction_residual() <= 1e-6,
            "traction {}",
            case.lateral_traction_residual()
        );
    }

    #[test]
    fn cantilever_series_is_finite_with_poisson_effect() {
        // Exercise the series branch (nu > 0) including overflow guards.
        let u = cantilever_ref(&[0.9, 0.9, 2.0], 0.3, 1.0, 1.0, 1.0, 200);
        assert!(u.iter().all(|v| v.is_finite()));
        // And the scaled sinh/cosh agrees with the naive expression in a
        // safe range.
        for (u_, v_) in [(0.3, 0.9), (2.0, 2.5), (-1.0, 3.0)] {
            let naive = (u_ as Real).sinh() / (v_ as Real).cosh();
            assert_abs_diff_eq!(sinh_over_cosh(u_, v_), naive, epsilon = 1e-14);
        }
    }

    #[test]
    fn dirichlet_data_matches_field_on_end_faces() {
        let case = PatchCase::standard(PatchKind::Bending);
        let sel = case.dirichlet_selector();
        for k in 0..100 {
            let x = -1.0 + 2.0 * ((k * 13 % 100) as Real) / 99.0;
            let y = -1.0 + 2.0 * ((k * 29 % 100) as Real) / 99.0;
            let z = if k % 2 == 0 { 0.0 } else { case.length };
            assert!(sel(&[x, y, z]));
            let direct = bending_ref(&[x, y, z], 0.0);
            let via_case = case.displacement(&[x, y, z]);
            for c in 0..3 {
                assert_abs_diff_eq!(direct[c], via_case[c], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn shifted_coordinates_would_fail_the_traction_oracle() {
        // Evaluating the cantilever field in shifted coordinates (0..a)
        // breaks the load-free lateral surfaces; the oracle must notice.
        let case = PatchCase::standard(PatchKind::Cantilever);
        let shifted = |p: &[Real; 3]| {
            let q = [p[0] + case.a / 2.0, p[1] + case.b / 2.0, p[2]];
            cantilever_ref(&q, 0.0, case.f_over_ei, case.a / 2.0, case.b / 2.0, 1)
        };
        let mut worst: Real = 0.0;
        for i in 0..5 {
            let z = case.length * (0.2 + 0.15 * i as Real);
            let p = [0.3, case.b / 2.0, z];
            let sig = stress_at(&shifted, &case.material, &p, 1e-5);
            worst = worst.max(sig[5].abs());
        }
        assert!(worst > 1e-3, "shifted field should carry lateral traction");
    }
}
