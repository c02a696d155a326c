//! Global assembly and solves.
//!
//! Subdomain stiffness/mass blocks scatter-add into sparse global
//! operators with a fixed reduction order, so the result is bitwise
//! independent of the subdomain processing order. Dirichlet conditions are
//! applied by symmetric elimination; statics go through a banded Cholesky
//! on a coordinate-sorted permutation, modal problems through a dense
//! reduction below [`DENSE_EIGEN_LIMIT`] DOFs and shift-invert Lanczos
//! above.

use nalgebra::{DMatrix, DVector};

use crate::face_mesh::NodeId;
use crate::linalg::{
    smallest_modes, solve_lower_triangular, sym_eigen, CholeskyFactor, SparseSym, Triplet,
};
use crate::modes::SubdomainMatrices;
use crate::{Error, Real, Result};

/// Above this free-DOF count the modal solver switches from the dense
/// reduction to shift-invert Lanczos.
pub const DENSE_EIGEN_LIMIT: usize = 3200;

/// One subdomain's contribution to the global system.
pub struct SubdomainContribution<'a> {
    pub matrices: &'a SubdomainMatrices,
    /// Local node order (global node ids).
    pub nodes: &'a [NodeId],
    /// Deterministic rank for the assembly reduction (Morton cell index).
    pub rank: u32,
}

/// Assembled sparse operators plus constraints and loads.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub n_dofs: usize,
    pub k: SparseSym,
    pub m: SparseSym,
    /// Node coordinates, one per 3 DOFs.
    pub coords: Vec<[Real; 3]>,
    /// Sorted, deduplicated Dirichlet set `(dof, value)`.
    pub constraints: Vec<(usize, Real)>,
    pub load: DVector<Real>,
}

/// Scatter-adds subdomain matrices into global sparse storage.
pub fn assemble(
    contributions: &[SubdomainContribution<'_>],
    coords: Vec<[Real; 3]>,
) -> Result<GlobalSystem> {
    let n_dofs = 3 * coords.len();
    let mut kt: Vec<Triplet> = Vec::new();
    let mut mt: Vec<Triplet> = Vec::new();
    for c in contributions {
        let n_local = c.nodes.len();
        debug_assert_eq!(c.matrices.k.nrows(), 3 * n_local);
        for a in 0..n_local {
            let ga = c.nodes[a];
            if 3 * ga + 2 >= n_dofs {
                return Err(Error::Dimension(format!(
                    "node id {ga} outside the {} node table",
                    coords.len()
                )));
            }
            for b in 0..n_local {
                let gb = c.nodes[b];
                for ca in 0..3 {
                    for cb in 0..3 {
                        let kv = c.matrices.k[(3 * a + ca, 3 * b + cb)];
                        let mv = c.matrices.m[(3 * a + ca, 3 * b + cb)];
                        if !kv.is_finite() || !mv.is_finite() {
                            return Err(Error::numerical(
                                "assemble",
                                format!("non-finite entry from subdomain rank {}", c.rank),
                            ));
                        }
                        let (row, col) = ((3 * ga + ca) as u32, (3 * gb + cb) as u32);
                        kt.push(Triplet {
                            row,
                            col,
                            rank: c.rank,
                            val: kv,
                        });
                        mt.push(Triplet {
                            row,
                            col,
                            rank: c.rank,
                            val: mv,
                        });
                    }
                }
            }
        }
    }
    let k = SparseSym::from_triplets(n_dofs, kt);
    let m = SparseSym::from_triplets(n_dofs, mt);
    Ok(GlobalSystem {
        n_dofs,
        k,
        m,
        coords,
        constraints: Vec::new(),
        load: DVector::zeros(n_dofs),
    })
}

/// Static solve outcome.
#[derive(Debug, Clone)]
pub struct StaticReport {
    /// Full-length displacement vector (constrained DOFs hold their
    /// prescribed values).
    pub displacement: DVector<Real>,
    /// Relative residual of the reduced system.
    pub residual: Real,
    /// Reaction forces `K u - f` at the constrained DOFs, full length
    /// with zeros elsewhere.
    pub reactions: DVector<Real>,
    pub free_dofs: usize,
    pub solve_seconds: Real,
}

/// Modal solve outcome; frequencies ascending in `f = omega / 2 pi`.
#[derive(Debug, Clone)]
pub struct ModalReport {
    pub eigenvalues: Vec<Real>,
    pub frequencies: Vec<Real>,
    /// Full-length mode shapes, one column per mode.
    pub modes: DMatrix<Real>,
    pub free_dofs: usize,
    pub solve_seconds: Real,
}

impl GlobalSystem {
    /// Prescribes `value(x)` on all DOFs of nodes matched by `selector`.
    /// `label` names the region in the empty-selection error.
    pub fn apply_dirichlet(
        &mut self,
        label: &str,
        selector: impl Fn(&[Real; 3]) -> bool,
        value: impl Fn(&[Real; 3]) -> [Real; 3],
    ) -> Result<usize> {
        let mut added = 0usize;
        for (node, x) in self.coords.iter().enumerate() {
            if selector(x) {
                let u = value(x);
                for c in 0..3 {
                    self.constraints.push((3 * node + c, u[c]));
                }
                added += 1;
            }
        }
        if added == 0 {
            return Err(Error::EmptySelection(label.to_string()));
        }
        self.constraints.sort_by_key(|&(dof, _)| dof);
        self.constraints.dedup_by_key(|&mut (dof, _)| dof);
        Ok(added)
    }

    /// Adds the consistent body load `f += M a` for a uniform acceleration
    /// (exact for constant fields by partition of unity).
    pub fn body_load(&mut self, acceleration: [Real; 3]) {
        let mut a = DVector::zeros(self.n_dofs);
        for i in 0..self.coords.len() {
            for c in 0..3 {
                a[3 * i + c] = acceleration[c];
            }
        }
        let f = self.m.matvec_v(&a);
        self.load += f;
    }

    fn partition(&self) -> (Vec<usize>, Vec<usize>, Vec<Real>) {
        let constrained: Vec<usize> = self.constraints.iter().map(|&(d, _)| d).collect();
        let values: Vec<Real> = self.constraints.iter().map(|&(_, v)| v).collect();
        let mut is_constrained = vec![false; self.n_dofs];
        for &d in &constrained {
            is_constrained[d] = true;
        }
        // Free DOFs in a band-reducing order: nodes sorted by quantized
        // (z, y, x), then component.
        let mut node_order: Vec<usize> = (0..self.coords.len()).collect();
        let quant = |x: Real| (x * 1e9).round() as i64;
        node_order.sort_by_key(|&i| {
            let c = self.coords[i];
            (quant(c[2]), quant(c[1]), quant(c[0]))
        });
        let mut free = Vec::with_capacity(self.n_dofs - constrained.len());
        for &node in &node_order {
            for c in 0..3 {
                let dof = 3 * node + c;
                if !is_constrained[dof] {
                    free.push(dof);
                }
            }
        }
        (free, constrained, values)
    }

    /// Symmetric-elimination static solve of the constrained SPD system.
    pub fn solve_static(&self) -> Result<StaticReport> {
        let start = std::time::Instant::now();
        if self.constraints.is_empty() {
            return Err(Error::Singular(
                "no Dirichlet constraints: 6 rigid-body modes are unconstrained".into(),
            ));
        }
        let (free, constrained, values) = self.partition();
        if free.is_empty() {
            // Everything prescribed: the solution is the boundary data.
            let mut displacement = DVector::zeros(self.n_dofs);
            for (&d, &v) in constrained.iter().zip(&values) {
                displacement[d] = v;
            }
            let ku_full = self.k.matvec_v(&displacement);
            let reactions = ku_full - &self.load;
            return Ok(StaticReport {
                displacement,
                residual: 0.0,
                reactions,
                free_dofs: 0,
                solve_seconds: start.elapsed().as_secs_f64(),
            });
        }
        let (kff, kfc) = self.k.split(&free, &constrained)?;

        // rhs = f_free - K_fc u_c.
        let mut rhs: Vec<Real> = free.iter().map(|&d| self.load[d]).collect();
        let mut coupling = vec![0.0; free.len()];
        kfc.matvec_rect(&values, &mut coupling);
        for i in 0..rhs.len() {
            rhs[i] -= coupling[i];
        }
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<Real>().sqrt();

        let factor = kff.to_band_shifted(None).factor().map_err(|e| {
            Error::Singular(format!(
                "stiffness factorization failed (insufficient constraints?): {e}"
            ))
        })?;
        let mut u_free = rhs.clone();
        factor.solve_in_place(&mut u_free)?;

        // Residual of the reduced system.
        let mut ku = vec![0.0; free.len()];
        kff.matvec(&u_free, &mut ku);
        let res_norm = ku
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<Real>()
            .sqrt();
        let residual = res_norm / rhs_norm.max(Real::MIN_POSITIVE);

        let mut displacement = DVector::zeros(self.n_dofs);
        for (i, &d) in free.iter().enumerate() {
            displacement[d] = u_free[i];
        }
        for (&d, &v) in constrained.iter().zip(&values) {
            displacement[d] = v;
        }

        // Reactions at constrained DOFs from the full operator.
        let ku_full = self.k.matvec_v(&displacement);
        let mut reactions = DVector::zeros(self.n_dofs);
        for &d in &constrained {
            reactions[d] = ku_full[d] - self.load[d];
        }

        Ok(StaticReport {
            displacement,
            residual,
            reactions,
            free_dofs: free.len(),
            solve_seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Smallest `n_modes` of `K u = omega^2 M u` on the free DOFs;
    /// free-free problems are allowed (zero modes are reported first).
    pub fn solve_modal(&self, n_modes: usize) -> Result<ModalReport> {
        let start = std::time::Instant::now();
        if n_modes == 0 {
            return Err(Error::InvalidArgument("requested 0 modes".into()));
        }
        let (free, _constrained, _) = self.partition();
        if n_modes > free.len() {
            return Err(Error::InvalidArgument(format!(
                "requested {n_modes} modes of a {}-DOF problem",
                free.len()
            )));
        }
        let empty: Vec<usize> = Vec::new();
        let (kff, _) = self.k.split(&free, &empty)?;
        let (mff, _) = self.m.split(&free, &empty)?;

        let (values, vectors) = if free.len() <= DENSE_EIGEN_LIMIT {
            dense_generalized(&kff.to_dense(), &mff.to_dense(), n_modes)?
        } else {
            let scale = operator_scale(&kff, &mff);
            let sigma = (1e-3 * scale).max(1e-10);
            let res = smallest_modes(&kff, &mff, n_modes, sigma, 1e-8)?;
            (res.values, res.vectors)
        };

        let frequencies: Vec<Real> = values
            .iter()
            .map(|&l| l.max(0.0).sqrt() / (2.0 * std::f64::consts::PI))
            .collect();
        let mut modes = DMatrix::zeros(self.n_dofs, n_modes);
        for j in 0..n_modes {
            for (i, &d) in free.iter().enumerate() {
                modes[(d, j)] = vectors[(i, j)];
            }
        }
        Ok(ModalReport {
            eigenvalues: values,
            frequencies,
            modes,
            free_dofs: free.len(),
            solve_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Rayleigh-quotient scale of the pencil, for the Lanczos shift.
fn operator_scale(k: &SparseSym, m: &SparseSym) -> Real {
    let x = DVector::from_fn(k.n, |i, _| ((i * 31 + 7) % 89) as Real / 89.0 + 0.1);
    let kx = k.matvec_v(&x).dot(&x);
    let mx = m.matvec_v(&x).dot(&x);
    (kx / mx).abs().max(1e-12)
}

/// Dense path: Cholesky of M, symmetric reduction, full eigensolve.
fn dense_generalized(
    k: &DMatrix<Real>,
    m: &DMatrix<Real>,
    n_modes: usize,
) -> Result<(Vec<Real>, DMatrix<Real>)> {
    let chol = CholeskyFactor::new(m).map_err(|e| {
        Error::numerical(
            "solve_modal",
            format!("mass matrix not positive definite: {e}"),
        )
    })?;
    let l = chol.lower();
    // A = L^-1 K L^-T, symmetrized against roundoff.
    let li_k = solve_lower_triangular(&l, k, false)?;
    let a = solve_lower_triangular(&l, &li_k.transpose(), false)?;
    let a = 0.5 * (&a + &a.transpose());
    let (w, v) = sym_eigen(&a, true)?;
    let v = v.unwrap();
    let values: Vec<Real> = w.iter().take(n_modes).copied().collect();
    let y = v.view((0, 0), (k.nrows(), n_modes)).clone_owned();
    let x = solve_lower_triangular(&l, &y, true)?;
    Ok((values, x))
}

/// Nodal relative L2 error `sqrt(sum |u - u_ref|^2 / sum |u_ref|^2)` over
/// all nodes.
pub fn l2_error(
    displacement: &DVector<Real>,
    coords: &[[Real; 3]],
    reference: impl Fn(&[Real; 3]) -> [Real; 3],
) -> Result<Real> {
    assert_eq!(displacement.len(), 3 * coords.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, x) in coords.iter().enumerate() {
        let r = reference(x);
        for c in 0..3 {
            let d = displacement[3 * i + c] - r[c];
            num += d * d;
            den += r[c] * r[c];
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "reference field has zero norm on the node set".into(),
        ));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face_mesh::{build_faces, OrderMap};
    use crate::material::MaterialParams;
    use crate::modes::process_operator;
    use crate::octree::OctreeMesh;
    use crate::subdomain::coefficient_matrices;

    fn single_cube_system(p: usize) -> (GlobalSystem, usize) {
        let mesh = OctreeMesh::uniform(2.0, [-1.0, -1.0, -1.0], [1, 1, 1], 0, 1).unwrap();
        let surface = build_faces(&mesh, &OrderMap::Uniform(p)).unwrap();
        let material = MaterialParams::new(1.0, 0.0, 1.0).unwrap();
        let op = coefficient_matrices(&mesh, &surface, 0, material).unwrap();
        let n_nodes = surface.nodes.len();
        let result = process_operator(&op).unwrap();
        let contributions = vec![SubdomainContribution {
            matrices: &result,
            nodes: &op.nodes,
            rank: 0,
        }];
        let system = assemble(&contributions, surface.nodes.coords().to_vec()).unwrap();
        (system, n_nodes)
    }

    #[test]
    fn single_subdomain_assembly_reproduces_k() {
        let (system, n_nodes) = single_cube_system(1);
        assert_eq!(system.n_dofs, 3 * n_nodes);
        assert!(system.k.symmetry_defect() < 1e-12);
        assert!(system.m.symmetry_defect() < 1e-12);
    }

    #[test]
    fn two_cubes_share_a_face_dof_count() {
        let mesh = OctreeMesh::uniform(1.0, [0.0; 3], [2, 1, 1], 0, 1).unwrap();
        let surface = build_faces(&mesh, &OrderMap::Uniform(1)).unwrap();
        // 2 cubes of 8 corners share 4: 12 nodes.
        assert_eq!(surface.nodes.len(), 12);
        let material = MaterialParams::new(1.0, 0.0, 1.0).unwrap();
        let ops: Vec<_> = (0..2)
            .map(|c| coefficient_matrices(&mesh, &surface, c, material).unwrap())
            .collect();
        let results: Vec<_> = ops.iter().map(|op| process_operator(op).unwrap()).collect();
        let contributions: Vec<_> = ops
            .iter()
            .zip(&results)
            .enumerate()
            .map(|(i, (op, r))| SubdomainContribution {
                matrices: r,
                nodes: &op.nodes,
                rank: i as u32,
            })
            .collect();
        let system = assemble(&contributions, surface.nodes.coords().to_vec()).unwrap();
        assert_eq!(system.n_dofs, 36);

        // Permuting the subdomain order changes nothing bitwise.
        let swapped: Vec<_> = contributions.into_iter().rev().collect();
        let system2 = assemble(&swapped, surface.nodes.coords().to_vec()).unwrap();
        for i in 0..system.n_dofs {
            let (c1, v1) = system.k.row(i);
            let (c2, v2) = system2.k.row(i);
            assert_eq!(c1, c2);
            for (a, b) in v1.iter().zip(v2) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn uniaxial_patch_on_single_cube_is_exact() {
        for p in 1..=3 {
            let (mut system, _) = single_cube_system(p);
            system
                .apply_dirichlet("z faces", |x| x[2].abs() > 1.0 - 1e-9, |x| [0.0, 0.0, x[2]])
                .unwrap();
            let report = system.solve_static().unwrap();
            assert!(report.residual < 1e-12);
            let err = l2_error(&report.displacement, &system.coords, |x| [0.0, 0.0, x[2]]).unwrap();
            assert!(err < 1e-11, "uniaxial error at p={p}: {err:.3e}");
        }
    }

    #[test]
    fn doubling_the_load_doubles_the_solution() {
        let (mut system, _) = single_cube_system(1);
        system
            .apply_dirichlet("base", |x| x[2] < -1.0 + 1e-9, |_| [0.0; 3])
            .unwrap();
        system.body_load([0.0, 0.0, -9.81]);
        let r1 = system.solve_static().unwrap();
        let mut doubled = system.clone();
        doubled.load *= 2.0;
        let r2 = doubled.solve_static().unwrap();
        let diff = (&r2.displacement - 2.0 * &r1.displacement).norm();
        assert!(diff < 1e-10 * r1.displacement.norm());
    }

    #[test]
    fn unconstrained_static_solve_reports_singularity() {
        let (system, _) = single_cube_system(1);
        match system.solve_static() {
            Err(Error::Singular(_)) => {}
            other => panic!("expected Singular, got {other:?}"),
        }
    }

    #[test]
    fn fixing_one_node_removes_three_equations() {
        let (mut system, _) = single_cube_system(1);
        let target = system.coords[0];
        system
            .apply_dirichlet(
                "one node",
                move |x| {
                    (x[0] - target[0]).abs() < 1e-12
                        && (x[1] - target[1]).abs() < 1e-12
                        && (x[2] - target[2]).abs() < 1e-12
                },
                |_| [0.0; 3],
            )
            .unwrap();
        assert_eq!(system.constraints.len(), 3);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let (mut system, _) = single_cube_system(1);
        assert!(matches!(
            system.apply_dirichlet("nowhere", |x| x[2] > 100.0, |_| [0.0; 3]),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn free_cube_has_six_zero_modes() {
        let (system, _) = single_cube_system(2);
        let report = system.solve_modal(8).unwrap();
        for j in 0..6 {
            assert!(
                report.frequencies[j] <= 1e-6,
                "mode {j}: f = {}",
                report.frequencies[j]
            );
        }
        assert!(report.frequencies[6] > 1e-4);
        assert!(matches!(
            system.solve_modal(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn density_scaling_halves_frequencies() {
        let build = |rho: Real| {
            let mesh = OctreeMesh::uniform(2.0, [-1.0, -1.0, -1.0], [1, 1, 1], 0, 1).unwrap();
            let surface = build_faces(&mesh, &OrderMap::Uniform(1)).unwrap();
            let material = MaterialParams::new(1.0, 0.0, rho).unwrap();
            let op = coefficient_matrices(&mesh, &surface, 0, material).unwrap();
            let result = process_operator(&op).unwrap();
            let contributions = vec![SubdomainContribution {
                matrices: &result,
                nodes: &op.nodes,
                rank: 0,
            }];
            assemble(&contributions, surface.nodes.coords().to_vec()).unwrap()
        };
        let f1 = build(1.0).solve_modal(8).unwrap().frequencies;
        let f4 = build(4.0).solve_modal(8).unwrap().frequencies;
        for j in 6..8 {
            assert!(
                (f4[j] - 0.5 * f1[j]).abs() < 1e-8 * f1[j],
                "mode {j}: {} vs half of {}",
                f4[j],
                f1[j]
            );
        }
    }

    #[test]
    fn body_load_balances_total_weight() {
        let (mut system, _) = single_cube_system(2);
        system
            .apply_dirichlet("base", |x| x[2] < -1.0 + 1e-9, |_| [0.0; 3])
            .unwrap();
        system.body_load([0.0, 0.0, -9.81]);
        // Total applied z-force = -rho V g = -8 * 9.81.
        let total: Real = (0..system.n_dofs / 3).map(|i| system.load[3 * i + 2]).sum();
        approx::assert_abs_diff_eq!(total, -8.0 * 9.81, epsilon = 1e-9 * 8.0 * 9.81);
        let report = system.solve_static().unwrap();
        let reaction_z: Real = (0..system.n_dofs / 3)
            .map(|i| report.reactions[3 * i + 2])
            .sum();
        approx::assert_abs_diff_eq!(reaction_z, 8.0 * 9.81, epsilon = 1e-9 * 8.0 * 9.81);

        // Zero gravity: zero displacement.
        let (mut quiet, _) = single_cube_system(1);
        quiet
            .apply_dirichlet("base", |x| x[2] < -1.0 + 1e-9, |_| [0.0; 3])
            .unwrap();
        quiet.body_load([0.0, 0.0, 0.0]);
        let report = quiet.solve_static().unwrap();
        assert!(report.displacement.norm() == 0.0 || report.displacement.norm() < 1e-14);
    }

    #[test]
    fn l2_error_basics() {
        let coords = vec![[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]];
        let u_ref = |x: &[Real; 3]| [0.0, 0.0, x[2]];
        let mut u = DVector::zeros(6);
        u[2] = 1.0;
        u[5] = 2.0;
        assert_eq!(l2_error(&u, &coords, u_ref).unwrap(), 0.0);
        let doubled = 2.0 * &u;
        assert!((l2_error(&doubled, &coords, u_ref).unwrap() - 1.0).abs() < 1e-15);
        let zero_ref = |_: &[Real; 3]| [0.0; 3];
        assert!(l2_error(&u, &coords, zero_ref).is_err());
    }
}
