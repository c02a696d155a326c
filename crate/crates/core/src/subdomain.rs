//! Boundary coefficient matrices of one cubic subdomain.
//!
//! The subdomain boundary is scaled from the cell centroid; every boundary
//! face contributes surface integrals of the strain-displacement blocks
//! `B1 = b1 N` and `B2 = b2 N,eta + b3 N,zeta`, where the `b_j` arise from
//! pushing the Cartesian operator through the scaled-boundary transform:
//! with `L = b1 d_xi + (1/xi)(b2 d_eta + b3 d_zeta)` and the Jacobian rows
//! `[x y z; x,eta y,eta z,eta; x,zeta y,zeta z,zeta]`, the chain rule gives
//! `b_j = sum_k bhat_k [J^-1]_kj`.

use nalgebra::{DMatrix, Matrix3, SMatrix};

use crate::face_mesh::{NodeId, SurfaceMesh};
use crate::material::MaterialParams;
use crate::octree::OctreeMesh;
use crate::shape::{quadrature_for, FaceShape, ShapeEvaluation};
use crate::{Error, Real, Result};

/// Spatial dimension of the formulation.
pub const DIM: usize = 3;

type B6x3 = SMatrix<Real, 6, 3>;

/// Cartesian operator blocks: `L = bhat1 d_x + bhat2 d_y + bhat3 d_z` in
/// Voigt order (xx, yy, zz, xy, xz, yz).
pub fn b_hat() -> [B6x3; 3] {
    let mut b1 = B6x3::zeros();
    b1[(0, 0)] = 1.0;
    b1[(3, 1)] = 1.0;
    b1[(4, 2)] = 1.0;
    let mut b2 = B6x3::zeros();
    b2[(3, 0)] = 1.0;
    b2[(1, 1)] = 1.0;
    b2[(5, 2)] = 1.0;
    let mut b3 = B6x3::zeros();
    b3[(4, 0)] = 1.0;
    b3[(5, 1)] = 1.0;
    b3[(2, 2)] = 1.0;
    [b1, b2, b3]
}

/// Jacobian matrix and determinant at one boundary point, from shape data
/// and nodal coordinates relative to the scaling center.
pub fn jacobian_at(ev: &ShapeEvaluation, rel: &[[Real; 3]]) -> (Matrix3<Real>, Real) {
    debug_assert_eq!(ev.len(), rel.len());
    let mut j = Matrix3::zeros();
    for (i, r) in rel.iter().enumerate() {
        for c in 0..3 {
            j[(0, c)] += ev.values[i] * r[c];
            j[(1, c)] += ev.d_eta[i] * r[c];
            j[(2, c)] += ev.d_zeta[i] * r[c];
        }
    }
    let det = j.determinant();
    (j, det)
}

/// Local operator blocks `b_j = sum_k bhat_k [J^-1]_kj`.
pub fn b_operators(j_inv: &Matrix3<Real>) -> [B6x3; 3] {
    let bh = b_hat();
    std::array::from_fn(|col| {
        let mut b = B6x3::zeros();
        for (k, bh_k) in bh.iter().enumerate() {
            b += bh_k * j_inv[(k, col)];
        }
        b
    })
}

/// Coefficient matrices and metadata of one subdomain.
#[derive(Debug, Clone)]
pub struct SubdomainOperator {
    /// Boundary DOF count, `3 * nodes.len()`.
    pub n: usize,
    pub e0: DMatrix<Real>,
    pub e1: DMatrix<Real>,
    pub e2: DMatrix<Real>,
    pub m0: DMatrix<Real>,
    /// Local node order (sorted by position relative to the center);
    /// entries are global node ids.
    pub nodes: Vec<NodeId>,
    /// Node coordinates relative to the scaling center.
    pub rel_coords: Vec<[Real; 3]>,
    pub center: [Real; 3],
    pub size: Real,
    pub material: MaterialParams,
}

/// Canonical local node order of a subdomain: sorted by quantized position
/// relative to the cell center, so congruent subdomains share one layout
/// (which is what makes the stiffness cache reusable across instances).
pub fn subdomain_node_order(
    mesh: &OctreeMesh,
    surface: &SurfaceMesh,
    cell_id: usize,
) -> Vec<NodeId> {
    let cell = &mesh.cells[cell_id];
    let center = mesh.cell_center(cell);
    let size = mesh.cell_size(cell.level);
    let mut ids: Vec<NodeId> = Vec::new();
    for &(fi, _) in &surface.cell_faces[cell_id] {
        for &id in &surface.faces[fi].nodes {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
    }
    ids.sort_by_key(|&id| {
        let c = surface.nodes.coord(id);
        let q: [i64; 3] = std::array::from_fn(|k| {
            (((c[k] - center[k]) / size) * (1u64 << 40) as Real).round() as i64
        });
        (q[2], q[1], q[0])
    });
    ids
}

/// Assembles E0, E1, E2, M0 for the cell `cell_id` of a meshed surface.
pub fn coefficient_matrices(
    mesh: &OctreeMesh,
    surface: &SurfaceMesh,
    cell_id: usize,
    material: MaterialParams,
) -> Result<SubdomainOperator> {
    let cell = &mesh.cells[cell_id];
    let center = mesh.cell_center(cell);
    let size = mesh.cell_size(cell.level);
    let d = material.elasticity_matrix();
    let rho = material.mass_density;

    let faces = &surface.cell_faces[cell_id];
    let ids = subdomain_node_order(mesh, surface, cell_id);
    let local_of: std::collections::HashMap<NodeId, usize> =
        ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let rel_coords: Vec<[Real; 3]> = ids
        .iter()
        .map(|&id| {
            let c = surface.nodes.coord(id);
            std::array::from_fn(|k| c[k] - center[k])
        })
        .collect();

    let n = 3 * ids.len();
    let mut e0 = DMatrix::zeros(n, n);
    let mut e1 = DMatrix::zeros(n, n);
    let mut e2 = DMatrix::zeros(n, n);
    let mut m0 = DMatrix::zeros(n, n);

    let mut area = 0.0;
    for &(fi, cell_is_neg) in faces {
        let face = &surface.faces[fi];
        area += face.area();
        let shape = FaceShape::new(face)?;
        let rule = quadrature_for(face, face.order);
        let nf = face.nodes.len();
        let face_rel: Vec<[Real; 3]> = face
            .nodes
            .iter()
            .map(|&id| {
                let c = surface.nodes.coord(id);
                [c[0] - center[0], c[1] - center[1], c[2] - center[2]]
            })
            .collect();
        let scatter: Vec<usize> = face.nodes.iter().map(|id| local_of[id]).collect();

        let mut f_e0 = DMatrix::zeros(3 * nf, 3 * nf);
        let mut f_e1 = DMatrix::zeros(3 * nf, 3 * nf);
        let mut f_e2 = DMatrix::zeros(3 * nf, 3 * nf);
        let mut f_m0: DMatrix<Real> = DMatrix::zeros(3 * nf, 3 * nf);

        for q in &rule.points {
            let mut ev = shape.eval(q.eta, q.zeta)?;
            if !cell_is_neg {
                // This owner sees the face from the positive side; its
                // outward orientation swaps the roles of the two in-plane
                // coordinates.
                std::mem::swap(&mut ev.d_eta, &mut ev.d_zeta);
            }
            let (j, det) = jacobian_at(&ev, &face_rel);
            if det <= 0.0 {
                return Err(Error::InvertedFace(det));
            }
            let j_inv = j
                .try_inverse()
                .ok_or_else(|| Error::numerical("jacobian", "singular J"))?;
            let [b1, b2, b3] = b_operators(&j_inv);

            // B1 = b1 N, B2 = b2 N,eta + b3 N,zeta as 6 x 3nf blocks.
            let mut bb1 = DMatrix::zeros(6, 3 * nf);
            let mut bb2 = DMatrix::zeros(6, 3 * nf);
            for i in 0..nf {
                for r in 0..6 {
                    for c in 0..3 {
                        bb1[(r, 3 * i + c)] = b1[(r, c)] * ev.values[i];
                        bb2[(r, 3 * i + c)] = b2[(r, c)] * ev.d_eta[i] + b3[(r, c)] * ev.d_zeta[i];
                    }
                }
            }
            let w = q.weight * det;
            let db1 = d * &bb1;
            let db2 = d * &bb2;
            f_e0.gemm_tr(w, &bb1, &db1, 1.0);
            f_e1.gemm_tr(w, &bb2, &db1, 1.0);
            f_e2.gemm_tr(w, &bb2, &db2, 1.0);
            // Mass block: rho N^T N expands to a scalar product per
            // displacement component.
            let wr = w * rho;
            for a in 0..nf {
                for b in 0..nf {
                    let v = wr * ev.values[a] * ev.values[b];
                    for c in 0..3 {
                        f_m0[(3 * a + c, 3 * b + c)] += v;
                    }
                }
            }
        }

        for a in 0..nf {
            for b in 0..nf {
                let (ga, gb) = (scatter[a], scatter[b]);
                for ca in 0..3 {
                    for cb in 0..3 {
                        e0[(3 * ga + ca, 3 * gb + cb)] += f_e0[(3 * a + ca, 3 * b + cb)];
                        e1[(3 * ga + ca, 3 * gb + cb)] += f_e1[(3 * a + ca, 3 * b + cb)];
                        e2[(3 * ga + ca, 3 * gb + cb)] += f_e2[(3 * a + ca, 3 * b + cb)];
                        m0[(3 * ga + ca, 3 * gb + cb)] += f_m0[(3 * a + ca, 3 * b + cb)];
                    }
                }
            }
        }
    }

    let expected = 6.0 * size * size;
    if (area - expected).abs() > 1e-9 * expected {
        return Err(Error::OpenBoundary {
            found: area,
            expected,
        });
    }

    Ok(SubdomainOperator {
        n,
        e0,
        e1,
        e2,
        m0,
        nodes: ids,
        rel_coords,
        center,
        size,
        material,
    })
}
