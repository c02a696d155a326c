//! Transfinite (xNy) shape functions on the reference square.
//!
//! Boundary data is propagated into the element by the projector
//! `P = P_eta + P_zeta - P_eta P_zeta`, where each directional projector
//! blends the two opposite edge traces linearly and the mixed projector
//! interpolates the four corner values bilinearly. Applying `P` to the
//! cardinal boundary data of every node yields one shape function per
//! boundary node; edges may be split into two segments of independent
//! polynomial order, which is what couples subdomains of different size
//! and order without hanging nodes.
//!
//! The construction is complete to order `p <= 3` without interior nodes
//! (serendipity); no bubble modes exist anywhere in this crate.

pub mod poly;

use crate::face_mesh::{EdgeDescriptor, FaceElement};
use crate::{Error, Real, Result};
use poly::{blending, gauss_legendre, lagrange_derivs, lagrange_values};

/// Shape function values and reference derivatives at one point.
#[derive(Debug, Clone)]
pub struct ShapeEvaluation {
    /// One value per face node, aligned with `FaceElement::nodes`.
    pub values: Vec<Real>,
    /// Derivatives with respect to the first reference coordinate.
    pub d_eta: Vec<Real>,
    /// Derivatives with respect to the second reference coordinate.
    pub d_zeta: Vec<Real>,
}

impl ShapeEvaluation {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One quadrature point on the reference square.
#[derive(Debug, Clone, Copy)]
pub struct QuadraturePoint {
    pub eta: Real,
    pub zeta: Real,
    pub weight: Real,
}

/// Tensor Gauss rule, split into 2x2 subcells when the face has split
/// edges so that no point crosses a trace interface.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<QuadraturePoint>,
    pub subcells: usize,
}

impl QuadratureRule {
    pub fn total_weight(&self) -> Real {
        self.points.iter().map(|p| p.weight).sum()
    }
}

/// Trace of the piecewise Lagrange cardinal functions of one edge at
/// parameter `s`, aligned with [`EdgeDescriptor`] node order (shared
/// segment endpoints deduplicated). Returns values and one-sided
/// derivatives; at a segment interface the owning segment is the one whose
/// closed upper bound contains `s` first.
pub fn edge_trace(desc: &EdgeDescriptor, s: Real) -> Result<(Vec<Real>, Vec<Real>)> {
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "edge parameter {s} outside [-1, 1]"
        )));
    }
    let ids = edge_node_ids(desc);
    let mut values = vec![0.0; ids.len()];
    let mut derivs = vec![0.0; ids.len()];
    let seg_idx = desc
        .segments
        .iter()
        .position(|seg| s <= seg.bounds.1 + 1e-14)
        .unwrap_or(desc.segments.len() - 1);
    let seg = &desc.segments[seg_idx];
    let (s0, s1) = seg.bounds;
    let t = (2.0 * s - s0 - s1) / (s1 - s0);
    let scale = 2.0 / (s1 - s0);
    let gll: Vec<Real> = poly::gll_nodes(seg.order)?;
    let vals = lagrange_values(&gll, t);
    let ders = lagrange_derivs(&gll, t);
    for (k, id) in seg.nodes.iter().enumerate() {
        let local = ids
            .iter()
            .position(|i| i == id)
            .expect("segment node on edge");
        values[local] = vals[k];
        derivs[local] = ders[k] * scale;
    }
    Ok((values, derivs))
}

/// Node ids of an edge in increasing parameter, shared endpoints once.
pub fn edge_node_ids(desc: &EdgeDescriptor) -> Vec<usize> {
    let mut ids = Vec::new();
    for seg in &desc.segments {
        for &id in &seg.nodes {
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
    }
    ids
}

/// Precomputed local-index layout for fast repeated evaluation of one face.
pub struct FaceShape<'a> {
    face: &'a FaceElement,
    /// Local indices per edge, aligned with `edge_node_ids`.
    edge_locals: [Vec<usize>; 4],
    /// Local indices of the corners (c00, c10, c11, c01).
    corner_locals: [usize; 4],
}

impl<'a> FaceShape<'a> {
    pub fn new(face: &'a FaceElement) -> Result<Self> {
        for desc in &face.edges {
            for seg in &desc.segments {
                if !(1..=3).contains(&seg.order) {
                    return Err(Error::OrderOutOfRange(seg.order));
                }
            }
        }
        let locate = |id: usize| -> usize {
            face.local_index(id)
                .expect("edge node listed in face node table")
        };
        let edge_locals: [Vec<usize>; 4] = std::array::from_fn(|e| {
            edge_node_ids(&face.edges[e])
                .iter()
                .map(|&id| locate(id))
                .collect()
        });
        let south = edge_node_ids(&face.edges[0]);
        let east = edge_node_ids(&face.edges[1]);
        let north = edge_node_ids(&face.edges[2]);
        let west = edge_node_ids(&face.edges[3]);
        let corner_locals = [
            locate(south[0]),
            locate(*south.last().unwrap()),
            locate(*east.last().unwrap()),
            locate(north[0]),
        ];
        debug_assert_eq!(south[0], west[0]);
        debug_assert_eq!(*south.last().unwrap(), east[0]);
        debug_assert_eq!(*east.last().unwrap(), *north.last().unwrap());
        debug_assert_eq!(north[0], *west.last().unwrap());
        Ok(FaceShape {
            face,
            edge_locals,
            corner_locals,
        })
    }

    pub fn node_count(&self) -> usize {
        self.face.nodes.len()
    }

    /// Evaluates all shape functions and reference derivatives at
    /// `(eta, zeta)` in `[-1, 1]^2`.
    pub fn eval(&self, eta: Real, zeta: Real) -> Result<ShapeEvaluation> {
        for c in [eta, zeta] {
            if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&c) {
                return Err(Error::InvalidArgument(format!(
                    "reference point ({eta}, {zeta}) outside [-1, 1]^2"
                )));
            }
        }
        let n = self.face.nodes.len();
        let mut values = vec![0.0; n];
        let mut d_eta = vec![0.0; n];
        let mut d_zeta = vec![0.0; n];

        let (p1_eta, p2_eta) = blending(eta);
        let (p1_zeta, p2_zeta) = blending(zeta);

        // Directional projector parts: each edge trace enters weighted by
        // the blending factor of the opposite coordinate.
        // Edge order: S (param eta, factor psi1(zeta)), E (zeta, psi2(eta)),
        // N (eta, psi2(zeta)), W (zeta, psi1(eta)).
        let params = [eta, zeta, eta, zeta];
        let factors = [p1_zeta, p2_eta, p2_zeta, p1_eta];
        // (d/d_eta factor, d/d_zeta factor)
        let factor_derivs = [(0.0, -0.5), (0.5, 0.0), (0.0, 0.5), (-0.5, 0.0)];
        // Whether the trace parameter is eta (true) or zeta (false).
        let trace_is_eta = [true, false, true, false];

        for e in 0..4 {
            let (tv, td) = edge_trace(&self.face.edges[e], params[e])?;
            let beta = factors[e];
            let (dbe, dbz) = factor_derivs[e];
            for (k, &local) in self.edge_locals[e].iter().enumerate() {
                values[local] += beta * tv[k];
                if trace_is_eta[e] {
                    d_eta[local] += beta * td[k];
                    d_zeta[local] += dbz * tv[k];
                } else {
                    d_eta[local] += dbe * tv[k];
                    d_zeta[local] += beta * td[k];
                }
            }
        }

        // Mixed projector: subtract the bilinear corner interpolation.
        let corner_weights = [
            (p1_eta * p1_zeta, -0.5 * p1_zeta, -0.5 * p1_eta),
            (p2_eta * p1_zeta, 0.5 * p1_zeta, -0.5 * p2_eta),
            (p2_eta * p2_zeta, 0.5 * p2_zeta, 0.5 * p2_eta),
            (p1_eta * p2_zeta, -0.5 * p2_zeta, 0.5 * p1_eta),
        ];
        for (k, &(w, dwe, dwz)) in corner_weights.iter().enumerate() {
            let local = self.corner_locals[k];
            values[local] -= w;
            d_eta[local] -= dwe;
            d_zeta[local] -= dwz;
        }

        Ok(ShapeEvaluation {
            values,
            d_eta,
            d_zeta,
        })
    }
}

/// One-shot evaluation; use [`FaceShape`] in quadrature loops.
pub fn transfinite_shape(face: &FaceElement, point: (Real, Real)) -> Result<ShapeEvaluation> {
    FaceShape::new(face)?.eval(point.0, point.1)
}

/// Quadrature rule for a face at order `p`: a tensor Gauss-Legendre rule
/// with `(p + 2)^2` points per cell, on 2x2 subcells when any edge is
/// split (points never lie on trace interfaces).
pub fn quadrature_for(face: &FaceElement, p: usize) -> QuadratureRule {
    let split = face.edges.iter().any(|e| e.is_split());
    tensor_rule(split, p + 2)
}

/// Tensor rule with `n` points per direction, over the full square or 2x2
/// half-size subcells.
pub fn tensor_rule(split: bool, n: usize) -> QuadratureRule {
    let (x, w): (Vec<Real>, Vec<Real>) = gauss_legendre(n);
    let mut points = Vec::new();
    let cells: &[(Real, Real)] = if split {
        &[(-1.0, 0.0), (0.0, 1.0)]
    } else {
        &[(-1.0, 1.0)]
    };
    for &(u0, u1) in cells {
        for &(v0, v1) in cells {
            let ju = (u1 - u0) / 2.0;
            let jv = (v1 - v0) / 2.0;
            for a in 0..n {
                for b in 0..n {
                    points.push(QuadraturePoint {
                        eta: u0 + ju * (x[a] + 1.0),
                        zeta: v0 + jv * (x[b] + 1.0),
                        weight: w[a] * w[b] * ju * jv,
                    });
                }
            }
        }
    }
    QuadratureRule {
        points,
        subcells: cells.len() * cells.len(),
    }
}

/// Directional projector along the first coordinate:
/// `P_eta[f](eta, zeta) = psi1(eta) f(-1, zeta) + psi2(eta) f(1, zeta)`.
pub fn project_eta(f: &dyn Fn(Real, Real) -> Real, eta: Real, zeta: Real) -> Real {
    let (p1, p2) = blending(eta);
    p1 * f(-1.0, zeta) + p2 * f(1.0, zeta)
}

/// Directional projector along the second coordinate.
pub fn project_zeta(f: &dyn Fn(Real, Real) -> Real, eta: Real, zeta: Real) -> Real {
    let (p1, p2) = blending(zeta);
    p1 * f(eta, -1.0) + p2 * f(eta, 1.0)
}

/// Mixed projector: successive application of the directional projectors,
/// which interpolates the four corner values bilinearly.
pub fn project_mixed(f: &dyn Fn(Real, Real) -> Real, eta: Real, zeta: Real) -> Real {
    let g = |e: Real, z: Real| project_zeta(f, e, z);
    project_eta(&g, eta, zeta)
}

/// Full transfinite projection `P = P_eta + P_zeta - P_eta P_zeta`.
pub fn project(f: &dyn Fn(Real, Real) -> Real, eta: Real, zeta: Real) -> Real {
    project_eta(f, eta, zeta) + project_zeta(f, eta, zeta) - project_mixed(f, eta, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face_mesh::FaceElement;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn face(splits: [bool; 4], order: usize) -> FaceElement {
        FaceElement::synthetic(splits, [order; 4])
    }

    fn sample_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Real, Real)> {
        (0..n)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    const PATTERN_REPS: [[bool; 4]; 6] = [
        [false, false, false, false],
        [true, false, false, false],
        [true, true, false, false],
        [true, false, true, false],
        [true, true, true, false],
        [true, true, true, true],
    ];

    #[test]
    fn bilinear_element_recovered_for_linear_order() {
        let f = face([false; 4], 1);
        let shape = FaceShape::new(&f).unwrap();
        let ev = shape.eval(0.0, 0.0).unwrap();
        assert_eq!(ev.len(), 4);
        for v in &ev.values {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-15);
        }
        // Exact bilinear values at an off-center point.
        let ev = shape.eval(0.5, -0.25).unwrap();
        let exact =
            |u: Real, v: Real, eta: Real, zeta: Real| 0.25 * (1.0 + u * eta) * (1.0 + v * zeta);
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (k, &(u, v)) in corners.iter().enumerate() {
            assert_abs_diff_eq!(ev.values[k], exact(u, v, 0.5, -0.25), epsilon = 1e-14);
        }
    }

    #[test]
    fn quadratic_corner_value_matches_serendipity() {
        // 8-node serendipity: corner function at the center is -1/4.
        let f = face([false; 4], 2);
        let shape = FaceShape::new(&f).unwrap();
        let ev = shape.eval(0.0, 0.0).unwrap();
        assert_eq!(ev.len(), 8);
        let coords = f.node_ref_coords();
        for (i, &(u, v)) in coords.iter().enumerate() {
            let expect = if u.abs() > 0.5 && v.abs() > 0.5 {
                -0.25 // corner functions
            } else {
                0.5 // midside functions
            };
            assert_abs_diff_eq!(ev.values[i], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn hanging_node_has_kronecker_property() {
        // One split edge at p = 1: 5 nodes; the midpoint shape function is
        // 1 at the hanging node and 0 at all other nodes.
        let f = face([true, false, false, false], 1);
        let shape = FaceShape::new(&f).unwrap();
        assert_eq!(shape.node_count(), 5);
        let coords = f.node_ref_coords();
        let hang = coords
            .iter()
            .position(|&(u, v)| u.abs() < 1e-12 && (v + 1.0).abs() < 1e-12)
            .expect("midpoint node");
        let ev = shape.eval(coords[hang].0, coords[hang].1).unwrap();
        for (i, v) in ev.values.iter().enumerate() {
            let expect = if i == hang { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn kronecker_delta_all_patterns_and_orders() {
        for splits in PATTERN_REPS {
            for p in 1..=3 {
                let f = face(splits, p);
                let shape = FaceShape::new(&f).unwrap();
                let coords = f.node_ref_coords();
                for (j, &(u, v)) in coords.iter().enumerate() {
                    let ev = shape.eval(u, v).unwrap();
                    for (i, val) in ev.values.iter().enumerate() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (val - expect).abs() <= 1e-12,
                            "pattern {splits:?} p={p}: N_{i}(x_{j}) = {val}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_zero_derivative_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for splits in PATTERN_REPS {
            for p in 1..=3 {
                let f = face(splits, p);
                let shape = FaceShape::new(&f).unwrap();
                for (eta, zeta) in sample_points(&mut rng, 1000) {
                    let ev = shape.eval(eta, zeta).unwrap();
                    let sum: Real = ev.values.iter().sum();
                    let de: Real = ev.d_eta.iter().sum();
                    let dz: Real = ev.d_zeta.iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-12, "PoU {splits:?} p={p}: {sum}");
                    assert!(de.abs() <= 1e-12 && dz.abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn polynomial_reproduction_in_serendipity_space() {
        // Monomials of the serendipity space: min(a, b) <= 1, max <= p.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in 1..=3usize {
            let f = face([false; 4], p);
            let shape = FaceShape::new(&f).unwrap();
            let coords = f.node_ref_coords();
            for a in 0..=p {
                for b in 0..=p {
                    if a.min(b) > 1 {
                        continue;
                    }
                    let mono = |u: Real, v: Real| u.powi(a as i32) * v.powi(b as i32);
                    for (eta, zeta) in sample_points(&mut rng, 40) {
                        let ev = shape.eval(eta, zeta).unwrap();
                        let interp: Real = coords
                            .iter()
                            .zip(&ev.values)
                            .map(|(&(u, v), n)| mono(u, v) * n)
                            .sum();
                        assert!(
                            (interp - mono(eta, zeta)).abs() <= 1e-12,
                            "p={p} monomial u^{a} v^{b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for splits in PATTERN_REPS {
            for p in 1..=3 {
                let f = face(splits, p);
                let shape = FaceShape::new(&f).unwrap();
                for _ in 0..30 {
                    // Stay away from segment interfaces and the square rim.
                    let eta: Real = rng.random_range(0.1..0.9);
                    let zeta: Real = rng.random_range(-0.9..-0.1);
                    let ev = shape.eval(eta, zeta).unwrap();
                    let ep = shape.eval(eta + h, zeta).unwrap();
                    let em = shape.eval(eta - h, zeta).unwrap();
                    let zp = shape.eval(eta, zeta + h).unwrap();
                    let zm = shape.eval(eta, zeta - h).unwrap();
                    for i in 0..ev.len() {
                        let fd_e = (ep.values[i] - em.values[i]) / (2.0 * h);
                        let fd_z = (zp.values[i] - zm.values[i]) / (2.0 * h);
                        let scale = ev.d_eta[i].abs().max(1.0);
                        assert!(
                            (ev.d_eta[i] - fd_e).abs() / scale <= 1e-6,
                            "d_eta mismatch {splits:?} p={p}"
                        );
                        let scale = ev.d_zeta[i].abs().max(1.0);
                        assert!((ev.d_zeta[i] - fd_z).abs() / scale <= 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn trace_conformity_across_split_edge() {
        // A face with its south edge split couples to two half-size faces;
        // along the shared edge the traces must agree at every point. Here
        // the half-size neighbor shares the left segment's nodes as its own
        // unsplit south... its north edge, so build it that way.
        for p in 1..=3usize {
            for p_small in 1..=3usize {
                // Conformity in the mesh comes from the shared segment
                // carrying one global order (the max rule); replicate that
                // by giving the split south edge the shared order.
                let seg_order = p.max(p_small);
                let big = FaceElement::synthetic([true, false, false, false], [seg_order, p, p, p]);
                let seg = big.edges[0].segments[0].clone();
                let small =
                    FaceElement::synthetic_with_north(seg.nodes.clone(), seg_order, p_small);
                let big_shape = FaceShape::new(&big).unwrap();
                let small_shape = FaceShape::new(&small).unwrap();
                for k in 0..50 {
                    let s = -1.0 + 2.0 * (k as Real + 0.5) / 50.0; // on small face
                    let s_big = (s - 1.0) / 2.0; // left half of big face
                    let ev_big = big_shape.eval(s_big, -1.0).unwrap();
                    let ev_small = small_shape.eval(s, 1.0).unwrap();
                    // Compare via shared global node ids.
                    for (id_pos, &id) in seg.nodes.iter().enumerate() {
                        let _ = id_pos;
                        let bi = big.local_index(id).unwrap();
                        let si = small.local_index(id).unwrap();
                        assert!(
                            (ev_big.values[bi] - ev_small.values[si]).abs() <= 1e-12,
                            "trace mismatch p={p} p_small={p_small} at s={s}"
                        );
                    }
                    // All non-shared shapes vanish on the edge.
                    for i in 0..ev_big.len() {
                        if !seg.nodes.iter().any(|&id| big.local_index(id) == Some(i)) {
                            assert!(ev_big.values[i].abs() <= 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn projector_linearity_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = |u: Real, v: Real| 0.3 * u * u * v - 1.2 * v * v + 0.5 * u - 0.25;
        let g = |u: Real, v: Real| u * v * v * v + 2.0 * u * u - v;
        let fg = |u: Real, v: Real| f(u, v) + g(u, v);
        for _ in 0..200 {
            let (eta, zeta) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            // Linearity.
            assert_abs_diff_eq!(
                project_eta(&fg, eta, zeta),
                project_eta(&f, eta, zeta) + project_eta(&g, eta, zeta),
                epsilon = 1e-13
            );
            assert_abs_diff_eq!(
                project_zeta(&fg, eta, zeta),
                project_zeta(&f, eta, zeta) + project_zeta(&g, eta, zeta),
                epsilon = 1e-13
            );
            // Idempotence.
            let pf = |u: Real, v: Real| project_eta(&f, u, v);
            assert_abs_diff_eq!(
                project_eta(&pf, eta, zeta),
                project_eta(&f, eta, zeta),
                epsilon = 1e-13
            );
            let pzf = |u: Real, v: Real| project_zeta(&f, u, v);
            assert_abs_diff_eq!(
                project_zeta(&pzf, eta, zeta),
                project_zeta(&f, eta, zeta),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn projection_is_exact_on_the_boundary() {
        let f = |u: Real, v: Real| u * u * u - 2.0 * u * v + v * v + 1.0;
        for s in [-1.0, -0.4, 0.2, 1.0] {
            assert_abs_diff_eq!(project(&f, s, -1.0), f(s, -1.0), epsilon = 1e-13);
            assert_abs_diff_eq!(project(&f, s, 1.0), f(s, 1.0), epsilon = 1e-13);
            assert_abs_diff_eq!(project(&f, -1.0, s), f(-1.0, s), epsilon = 1e-13);
            assert_abs_diff_eq!(project(&f, 1.0, s), f(1.0, s), epsilon = 1e-13);
        }
    }

    #[test]
    fn edge_trace_values() {
        // Unsplit p = 1 edge at s = 0: both cardinals are 1/2.
        let f = face([false; 4], 1);
        let (v, _) = edge_trace(&f.edges[0], 0.0).unwrap();
        assert_eq!(v, vec![0.5, 0.5]);

        // Split p = 1 edge at s = -0.5: midpoint 0.5, left corner 0.5,
        // right corner 0.
        let f = face([true, false, false, false], 1);
        let ids = edge_node_ids(&f.edges[0]);
        assert_eq!(ids.len(), 3);
        let (v, _) = edge_trace(&f.edges[0], -0.5).unwrap();
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-15); // midpoint id sits between
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);

        // Partition of unity at random parameters.
        let f = face([true; 4], 3);
        for s in [-0.99, -0.5, 0.0, 0.37, 1.0] {
            let (v, _) = edge_trace(&f.edges[0], s).unwrap();
            assert_abs_diff_eq!(v.iter().sum::<Real>(), 1.0, epsilon = 1e-13);
        }
        assert!(edge_trace(&f.edges[0], 1.5).is_err());
    }

    #[test]
    fn quadrature_counts_and_weights() {
        let f = face([false; 4], 1);
        let rule = quadrature_for(&f, 1);
        assert_eq!(rule.points.len(), 9);
        assert_abs_diff_eq!(rule.total_weight(), 4.0, epsilon = 1e-13);

        let f = face([true, false, false, false], 3);
        let rule = quadrature_for(&f, 3);
        assert_eq!(rule.points.len(), 100);
        assert_eq!(rule.subcells, 4);
        assert_abs_diff_eq!(rule.total_weight(), 4.0, epsilon = 1e-13);
    }

    #[test]
    fn integrated_partition_of_unity_is_face_area() {
        for splits in PATTERN_REPS {
            for p in 1..=3 {
                let f = face(splits, p);
                let shape = FaceShape::new(&f).unwrap();
                let rule = quadrature_for(&f, p);
                let mut total = 0.0;
                for q in &rule.points {
                    let ev = shape.eval(q.eta, q.zeta).unwrap();
                    total += q.weight * ev.values.iter().sum::<Real>();
                }
                assert_abs_diff_eq!(total, 4.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mixed_segment_orders_stay_conforming() {
        // South edge split with orders 2 (left) and 3 (right): trace must
        // still be a partition of unity and continuous at the breakpoint.
        let f = FaceElement::synthetic_mixed_south(2, 3, 1);
        let shape = FaceShape::new(&f).unwrap();
        for s in [-0.9, -0.3, 0.2, 0.8] {
            let ev = shape.eval(s, -1.0).unwrap();
            assert_abs_diff_eq!(ev.values.iter().sum::<Real>(), 1.0, epsilon = 1e-13);
        }
        let left = shape.eval(-1e-9, -1.0).unwrap();
        let right = shape.eval(1e-9, -1.0).unwrap();
        for i in 0..left.len() {
            assert_abs_diff_eq!(left.values[i], right.values[i], epsilon = 1e-7);
        }
    }
}
