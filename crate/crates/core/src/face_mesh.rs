//! Conforming quadrilateral surface mesh of all subdomain boundaries.
//!
//! Every leaf cell contributes six face regions. A region adjoining four
//! finer neighbors is subdivided into four child faces, and so is a region
//! whose four edges are all split (both cases of the footnote rule are
//! treated identically). The remaining faces may carry up to three split
//! edges and become genuine transition elements.
//!
//! Node identity is topological: vertices are keyed by their finest-lattice
//! coordinates, edge-interior nodes by (segment, local index), so shared
//! faces and edges dedup exactly with no floating-point comparisons. The
//! geometric coincidence of deduplicated nodes is asserted against a
//! `1e-12 * root_size` tolerance.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::octree::{OctreeCell, OctreeMesh};
use crate::shape::poly::gll_nodes;
use crate::{Error, Real, Result};

pub type NodeId = usize;

/// Topological identity of a global node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    /// Lattice vertex at finest-level coordinates.
    Vertex([i64; 3]),
    /// Interior GLL node `idx` (1-based) of an axis-aligned edge segment,
    /// counted along the increasing coordinate.
    EdgeNode {
        axis: u8,
        origin: [i64; 3],
        span: i64,
        idx: u8,
    },
}

/// Bijective map between topological node keys and dense global ids.
#[derive(Debug, Clone, Default)]
pub struct NodeTable {
    keys: HashMap<NodeKey, NodeId>,
    coords: Vec<[Real; 3]>,
    tolerance: Real,
}

impl NodeTable {
    pub fn new(tolerance: Real) -> Self {
        NodeTable {
            keys: HashMap::new(),
            coords: Vec::new(),
            tolerance,
        }
    }

    /// Returns the id for `key`, inserting it with `coord` on first sight.
    /// Re-insertions assert geometric coincidence.
    pub fn get_or_insert(&mut self, key: NodeKey, coord: [Real; 3]) -> NodeId {
        if let Some(&id) = self.keys.get(&key) {
            let old = self.coords[id];
            let dist = (0..3)
                .map(|i| (old[i] - coord[i]).powi(2))
                .sum::<Real>()
                .sqrt();
            assert!(
                dist <= self.tolerance,
                "node {key:?} seen at {old:?} and {coord:?} (distance {dist:.3e})"
            );
            return id;
        }
        let id = self.coords.len();
        self.coords.push(coord);
        self.keys.insert(key, id);
        id
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coord(&self, id: NodeId) -> [Real; 3] {
        self.coords[id]
    }

    pub fn coords(&self) -> &[[Real; 3]] {
        &self.coords
    }

    pub fn id_of(&self, key: &NodeKey) -> Option<NodeId> {
        self.keys.get(key).copied()
    }
}

/// One polynomial segment of a face edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Sub-interval of the edge parameter `[-1, 1]`.
    pub bounds: (Real, Real),
    /// Polynomial order of the trace on this segment.
    pub order: usize,
    /// The `order + 1` global node ids in increasing parameter, endpoints
    /// included (shared endpoints carry the same id on both segments).
    pub nodes: Vec<NodeId>,
}

/// Piecewise trace description of one face edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDescriptor {
    /// 1 or 2 segments tiling `[-1, 1]`.
    pub segments: Vec<Segment>,
}

impl EdgeDescriptor {
    pub fn is_split(&self) -> bool {
        self.segments.len() > 1
    }

    /// Maximum polynomial order over the segments.
    pub fn max_order(&self) -> usize {
        self.segments.iter().map(|s| s.order).max().unwrap_or(1)
    }
}

/// Square boundary patch of one or two subdomains.
///
/// The in-plane axes are `u = (axis+1) % 3`, `v = (axis+2) % 3`, so the
/// canonical normal `u x v` points along `+axis`; the owner on the negative
/// side of the plane sees that normal as outward.
#[derive(Debug, Clone)]
pub struct FaceElement {
    /// Normal axis (0, 1, 2).
    pub axis: u8,
    /// Finest-lattice coordinates of the (u, v) min corner; `[axis]` holds
    /// the plane coordinate.
    pub lat_origin: [i64; 3],
    /// Edge length in finest-lattice units.
    pub lat_span: i64,
    /// Cell on the negative side of the plane, if any.
    pub owner_neg: Option<usize>,
    /// Cell on the positive side of the plane, if any.
    pub owner_pos: Option<usize>,
    /// Physical corners in (u, v) order: (lo,lo), (hi,lo), (hi,hi), (lo,hi).
    pub corners: [[Real; 3]; 4],
    /// Edges in the order S (v=-1), E (u=+1), N (v=+1), W (u=-1), each
    /// parametrized by the increasing in-plane coordinate.
    pub edges: [EdgeDescriptor; 4],
    /// Rotation-invariant split pattern, 0..=5.
    pub pattern: u8,
    /// Face order: max over the owning subdomains' orders.
    pub order: usize,
    /// Global ids of all face nodes, in deterministic first-occurrence order
    /// over (edge, segment, node).
    pub nodes: Vec<NodeId>,
}

impl FaceElement {
    /// Local index of a global node on this face.
    pub fn local_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == id)
    }

    /// Reference (u, v) coordinates of each local node.
    pub fn node_ref_coords(&self) -> Vec<(Real, Real)> {
        let mut out = vec![(Real::NAN, Real::NAN); self.nodes.len()];
        for (e, desc) in self.edges.iter().enumerate() {
            for seg in &desc.segments {
                let gll: Vec<Real> = gll_nodes(seg.order).expect("validated order");
                for (k, &id) in seg.nodes.iter().enumerate() {
                    let s = seg.bounds.0 + (seg.bounds.1 - seg.bounds.0) * (gll[k] + 1.0) / 2.0;
                    let (u, v) = match e {
                        0 => (s, -1.0),
                        1 => (1.0, s),
                        2 => (s, 1.0),
                        _ => (-1.0, s),
                    };
                    let li = self.local_index(id).expect("node of own edge");
                    out[li] = (u, v);
                }
            }
        }
        out
    }

    /// Physical area of the square face.
    pub fn area(&self) -> Real {
        let dx: Real = (0..3)
            .map(|i| (self.corners[1][i] - self.corners[0][i]).powi(2))
            .sum::<Real>()
            .sqrt();
        dx * dx
    }

    /// Standalone face on the reference square `[-1, 1]^2` (normal +z) with
    /// fresh node ids, given edge split flags and one order per edge.
    /// Drives the shape-function property suites and the CLI shape dump;
    /// meshes never use this.
    pub fn synthetic(splits: [bool; 4], orders: [usize; 4]) -> FaceElement {
        let mut next = 4usize;
        let endpoints = [(0usize, 1usize), (1, 2), (3, 2), (0, 3)];
        let edges: [EdgeDescriptor; 4] = std::array::from_fn(|e| {
            let (a, b) = endpoints[e];
            let p = orders[e];
            let mut segments = Vec::new();
            if splits[e] {
                let mid = next;
                next += 1;
                for (lo, hi, s0, s1) in [(a, mid, -1.0, 0.0), (mid, b, 0.0, 1.0)] {
                    let mut nodes = vec![lo];
                    for _ in 1..p {
                        nodes.push(next);
                        next += 1;
                    }
                    nodes.push(hi);
                    segments.push(Segment {
                        bounds: (s0, s1),
                        order: p,
                        nodes,
                    });
                }
            } else {
                let mut nodes = vec![a];
                for _ in 1..p {
                    nodes.push(next);
                    next += 1;
                }
                nodes.push(b);
                segments.push(Segment {
                    bounds: (-1.0, 1.0),
                    order: p,
                    nodes,
                });
            }
            EdgeDescriptor { segments }
        });
        Self::assemble_synthetic(edges)
    }

    /// Synthetic face whose north edge reuses `north_nodes` at
    /// `north_order`; the remaining edges are fresh at `other_order`. Used
    /// to set up conforming neighbor pairs in tests.
    pub fn synthetic_with_north(
        north_nodes: Vec<NodeId>,
        north_order: usize,
        other_order: usize,
    ) -> FaceElement {
        assert_eq!(north_nodes.len(), north_order + 1);
        let mut next = north_nodes.iter().max().unwrap() + 1;
        let c01 = north_nodes[0];
        let c11 = *north_nodes.last().unwrap();
        let c00 = next;
        let c10 = next + 1;
        next += 2;
        let mut fresh_edge = |a: NodeId, b: NodeId, p: usize| {
            let mut nodes = vec![a];
            for _ in 1..p {
                nodes.push(next);
                next += 1;
            }
            nodes.push(b);
            EdgeDescriptor {
                segments: vec![Segment {
                    bounds: (-1.0, 1.0),
                    order: p,
                    nodes,
                }],
            }
        };
        let south = fresh_edge(c00, c10, other_order);
        let east = fresh_edge(c10, c11, other_order);
        let west = fresh_edge(c00, c01, other_order);
        let north = EdgeDescriptor {
            segments: vec![Segment {
                bounds: (-1.0, 1.0),
                order: north_order,
                nodes: north_nodes,
            }],
        };
        Self::assemble_synthetic([south, east, north, west])
    }

    /// Synthetic face whose south edge is split into segments of orders
    /// `p_left` and `p_right`; other edges unsplit at `p_other`.
    pub fn synthetic_mixed_south(p_left: usize, p_right: usize, p_other: usize) -> FaceElement {
        let mut next = 4usize;
        let mid = next;
        next += 1;
        let mut seg = |a: NodeId, b: NodeId, p: usize, s0: Real, s1: Real| {
            let mut nodes = vec![a];
            for _ in 1..p {
                nodes.push(next);
                next += 1;
            }
            nodes.push(b);
            Segment {
                bounds: (s0, s1),
                order: p,
                nodes,
            }
        };
        let south = EdgeDescriptor {
            segments: vec![
                seg(0, mid, p_left, -1.0, 0.0),
                seg(mid, 1, p_right, 0.0, 1.0),
            ],
        };
        let east = EdgeDescriptor {
            segments: vec![seg(1, 2, p_other, -1.0, 1.0)],
        };
        let north = EdgeDescriptor {
            segments: vec![seg(3, 2, p_other, -1.0, 1.0)],
        };
        let west = EdgeDescriptor {
            segments: vec![seg(0, 3, p_other, -1.0, 1.0)],
        };
        Self::assemble_synthetic([south, east, north, west])
    }

    fn assemble_synthetic(edges: [EdgeDescriptor; 4]) -> FaceElement {
        let mut nodes: Vec<NodeId> = Vec::new();
        for desc in &edges {
            for seg in &desc.segments {
                for &id in &seg.nodes {
                    if !nodes.contains(&id) {
                        nodes.push(id);
                    }
                }
            }
        }
        let order = edges
            .iter()
            .map(|e| e.segments.iter().map(|s| s.order).max().unwrap())
            .max()
            .unwrap();
        FaceElement {
            axis: 2,
            lat_origin: [0, 0, 0],
            lat_span: 2,
            owner_neg: None,
            owner_pos: None,
            corners: [
                [-1.0, -1.0, 0.0],
                [1.0, -1.0, 0.0],
                [1.0, 1.0, 0.0],
                [-1.0, 1.0, 0.0],
            ],
            edges,
            pattern: 0,
            order,
            nodes,
        }
    }
}

/// Complete surface discretization of a mesh.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub faces: Vec<FaceElement>,
    pub nodes: NodeTable,
    /// For every cell: the indices of its boundary faces, paired with
    /// `true` when the cell is the negative-side owner.
    pub cell_faces: Vec<Vec<(usize, bool)>>,
    /// Per-cell polynomial order used during construction.
    pub cell_orders: Vec<usize>,
}

impl SurfaceMesh {
    /// Histogram of face patterns 0..=5.
    pub fn pattern_histogram(&self) -> [usize; 6] {
        let mut h = [0usize; 6];
        for f in &self.faces {
            h[f.pattern as usize] += 1;
        }
        h
    }

    /// Total DOF count at three displacement components per node.
    pub fn dof_count(&self) -> usize {
        3 * self.nodes.len()
    }
}

/// How polynomial orders are assigned to cells.
#[derive(Debug, Clone)]
pub enum OrderMap {
    /// One order everywhere.
    Uniform(usize),
    /// Order per material code.
    PerMaterial(BTreeMap<u8, usize>),
}

impl OrderMap {
    pub fn order_for(&self, cell: &OctreeCell) -> Result<usize> {
        let p = match self {
            OrderMap::Uniform(p) => *p,
            OrderMap::PerMaterial(map) => *map.get(&cell.material).ok_or_else(|| {
                Error::FaceMesh(format!("no order assigned to material {}", cell.material))
            })?,
        };
        if !(1..=3).contains(&p) {
            return Err(Error::OrderOutOfRange(p));
        }
        Ok(p)
    }
}

/// Order of a face shared by subdomains of orders `p_a` and `p_b`: both
/// owners use the identical discretization, so the max keeps the richer
/// trace space and conformity is automatic.
pub fn shared_face_order(p_a: usize, p_b: usize) -> usize {
    p_a.max(p_b)
}

/// Rotation-invariant pattern id from the four edge-split flags:
/// 0 none, 1 one edge, 2 two adjacent, 3 two opposite, 4 three, 5 four.
pub fn classify_pattern(face: &FaceElement) -> Result<u8> {
    for desc in &face.edges {
        if desc.segments.len() > 2 {
            return Err(Error::FaceMesh(format!(
                "edge with {} segments exceeds the balanced-mesh bound",
                desc.segments.len()
            )));
        }
    }
    let flags = [
        face.edges[0].is_split(),
        face.edges[1].is_split(),
        face.edges[2].is_split(),
        face.edges[3].is_split(),
    ];
    Ok(pattern_from_flags(flags))
}

/// Pattern id from raw split flags in S, E, N, W order.
pub fn pattern_from_flags(flags: [bool; 4]) -> u8 {
    match flags.iter().filter(|&&f| f).count() {
        0 => 0,
        1 => 1,
        2 => {
            // S-N and E-W are the opposite pairs in cyclic S, E, N, W order.
            if (flags[0] && flags[2]) || (flags[1] && flags[3]) {
                3
            } else {
                2
            }
        }
        3 => 4,
        _ => 5,
    }
}

struct ProtoFace {
    axis: u8,
    origin: [i64; 3],
    span: i64,
    owner_neg: Option<usize>,
    owner_pos: Option<usize>,
    splits: [bool; 4],
}

/// Builds the conforming surface mesh of a balanced octree.
pub fn build_faces(mesh: &OctreeMesh, orders: &OrderMap) -> Result<SurfaceMesh> {
    mesh.require_balanced()?;
    let cell_orders: Vec<usize> = mesh
        .cells
        .iter()
        .map(|c| orders.order_for(c))
        .collect::<Result<_>>()?;

    let finest = mesh.cell_size(mesh.max_level);
    let node_tol = 1e-12 * mesh.root_size;

    // All leaf corners on the finest lattice; a face edge is split exactly
    // when its midpoint is such a corner (guaranteed by face+edge balance).
    let mut vertices: HashSet<[i64; 3]> = HashSet::new();
    for cell in &mesh.cells {
        let shift = (mesh.max_level - cell.level) as u32;
        for dz in 0..2i64 {
            for dy in 0..2i64 {
                for dx in 0..2i64 {
                    vertices.insert([
                        (cell.index[0] + dx) << shift,
                        (cell.index[1] + dy) << shift,
                        (cell.index[2] + dz) << shift,
                    ]);
                }
            }
        }
    }

    let mut protos: Vec<ProtoFace> = Vec::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let shift = (mesh.max_level - cell.level) as u32;
        let span = 1i64 << shift;
        let base = [
            cell.index[0] << shift,
            cell.index[1] << shift,
            cell.index[2] << shift,
        ];
        for axis in 0..3u8 {
            let ua = ((axis + 1) % 3) as usize;
            let va = ((axis + 2) % 3) as usize;
            for positive in [true, false] {
                let mut q = cell.index;
                q[axis as usize] += if positive { 1 } else { -1 };

                let mut origin = base;
                origin[axis as usize] = if positive {
                    base[axis as usize] + span
                } else {
                    base[axis as usize]
                };

                if !mesh.in_domain(cell.level, q) {
                    // Domain boundary: single owner.
                    let (owner_neg, owner_pos) = if positive {
                        (Some(ci), None)
                    } else {
                        (None, Some(ci))
                    };
                    emit_region(
                        &vertices,
                        axis,
                        origin,
                        span,
                        owner_neg,
                        owner_pos,
                        &mut protos,
                    );
                    continue;
                }
                match mesh.leaf_covering(cell.level, q) {
                    Some(j) if mesh.cells[j].level == cell.level => {
                        // Same-level interior face; generate from the
                        // negative side only.
                        if positive {
                            emit_region(
                                &vertices,
                                axis,
                                origin,
                                span,
                                Some(ci),
                                Some(j),
                                &mut protos,
                            );
                        }
                    }
                    Some(_) => {
                        // Coarser neighbor: the region belongs to the
                        // neighbor's split face; it generates.
                    }
                    None => {
                        // Four finer neighbors: split into child faces
                        // coinciding with their full faces.
                        let half = span / 2;
                        for dv in 0..2i64 {
                            for du in 0..2i64 {
                                let mut child = origin;
                                child[ua] += du * half;
                                child[va] += dv * half;
                                // Fine neighbor index at level + 1.
                                let mut fine = child;
                                if !positive {
                                    fine[axis as usize] -= half;
                                }
                                let fshift = (mesh.max_level - cell.level - 1) as u32;
                                let fpos =
                                    [fine[0] >> fshift, fine[1] >> fshift, fine[2] >> fshift];
                                let fj = mesh
                                    .leaf_at(cell.level + 1, fpos)
                                    .expect("balanced mesh has the four fine neighbors");
                                let (owner_neg, owner_pos) = if positive {
                                    (Some(ci), Some(fj))
                                } else {
                                    (Some(fj), Some(ci))
                                };
                                protos.push(ProtoFace {
                                    axis,
                                    origin: child,
                                    span: half,
                                    owner_neg,
                                    owner_pos,
                                    splits: [false; 4],
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    // Face orders, then the max rule per edge segment across all faces.
    let face_order = |p: &ProtoFace| -> usize {
        let a = p.owner_neg.map(|c| cell_orders[c]).unwrap_or(1);
        let b = p.owner_pos.map(|c| cell_orders[c]).unwrap_or(1);
        shared_face_order(
            if p.owner_neg.is_some() { a } else { b },
            if p.owner_pos.is_some() { b } else { a },
        )
    };
    type SegKey = (u8, [i64; 3], i64);
    let mut segment_orders: HashMap<SegKey, usize> = HashMap::new();
    for proto in &protos {
        let order = face_order(proto);
        for (key, _) in edge_segments(proto) {
            segment_orders
                .entry(key)
                .and_modify(|o| *o = (*o).max(order))
                .or_insert(order);
        }
    }

    // Node creation and final face assembly.
    let mut nodes = NodeTable::new(node_tol);
    let mut faces = Vec::with_capacity(protos.len());
    for proto in &protos {
        let mut edges: [EdgeDescriptor; 4] = std::array::from_fn(|_| EdgeDescriptor {
            segments: Vec::new(),
        });
        let mut local: Vec<NodeId> = Vec::new();
        for (key, bounds) in edge_segments(proto) {
            let (axis, seg_origin, seg_span) = key;
            let order = segment_orders[&key];
            let gll: Vec<Real> = gll_nodes(order)?;
            let mut seg_nodes = Vec::with_capacity(order + 1);
            for (k, &t) in gll.iter().enumerate() {
                let frac = (t + 1.0) / 2.0;
                let key = if k == 0 {
                    NodeKey::Vertex(seg_origin)
                } else if k == order {
                    let mut end = seg_origin;
                    end[axis as usize] += seg_span;
                    NodeKey::Vertex(end)
                } else {
                    NodeKey::EdgeNode {
                        axis,
                        origin: seg_origin,
                        span: seg_span,
                        idx: k as u8,
                    }
                };
                let mut coord = [
                    mesh.origin[0] + seg_origin[0] as Real * finest,
                    mesh.origin[1] + seg_origin[1] as Real * finest,
                    mesh.origin[2] + seg_origin[2] as Real * finest,
                ];
                coord[axis as usize] += frac * seg_span as Real * finest;
                let id = nodes.get_or_insert(key, coord);
                seg_nodes.push(id);
                if !local.contains(&id) {
                    local.push(id);
                }
            }
            let face_edge = which_edge(proto, &key);
            edges[face_edge].segments.push(Segment {
                bounds,
                order,
                nodes: seg_nodes,
            });
        }
        for desc in &edges {
            debug_assert!(!desc.segments.is_empty());
        }
        let corners = face_corners(mesh, proto, finest);
        let mut face = FaceElement {
            axis: proto.axis,
            lat_origin: proto.origin,
            lat_span: proto.span,
            owner_neg: proto.owner_neg,
            owner_pos: proto.owner_pos,
            corners,
            edges,
            pattern: 0,
            order: face_order(proto),
            nodes: local,
        };
        face.pattern = classify_pattern(&face)?;
        faces.push(face);
    }

    let mut cell_faces = vec![Vec::new(); mesh.cells.len()];
    for (fi, face) in faces.iter().enumerate() {
        if let Some(c) = face.owner_neg {
            cell_faces[c].push((fi, true));
        }
        if let Some(c) = face.owner_pos {
            cell_faces[c].push((fi, false));
        }
    }

    Ok(SurfaceMesh {
        faces,
        nodes,
        cell_faces,
        cell_orders,
    })
}

/// Splits a region into its four child faces when all four edges are split
/// (or emits it unchanged otherwise), then records edge split flags.
fn emit_region(
    vertices: &HashSet<[i64; 3]>,
    axis: u8,
    origin: [i64; 3],
    span: i64,
    owner_neg: Option<usize>,
    owner_pos: Option<usize>,
    out: &mut Vec<ProtoFace>,
) {
    let splits = edge_split_flags(vertices, axis, origin, span);
    if splits == [true; 4] {
        let ua = ((axis + 1) % 3) as usize;
        let va = ((axis + 2) % 3) as usize;
        let half = span / 2;
        for dv in 0..2i64 {
            for du in 0..2i64 {
                let mut child = origin;
                child[ua] += du * half;
                child[va] += dv * half;
                let child_splits = edge_split_flags(vertices, axis, child, half);
                debug_assert_eq!(
                    child_splits, [false; 4],
                    "children of split regions are plain"
                );
                out.push(ProtoFace {
                    axis,
                    origin: child,
                    span: half,
                    owner_neg,
                    owner_pos,
                    splits: child_splits,
                });
            }
        }
    } else {
        out.push(ProtoFace {
            axis,
            origin,
            span,
            owner_neg,
            owner_pos,
            splits,
        });
    }
}

/// Split flags in S, E, N, W order: an edge is split iff its midpoint is a
/// leaf corner.
fn edge_split_flags(
    vertices: &HashSet<[i64; 3]>,
    axis: u8,
    origin: [i64; 3],
    span: i64,
) -> [bool; 4] {
    if span < 2 {
        return [false; 4];
    }
    let ua = ((axis + 1) % 3) as usize;
    let va = ((axis + 2) % 3) as usize;
    let half = span / 2;
    let mut mids = [origin; 4];
    // S: v = lo.
    mids[0][ua] += half;
    // E: u = hi.
    mids[1][ua] += span;
    mids[1][va] += half;
    // N: v = hi.
    mids[2][ua] += half;
    mids[2][va] += span;
    // W: u = lo.
    mids[3][va] += half;
    std::array::from_fn(|i| vertices.contains(&mids[i]))
}

/// Geometric segments of a proto-face in edge order S, E, N, W, each edge
/// contributing one or two `(key, parameter bounds)` entries.
fn edge_segments(proto: &ProtoFace) -> Vec<((u8, [i64; 3], i64), (Real, Real))> {
    let ua = ((proto.axis + 1) % 3) as usize;
    let va = ((proto.axis + 2) % 3) as usize;
    let span = proto.span;
    let mut out = Vec::with_capacity(8);
    for e in 0..4 {
        let (dir, mut start) = match e {
            0 => (ua, proto.origin),
            1 => {
                let mut s = proto.origin;
                s[ua] += span;
                (va, s)
            }
            2 => {
                let mut s = proto.origin;
                s[va] += span;
                (ua, s)
            }
            _ => (va, proto.origin),
        };
        if proto.splits[e] {
            let half = span / 2;
            out.push(((dir as u8, start, half), (-1.0, 0.0)));
            start[dir] += half;
            out.push(((dir as u8, start, half), (0.0, 1.0)));
        } else {
            out.push(((dir as u8, start, span), (-1.0, 1.0)));
        }
    }
    out
}

/// Maps a segment key back to the face edge index it belongs to.
fn which_edge(proto: &ProtoFace, key: &(u8, [i64; 3], i64)) -> usize {
    let ua = ((proto.axis + 1) % 3) as usize;
    let va = ((proto.axis + 2) % 3) as usize;
    let (dir, origin, _) = key;
    if *dir as usize == ua {
        if origin[va] == proto.origin[va] {
            0
        } else {
            2
        }
    } else if origin[ua] == proto.origin[ua] {
        3
    } else {
        1
    }
}

fn face_corners(mesh: &OctreeMesh, proto: &ProtoFace, finest: Real) -> [[Real; 3]; 4] {
    let ua = ((proto.axis + 1) % 3) as usize;
    let va = ((proto.axis + 2) % 3) as usize;
    let to_phys = |lat: [i64; 3]| -> [Real; 3] {
        [
            mesh.origin[0] + lat[0] as Real * finest,
            mesh.origin[1] + lat[1] as Real * finest,
            mesh.origin[2] + lat[2] as Real * finest,
        ]
    };
    let mut c = [[0.0; 3]; 4];
    for (i, (du, dv)) in [(0, 0), (1, 0), (1, 1), (0, 1)].iter().enumerate() {
        let mut lat = proto.origin;
        lat[ua] += du * proto.span;
        lat[va] += dv * proto.span;
        c[i] = to_phys(lat);
    }
    c
}
