//! End-to-end model runs: mesh + surface + materials to subdomain
//! matrices (with congruence caching), global systems, and the benchmark
//! drivers used by the CLI and the acceptance suite.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::face_mesh::{build_faces, NodeId, OrderMap, SurfaceMesh};
use crate::material::MaterialParams;
use crate::modes::{process_operator, SubdomainMatrices};
use crate::octree::OctreeMesh;
use crate::reference::{PatchCase, PatchKind};
use crate::subdomain::{coefficient_matrices, subdomain_node_order};
use crate::system::{assemble, GlobalSystem, ModalReport, SubdomainContribution};
use crate::voxel::VoxelGrid;
use crate::{Error, Real, Result};

/// Meshed model ready for subdomain processing.
pub struct Model {
    pub mesh: OctreeMesh,
    pub surface: SurfaceMesh,
    pub palette: BTreeMap<u8, MaterialParams>,
}

/// One cell's processed matrices mapped onto its global nodes. Matrices
/// are shared between congruent cells.
pub struct ProcessedSubdomain {
    pub cell: usize,
    pub matrices: Arc<SubdomainMatrices>,
    pub nodes: Vec<NodeId>,
}

impl Model {
    /// Meshes a balanced octree with the given order assignment.
    pub fn new(
        mesh: OctreeMesh,
        orders: &OrderMap,
        palette: BTreeMap<u8, MaterialParams>,
    ) -> Result<Self> {
        for cell in &mesh.cells {
            if !palette.contains_key(&cell.material) {
                return Err(Error::UnknownMaterial {
                    code: cell.material,
                });
            }
        }
        let surface = build_faces(&mesh, orders)?;
        Ok(Model {
            mesh,
            surface,
            palette,
        })
    }

    /// Decomposes a voxel grid, balances it, and meshes the surface.
    pub fn from_grid(
        grid: &VoxelGrid,
        threshold: u8,
        min_size: Real,
        max_size: Real,
        orders: &OrderMap,
    ) -> Result<Self> {
        let mesh = OctreeMesh::decompose(grid, threshold, min_size, max_size)?;
        let mesh = mesh.balance_with(Some(grid));
        Model::new(mesh, orders, grid.palette.clone())
    }

    fn material_of(&self, cell: usize) -> MaterialParams {
        self.palette[&self.mesh.cells[cell].material]
    }

    /// Content signature of one subdomain: relative face layout, edge
    /// segment orders, size, and material. Congruent cells share it.
    fn subdomain_signature(&self, cell_id: usize) -> Vec<u8> {
        let cell = &self.mesh.cells[cell_id];
        let size = self.mesh.cell_size(cell.level);
        let center = self.mesh.cell_center(cell);
        let mat = self.material_of(cell_id);
        let mut sig = Vec::with_capacity(256);
        sig.extend_from_slice(&size.to_bits().to_le_bytes());
        sig.extend_from_slice(&mat.young_modulus.to_bits().to_le_bytes());
        sig.extend_from_slice(&mat.poisson_ratio.to_bits().to_le_bytes());
        sig.extend_from_slice(&mat.mass_density.to_bits().to_le_bytes());

        let quant = |v: Real| -> i64 { ((v / size) * (1u64 << 40) as Real).round() as i64 };
        let mut faces: Vec<(u8, [i64; 3], bool, Vec<u8>)> = Vec::new();
        for &(fi, is_neg) in &self.surface.cell_faces[cell_id] {
            let face = &self.surface.faces[fi];
            let rel: [i64; 3] = std::array::from_fn(|k| quant(face.corners[0][k] - center[k]));
            let mut edge_bytes = Vec::new();
            edge_bytes.extend_from_slice(&quant(face.area().sqrt()).to_le_bytes());
            for desc in &face.edges {
                edge_bytes.push(desc.segments.len() as u8);
                for seg in &desc.segments {
                    edge_bytes.push(seg.order as u8);
                }
            }
            faces.push((face.axis, rel, is_neg, edge_bytes));
        }
        faces.sort();
        for (axis, rel, is_neg, bytes) in faces {
            sig.push(axis);
            sig.push(is_neg as u8);
            for r in rel {
                sig.extend_from_slice(&r.to_le_bytes());
            }
            sig.extend_from_slice(&bytes);
        }
        sig
    }

    /// Computes stiffness and mass for every subdomain, in parallel over
    /// the distinct congruence classes.
    pub fn process_subdomains(&self) -> Result<Vec<ProcessedSubdomain>> {
        let n_cells = self.mesh.cells.len();
        let mut classes: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
        for cell in 0..n_cells {
            classes
                .entry(self.subdomain_signature(cell))
                .or_default()
                .push(cell);
        }
        let class_list: Vec<(&Vec<u8>, &Vec<usize>)> = classes.iter().collect();
        let computed: Vec<Result<Arc<SubdomainMatrices>>> = class_list
            .par_iter()
            .map(|(_, cells)| {
                let representative = cells[0];
                let op = coefficient_matrices(
                    &self.mesh,
                    &self.surface,
                    representative,
                    self.material_of(representative),
                )?;
                Ok(Arc::new(process_operator(&op)?))
            })
            .collect();

        let mut out: Vec<Option<ProcessedSubdomain>> = (0..n_cells).map(|_| None).collect();
        for ((_, cells), result) in class_list.iter().zip(computed) {
            let matrices = result?;
            for &cell in cells.iter() {
                let nodes = subdomain_node_order(&self.mesh, &self.surface, cell);
                debug_assert_eq!(3 * nodes.len(), matrices.k.nrows());
                out[cell] = Some(ProcessedSubdomain {
                    cell,
                    matrices: Arc::clone(&matrices),
                    nodes,
                });
            }
        }
        Ok(out
            .into_iter()
            .map(|o| o.expect("all cells processed"))
            .collect())
    }

    /// Assembles the global system from processed subdomains.
    pub fn global_system(&self, processed: &[ProcessedSubdomain]) -> Result<GlobalSystem> {
        let contributions: Vec<SubdomainContribution<'_>> = processed
            .iter()
            .map(|p| SubdomainContribution {
                matrices: &p.matrices,
                nodes: &p.nodes,
                rank: p.cell as u32,
            })
            .collect();
        assemble(&contributions, self.surface.nodes.coords().to_vec())
    }

    /// Convenience: process + assemble.
    pub fn build_system(&self) -> Result<GlobalSystem> {
        let processed = self.process_subdomains()?;
        self.global_system(&processed)
    }

    /// Number of distinct subdomain congruence classes (cache statistic).
    pub fn congruence_classes(&self) -> usize {
        let mut classes = std::collections::BTreeSet::new();
        for cell in 0..self.mesh.cells.len() {
            classes.insert(self.subdomain_signature(cell));
        }
        classes.len()
    }
}

/// One row of a patch-test convergence table.
#[derive(Debug, Clone)]
pub struct PatchRow {
    pub h: Real,
    pub n_dof: usize,
    pub error: Real,
    /// Rate from this and the previous row, `log(e1/e2) / log(h1/h2)`.
    pub rate: Option<Real>,
}

/// Runs one patch case at mesh size `h` and order `p`; the reference field
/// must pass its equilibrium oracle first.
pub fn run_patch_case(kind: PatchKind, p: usize, h: Real) -> Result<(PatchRow, GlobalSystem)> {
    let case = PatchCase::standard(kind);
    let residual = case.equilibrium_residual();
    if residual > 1e-6 {
        return Err(Error::numerical(
            "patch reference",
            format!("equilibrium residual {residual:.3e} of `{}`", kind.name()),
        ));
    }
    let mesh = OctreeMesh::two_region_cuboid(case.a, case.b, case.length, h, 1)?;
    let mut palette = BTreeMap::new();
    palette.insert(1u8, case.material);
    let model = Model::new(mesh, &OrderMap::Uniform(p), palette)?;
    let mut system = model.build_system()?;
    let select = case.dirichlet_selector();
    system.apply_dirichlet("end faces", select, |x| case.displacement(x))?;
    let report = system.solve_static()?;
    let error = crate::system::l2_error(&report.displacement, &system.coords, |x| {
        case.displacement(x)
    })?;
    Ok((
        PatchRow {
            h,
            n_dof: system.n_dofs,
            error,
            rate: None,
        },
        system,
    ))
}

/// Patch-test ladder over decreasing `h`, with convergence rates from
/// consecutive rows.
pub fn run_patch_ladder(kind: PatchKind, p: usize, hs: &[Real]) -> Result<Vec<PatchRow>> {
    let mut rows: Vec<PatchRow> = Vec::with_capacity(hs.len());
    for &h in hs {
        let (mut row, _) = run_patch_case(kind, p, h)?;
        if let Some(prev) = rows.last() {
            row.rate = Some((prev.error / row.error).ln() / (prev.h / row.h).ln());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The free-free modal benchmark: cube of width 8, E = 1, nu = 0, rho = 1,
/// corner subdomain split into eight.
pub fn modal_cube(h: Real, p: usize, n_modes: usize) -> Result<(ModalReport, GlobalSystem)> {
    let mesh = OctreeMesh::cube_corner_refined(8.0, h, 1)?;
    let mut palette = BTreeMap::new();
    palette.insert(
        1u8,
        MaterialParams {
            young_modulus: 1.0,
            poisson_ratio: 0.0,
            mass_density: 1.0,
        },
    );
    let model = Model::new(mesh, &OrderMap::Uniform(p), palette)?;
    let system = model.build_system()?;
    let report = system.solve_modal(n_modes)?;
    Ok((report, system))
}
