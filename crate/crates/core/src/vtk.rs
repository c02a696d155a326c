//! VTK legacy ASCII export of volume meshes, surface meshes, and nodal
//! result fields. Files are written atomically (temp + rename) so partial
//! outputs never land under the final name.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use crate::face_mesh::SurfaceMesh;
use crate::octree::OctreeMesh;
use crate::{Error, Real, Result};

/// Atomic text write shared by all exporters (and the CLI's CSV dumps).
pub fn write_text_atomic(path: impl AsRef<Path>, content: &str) -> Result<()> {
    write_atomic(path.as_ref(), content)
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut tmp = tempfile_path(path);
    let mut file =
        std::fs::File::create(&tmp).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    file.write_all(content.as_bytes())
        .map_err(|e| Error::io(tmp.display().to_string(), e))?;
    file.sync_all().ok();
    drop(file);
    if std::fs::rename(&tmp, path).is_err() {
        // Retry once with a fresh temp name (e.g. cross-device quirks).
        tmp = tempfile_path(path);
        std::fs::write(&tmp, content).map_err(|e| Error::io(tmp.display().to_string(), e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn tempfile_path(path: &Path) -> std::path::PathBuf {
    let mut name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out.vtk".into());
    name.push_str(".tmp");
    path.with_file_name(name)
}

fn header(title: &str) -> String {
    format!("# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
}

/// Volume export: one hexahedron per leaf cell with `level` and
/// `material` cell data.
pub fn write_mesh_vtk(path: impl AsRef<Path>, mesh: &OctreeMesh) -> Result<()> {
    let mut s = header("octree mesh");
    let n_cells = mesh.cells.len();
    s.push_str(&format!("POINTS {} double\n", 8 * n_cells));
    for cell in &mesh.cells {
        let (lo, hi) = mesh.cell_box(cell);
        // VTK hexahedron ordering: bottom loop, then top loop.
        for (x, y, z) in [
            (lo[0], lo[1], lo[2]),
            (hi[0], lo[1], lo[2]),
            (hi[0], hi[1], lo[2]),
            (lo[0], hi[1], lo[2]),
            (lo[0], lo[1], hi[2]),
            (hi[0], lo[1], hi[2]),
            (hi[0], hi[1], hi[2]),
            (lo[0], hi[1], hi[2]),
        ] {
            s.push_str(&format!("{x:.9} {y:.9} {z:.9}\n"));
        }
    }
    s.push_str(&format!("CELLS {} {}\n", n_cells, 9 * n_cells));
    for i in 0..n_cells {
        let base = 8 * i;
        s.push_str(&format!(
            "8 {} {} {} {} {} {} {} {}\n",
            base,
            base + 1,
            base + 2,
            base + 3,
            base + 4,
            base + 5,
            base + 6,
            base + 7
        ));
    }
    s.push_str(&format!("CELL_TYPES {n_cells}\n"));
    for _ in 0..n_cells {
        s.push_str("12\n");
    }
    s.push_str(&format!("CELL_DATA {n_cells}\n"));
    s.push_str("SCALARS level int 1\nLOOKUP_TABLE default\n");
    for cell in &mesh.cells {
        s.push_str(&format!("{}\n", cell.level));
    }
    s.push_str("SCALARS material int 1\nLOOKUP_TABLE default\n");
    for cell in &mesh.cells {
        s.push_str(&format!("{}\n", cell.material));
    }
    write_atomic(path.as_ref(), &s)
}

/// Surface export: one quad per face element (corner geometry) with
/// `pattern` and `order` cell data, plus optional nodal vector fields over
/// all global nodes.
pub fn write_surface_vtk(
    path: impl AsRef<Path>,
    surface: &SurfaceMesh,
    point_vectors: &[(&str, &DVector<Real>)],
) -> Result<()> {
    let mut s = header("subdomain surfaces");
    let coords = surface.nodes.coords();
    s.push_str(&format!("POINTS {} double\n", coords.len()));
    for c in coords {
        s.push_str(&format!("{:.9} {:.9} {:.9}\n", c[0], c[1], c[2]));
    }
    let n_faces = surface.faces.len();
    s.push_str(&format!("CELLS {} {}\n", n_faces, 5 * n_faces));
    for face in &surface.faces {
        // Corner ids in CCW order: S start, S end, N end, N start.
        let south = &face.edges[0].segments;
        let north = &face.edges[2].segments;
        let c00 = south[0].nodes[0];
        let c10 = *south.last().unwrap().nodes.last().unwrap();
        let c01 = north[0].nodes[0];
        let c11 = *north.last().unwrap().nodes.last().unwrap();
        s.push_str(&format!("4 {c00} {c10} {c11} {c01}\n"));
    }
    s.push_str(&format!("CELL_TYPES {n_faces}\n"));
    for _ in 0..n_faces {
        s.push_str("9\n");
    }
    s.push_str(&format!("CELL_DATA {n_faces}\n"));
    s.push_str("SCALARS pattern int 1\nLOOKUP_TABLE default\n");
    for face in &surface.faces {
        s.push_str(&format!("{}\n", face.pattern));
    }
    s.push_str("SCALARS order int 1\nLOOKUP_TABLE default\n");
    for face in &surface.faces {
        s.push_str(&format!("{}\n", face.order));
    }
    if !point_vectors.is_empty() {
        s.push_str(&format!("POINT_DATA {}\n", coords.len()));
        for (name, data) in point_vectors {
            assert_eq!(data.len(), 3 * coords.len(), "vector field size");
            s.push_str(&format!("VECTORS {name} double\n"));
            for i in 0..coords.len() {
                s.push_str(&format!(
                    "{:.12e} {:.12e} {:.12e}\n",
                    data[3 * i],
                    data[3 * i + 1],
                    data[3 * i + 2]
                ));
            }
        }
    }
    write_atomic(path.as_ref(), &s)
}

/// CSV convergence table `(h, n_dof, error, rate)`.
pub fn write_convergence_csv(
    path: impl AsRef<Path>,
    rows: &[crate::pipeline::PatchRow],
) -> Result<()> {
    let mut s = String::from("h,n_dof,error,rate\n");
    for r in rows {
        match r.rate {
            Some(rate) => s.push_str(&format!(
                "{},{},{:.6e},{:.4}\n",
                r.h, r.n_dof, r.error, rate
            )),
            None => s.push_str(&format!("{},{},{:.6e},\n", r.h, r.n_dof, r.error)),
        }
    }
    write_atomic(path.as_ref(), &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face_mesh::{build_faces, OrderMap};

    #[test]
    fn mesh_vtk_structure() {
        let mesh = OctreeMesh::cube_corner_refined(8.0, 4.0, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.vtk");
        write_mesh_vtk(&path, &mesh).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains(&format!("CELL_TYPES {}", mesh.cells.len())));
        assert!(text.contains("SCALARS level int 1"));
        assert!(text.contains("SCALARS material int 1"));
        // No temp file left behind.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn surface_vtk_with_displacement() {
        let mesh = OctreeMesh::uniform(1.0, [0.0; 3], [1, 1, 1], 0, 1).unwrap();
        let surface = build_faces(&mesh, &OrderMap::Uniform(2)).unwrap();
        let u = DVector::from_element(3 * surface.nodes.len(), 0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("surf.vtk");
        write_surface_vtk(&path, &surface, &[("displacement", &u)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("SCALARS pattern int 1"));
        assert!(text.contains("VECTORS displacement double"));
        assert!(text.contains(&format!("POINT_DATA {}", surface.nodes.len())));
    }

    #[test]
    fn csv_table_format() {
        let rows = vec![
            crate::pipeline::PatchRow {
                h: 2.0,
                n_dof: 100,
                error: 1e-3,
                rate: None,
            },
            crate::pipeline::PatchRow {
                h: 1.0,
                n_dof: 500,
                error: 2.5e-4,
                rate: Some(2.0),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conv.csv");
        write_convergence_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("h,n_dof,error,rate\n"));
        assert!(text.contains("2,100,1.000000e-3,"));
    }
}
