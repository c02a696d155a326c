//! Command implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use sbfem::face_mesh::FaceElement;
use sbfem::pipeline::{run_patch_ladder, Model};
use sbfem::reference::PatchKind;
use sbfem::shape::FaceShape;
use sbfem::system::GlobalSystem;
use sbfem::vtk;
use sbfem::Real;

use crate::config::{AnalysisSpec, DirichletSpec, PatchTolerances, RunConfig};

pub struct Context2 {
    pub out_dir: PathBuf,
    pub verbose: bool,
}

impl Context2 {
    fn say(&self, msg: impl AsRef<str>) {
        println!("{}", msg.as_ref());
    }

    fn detail(&self, msg: impl AsRef<str>) {
        if self.verbose {
            println!("{}", msg.as_ref());
        }
    }
}

fn build_model(config: &RunConfig) -> anyhow::Result<Model> {
    let (mesh, palette) = config.build_mesh()?;
    mesh.require_balanced()
        .context("mesh pipeline balance assertion")?;
    let model = Model::new(mesh, &config.order_map(), palette)?;
    Ok(model)
}

pub fn cmd_mesh(config: &RunConfig, ctx: &Context2) -> anyhow::Result<()> {
    let model = build_model(config)?;
    let hist = model.surface.pattern_histogram();
    ctx.say(format!(
        "cells: {} (levels {}..{}), faces: {}, nodes: {}, congruence classes: {}",
        model.mesh.cells.len(),
        model.mesh.min_level,
        model.mesh.max_level,
        model.surface.faces.len(),
        model.surface.nodes.len(),
        model.congruence_classes(),
    ));
    ctx.say("pattern histogram:");
    for (id, count) in hist.iter().enumerate() {
        ctx.say(format!("  pattern {id}: {count}"));
    }
    let mesh_path = ctx.out_dir.join("mesh.vtk");
    vtk::write_mesh_vtk(&mesh_path, &model.mesh)?;
    let surf_path = ctx.out_dir.join("surface.vtk");
    vtk::write_surface_vtk(&surf_path, &model.surface, &[])?;
    ctx.say(format!(
        "wrote {} and {}",
        mesh_path.display(),
        surf_path.display()
    ));
    Ok(())
}

fn apply_dirichlet_specs(system: &mut GlobalSystem, specs: &[DirichletSpec]) -> anyhow::Result<()> {
    // Bounding box of the node set defines the named face regions.
    let mut lo = [Real::INFINITY; 3];
    let mut hi = [Real::NEG_INFINITY; 3];
    for c in &system.coords {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let tol = 1e-9 * (0..3).map(|k| hi[k] - lo[k]).fold(1.0, Real::max);
    for spec in specs {
        let (axis, at) = match spec.region.as_str() {
            "x_min" => (0, lo[0]),
            "x_max" => (0, hi[0]),
            "y_min" => (1, lo[1]),
            "y_max" => (1, hi[1]),
            "z_min" => (2, lo[2]),
            "z_max" => (2, hi[2]),
            other => bail!("unknown Dirichlet region `{other}`"),
        };
        let value = spec.value;
        system.apply_dirichlet(
            &spec.region,
            move |x| (x[axis] - at).abs() <= tol,
            move |_| value,
        )?;
    }
    Ok(())
}

pub fn cmd_static(config: &RunConfig, ctx: &Context2) -> anyhow::Result<()> {
    let AnalysisSpec::Static { dirichlet, gravity } = &config.analysis else {
        bail!("config analysis section is not `static`");
    };
    if dirichlet.is_empty() {
        bail!("static analysis needs at least one Dirichlet region (missing BC spec)");
    }
    let model = build_model(config)?;
    ctx.detail(format!(
        "meshed {} cells / {} DOFs",
        model.mesh.cells.len(),
        model.surface.dof_count()
    ));
    let mut system = model.build_system()?;
    apply_dirichlet_specs(&mut system, dirichlet)?;
    if let Some(g) = gravity {
        system.body_load(*g);
    }
    let report = system.solve_static()?;

    // Conformity audit across shared faces: interpolated traces from both
    // owners coincide by construction (shared DOFs), so verify the shared
    // node sets instead: every interior face carries two owners.
    let interior = model
        .surface
        .faces
        .iter()
        .filter(|f| f.owner_neg.is_some() && f.owner_pos.is_some())
        .count();
    ctx.say(format!(
        "solved: {} free DOFs, residual {:.3e}, {} interior faces shared",
        report.free_dofs, report.residual, interior
    ));
    let total_load: Real = (0..system.n_dofs / 3).map(|i| system.load[3 * i + 2]).sum();
    let total_reaction: Real = (0..system.n_dofs / 3)
        .map(|i| report.reactions[3 * i + 2])
        .sum();
    ctx.say(format!(
        "z force balance: applied {total_load:.6e}, reactions {total_reaction:.6e}"
    ));
    let path = ctx.out_dir.join("displacement.vtk");
    vtk::write_surface_vtk(
        &path,
        &model.surface,
        &[("displacement", &report.displacement)],
    )?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

pub fn cmd_modal(config: &RunConfig, ctx: &Context2) -> anyhow::Result<()> {
    let AnalysisSpec::Modal { modes } = &config.analysis else {
        bail!("config analysis section is not `modal`");
    };
    let model = build_model(config)?;
    let system = model.build_system()?;
    let report = system.solve_modal(*modes)?;
    ctx.say(format!(
        "modal solve: {} free DOFs in {:.2}s",
        report.free_dofs, report.solve_seconds
    ));
    ctx.say("mode     frequency");
    for (i, f) in report.frequencies.iter().enumerate() {
        ctx.say(format!("{:>4}  {f:.12}", i + 1));
    }
    let fields: Vec<(String, sbfem::nalgebra::DVector<Real>)> = (0..*modes)
        .map(|j| {
            (
                format!("mode_{}", j + 1),
                report.modes.column(j).clone_owned(),
            )
        })
        .collect();
    let refs: Vec<(&str, &sbfem::nalgebra::DVector<Real>)> =
        fields.iter().map(|(n, v)| (n.as_str(), v)).collect();
    let path = ctx.out_dir.join("modes.vtk");
    vtk::write_surface_vtk(&path, &model.surface, &refs)?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

/// Patch-test gates; `None` entries mean "not checked for this order".
struct PatchGates {
    exact_error: Real,
    exact_orders: Vec<usize>,
    rate_bands: Vec<(usize, (Real, Real))>,
}

fn default_gates(kind: PatchKind) -> PatchGates {
    match kind {
        PatchKind::Uniaxial => PatchGates {
            exact_error: 1e-10,
            exact_orders: vec![1, 2, 3],
            rate_bands: vec![],
        },
        PatchKind::Bending => PatchGates {
            exact_error: 1e-9,
            exact_orders: vec![2, 3],
            rate_bands: vec![(1, (1.8, 2.8))],
        },
        PatchKind::Cantilever => PatchGates {
            exact_error: 1e-8,
            exact_orders: vec![3],
            rate_bands: vec![(1, (1.3, 2.1)), (2, (2.7, 3.9))],
        },
    }
}

pub fn cmd_patchtest(config: &RunConfig, ctx: &Context2) -> anyhow::Result<bool> {
    let AnalysisSpec::Patchtest {
        case,
        orders,
        h_levels,
        tolerances,
    } = &config.analysis
    else {
        bail!("config analysis section is not `patchtest`");
    };
    let kind = PatchKind::parse(case)?;
    let mut gates = default_gates(kind);
    if let Some(PatchTolerances {
        exact_error,
        rate_bands,
    }) = tolerances
    {
        gates.exact_error = *exact_error;
        if !rate_bands.is_empty() {
            gates.rate_bands = rate_bands
                .iter()
                .map(|(k, band)| (k.parse::<usize>().unwrap_or(0), *band))
                .collect();
        }
    }

    let mut all_pass = true;
    for &p in orders {
        let rows = run_patch_ladder(kind, p, h_levels)?;
        let csv = ctx.out_dir.join(format!("{}_p{}.csv", kind.name(), p));
        vtk::write_convergence_csv(&csv, &rows)?;
        for r in &rows {
            ctx.say(format!(
                "{} p={p} h={:<5} N={:<7} error={:.3e} rate={}",
                kind.name(),
                r.h,
                r.n_dof,
                r.error,
                r.rate.map_or("-".into(), |v| format!("{v:.2}")),
            ));
        }
        if gates.exact_orders.contains(&p) {
            let worst = rows.iter().map(|r| r.error).fold(0.0, Real::max);
            let ok = worst <= gates.exact_error;
            all_pass &= ok;
            ctx.say(format!(
                "  p={p}: max error {worst:.3e} <= {:.0e}: {}",
                gates.exact_error,
                if ok { "PASS" } else { "FAIL" }
            ));
        }
        if let Some(&(_, (lo, hi))) = gates.rate_bands.iter().find(|(k, _)| *k == p) {
            let rate = rows.last().and_then(|r| r.rate);
            let ok = rate.map(|r| r >= lo && r <= hi).unwrap_or(false);
            all_pass &= ok;
            ctx.say(format!(
                "  p={p}: final rate {} in [{lo}, {hi}]: {}",
                rate.map_or("-".into(), |v| format!("{v:.2}")),
                if ok { "PASS" } else { "FAIL" }
            ));
        }
    }
    ctx.say(format!(
        "patch test `{}`: {}",
        kind.name(),
        if all_pass { "PASS" } else { "FAIL" }
    ));
    Ok(all_pass)
}

pub fn cmd_info(
    config: &RunConfig,
    ctx: &Context2,
    shape_dump: Option<(u8, usize)>,
) -> anyhow::Result<()> {
    if let Some((pattern, order)) = shape_dump {
        return dump_shape(pattern, order, &ctx.out_dir);
    }
    let model = build_model(config)?;
    ctx.say(format!(
        "model: {} cells, levels {}..{}, root size {}",
        model.mesh.cells.len(),
        model.mesh.min_level,
        model.mesh.max_level,
        model.mesh.root_size
    ));
    ctx.say(format!(
        "surface: {} faces, {} nodes, {} DOFs, patterns {:?}",
        model.surface.faces.len(),
        model.surface.nodes.len(),
        model.surface.dof_count(),
        model.surface.pattern_histogram()
    ));
    ctx.say(format!(
        "subdomain congruence classes: {}",
        model.congruence_classes()
    ));
    Ok(())
}

/// Debug aid: shape-function values of a synthetic pattern face on a
/// regular lattice, as CSV for plotting.
fn dump_shape(pattern: u8, order: usize, out_dir: &Path) -> anyhow::Result<()> {
    let splits = match pattern {
        0 => [false, false, false, false],
        1 => [true, false, false, false],
        2 => [true, true, false, false],
        3 => [true, false, true, false],
        4 => [true, true, true, false],
        5 => [true, true, true, true],
        other => bail!("pattern {other} outside 0..=5"),
    };
    if !(1..=3).contains(&order) {
        bail!("order {order} outside 1..=3");
    }
    let face = FaceElement::synthetic(splits, [order; 4]);
    let shape = FaceShape::new(&face)?;
    let n = 41;
    let mut csv = String::from("eta,zeta");
    for i in 0..shape.node_count() {
        csv.push_str(&format!(",N{i}"));
    }
    csv.push('\n');
    for a in 0..n {
        for b in 0..n {
            let eta = -1.0 + 2.0 * a as Real / (n - 1) as Real;
            let zeta = -1.0 + 2.0 * b as Real / (n - 1) as Real;
            let ev = shape.eval(eta, zeta)?;
            csv.push_str(&format!("{eta:.6},{zeta:.6}"));
            for v in &ev.values {
                csv.push_str(&format!(",{v:.12e}"));
            }
            csv.push('\n');
        }
    }
    let path = out_dir.join(format!("shape_p{pattern}_o{order}.csv"));
    vtk::write_text_atomic(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}
