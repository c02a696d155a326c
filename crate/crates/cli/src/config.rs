//! Run configuration: a single JSON file with full schema validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use sbfem::face_mesh::OrderMap;
use sbfem::material::MaterialParams;
use sbfem::octree::OctreeMesh;
use sbfem::voxel::{synth_model, SynthModel, VoxelGrid};
use sbfem::Real;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub octree: Option<OctreeParams>,
    pub orders: OrderSpec,
    #[serde(default)]
    pub palette: Option<BTreeMap<String, MaterialParams>>,
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Voxel grid from a JSON header + raw payload.
    Voxel { header: PathBuf },
    /// Built-in synthetic voxel model.
    Synth {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, Real>,
        #[serde(default = "default_spacing")]
        spacing: Real,
    },
    /// Benchmark mesh: uniform cube with one corner subdomain split.
    CubeCornerRefined { width: Real, h: Real },
    /// Benchmark mesh: two-region cuboid with a transition interface.
    TwoRegionCuboid {
        a: Real,
        b: Real,
        length: Real,
        h: Real,
    },
}

fn default_spacing() -> Real {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OctreeParams {
    pub threshold: u8,
    pub min_size: Real,
    pub max_size: Real,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderSpec {
    Uniform(usize),
    PerMaterial(BTreeMap<String, usize>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Static {
        #[serde(default)]
        dirichlet: Vec<DirichletSpec>,
        #[serde(default)]
        gravity: Option<[Real; 3]>,
    },
    Modal {
        modes: usize,
    },
    Patchtest {
        case: String,
        #[serde(default = "default_orders")]
        orders: Vec<usize>,
        #[serde(default = "default_h_levels")]
        h_levels: Vec<Real>,
        #[serde(default)]
        tolerances: Option<PatchTolerances>,
    },
    /// Mesh generation / statistics only.
    Mesh {},
}

fn default_orders() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_h_levels() -> Vec<Real> {
    vec![2.0, 1.0, 0.5]
}

/// Pass/fail gates of the patch-test command; the defaults pin the
/// benchmark tolerances.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchTolerances {
    /// Max relative L2 error where the field lies in the trial space.
    pub exact_error: Real,
    /// Convergence-rate band `[lo, hi]` for orders below the field degree,
    /// keyed by order.
    #[serde(default)]
    pub rate_bands: BTreeMap<String, (Real, Real)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    /// Face of the bounding box: "x_min", "x_max", ..., "z_max".
    pub region: String,
    pub value: [Real; 3],
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match &self.orders {
            OrderSpec::Uniform(p) => {
                if !(1..=3).contains(p) {
                    bail!("order {p} outside 1..=3");
                }
            }
            OrderSpec::PerMaterial(map) => {
                for (code, p) in map {
                    code.parse::<u8>()
                        .with_context(|| format!("order key `{code}` is not a material code"))?;
                    if !(1..=3).contains(p) {
                        bail!("order {p} for material {code} outside 1..=3");
                    }
                }
            }
        }
        if let Some(palette) = &self.palette {
            for (code, mat) in palette {
                code.parse::<u8>()
                    .with_context(|| format!("palette key `{code}`"))?;
                mat.validate()?;
            }
        }
        match &self.analysis {
            AnalysisSpec::Modal { modes } => {
                if *modes == 0 {
                    bail!("modal analysis requested with 0 modes");
                }
            }
            AnalysisSpec::Patchtest {
                case,
                orders,
                h_levels,
                ..
            } => {
                sbfem::reference::PatchKind::parse(case)?;
                if orders.iter().any(|p| !(1..=3).contains(p)) {
                    bail!("patch-test orders must lie in 1..=3");
                }
                if h_levels.is_empty() {
                    bail!("patch test needs at least one h level");
                }
            }
            AnalysisSpec::Static { .. } | AnalysisSpec::Mesh {} => {}
        }
        if matches!(
            (&self.model, &self.octree),
            (ModelSpec::Voxel { .. } | ModelSpec::Synth { .. }, None)
        ) {
            bail!("voxel-based models need an `octree` section (threshold, min_size, max_size)");
        }
        Ok(())
    }

    pub fn order_map(&self) -> OrderMap {
        match &self.orders {
            OrderSpec::Uniform(p) => OrderMap::Uniform(*p),
            OrderSpec::PerMaterial(map) => OrderMap::PerMaterial(
                map.iter()
                    .map(|(code, p)| (code.parse::<u8>().expect("validated"), *p))
                    .collect(),
            ),
        }
    }

    pub fn palette_override(&self) -> Option<BTreeMap<u8, MaterialParams>> {
        self.palette.as_ref().map(|p| {
            p.iter()
                .map(|(code, mat)| (code.parse::<u8>().expect("validated"), *mat))
                .collect()
        })
    }

    /// Builds the octree mesh and its palette from the model section.
    pub fn build_mesh(&self) -> anyhow::Result<(OctreeMesh, BTreeMap<u8, MaterialParams>)> {
        match &self.model {
            ModelSpec::Voxel { header } => {
                let mut grid = VoxelGrid::load(header)?;
                if let Some(palette) = self.palette_override() {
                    grid.palette = palette;
                    grid.validate()?;
                }
                let oct = self.octree.as_ref().expect("validated");
                let mesh = OctreeMesh::decompose(&grid, oct.threshold, oct.min_size, oct.max_size)?;
                Ok((mesh.balance_with(Some(&grid)), grid.palette))
            }
            ModelSpec::Synth {
                name,
                params,
                spacing,
            } => {
                let model = SynthModel::from_name_params(name, params)?;
                let grid = synth_model(&model, *spacing, self.palette_override())?;
                let oct = self.octree.as_ref().expect("validated");
                let mesh = OctreeMesh::decompose(&grid, oct.threshold, oct.min_size, oct.max_size)?;
                Ok((mesh.balance_with(Some(&grid)), grid.palette))
            }
            ModelSpec::CubeCornerRefined { width, h } => {
                let mesh = OctreeMesh::cube_corner_refined(*width, *h, 1)?;
                Ok((mesh, self.default_palette()))
            }
            ModelSpec::TwoRegionCuboid { a, b, length, h } => {
                let mesh = OctreeMesh::two_region_cuboid(*a, *b, *length, *h, 1)?;
                Ok((mesh, self.default_palette()))
            }
        }
    }

    fn default_palette(&self) -> BTreeMap<u8, MaterialParams> {
        self.palette_override().unwrap_or_else(|| {
            let mut p = BTreeMap::new();
            p.insert(
                1,
                MaterialParams {
                    young_modulus: 1.0,
                    poisson_ratio: 0.0,
                    mass_density: 1.0,
                },
            );
            p
        })
    }
}
