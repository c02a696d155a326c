//! Voxel-based geometry: loading, saving, and synthetic model generation.
//!
//! A grid is stored as one unsigned byte per voxel in x-fastest order plus a
//! palette mapping codes to material parameters. On disk it is a small JSON
//! header next to a raw payload file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::material::MaterialParams;
use crate::{Error, Real, Result};

/// Regular 3D lattice of material codes with a palette.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    /// Voxel counts `(nx, ny, nz)`.
    pub dims: (usize, usize, usize),
    /// Physical edge length of one voxel.
    pub spacing: Real,
    /// Physical coordinates of the corner of voxel `(0, 0, 0)`.
    pub origin: [Real; 3],
    /// One code per voxel, x-fastest: `idx = x + nx * (y + ny * z)`.
    pub data: Vec<u8>,
    /// Material assignment per code.
    pub palette: BTreeMap<u8, MaterialParams>,
}

impl VoxelGrid {
    /// Builds a grid and checks all invariants.
    pub fn new(
        dims: (usize, usize, usize),
        spacing: Real,
        origin: [Real; 3],
        data: Vec<u8>,
        palette: BTreeMap<u8, MaterialParams>,
    ) -> Result<Self> {
        let grid = VoxelGrid {
            dims,
            spacing,
            origin,
            data,
            palette,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Invariants: positive dims and spacing, payload length, palette cover.
    pub fn validate(&self) -> Result<()> {
        let (nx, ny, nz) = self.dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidGrid(format!(
                "dims {:?} must be positive",
                self.dims
            )));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing {} must be positive",
                self.spacing
            )));
        }
        let expected = nx * ny * nz;
        if self.data.len() != expected {
            return Err(Error::SizeMismatch {
                dims: self.dims,
                expected,
                found: self.data.len(),
            });
        }
        for m in self.palette.values() {
            m.validate()?;
        }
        for &code in &self.data {
            if !self.palette.contains_key(&code) {
                return Err(Error::UnknownMaterial { code });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> u8 {
        self.data[self.index(x, y, z)]
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Total physical extent `(sx, sy, sz)`.
    pub fn extent(&self) -> [Real; 3] {
        [
            self.dims.0 as Real * self.spacing,
            self.dims.1 as Real * self.spacing,
            self.dims.2 as Real * self.spacing,
        ]
    }

    /// Min/max code over an axis-aligned voxel box `[lo, hi)` per axis.
    pub fn code_range(&self, lo: [usize; 3], hi: [usize; 3]) -> (u8, u8) {
        let mut min = u8::MAX;
        let mut max = u8::MIN;
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                let base = self.dims.0 * (y + self.dims.1 * z);
                for x in lo[0]..hi[0] {
                    let c = self.data[base + x];
                    min = min.min(c);
                    max = max.max(c);
                }
            }
        }
        (min, max)
    }

    /// Loads a grid from a JSON header referencing a raw payload.
    pub fn load(header_path: impl AsRef<Path>) -> Result<Self> {
        let header_path = header_path.as_ref();
        let text = std::fs::read_to_string(header_path)
            .map_err(|e| Error::io(header_path.display().to_string(), e))?;
        let header: Header = serde_json::from_str(&text).map_err(|e| Error::Header {
            path: header_path.display().to_string(),
            reason: e.to_string(),
        })?;
        if !(header.spacing > 0.0) {
            return Err(Error::Header {
                path: header_path.display().to_string(),
                reason: format!("spacing {} must be positive", header.spacing),
            });
        }
        let payload_path = header_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&header.payload);
        let data = std::fs::read(&payload_path)
            .map_err(|e| Error::io(payload_path.display().to_string(), e))?;
        let mut palette = BTreeMap::new();
        for (key, mat) in header.palette {
            let code: u8 = key.parse().map_err(|_| Error::Header {
                path: header_path.display().to_string(),
                reason: format!("palette key `{key}` is not a byte code"),
            })?;
            palette.insert(code, mat);
        }
        VoxelGrid::new(
            (header.dims[0], header.dims[1], header.dims[2]),
            header.spacing,
            header.origin,
            data,
            palette,
        )
    }

    /// Saves header + payload; the payload lands next to the header with the
    /// same stem and a `.raw` extension.
    pub fn save(&self, header_path: impl AsRef<Path>) -> Result<()> {
        let header_path = header_path.as_ref();
        let payload_name = {
            let mut p = PathBuf::from(
                header_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "voxels".to_string()),
            );
            p.set_extension("raw");
            p
        };
        let header = Header {
            dims: [self.dims.0, self.dims.1, self.dims.2],
            spacing: self.spacing,
            origin: self.origin,
            payload: payload_name.to_string_lossy().into_owned(),
            palette: self
                .palette
                .iter()
                .map(|(code, mat)| (code.to_string(), *mat))
                .collect(),
        };
        let text = serde_json::to_string_pretty(&header).map_err(|e| Error::Header {
            path: header_path.display().to_string(),
            reason: e.to_string(),
        })?;
        std::fs::write(header_path, text)
            .map_err(|e| Error::io(header_path.display().to_string(), e))?;
        let payload_path = header_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&payload_name);
        std::fs::write(&payload_path, &self.data)
            .map_err(|e| Error::io(payload_path.display().to_string(), e))?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    dims: [usize; 3],
    spacing: Real,
    origin: [Real; 3],
    payload: String,
    palette: BTreeMap<String, MaterialParams>,
}

/// Built-in synthetic geometries replacing external voxel assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SynthModel {
    /// `n^3` voxels of material 1.
    HomogeneousCube { n: usize },
    /// Material 1 cube with one `(n/2)^3` corner octant of material 2.
    CornerBlock { n: usize },
    /// Material 2 below `interface_z` (voxel layers), material 1 above.
    LayeredTwoMaterial {
        nx: usize,
        ny: usize,
        nz: usize,
        interface_z: usize,
    },
    /// Material 2 inside a sphere of `radius` voxels about the cube center.
    EmbeddedSphere { n: usize, radius: Real },
}

impl SynthModel {
    /// Parses the CLI-facing `name` + key/value form.
    pub fn from_name_params(name: &str, params: &BTreeMap<String, Real>) -> Result<Self> {
        let get = |key: &str| -> Result<Real> {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::ModelParams(format!("missing parameter `{key}`")))
        };
        let get_usize = |key: &str| -> Result<usize> {
            let v = get(key)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::ModelParams(format!(
                    "`{key}` = {v} is not a non-negative integer"
                )));
            }
            Ok(v as usize)
        };
        match name {
            "homogeneous_cube" => Ok(SynthModel::HomogeneousCube { n: get_usize("n")? }),
            "corner_block" => Ok(SynthModel::CornerBlock { n: get_usize("n")? }),
            "layered_two_material" => Ok(SynthModel::LayeredTwoMaterial {
                nx: get_usize("nx")?,
                ny: get_usize("ny")?,
                nz: get_usize("nz")?,
                interface_z: get_usize("interface_z")?,
            }),
            "embedded_sphere" => Ok(SynthModel::EmbeddedSphere {
                n: get_usize("n")?,
                radius: get("radius")?,
            }),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

/// Default two-entry palette used by the synthetic models.
pub fn default_palette() -> BTreeMap<u8, MaterialParams> {
    let mut palette = BTreeMap::new();
    palette.insert(
        1,
        MaterialParams {
            young_modulus: 1.0,
            poisson_ratio: 0.0,
            mass_density: 1.0,
        },
    );
    palette.insert(
        2,
        MaterialParams {
            young_modulus: 0.5,
            poisson_ratio: 0.2,
            mass_density: 2.0,
        },
    );
    palette
}

/// Generates a deterministic synthetic grid.
pub fn synth_model(
    model: &SynthModel,
    spacing: Real,
    palette: Option<BTreeMap<u8, MaterialParams>>,
) -> Result<VoxelGrid> {
    let palette = palette.unwrap_or_else(default_palette);
    let check_n = |n: usize| -> Result<()> {
        if n == 0 {
            return Err(Error::ModelParams("cube size n must be positive".into()));
        }
        Ok(())
    };
    let (dims, data): ((usize, usize, usize), Vec<u8>) = match *model {
        SynthModel::HomogeneousCube { n } => {
            check_n(n)?;
            ((n, n, n), vec![1u8; n * n * n])
        }
        SynthModel::CornerBlock { n } => {
            check_n(n)?;
            if n % 2 != 0 {
                return Err(Error::ModelParams(format!(
                    "corner_block needs even n, got {n}"
                )));
            }
            let half = n / 2;
            let mut data = vec![1u8; n * n * n];
            for z in 0..half {
                for y in 0..half {
                    for x in 0..half {
                        data[x + n * (y + n * z)] = 2;
                    }
                }
            }
            ((n, n, n), data)
        }
        SynthModel::LayeredTwoMaterial {
            nx,
            ny,
            nz,
            interface_z,
        } => {
            if nx == 0 || ny == 0 || nz == 0 {
                return Err(Error::ModelParams("layer dims must be positive".into()));
            }
            if interface_z > nz {
                return Err(Error::ModelParams(format!(
                    "interface_z = {interface_z} exceeds nz = {nz}"
                )));
            }
            let mut data = vec![1u8; nx * ny * nz];
            for z in 0..interface_z {
                for i in 0..nx * ny {
                    data[i + nx * ny * z] = 2;
                }
            }
            ((nx, ny, nz), data)
        }
        SynthModel::EmbeddedSphere { n, radius } => {
            check_n(n)?;
            if radius < 0.0 {
                return Err(Error::ModelParams(format!(
                    "radius {radius} must be non-negative"
                )));
            }
            let c = n as Real / 2.0;
            let mut data = vec![1u8; n * n * n];
            for z in 0..n {
                for y in 0..n {
                    for x in 0..n {
                        let dx = x as Real + 0.5 - c;
                        let dy = y as Real + 0.5 - c;
                        let dz = z as Real + 0.5 - c;
                        if (dx * dx + dy * dy + dz * dz).sqrt() < radius {
                            data[x + n * (y + n * z)] = 2;
                        }
                    }
                }
            }
            ((n, n, n), data)
        }
    };
    VoxelGrid::new(dims, spacing, [0.0; 3], data, palette)
}
