//! Scaled boundary finite element solver on balanced octree meshes.
//!
//! The crate turns voxel-based geometry into a balanced octree of cubic
//! subdomains, discretizes every subdomain surface with transfinite
//! transition elements (quadrilaterals whose edges may be split and carry
//! piecewise polynomial traces), computes per-subdomain stiffness and mass
//! matrices semi-analytically, and assembles/solves global static and
//! modal problems.
//!
//! Pipeline stages map onto modules:
//!
//! * [`voxel`]: voxel grids with material palettes (I/O + synthetic models)
//! * [`octree`]: image-driven octree decomposition and 2:1 balancing
//! * [`face_mesh`]: conforming quadrilateral surface mesh with per-edge
//!   segment/order descriptors and global node numbering
//! * [`shape`]: transfinite shape functions, GLL nodes, quadrature
//! * [`subdomain`]: boundary coefficient matrices of one cubic subdomain
//! * [`modes`]: modal decomposition of the subdomain operator, stiffness
//!   and mass extraction, interior field recovery
//! * [`system`]: global assembly, boundary conditions, static/modal solves
//! * [`reference`]: analytical displacement fields for patch testing
//! * [`pipeline`]: end-to-end model runs used by the CLI and test suites

pub mod error;
pub mod face_mesh;
pub mod linalg;
pub mod material;
pub mod modes;
pub mod octree;
pub mod pipeline;
pub mod reference;
pub mod shape;
pub mod subdomain;
pub mod system;
pub mod voxel;
pub mod vtk;

/// Scalar type used by the mesh, element, and solver layers.
///
/// The polynomial layer in [`shape::poly`] is generic over any
/// [`shape::poly::Scalar`]; everything downstream instantiates it at this
/// precision.
pub type Real = f64;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

// Downstream crates handle solver vectors; give them the same linear
// algebra the public API uses.
pub use nalgebra;
