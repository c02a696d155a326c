//! Isotropic material parameters and the elasticity matrix.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// 6x6 elasticity matrix in Voigt order `(xx, yy, zz, xy, xz, yz)`.
pub type ElasticityMatrix = SMatrix<Real, 6, 6>;

/// Isotropic linear-elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Young's modulus (pressure units).
    #[serde(rename = "E")]
    pub young_modulus: Real,
    /// Poisson's ratio, `-1 < nu < 0.5`.
    #[serde(rename = "nu")]
    pub poisson_ratio: Real,
    /// Mass density (mass/volume).
    #[serde(rename = "rho")]
    pub mass_density: Real,
}

impl MaterialParams {
    pub fn new(young_modulus: Real, poisson_ratio: Real, mass_density: Real) -> Result<Self> {
        let m = MaterialParams {
            young_modulus,
            poisson_ratio,
            mass_density,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks the ranges required for a finite, positive definite
    /// elasticity matrix.
    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "E = {} must be positive",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::InvalidMaterial(format!(
                "nu = {} outside (-1, 0.5)",
                self.poisson_ratio
            )));
        }
        if !(self.mass_density >= 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "rho = {} must be non-negative",
                self.mass_density
            )));
        }
        Ok(())
    }

    /// Shear modulus `G = E / (2 (1 + nu))`.
    pub fn shear_modulus(&self) -> Real {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Assembles the isotropic elasticity matrix
    /// `D = 2G/(1-2nu) * [[(1-nu) I3 + nu (J3 - I3)], diag((1-2nu)/2)]`
    /// in Voigt order `(xx, yy, zz, xy, xz, yz)`.
    pub fn elasticity_matrix(&self) -> ElasticityMatrix {
        let nu = self.poisson_ratio;
        let g = self.shear_modulus();
        let factor = 2.0 * g / (1.0 - 2.0 * nu);
        let mut d = ElasticityMatrix::zeros();
        for i in 0..3 {
            for j in 0..3 {
                d[(i, j)] = factor * if i == j { 1.0 - nu } else { nu };
            }
        }
        for i in 3..6 {
            d[(i, i)] = g;
        }
        d
    }
}
