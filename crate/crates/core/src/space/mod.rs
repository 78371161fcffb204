//! Discontinuous finite element spaces: reference bases, quadrature rules and
//! global degree-of-freedom numbering.

pub mod basis;
pub mod quadrature;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

pub use basis::{dim_pk, ScalarBasis};
pub use quadrature::{make_quadrature, Domain, QuadratureRule};

/// Tensor component `(i, j)` stored at index `2 i + j`.
pub const COMPONENTS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

pub fn make_scalar_basis(k: usize) -> Result<ScalarBasis> {
    if k == 0 {
        return Err(Error::invalid("k", "polynomial degree must be at least 1"));
    }
    ScalarBasis::new(k)
}

/// Dof layout of the stress space `P_k(T_h)^{2×2}` and the rotation space of
/// skew tensors `s J` with `s ∈ P_{k-1}(T_h)`, `J = [[0, 1], [-1, 0]]`.
///
/// Stress dofs come first, element by element, each element holding the four
/// components in `COMPONENTS` order. Rotation dofs follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DGSpacePair {
    pub degree: usize,
    pub num_elements: usize,
    /// `dim P_k`.
    pub scalar_dim: usize,
    /// `dim P_{k-1}`.
    pub rotation_scalar_dim: usize,
    pub mesh_id: String,
}

impl DGSpacePair {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "polynomial degree must be at least 1"));
        }
        if k > basis::MAX_DEGREE {
            return Err(Error::invalid(
                "k",
                format!("polynomial degree must be at most {}", basis::MAX_DEGREE),
            ));
        }
        Ok(Self {
            degree: k,
            num_elements: mesh.num_elements(),
            scalar_dim: dim_pk(k),
            rotation_scalar_dim: dim_pk(k - 1),
            mesh_id: mesh.id(),
        })
    }

    pub fn stress_block(&self) -> usize {
        4 * self.scalar_dim
    }

    pub fn stress_dim(&self) -> usize {
        self.num_elements * self.stress_block()
    }

    pub fn rotation_dim(&self) -> usize {
        self.num_elements * self.rotation_scalar_dim
    }

    /// Pencil dimension.
    pub fn dim(&self) -> usize {
        self.stress_dim() + self.rotation_dim()
    }

    pub fn stress_dof(&self, element: usize, component: usize, i: usize) -> usize {
        element * self.stress_block() + component * self.scalar_dim + i
    }

    pub fn rotation_dof(&self, element: usize, j: usize) -> usize {
        self.stress_dim() + element * self.rotation_scalar_dim + j
    }

    pub fn element_stress_range(&self, element: usize) -> Range<usize> {
        let s = element * self.stress_block();
        s..s + self.stress_block()
    }

    pub fn element_rotation_range(&self, element: usize) -> Range<usize> {
        let s = self.rotation_dof(element, 0);
        s..s + self.rotation_scalar_dim
    }

    /// Checks that the spaces were numbered on `mesh`.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if mesh.num_elements() != self.num_elements || mesh.id() != self.mesh_id {
            return Err(Error::DimensionMismatch(format!(
                "spaces built on {} ({} elements), mesh is {} ({} elements)",
                self.mesh_id,
                self.num_elements,
                mesh.id(),
                mesh.num_elements()
            )));
        }
        Ok(())
    }
}

pub fn build_spaces(mesh: &Mesh, k: usize) -> Result<DGSpacePair> {
    DGSpacePair::new(mesh, k)
}
