use std::ops::Range;

use super::material::MaterialModel;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::space::DGSpacePair;

/// Block structure of a mixed pencil: per-element stress blocks first, then
/// per-element rotation blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PencilLayout {
    pub num_elements: usize,
    pub stress_block: usize,
    pub rotation_block: usize,
    /// `dim P_k`; the stress block holds four components of this size.
    pub scalar_dim: usize,
}

impl PencilLayout {
    pub fn from_spaces(spaces: &DGSpacePair) -> Self {
        Self {
            num_elements: spaces.num_elements,
            stress_block: spaces.stress_block(),
            rotation_block: spaces.rotation_scalar_dim,
            scalar_dim: spaces.scalar_dim,
        }
    }

    pub fn stress_dim(&self) -> usize {
        self.num_elements * self.stress_block
    }

    pub fn rotation_dim(&self) -> usize {
        self.num_elements * self.rotation_block
    }

    pub fn dim(&self) -> usize {
        self.stress_dim() + self.rotation_dim()
    }

    pub fn stress_range(&self, e: usize) -> Range<usize> {
        e * self.stress_block..(e + 1) * self.stress_block
    }

    pub fn rotation_range(&self, e: usize) -> Range<usize> {
        let s = self.stress_dim() + e * self.rotation_block;
        s..s + self.rotation_block
    }
}

/// The discrete pencil `A x = κ B x`, immutable once assembled.
#[derive(Debug, Clone)]
pub struct AssembledPencil {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub dim: usize,
    /// Stabilization, material, degree and layout are `None` for pencils not
    /// produced by the assembler.
    pub a_s: Option<f64>,
    pub degree: Option<usize>,
    pub material: Option<MaterialModel>,
    pub mesh_id: String,
    pub layout: Option<PencilLayout>,
}

impl AssembledPencil {
    /// Wraps an arbitrary symmetric pair with no mixed block structure.
    pub fn from_matrices(a: CsrMatrix, b: CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self {
            a,
            b,
            dim: n,
            a_s: None,
            degree: None,
            material: None,
            mesh_id: "generic".into(),
            layout: None,
        })
    }

    /// Relative asymmetry `max |M_ij − M_ji| / max |M|` of `A` and `B`.
    pub fn asymmetry(&self) -> (f64, f64) {
        let rel = |m: &CsrMatrix| m.asymmetry() / m.max_abs().max(f64::MIN_POSITIVE);
        (rel(&self.a), rel(&self.b))
    }

    /// Relative residual `‖A x − κ B x‖ / (‖A‖₁ ‖x‖)`.
    pub fn residual(&self, kappa: f64, x: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let bx = self.b.mul_vec(x);
        let r: f64 = ax.iter().zip(&bx).map(|(a, b)| (a - kappa * b).powi(2)).sum::<f64>().sqrt();
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r / (self.a.norm_one() * nx).max(f64::MIN_POSITIVE)
    }
}
