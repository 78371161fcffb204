use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Tensor2 = [[f64; 2]; 2];

/// Isotropic linear elastic material in plane strain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub rho: f64,
    pub young: f64,
    pub poisson: f64,
    /// First Lamé constant; `None` in the incompressible limit `ν = 1/2`.
    pub lambda: Option<f64>,
    pub mu: f64,
}

impl MaterialModel {
    pub fn from_e_nu(young: f64, poisson: f64, rho: f64) -> Result<Self> {
        if !(young.is_finite() && young > 0.0) {
            return Err(Error::invalid("E", format!("Young modulus must be positive, got {young}")));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::invalid("rho", format!("density must be positive, got {rho}")));
        }
        if !(poisson.is_finite() && poisson > 0.0 && poisson <= 0.5) {
            return Err(Error::invalid(
                "nu",
                format!("Poisson ratio must lie in (0, 1/2], got {poisson}"),
            ));
        }
        let mu = young / (2.0 * (1.0 + poisson));
        let lambda = if poisson == 0.5 {
            None
        } else {
            Some(young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)))
        };
        Ok(Self {
            rho,
            young,
            poisson,
            lambda,
            mu,
        })
    }

    pub fn is_incompressible(&self) -> bool {
        self.lambda.is_none()
    }

    /// Weight of `tr σ tr τ` in the compliance: `1 / (n (n λ + 2 μ))` with `n = 2`.
    pub fn trace_weight(&self) -> f64 {
        match self.lambda {
            Some(l) => 1.0 / (4.0 * (l + self.mu)),
            None => 0.0,
        }
    }

    /// Pointwise `C⁻¹σ : τ = (1/2μ) σᴰ:τᴰ + tr σ tr τ / (2(2λ + 2μ))`.
    pub fn compliance_pairing(&self, sigma: &Tensor2, tau: &Tensor2) -> f64 {
        let tr_s = sigma[0][0] + sigma[1][1];
        let tr_t = tau[0][0] + tau[1][1];
        let mut dev = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let ds = sigma[i][j] - if i == j { 0.5 * tr_s } else { 0.0 };
                let dt = tau[i][j] - if i == j { 0.5 * tr_t } else { 0.0 };
                dev += ds * dt;
            }
        }
        dev / (2.0 * self.mu) + self.trace_weight() * tr_s * tr_t
    }

    /// The compliance as a 4×4 matrix on tensor components `(00, 01, 10, 11)`.
    pub(crate) fn compliance_matrix(&self) -> [[f64; 4]; 4] {
        let tr = [1.0, 0.0, 0.0, 1.0];
        let inv2mu = 1.0 / (2.0 * self.mu);
        let tw = self.trace_weight();
        let mut c = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let delta = if a == b { 1.0 } else { 0.0 };
                c[a][b] = inv2mu * (delta - 0.5 * tr[a] * tr[b]) + tw * tr[a] * tr[b];
            }
        }
        c
    }
}
