//! Experiment drivers: penalty sweeps with spurious-mode flags, refinement
//! studies with order fits, and the incompressible-limit study.

mod convergence;
mod fit;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{assemble_pencil, material_from_E_nu, AssembledPencil, AssemblyOptions, MaterialModel};
use crate::mesh::{BoundaryPartition, Mesh};
use crate::space::build_spaces;
use crate::spectral::{solve, ModeClass, ModeSet, SolveRequest, Strategy};

pub use convergence::{convergence_study, lambda_limit_study, ConvergenceStudy, LambdaLimit, LimitRow, TrackedMode};
pub use fit::{fit_order, OrderFit, ALPHA_MAX, ALPHA_MIN, ALPHA_STEP};
pub use sweep::{flag_spurious, refine_study, sweep_penalty, FrequencyTable, TableCell};

/// Default stabilization parameter for studies.
pub const DEFAULT_A_S: f64 = 1000.0;
/// Relative tolerance for matching a frequency against a reference run.
pub const SPURIOUS_TOL: f64 = 1e-2;
/// Relative tolerance for following a mode across refinements.
pub const TRACKING_TOL: f64 = 5e-2;

/// Sobolev regularity exponents `ŝ` of the clamped-plate eigenfunctions, by
/// Poisson ratio.
pub const REGULARITY: [(f64, f64); 3] = [(0.35, 0.6797), (0.49, 0.5999), (0.5, 0.5946)];

/// `ŝ` for a tabulated Poisson ratio.
pub fn regularity_exponent(nu: f64) -> Option<f64> {
    REGULARITY.iter().find(|(n, _)| (n - nu).abs() < 1e-12).map(|&(_, s)| s)
}

mod partition_name {
    use super::BoundaryPartition;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &BoundaryPartition, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(p)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BoundaryPartition, D::Error> {
        let name = String::deserialize(d)?;
        BoundaryPartition::parse(&name).map_err(serde::de::Error::custom)
    }
}

/// One discretization and solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub nu: f64,
    pub a_s: f64,
    #[serde(with = "partition_name")]
    pub partition: BoundaryPartition,
    /// Number of physical frequencies wanted.
    pub m: usize,
    pub strategy: Strategy,
    pub shift: f64,
    pub young: f64,
    pub rho: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 8,
            k: 2,
            nu: 0.35,
            a_s: DEFAULT_A_S,
            partition: BoundaryPartition::default(),
            m: 10,
            strategy: Strategy::Auto,
            shift: 1.3,
            young: 1.0,
            rho: 1.0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("N", "at least one cell per side"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k", "polynomial degree must be at least 1"));
        }
        if !(self.a_s > 0.0 && self.a_s.is_finite()) {
            return Err(Error::invalid("aS", "must be positive and finite"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "at least one mode must be requested"));
        }
        if !self.shift.is_finite() {
            return Err(Error::invalid("shift", "must be finite"));
        }
        self.material().map(|_| ())
    }

    pub fn material(&self) -> Result<MaterialModel> {
        material_from_E_nu(self.young, self.nu, self.rho)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::uniform(self.n, self.partition)
    }

    pub fn pencil(&self) -> Result<AssembledPencil> {
        self.validate()?;
        let mesh = self.mesh()?;
        let spaces = build_spaces(&mesh, self.k)?;
        assemble_pencil(&mesh, &spaces, &self.material()?, self.a_s, &AssemblyOptions::default())
    }

    pub fn request(&self, m: usize) -> SolveRequest {
        SolveRequest { m, strategy: self.strategy, shift: self.shift, keep_vectors: 0, ..SolveRequest::default() }
    }

    fn label(&self) -> String {
        format!("N={} k={} ν={} aS={} bc={}", self.n, self.k, self.nu, self.a_s, self.partition)
    }

    /// Solves with at least `self.m` physical modes when the solver is
    /// iterative, widening the request until enough are found.
    pub fn solve(&self) -> Result<ModeSet> {
        let pencil = self.pencil().map_err(|e| e.context(self.label()))?;
        solve_enough(&pencil, self, self.m).map_err(|e| e.context(self.label()))
    }

    /// The `m` smallest physical frequencies (fewer only if the pencil has
    /// fewer).
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        Ok(self.solve()?.frequencies(self.m))
    }
}

fn solve_enough(pencil: &AssembledPencil, cfg: &RunConfig, m: usize) -> Result<ModeSet> {
    let limit = (pencil.dim / 4).max(1);
    let mut want = m + 5;
    loop {
        let set = solve(pencil, &cfg.request(want.min(limit)))?;
        if set.complete || set.count(ModeClass::Physical) >= m || want >= limit {
            return Ok(set);
        }
        want *= 2;
    }
}

/// Formats with 7 significant digits in positional notation.
pub fn format_sig7(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (6 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}
