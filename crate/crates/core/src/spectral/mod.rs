//! Generalized eigensolvers for the pencil `A x = κ B x`, `κ = 1 + ω²`, and
//! classification of the resulting modes.
//!
//! Both solvers work on the reduction described in [`reduce`]: the κ = 1
//! cluster made of rotation-only vectors is known in closed form, the
//! infinite eigenvalues of the incompressible pencil are counted rather than
//! computed, and the rest of the spectrum comes from a symmetric problem.

mod dense;
mod factor;
mod lanczos;
pub(crate) mod reduce;
mod shift_invert;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{AssembledPencil, CsrMatrix};

pub use dense::{solve_dense, DENSE_LIMIT};
pub use shift_invert::solve_shift_invert;

/// Pencils up to this dimension go to the dense solver under `Auto`.
pub const AUTO_DENSE_MAX: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeClass {
    Kernel,
    Physical,
    TraceNull,
    Unresolved,
}

impl fmt::Display for ModeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeClass::Kernel => "kernel",
            ModeClass::Physical => "physical",
            ModeClass::TraceNull => "trace-null",
            ModeClass::Unresolved => "unresolved",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Dense,
    ShiftInvert,
    #[default]
    Auto,
}

impl Strategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Strategy::Dense),
            "shift-invert" => Ok(Strategy::ShiftInvert),
            "auto" => Ok(Strategy::Auto),
            other => Err(Error::invalid(
                "solver",
                format!("expected dense, shift-invert or auto, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Dense => "dense",
            Strategy::ShiftInvert => "shift-invert",
            Strategy::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    /// Wanted number of modes (shift-invert only; the dense solver returns all).
    pub m: usize,
    pub strategy: Strategy,
    /// Target `κ₀` for shift-invert.
    pub shift: f64,
    /// Bound on `‖Ax − κBx‖ / (‖A‖₁ ‖x‖)` for every reported mode.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub kernel_tol: f64,
    pub positivity_tol: f64,
    /// Eigenvectors retained for the lowest physical modes.
    pub keep_vectors: usize,
    pub seed: u64,
}

impl Default for SolveRequest {
    fn default() -> Self {
        Self {
            m: 10,
            strategy: Strategy::Auto,
            shift: 1.3,
            tolerance: 1e-8,
            max_iterations: 300,
            kernel_tol: 1e-6,
            positivity_tol: 1e-6,
            keep_vectors: 64,
            seed: 20,
        }
    }
}

impl SolveRequest {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m", "at least one mode must be requested"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if !self.shift.is_finite() {
            return Err(Error::invalid("shift", "must be finite"));
        }
        if !(self.kernel_tol >= 0.0 && self.positivity_tol >= 0.0) {
            return Err(Error::invalid("kernel_tol", "classification tolerances must be non-negative"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub kappa: f64,
    /// `√(κ − 1)` for physical modes, 0 otherwise.
    pub omega: f64,
    pub class: ModeClass,
    pub residual: f64,
    /// Index into [`ModeSet::vectors`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub method: String,
    pub shift: Option<f64>,
    pub tolerance: f64,
    pub kernel_tol: f64,
    pub positivity_tol: f64,
    pub dim: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    /// Sorted by `κ` ascending.
    pub modes: Vec<Mode>,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    /// Algebraic multiplicity of `κ = 1`. A lower bound when `complete` is false.
    pub kernel_cluster: usize,
    /// Infinite eigenvalues of a singular `B`, counted and not listed.
    pub trace_null: usize,
    /// Whether `modes` covers the whole finite spectrum.
    pub complete: bool,
    pub meta: SolverMeta,
}

impl ModeSet {
    pub fn physical(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.class == ModeClass::Physical)
    }

    /// The `m` smallest physical frequencies (fewer if not available).
    pub fn frequencies(&self, m: usize) -> Vec<f64> {
        self.physical().take(m).map(|x| x.omega).collect()
    }

    pub fn count(&self, class: ModeClass) -> usize {
        self.modes.iter().filter(|m| m.class == class).count()
    }

    pub fn vector(&self, mode: &Mode) -> Option<&[f64]> {
        mode.vector.map(|i| self.vectors[i].as_slice())
    }

    pub fn max_residual(&self) -> f64 {
        self.modes.iter().map(|m| m.residual).fold(0.0, f64::max)
    }

    /// CSV with columns `index, kappa, omega, class, residual`.
    pub fn write_csv(&self, out: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        writeln!(out, "index,kappa,omega,class,residual")?;
        for (i, m) in self.modes.iter().enumerate() {
            writeln!(out, "{},{:.7e},{:.7e},{},{:.3e}", i, m.kappa, m.omega, m.class, m.residual)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Band classification of one eigenvalue.
pub fn classify(kappa: f64, kernel_tol: f64, positivity_tol: f64) -> ModeClass {
    if !kappa.is_finite() {
        ModeClass::TraceNull
    } else if (kappa - 1.0).abs() <= kernel_tol {
        ModeClass::Kernel
    } else if kappa > 1.0 + positivity_tol {
        ModeClass::Physical
    } else {
        ModeClass::Unresolved
    }
}

/// A residual-verified eigenpair before classification.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPair {
    pub kappa: f64,
    pub residual: f64,
    pub vector: Option<Vec<f64>>,
}

/// Classifies and sorts raw pairs. Non-finite `κ` become trace-null modes.
pub fn classify_modes(raw: Vec<RawPair>, kernel_tol: f64, positivity_tol: f64, meta: SolverMeta) -> ModeSet {
    let mut raw = raw;
    raw.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    let mut modes = Vec::with_capacity(raw.len());
    let mut vectors = Vec::new();
    for p in raw {
        let class = classify(p.kappa, kernel_tol, positivity_tol);
        let omega = if class == ModeClass::Physical { (p.kappa - 1.0).sqrt() } else { 0.0 };
        let vector = p.vector.map(|v| {
            vectors.push(v);
            vectors.len() - 1
        });
        modes.push(Mode { kappa: p.kappa, omega, class, residual: p.residual, vector });
    }
    let kernel_cluster = modes.iter().filter(|m| m.class == ModeClass::Kernel).count();
    let trace_null = modes.iter().filter(|m| m.class == ModeClass::TraceNull).count();
    ModeSet { modes, vectors, kernel_cluster, trace_null, complete: false, meta }
}

/// Dispatches on `request.strategy`.
pub fn solve(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    request.validate()?;
    match request.strategy {
        Strategy::Dense => solve_dense(pencil, request),
        Strategy::ShiftInvert => solve_shift_invert(pencil, request),
        Strategy::Auto if pencil.dim <= AUTO_DENSE_MAX => solve_dense(pencil, request),
        Strategy::Auto => solve_shift_invert(pencil, request),
    }
}

/// Residual evaluator with a cached `‖A‖₁`.
pub(crate) struct Certifier<'a> {
    a: &'a CsrMatrix,
    b: &'a CsrMatrix,
    norm: f64,
}

impl<'a> Certifier<'a> {
    pub fn new(pencil: &'a AssembledPencil) -> Self {
        Self { a: &pencil.a, b: &pencil.b, norm: pencil.a.norm_one().max(f64::MIN_POSITIVE) }
    }

    pub fn residual(&self, kappa: f64, x: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let bx = self.b.mul_vec(x);
        let r = ax.iter().zip(&bx).map(|(a, b)| (a - kappa * b).powi(2)).sum::<f64>().sqrt();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r / (self.norm * nx.max(f64::MIN_POSITIVE))
    }

    /// Residual of the unit vector `e_j` at `κ = 1`.
    pub fn rotation_residual(&self, j: usize) -> f64 {
        let mut diff: Vec<(usize, f64)> = self.a.row(j).collect();
        for (c, v) in self.b.row(j) {
            match diff.iter_mut().find(|(d, _)| *d == c) {
                Some(e) => e.1 -= v,
                None => diff.push((c, -v)),
            }
        }
        diff.iter().map(|(_, v)| v * v).sum::<f64>().sqrt() / self.norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SolverMeta {
        SolverMeta {
            method: "test".into(),
            shift: None,
            tolerance: 1e-8,
            kernel_tol: 1e-6,
            positivity_tol: 1e-6,
            dim: 0,
            iterations: 0,
        }
    }

    #[test]
    fn classification_bands() {
        assert_eq!(classify(1.0 + 1e-12, 1e-6, 1e-6), ModeClass::Kernel);
        assert_eq!(classify(0.97, 1e-6, 1e-6), ModeClass::Unresolved);
        assert_eq!(classify(f64::INFINITY, 1e-6, 1e-6), ModeClass::TraceNull);
        let k = 1.0 + 0.6804472f64.powi(2);
        assert_eq!(classify(k, 1e-6, 1e-6), ModeClass::Physical);
    }

    #[test]
    fn classify_sorts_and_derives_omega() {
        let raw = vec![
            RawPair { kappa: 1.463008, residual: 0.0, vector: None },
            RawPair { kappa: 1.0 + 1e-12, residual: 0.0, vector: Some(vec![1.0]) },
            RawPair { kappa: 0.97, residual: 0.0, vector: None },
        ];
        let set = classify_modes(raw, 1e-6, 1e-6, meta());
        let classes: Vec<ModeClass> = set.modes.iter().map(|m| m.class).collect();
        assert_eq!(classes, [ModeClass::Unresolved, ModeClass::Kernel, ModeClass::Physical]);
        assert!((set.modes[2].omega - 0.6804472).abs() < 1e-6);
        assert_eq!(set.kernel_cluster, 1);
        assert_eq!(set.vector(&set.modes[1]), Some(&[1.0][..]));
        let mut csv = Vec::new();
        set.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("index,kappa,omega,class,residual\n0,"));
        assert!(text.contains(",physical,"));
    }

    #[test]
    fn request_validation() {
        assert!(SolveRequest::default().validate().is_ok());
        assert!(SolveRequest { m: 0, ..Default::default() }.validate().is_err());
        assert!(SolveRequest { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert_eq!(Strategy::parse("shift-invert").unwrap(), Strategy::ShiftInvert);
        assert!(Strategy::parse("qz").is_err());
    }
}
