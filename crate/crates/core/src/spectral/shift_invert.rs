use faer::sparse::Triplet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::certify;
use super::factor::ShiftedSolver;
use super::lanczos::{krylov_schur, KrylovOptions};
use super::reduce::Reduction;
use super::{classify, Certifier, Mode, ModeClass, ModeSet, SolveRequest, SolverMeta};
use crate::error::{Error, Result};
use crate::forms::{AssembledPencil, CsrMatrix};

/// Lower triangle of `a − σ b`, or of `a − σ diag(I_d, 0)` without `b`.
fn shifted_lower(a: &CsrMatrix, b: Option<&CsrMatrix>, sigma: f64, diag_limit: usize) -> Vec<Triplet<usize, usize, f64>> {
    let mut t = Vec::with_capacity(a.nnz() / 2 + a.nrows());
    for i in 0..a.nrows() {
        t.extend(a.row(i).filter(|&(j, _)| j <= i).map(|(j, v)| Triplet::new(i, j, v)));
        match b {
            Some(b) => t.extend(b.row(i).filter(|&(j, _)| j <= i).map(|(j, v)| Triplet::new(i, j, -sigma * v))),
            None if i < diag_limit => t.push(Triplet::new(i, i, -sigma)),
            None => {}
        }
    }
    t
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn subspace(m: usize) -> usize {
    (2 * m + 20).max(40)
}

/// The `m` eigenvalues nearest `κ₀ = request.shift`, leaving out the `κ = 1`
/// cluster.
pub fn solve_shift_invert(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    request.validate()?;
    let limit = (pencil.dim / 4).max(1);
    if request.m > limit {
        return Err(Error::invalid(
            "m",
            format!("shift-invert extracts at most {limit} modes from a pencil of dimension {}", pencil.dim),
        ));
    }
    match pencil.layout {
        Some(_) => structured(pencil, request),
        None => generic(pencil, request),
    }
}

fn meta(pencil: &AssembledPencil, request: &SolveRequest, iterations: usize) -> SolverMeta {
    SolverMeta {
        method: "shift-invert".into(),
        shift: Some(request.shift),
        tolerance: request.tolerance,
        kernel_tol: request.kernel_tol,
        positivity_tol: request.positivity_tol,
        dim: pencil.dim,
        iterations,
    }
}

fn ritz_tolerance(request: &SolveRequest) -> f64 {
    (request.tolerance * 1e-2).min(1e-10)
}

/// Lanczos on `S = I + s [(K_r − s M_r)⁻¹]_ww` over the unit-mass coordinates,
/// `s = κ₀ − 1`. A reduced eigenvalue `ω²` maps to `φ = ω² / (ω² − s)`, so the
/// `κ = 1` cluster maps to 0 and is annihilated by every application.
fn structured(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    let red = Reduction::new(pencil)?;
    let nw = red.num_w();
    let n = red.dim();
    let s = request.shift - 1.0;
    if s.abs() < request.kernel_tol {
        return Err(Error::invalid("shift", "κ₀ must stay away from the κ = 1 cluster"));
    }
    let shifted = |x: &[f64]| {
        let mut y = red.kr.mul_vec(x);
        y[..nw].iter_mut().zip(x).for_each(|(a, b)| *a -= s * b);
        y
    };
    let mut lu = ShiftedSolver::new(n, shifted_lower(&red.kr, None, s, nw), &shifted)?;
    let mut buf = vec![0.0; n];
    let mut op = |v: &[f64], out: &mut [f64]| -> Result<()> {
        buf[..nw].copy_from_slice(v);
        buf[nw..].iter_mut().for_each(|x| *x = 0.0);
        lu.solve(&mut buf)?;
        for i in 0..nw {
            out[i] = v[i] + s * buf[i];
        }
        Ok(())
    };
    let z = random_vector(nw, request.seed);
    let mut start = vec![0.0; nw];
    op(&z, &mut start)?;
    let opts = KrylovOptions {
        nev: request.m,
        ncv: subspace(request.m),
        tol: ritz_tolerance(request),
        max_restarts: request.max_iterations,
        seed: request.seed,
    };
    let score = |phi: f64| (phi.abs() >= 1e-6).then(|| (phi - 1.0).abs());
    let ritz = krylov_schur(nw, &mut op, None, start, &score, &opts)?;

    let cert = Certifier::new(pencil);
    let mut modes = Vec::with_capacity(request.m);
    let mut vectors = Vec::new();
    let mut order: Vec<(f64, Vec<f64>)> = Vec::with_capacity(request.m);
    for v in &ritz.vectors {
        // one inverse-iteration step purifies the Ritz vector
        let mut y = vec![0.0; n];
        y[..nw].copy_from_slice(v);
        lu.solve(&mut y)?;
        let ky = red.kr.mul_vec(&y);
        let num: f64 = y.iter().zip(&ky).map(|(a, b)| a * b).sum();
        let den: f64 = y[..nw].iter().map(|a| a * a).sum();
        let omega2 = num / den;
        order.push((omega2, y));
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (omega2, y) in order {
        let kappa = 1.0 + omega2;
        let class = classify(kappa, request.kernel_tol, request.positivity_tol);
        let x = red.reconstruct(&y, omega2, class == ModeClass::Kernel);
        let residual = cert.residual(kappa, &x);
        let vector = (vectors.len() < request.keep_vectors).then(|| {
            vectors.push(x);
            vectors.len() - 1
        });
        let omega = if class == ModeClass::Physical { omega2.sqrt() } else { 0.0 };
        modes.push(Mode { kappa, omega, class, residual, vector });
    }
    certify(
        ModeSet {
            modes,
            vectors,
            kernel_cluster: 2 * red.layout.rotation_dim(),
            trace_null: red.num_p(),
            complete: false,
            meta: meta(pencil, request, ritz.restarts),
        },
        request,
    )
}

/// Lanczos on `(A − κ₀ B)⁻¹ B` in the `B` inner product; needs `B` positive
/// definite.
fn generic(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    let n = pencil.dim;
    let s = request.shift;
    let shifted = |x: &[f64]| {
        let mut y = pencil.a.mul_vec(x);
        y.iter_mut().zip(pencil.b.mul_vec(x)).for_each(|(a, b)| *a -= s * b);
        y
    };
    let mut lu = ShiftedSolver::new(n, shifted_lower(&pencil.a, Some(&pencil.b), s, 0), &shifted)?;
    let b = &pencil.b;
    let mut op = |v: &[f64], out: &mut [f64]| -> Result<()> {
        b.mul_vec_into(v, out);
        lu.solve(out)
    };
    let metric = |v: &[f64]| b.mul_vec(v);
    let opts = KrylovOptions {
        nev: request.m,
        ncv: subspace(request.m),
        tol: ritz_tolerance(request),
        max_restarts: request.max_iterations,
        seed: request.seed,
    };
    let score = |theta: f64| Some(theta.abs());
    let ritz = krylov_schur(n, &mut op, Some(&metric), random_vector(n, request.seed), &score, &opts)?;
    let cert = Certifier::new(pencil);
    let mut modes = Vec::new();
    let mut vectors = Vec::new();
    for x in ritz.vectors {
        let kappa = pencil.a.quadratic_form(&x, &x) / pencil.b.quadratic_form(&x, &x);
        let class = classify(kappa, request.kernel_tol, request.positivity_tol);
        let residual = cert.residual(kappa, &x);
        let omega = if class == ModeClass::Physical { (kappa - 1.0).sqrt() } else { 0.0 };
        vectors.push(x);
        modes.push(Mode { kappa, omega, class, residual, vector: Some(vectors.len() - 1) });
    }
    modes.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    let kernel_cluster = modes.iter().filter(|m| m.class == ModeClass::Kernel).count();
    certify(
        ModeSet {
            modes,
            vectors,
            kernel_cluster,
            trace_null: 0,
            complete: false,
            meta: meta(pencil, request, ritz.restarts),
        },
        request,
    )
}
