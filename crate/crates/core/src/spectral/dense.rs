use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use nalgebra::DMatrix;

use super::reduce::Reduction;
use super::{classify, Certifier, Mode, ModeClass, ModeSet, SolveRequest, SolverMeta};
use crate::error::{Error, Result};
use crate::forms::AssembledPencil;

/// Largest pencil accepted by [`solve_dense`].
pub const DENSE_LIMIT: usize = 20000;

/// All finite eigenvalues of the pencil.
pub fn solve_dense(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    request.validate()?;
    if pencil.dim > DENSE_LIMIT {
        return Err(Error::DenseLimitExceeded { dim: pencil.dim, limit: DENSE_LIMIT });
    }
    match pencil.layout {
        Some(_) => structured(pencil, request),
        None => generic(pencil, request),
    }
}

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenpairs of a symmetric matrix, ascending.
fn symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("symmetric eigensolver: {e:?}")))?;
    let s = eig.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, eig.U().to_owned()))
}

fn structured(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    let red = Reduction::new(pencil)?;
    let nw = red.num_w();
    let np = red.num_p();
    let kr = red.kr.to_dense();

    // physical problem in w-coordinates, y = [y_w; X y_w]
    let (values, vectors, lift) = if np == 0 {
        let (v, u) = symmetric_eigen(&to_faer(&kr))?;
        (v, u, None)
    } else {
        let kww = to_faer(&kr.view((0, 0), (nw, nw)).into_owned());
        let kwp = to_faer(&kr.view((0, nw), (nw, np)).into_owned());
        let kpp = to_faer(&kr.view((nw, nw), (np, np)).into_owned());
        let lu = kpp.partial_piv_lu();
        let mut x = kwp.transpose().to_owned();
        lu.solve_in_place(x.as_mut());
        if (0..x.nrows()).any(|i| (0..x.ncols()).any(|j| !x[(i, j)].is_finite())) {
            return Err(Error::Factorization("trace block of the stress operator is singular".into()));
        }
        let mut schur = &kww - &kwp * &x;
        for i in 0..nw {
            for j in 0..i {
                let avg = 0.5 * (schur[(i, j)] + schur[(j, i)]);
                schur[(i, j)] = avg;
                schur[(j, i)] = avg;
            }
        }
        let (v, u) = symmetric_eigen(&schur)?;
        (v, u, Some(x))
    };

    let cert = Certifier::new(pencil);
    let mut modes = Vec::with_capacity(values.len() + red.layout.rotation_dim());
    let mut kept = Vec::new();
    let mut physical_seen = 0;
    for (col, &omega2) in values.iter().enumerate() {
        let mut y = vec![0.0; red.dim()];
        for (i, yi) in y.iter_mut().enumerate().take(nw) {
            *yi = vectors[(i, col)];
        }
        if let Some(x) = &lift {
            for p in 0..np {
                y[nw + p] = -(0..nw).map(|i| x[(p, i)] * y[i]).sum::<f64>();
            }
        }
        let mut kappa = 1.0 + omega2;
        let mut class = classify(kappa, request.kernel_tol, request.positivity_tol);
        if class == ModeClass::Kernel {
            // the dense value carries an absolute error of order ε‖K_r‖
            let ky = red.kr.mul_vec(&y);
            let yy: f64 = y[..nw].iter().map(|v| v * v).sum();
            kappa = 1.0 + y.iter().zip(&ky).map(|(a, b)| a * b).sum::<f64>() / yy;
            class = classify(kappa, request.kernel_tol, request.positivity_tol);
        }
        let omega2 = kappa - 1.0;
        let full = red.reconstruct(&y, omega2, class == ModeClass::Kernel);
        let residual = cert.residual(kappa, &full);
        let vector = (class == ModeClass::Physical && physical_seen < request.keep_vectors).then(|| {
            physical_seen += 1;
            kept.push(full);
            kept.len() - 1
        });
        let omega = if class == ModeClass::Physical { omega2.sqrt() } else { 0.0 };
        modes.push(Mode { kappa, omega, class, residual, vector });
    }
    let ns = red.layout.stress_dim();
    for j in 0..red.layout.rotation_dim() {
        modes.push(Mode {
            kappa: 1.0,
            omega: 0.0,
            class: ModeClass::Kernel,
            residual: cert.rotation_residual(ns + j),
            vector: None,
        });
    }
    modes.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    let kernel_listed = modes.iter().filter(|m| m.class == ModeClass::Kernel).count();
    let set = ModeSet {
        modes,
        vectors: kept,
        // every rotation dof adds a second, defective copy of κ = 1
        kernel_cluster: kernel_listed + red.layout.rotation_dim(),
        trace_null: red.num_p(),
        complete: true,
        meta: meta(pencil, request, "dense-reduced"),
    };
    certify(set, request)
}

fn meta(pencil: &AssembledPencil, request: &SolveRequest, method: &str) -> SolverMeta {
    SolverMeta {
        method: method.into(),
        shift: None,
        tolerance: request.tolerance,
        kernel_tol: request.kernel_tol,
        positivity_tol: request.positivity_tol,
        dim: pencil.dim,
        iterations: 0,
    }
}

pub(crate) fn certify(set: ModeSet, request: &SolveRequest) -> Result<ModeSet> {
    if let Some((i, m)) = set
        .modes
        .iter()
        .enumerate()
        .find(|(_, m)| !(m.residual <= request.tolerance))
    {
        return Err(Error::NoConvergence(format!(
            "mode {i} (κ = {:.10}) has relative residual {:.2e} above {:.1e}",
            m.kappa, m.residual, request.tolerance
        )));
    }
    Ok(set)
}

/// Pencils without mixed structure: Cholesky of `B`, or of `A` for `η = 1/κ`.
fn generic(pencil: &AssembledPencil, request: &SolveRequest) -> Result<ModeSet> {
    let a = pencil.a.to_dense();
    let b = pencil.b.to_dense();
    let n = pencil.dim;
    let (values, vectors, inverted) = if let Some(ch) = b.clone().cholesky() {
        let l = ch.l();
        let li = l.clone().try_inverse().ok_or_else(|| Error::Factorization("singular B factor".into()))?;
        let c = &li * &a * li.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let (v, u) = symmetric_eigen(&to_faer(&c))?;
        let u = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        (v, li.transpose() * u, false)
    } else if let Some(ch) = a.clone().cholesky() {
        let li = ch.l().try_inverse().ok_or_else(|| Error::Factorization("singular A factor".into()))?;
        let c = &li * &b * li.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let (v, u) = symmetric_eigen(&to_faer(&c))?;
        let u = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        (v, li.transpose() * u, true)
    } else {
        return Err(Error::Unsupported(
            "dense solve of a pencil without layout needs A or B positive definite".into(),
        ));
    };
    let cert = Certifier::new(pencil);
    let eta_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut modes = Vec::new();
    let mut kept = Vec::new();
    let mut trace_null = 0;
    for (col, &v) in values.iter().enumerate() {
        let kappa = if inverted {
            if v.abs() <= 1e-12 * eta_max {
                trace_null += 1;
                continue;
            }
            1.0 / v
        } else {
            v
        };
        let x: Vec<f64> = vectors.column(col).iter().copied().collect();
        let class = classify(kappa, request.kernel_tol, request.positivity_tol);
        let residual = cert.residual(kappa, &x);
        let vector = if kept.len() < request.keep_vectors {
            kept.push(x);
            Some(kept.len() - 1)
        } else {
            None
        };
        let omega = if class == ModeClass::Physical { (kappa - 1.0).sqrt() } else { 0.0 };
        modes.push(Mode { kappa, omega, class, residual, vector });
    }
    modes.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    let kernel_cluster = modes.iter().filter(|m| m.class == ModeClass::Kernel).count();
    certify(
        ModeSet {
            modes,
            vectors: kept,
            kernel_cluster,
            trace_null,
            complete: true,
            meta: meta(pencil, request, "dense-cholesky"),
        },
        request,
    )
}
