//! Thick-restart (Krylov–Schur) Lanczos for operators that are self-adjoint
//! in a given inner product.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) struct KrylovOptions {
    pub nev: usize,
    pub ncv: usize,
    /// Ritz residual bound relative to `|θ|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct RitzPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub restarts: usize,
}

/// Inner product `⟨u, v⟩ = uᵀ G v`; `None` is Euclidean.
pub(crate) type Metric<'a> = Option<&'a dyn Fn(&[f64]) -> Vec<f64>>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn apply_metric(metric: Metric<'_>, v: &[f64]) -> Vec<f64> {
    match metric {
        Some(g) => g(v),
        None => v.to_vec(),
    }
}

fn norm(metric: Metric<'_>, v: &[f64]) -> Result<f64> {
    let n2 = dot(v, &apply_metric(metric, v));
    if n2 < 0.0 {
        return Err(Error::Unsupported("inner product is not positive definite".into()));
    }
    Ok(n2.sqrt())
}

/// Removes the components of `w` along `basis` twice, returning the summed
/// coefficients.
fn orthogonalize(metric: Metric<'_>, basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        let gw = apply_metric(metric, w);
        let coef: Vec<f64> = basis.iter().map(|v| dot(v, &gw)).collect();
        for (v, c) in basis.iter().zip(&coef) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
        for (hi, c) in h.iter_mut().zip(&coef) {
            *hi += c;
        }
    }
    h
}

/// Returns the `nev` Ritz pairs with the highest `score`; `score` returns
/// `None` for excluded values. `op` writes `y = Op x`.
pub(crate) fn krylov_schur(
    n: usize,
    op: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    metric: Metric<'_>,
    start: Vec<f64>,
    score: &dyn Fn(f64) -> Option<f64>,
    opts: &KrylovOptions,
) -> Result<RitzPairs> {
    let ncv = opts.ncv.min(n);
    if opts.nev == 0 || opts.nev > ncv {
        return Err(Error::invalid("m", format!("cannot extract {} pairs from a {ncv}-dimensional space", opts.nev)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(ncv + 1);
    let mut v0 = start;
    let nv = norm(metric, &v0)?;
    if nv == 0.0 || !nv.is_finite() {
        return Err(Error::NoConvergence("start vector vanished".into()));
    }
    v0.iter_mut().for_each(|x| *x /= nv);
    basis.push(v0);

    let mut h = DMatrix::<f64>::zeros(ncv, ncv);
    let mut kept = 0;
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    for restart in 0..=opts.max_restarts {
        let mut beta = 0.0;
        for j in kept..ncv {
            op(&basis[j], &mut w)?;
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::Factorization("operator produced non-finite values".into()));
            }
            let coef = orthogonalize(metric, &basis, &mut w);
            for (i, c) in coef.iter().enumerate().take(j + 1) {
                h[(i, j)] = *c;
                h[(j, i)] = *c;
            }
            scale = scale.max(coef[j].abs());
            beta = norm(metric, &w)?;
            let next = if beta <= 1e-13 * scale.max(f64::MIN_POSITIVE) || j + 1 == n {
                // invariant subspace: continue with a fresh direction
                beta = 0.0;
                let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                orthogonalize(metric, &basis, &mut r);
                let nr = norm(metric, &r)?;
                if nr > 0.0 {
                    r.iter_mut().for_each(|x| *x /= nr);
                }
                r
            } else {
                w.iter().map(|x| x / beta).collect()
            };
            if j + 1 < ncv {
                h[(j + 1, j)] = beta;
                h[(j, j + 1)] = beta;
            }
            basis.push(next);
        }

        let eig = h.clone().symmetric_eigen();
        let theta = &eig.eigenvalues;
        let y = &eig.eigenvectors;
        let mut order: Vec<(usize, f64)> = (0..ncv).filter_map(|i| score(theta[i]).map(|s| (i, s))).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let resid = |i: usize| (beta * y[(ncv - 1, i)]).abs();
        let done = order.len() >= opts.nev
            && order[..opts.nev].iter().all(|&(i, _)| resid(i) <= opts.tol * theta[i].abs().max(1e-300));
        if done || restart == opts.max_restarts {
            if !done {
                let worst = order
                    .iter()
                    .take(opts.nev)
                    .map(|&(i, _)| resid(i) / theta[i].abs())
                    .fold(0.0, f64::max);
                return Err(Error::NoConvergence(format!(
                    "{} restarts, worst relative Ritz residual {worst:.2e}",
                    opts.max_restarts
                )));
            }
            let sel: Vec<usize> = order[..opts.nev].iter().map(|&(i, _)| i).collect();
            let vectors = sel.iter().map(|&i| combine(&basis[..ncv], y, i)).collect();
            return Ok(RitzPairs {
                values: sel.iter().map(|&i| theta[i]).collect(),
                vectors,
                restarts: restart,
            });
        }

        let keep = (opts.nev + (ncv - opts.nev) / 2).min(order.len()).min(ncv - 1).max(1.min(order.len()));
        let sel: Vec<usize> = order[..keep].iter().map(|&(i, _)| i).collect();
        let residual_dir = basis.pop().expect("basis has ncv + 1 vectors");
        let mut next_basis: Vec<Vec<f64>> = sel.iter().map(|&i| combine(&basis, y, i)).collect();
        next_basis.push(residual_dir);
        basis = next_basis;
        h.fill(0.0);
        for (a, &i) in sel.iter().enumerate() {
            h[(a, a)] = theta[i];
            let b = beta * y[(ncv - 1, i)];
            h[(keep, a)] = b;
            h[(a, keep)] = b;
        }
        kept = keep;
    }
    unreachable!("loop returns on the last restart")
}

fn combine(basis: &[Vec<f64>], y: &DMatrix<f64>, col: usize) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for (l, v) in basis.iter().enumerate() {
        let c = y[(l, col)];
        if c != 0.0 {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
    }
    out
}
