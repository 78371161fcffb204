//! Reduction of a mixed pencil to the kernel of the rotation coupling.
//!
//! Write the pencil as `A = [[M + K, Cᵀ], [C, 0]]`, `B = [[M, Cᵀ], [C, 0]]`.
//! An eigenpair with `κ ≠ 1` has `C σ = 0`, so `σ = Z y` with `C Z = 0` and
//! `Zᵀ K Z y = ω² Zᵀ M Z y`, `ω² = κ − 1`. `C` is block diagonal, so `Z` is
//! built element by element and chosen with `Zᵀ M Z = diag(I, 0)`. The zero
//! block only appears for the incompressible compliance, where it holds the
//! trace fields `q I`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forms::{AssembledPencil, CsrMatrix, PencilLayout};

pub(crate) struct Reduction {
    pub layout: PencilLayout,
    /// Columns of `Z_e` with unit reduced mass.
    pub nw: usize,
    /// Columns of `Z_e` with zero reduced mass.
    pub np: usize,
    z: Vec<DMatrix<f64>>,
    /// `(C_e C_eᵀ)⁻¹ C_e` for rotation recovery.
    rot: Vec<DMatrix<f64>>,
    /// Stress block of `A − B`.
    pub k: CsrMatrix,
    /// Stress block of `B`.
    pub m: CsrMatrix,
    /// `Zᵀ K Z` in reduced numbering: all `w` columns first, then all `p`.
    pub kr: CsrMatrix,
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

impl Reduction {
    pub fn new(pencil: &AssembledPencil) -> Result<Self> {
        let layout = pencil.layout.ok_or_else(|| {
            Error::Unsupported("pencil has no stress/rotation layout to reduce".into())
        })?;
        if layout.dim() != pencil.dim {
            return Err(Error::DimensionMismatch(format!(
                "layout describes {} dofs, pencil has {}",
                layout.dim(),
                pencil.dim
            )));
        }
        let ns = layout.stress_dim();
        let nb = layout.stress_block;
        let nq = layout.rotation_block;
        let m = pencil.b.submatrix(0..ns, 0..ns);
        let k = pencil.a.submatrix(0..ns, 0..ns).add_scaled(-1.0, &m)?;

        let t = layout.num_elements;
        let mut z = Vec::with_capacity(t);
        let mut rot = Vec::with_capacity(t);
        let mut shape: Option<(usize, usize)> = None;
        for e in 0..t {
            let sr = layout.stress_range(e);
            let c = pencil.b.submatrix(layout.rotation_range(e), sr.clone()).to_dense();
            let me = m.submatrix(sr.clone(), sr).to_dense();

            let (cv, cvec) = sorted_eigen(c.transpose() * &c);
            let nz = nb - nq;
            let top = cv[nb - 1].abs().max(f64::MIN_POSITIVE);
            if nq > 0 && (cv[nz - 1] > 1e-10 * top || cv[nz] < 1e-8 * top) {
                return Err(Error::Factorization(format!(
                    "rotation coupling of element {e} does not have full rank"
                )));
            }
            let z0 = cvec.columns(0, nz).into_owned();
            let (mv, mvec) = sorted_eigen(z0.transpose() * &me * &z0);
            let mmax = mv[nz - 1].abs().max(f64::MIN_POSITIVE);
            let np = mv.iter().filter(|&&v| v <= 1e-10 * mmax).count();
            let nw = nz - np;
            match shape {
                None => shape = Some((nw, np)),
                Some(s) if s != (nw, np) => {
                    return Err(Error::Factorization(format!(
                        "element {e} has a {nw}+{np} reduced block, expected {}+{}",
                        s.0, s.1
                    )))
                }
                _ => {}
            }
            // w columns after the null-mass ones in ascending order
            let mut ze = DMatrix::zeros(nb, nz);
            for (col, src) in (np..nz).chain(0..np).enumerate() {
                let scale = if src >= np { 1.0 / mv[src].sqrt() } else { 1.0 };
                let v = &z0 * mvec.column(src) * scale;
                ze.set_column(col, &v);
            }
            z.push(ze);
            let cct = &c * c.transpose();
            let chol = cct.cholesky().ok_or_else(|| {
                Error::Factorization(format!("C Cᵀ of element {e} is not positive definite"))
            })?;
            rot.push(chol.solve(&c));
        }
        let (nw, np) = shape.unwrap_or((0, 0));
        let mut red = Self {
            layout,
            nw,
            np,
            z,
            rot,
            k,
            m,
            kr: CsrMatrix::zeros(0, 0),
        };
        red.kr = red.project(&red.k)?;
        Ok(red)
    }

    pub fn num_w(&self) -> usize {
        self.layout.num_elements * self.nw
    }

    pub fn num_p(&self) -> usize {
        self.layout.num_elements * self.np
    }

    pub fn dim(&self) -> usize {
        self.num_w() + self.num_p()
    }

    fn reduced_index(&self, e: usize, c: usize) -> usize {
        if c < self.nw {
            e * self.nw + c
        } else {
            self.num_w() + e * self.np + (c - self.nw)
        }
    }

    /// `Zᵀ S Z` for a stress-block matrix `S`.
    fn project(&self, s: &CsrMatrix) -> Result<CsrMatrix> {
        let nb = self.layout.stress_block;
        let nz = self.nw + self.np;
        let mut triplets = Vec::new();
        let mut blocks: Vec<(usize, DMatrix<f64>)> = Vec::new();
        for e in 0..self.layout.num_elements {
            blocks.clear();
            for (r, row) in self.layout.stress_range(e).enumerate() {
                for (col, v) in s.row(row) {
                    let f = col / nb;
                    let pos = match blocks.iter().position(|(g, _)| *g == f) {
                        Some(p) => p,
                        None => {
                            blocks.push((f, DMatrix::zeros(nb, nb)));
                            blocks.len() - 1
                        }
                    };
                    blocks[pos].1[(r, col - f * nb)] += v;
                }
            }
            blocks.sort_by_key(|(f, _)| *f);
            for (f, blk) in &blocks {
                let red = self.z[e].transpose() * blk * &self.z[*f];
                for i in 0..nz {
                    for j in 0..nz {
                        triplets.push((self.reduced_index(e, i), self.reduced_index(*f, j), red[(i, j)]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &triplets)
    }

    /// Stress coefficients `σ = Z y`.
    pub fn stress(&self, y: &[f64]) -> Vec<f64> {
        let nb = self.layout.stress_block;
        let nz = self.nw + self.np;
        let mut sigma = vec![0.0; self.layout.stress_dim()];
        for e in 0..self.layout.num_elements {
            let ze = &self.z[e];
            for c in 0..nz {
                let yc = y[self.reduced_index(e, c)];
                if yc == 0.0 {
                    continue;
                }
                for r in 0..nb {
                    sigma[e * nb + r] += ze[(r, c)] * yc;
                }
            }
        }
        sigma
    }

    /// Full eigenvector `(σ, r)` from a reduced one. Rotations solve
    /// `Cᵀ r = K σ / ω² − M σ` element by element; `kernel` sets `r = 0`.
    pub fn reconstruct(&self, y: &[f64], omega2: f64, kernel: bool) -> Vec<f64> {
        let sigma = self.stress(y);
        let ns = self.layout.stress_dim();
        let nb = self.layout.stress_block;
        let mut x = sigma.clone();
        x.resize(self.layout.dim(), 0.0);
        if kernel || omega2 == 0.0 {
            return x;
        }
        let ks = self.k.mul_vec(&sigma);
        let ms = self.m.mul_vec(&sigma);
        let g: Vec<f64> = ks.iter().zip(&ms).map(|(a, b)| a / omega2 - b).collect();
        for e in 0..self.layout.num_elements {
            let ge = &g[e * nb..(e + 1) * nb];
            let re = &self.rot[e];
            for j in 0..self.layout.rotation_block {
                let v: f64 = (0..nb).map(|c| re[(j, c)] * ge[c]).sum();
                x[ns + e * self.layout.rotation_block + j] = v;
            }
        }
        x
    }
}
