//! Orthonormal polynomial basis of `P_k` on the reference triangle.
//!
//! The functions are the Dubiner (Koornwinder) polynomials
//! `P_p(a) ((1 - b)/2)^p P_q^{(2p+1, 0)}(b)` in collapsed coordinates, scaled
//! to unit `L²` norm on the reference triangle. They are ordered by total
//! degree, so the first `dim(P_m)` functions span `P_m` for every `m ≤ k`.

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_DEGREE: usize = 10;

/// `dim P_k` in two variables.
pub const fn dim_pk(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

#[derive(Debug, Clone)]
pub struct ScalarBasis {
    degree: usize,
    /// `(p, q)` index pairs in evaluation order.
    modes: Vec<(usize, usize)>,
    norms: Vec<f64>,
}

impl ScalarBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::invalid(
                "k",
                format!("polynomial degree must be at most {MAX_DEGREE}, got {degree}"),
            ));
        }
        let mut modes = Vec::with_capacity(dim_pk(degree));
        for n in 0..=degree {
            for p in 0..=n {
                modes.push((p, n - p));
            }
        }
        let norms = modes
            .iter()
            .map(|&(p, q)| (((2 * p + 1) * (2 * p + 2 * q + 2)) as f64).sqrt())
            .collect();
        Ok(Self { degree, modes, norms })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eval(&self, xi: Point) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut g = vec![[0.0; 2]; self.len()];
        self.eval_with_grad(xi, &mut v, &mut g);
        v
    }

    /// Values and reference gradients at `xi`.
    pub fn eval_with_grad(&self, xi: Point, values: &mut [f64], grads: &mut [Point]) {
        let k = self.degree;
        let (x, y) = (xi[0], xi[1]);
        // Q_p = P_p(a) t^p with s = a t = 2x + y - 1, t = 1 - y; polynomial in (x, y)
        let s = 2.0 * x + y - 1.0;
        let t = 1.0 - y;
        let (ds, dt) = ([2.0, 1.0], [0.0, -1.0]);
        let mut q = vec![0.0; k + 1];
        let mut dq = vec![[0.0; 2]; k + 1];
        q[0] = 1.0;
        if k >= 1 {
            q[1] = s;
            dq[1] = ds;
        }
        for p in 1..k {
            let pf = p as f64;
            let c1 = (2.0 * pf + 1.0) / (pf + 1.0);
            let c2 = pf / (pf + 1.0);
            q[p + 1] = c1 * s * q[p] - c2 * t * t * q[p - 1];
            for d in 0..2 {
                dq[p + 1][d] = c1 * (ds[d] * q[p] + s * dq[p][d])
                    - c2 * (2.0 * t * dt[d] * q[p - 1] + t * t * dq[p - 1][d]);
            }
        }

        let b = 2.0 * y - 1.0;
        let mut jac = vec![0.0; k + 1];
        let mut djac = vec![0.0; k + 1];
        let mut idx = 0;
        for n in 0..=k {
            for p in 0..=n {
                let qd = n - p;
                // J_q^{(2p+1,0)} is reused across n, but the recurrence is cheap
                jacobi_with_derivative((2 * p + 1) as f64, qd, b, &mut jac, &mut djac);
                let (jv, jd) = (jac[qd], 2.0 * djac[qd]); // d/dy = 2 d/db
                let c = self.norms[idx];
                debug_assert_eq!(self.modes[idx], (p, qd));
                values[idx] = c * q[p] * jv;
                grads[idx] = [c * dq[p][0] * jv, c * (dq[p][1] * jv + q[p] * jd)];
                idx += 1;
            }
        }
    }
}

/// Jacobi polynomials `P_n^{(α,0)}(x)` and derivatives for `n = 0..=max`.
fn jacobi_with_derivative(alpha: f64, max: usize, x: f64, p: &mut [f64], dp: &mut [f64]) {
    p[0] = 1.0;
    dp[0] = 0.0;
    if max == 0 {
        return;
    }
    p[1] = 0.5 * (alpha + 2.0) * x + 0.5 * alpha;
    dp[1] = 0.5 * (alpha + 2.0);
    for n in 1..max {
        let nf = n as f64;
        let s = 2.0 * nf + alpha;
        let a1 = 2.0 * (nf + 1.0) * (nf + alpha + 1.0) * s;
        let a2 = (s + 1.0) * alpha * alpha;
        let a3 = (s + 1.0) * (s + 2.0) * s;
        let a4 = 2.0 * (nf + alpha) * nf * (s + 2.0);
        p[n + 1] = ((a2 + a3 * x) * p[n] - a4 * p[n - 1]) / a1;
        dp[n + 1] = ((a2 + a3 * x) * dp[n] + a3 * p[n] - a4 * dp[n - 1]) / a1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::quadrature::{make_quadrature, Domain};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interior_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < n {
            let (x, y): (f64, f64) = (rng.random_range(0.05..0.9), rng.random_range(0.05..0.9));
            if x + y < 0.9 {
                out.push([x, y]);
            }
        }
        out
    }

    #[test]
    fn dimensions() {
        assert_eq!(ScalarBasis::new(1).unwrap().len(), 3);
        assert_eq!(ScalarBasis::new(3).unwrap().len(), 10);
        assert!(ScalarBasis::new(11).is_err());
    }

    #[test]
    fn orthonormal_up_to_degree_6() {
        for k in 0..=6 {
            let b = ScalarBasis::new(k).unwrap();
            let q = make_quadrature(Domain::Triangle, 2 * k).unwrap();
            let n = b.len();
            let mut mass = DMatrix::<f64>::zeros(n, n);
            for (p, w) in q.points.iter().zip(&q.weights) {
                let v = b.eval(*p);
                for i in 0..n {
                    for j in 0..n {
                        mass[(i, j)] += w * v[i] * v[j];
                    }
                }
            }
            let err = (&mass - DMatrix::identity(n, n)).amax();
            assert!(err < 1e-12, "k={k}: {err}");
            let sv = mass.singular_values();
            assert!(sv.max() / sv.min() < 1e8);
        }
    }

    #[test]
    fn unisolvent_at_random_points() {
        let b = ScalarBasis::new(3).unwrap();
        let pts = interior_points(10, 7);
        let v = DMatrix::from_fn(10, 10, |i, j| b.eval(pts[i])[j]);
        let sv = v.singular_values();
        assert!(sv.min() > 1e-8 * sv.max());
    }

    #[test]
    fn hierarchical_low_order_span() {
        // the first three functions span P_1: 1, x, y are reproduced exactly
        let b = ScalarBasis::new(4).unwrap();
        let q = make_quadrature(Domain::Triangle, 8).unwrap();
        for f in [|_: Point| 1.0, |p: Point| p[0], |p: Point| p[1]] {
            let coeff: Vec<f64> = (0..3)
                .map(|i| q.integrate(|p| f(p) * b.eval(p)[i]))
                .collect();
            for p in interior_points(5, 3) {
                let v = b.eval(p);
                let approx: f64 = (0..3).map(|i| coeff[i] * v[i]).sum();
                assert!((approx - f(p)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for k in [1, 2, 5] {
            let b = ScalarBasis::new(k).unwrap();
            let n = b.len();
            for p in interior_points(5, 11 + k as u64) {
                let mut v = vec![0.0; n];
                let mut g = vec![[0.0; 2]; n];
                b.eval_with_grad(p, &mut v, &mut g);
                for d in 0..2 {
                    let mut pp = p;
                    let mut pm = p;
                    pp[d] += h;
                    pm[d] -= h;
                    let (vp, vm) = (b.eval(pp), b.eval(pm));
                    for i in 0..n {
                        let fd = (vp[i] - vm[i]) / (2.0 * h);
                        assert!((fd - g[i][d]).abs() < 1e-7 * (1.0 + fd.abs()), "k={k} i={i} d={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn evaluates_on_the_singular_vertex() {
        let b = ScalarBasis::new(4).unwrap();
        let v = b.eval([0.0, 1.0]);
        assert!(v.iter().all(|x| x.is_finite()));
    }
}
