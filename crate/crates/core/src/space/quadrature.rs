//! Gauss rules on the reference edge `[0, 1]` and the reference triangle
//! `{x, y ≥ 0, x + y ≤ 1}`.
//!
//! Triangle rules of exactness ≥ 2 are collapsed (Duffy) tensor products of
//! Gauss–Legendre rules; all weights are positive.

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_EXACTNESS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Triangle,
    Edge,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub domain: Domain,
    /// Reference points. Edge rules store the parameter `t ∈ [0, 1]` in the
    /// first coordinate and zero in the second.
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Highest total degree integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }
}

pub fn make_quadrature(domain: Domain, exactness: usize) -> Result<QuadratureRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::invalid(
            "exactness",
            format!("quadrature exactness {exactness} exceeds {MAX_EXACTNESS}"),
        ));
    }
    let (points, weights) = match domain {
        Domain::Edge => {
            let (t, w) = gauss_legendre_unit((exactness + 2) / 2);
            (t.into_iter().map(|t| [t, 0.0]).collect(), w)
        }
        Domain::Triangle if exactness <= 1 => (vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        Domain::Triangle => collapsed_triangle(exactness),
    };
    Ok(QuadratureRule {
        domain,
        points,
        weights,
        exactness,
    })
}

fn collapsed_triangle(exactness: usize) -> (Vec<Point>, Vec<f64>) {
    // x = u, y = (1 - u) v, dx dy = (1 - u) du dv: degree p+1 in u, p in v
    let (us, wu) = gauss_legendre_unit((exactness + 3) / 2);
    let (vs, wv) = gauss_legendre_unit((exactness + 2) / 2);
    let mut points = Vec::with_capacity(us.len() * vs.len());
    let mut weights = Vec::with_capacity(us.len() * vs.len());
    for (u, a) in us.iter().zip(&wu) {
        for (v, b) in vs.iter().zip(&wv) {
            points.push([*u, (1.0 - u) * v]);
            weights.push(a * b * (1.0 - u));
        }
    }
    (points, weights)
}

/// `n`-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn midpoint_rule() {
        let q = make_quadrature(Domain::Triangle, 1).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q.integrate(|p| p[0] + p[1]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_gauss_on_edge() {
        let q = make_quadrature(Domain::Edge, 3).unwrap();
        assert_eq!(q.len(), 2);
        assert!((q.integrate(|p| p[0].powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn edge_point_count() {
        for e in 0..=MAX_EXACTNESS {
            let q = make_quadrature(Domain::Edge, e).unwrap();
            assert_eq!(q.len(), (e + 2) / 2);
        }
    }

    #[test]
    fn x4y2_at_exactness_6() {
        let q = make_quadrature(Domain::Triangle, 6).unwrap();
        let exact = monomial_integral(4, 2);
        assert!((q.integrate(|p| p[0].powi(4) * p[1].powi(2)) - exact).abs() < 1e-14 * exact);
    }

    #[test]
    fn triangle_rules_are_exact_for_all_monomials() {
        for e in 0..=MAX_EXACTNESS {
            let q = make_quadrature(Domain::Triangle, e).unwrap();
            assert!(q.weights.iter().all(|w| *w > 0.0));
            for a in 0..=e as u32 {
                for b in 0..=(e as u32 - a) {
                    let exact = monomial_integral(a, b);
                    let got = q.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!(
                        (got - exact).abs() <= 1e-14 * exact.max(1e-300) + 1e-30,
                        "exactness {e} monomial x^{a} y^{b}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_rules_are_exact() {
        for e in 0..=MAX_EXACTNESS {
            let q = make_quadrature(Domain::Edge, e).unwrap();
            for a in 0..=e as i32 {
                let exact = 1.0 / (a as f64 + 1.0);
                assert!((q.integrate(|p| p[0].powi(a)) - exact).abs() < 1e-14 * exact);
            }
        }
    }

    #[test]
    fn rejects_high_exactness() {
        assert!(make_quadrature(Domain::Triangle, 26).is_err());
    }
}
