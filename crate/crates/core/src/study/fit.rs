//! Three-parameter order fit `ω(h) ≈ ω_ex + C h^α`.
//!
//! For fixed `α` the model is linear in `(ω_ex, C)`, so the sum of squares
//! `R(α)` is evaluated in closed form. `α` is scanned over
//! `[ALPHA_MIN, ALPHA_MAX]` with step [`ALPHA_STEP`], and the best grid point
//! is polished with a golden-section search on the neighbouring grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALPHA_MIN: f64 = 0.2;
pub const ALPHA_MAX: f64 = 5.0;
pub const ALPHA_STEP: f64 = 1e-3;
/// Final bracket width of the golden-section search.
pub const ALPHA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub omega_ex: f64,
    pub c: f64,
    /// `None` when the data carry no rate information (all `ω` equal).
    pub alpha: Option<f64>,
    /// `√(Σ (ω_ex + C hᵢ^α − ωᵢ)²)`.
    pub residual: f64,
    pub h: Vec<f64>,
    pub omega: Vec<f64>,
}

impl OrderFit {
    /// `|ω_ex − ω(h_min)| ≤ 10 |ω(h_max) − ω(h_min)|`.
    pub fn within_sanity_band(&self) -> bool {
        let imin = argmin(&self.h);
        let imax = argmin(&self.h.iter().map(|h| -h).collect::<Vec<_>>());
        let spread = (self.omega[imax] - self.omega[imin]).abs();
        (self.omega_ex - self.omega[imin]).abs() <= 10.0 * spread
    }
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

/// Least-squares `(ω_ex, C)` and residual sum of squares at fixed `α`.
fn linear_fit(h: &[f64], omega: &[f64], alpha: f64) -> (f64, f64, f64) {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|h| h.powf(alpha)).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = omega.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(omega).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let e = my - c * mx;
    let rss = x.iter().zip(omega).map(|(x, y)| (e + c * x - y).powi(2)).sum();
    (e, c, rss)
}

pub fn fit_order(h: &[f64], omega: &[f64]) -> Result<OrderFit> {
    if h.len() != omega.len() {
        return Err(Error::DimensionMismatch(format!("{} h values, {} ω values", h.len(), omega.len())));
    }
    if h.iter().chain(omega).any(|v| !v.is_finite()) || h.iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid("h", "mesh sizes must be positive and all data finite"));
    }
    let mut distinct = h.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid("h", format!("need at least 3 distinct mesh sizes, got {}", distinct.len())));
    }
    let base = OrderFit { omega_ex: 0.0, c: 0.0, alpha: None, residual: 0.0, h: h.to_vec(), omega: omega.to_vec() };
    let mean = omega.iter().sum::<f64>() / omega.len() as f64;
    let scale = omega.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if omega.iter().all(|w| (w - mean).abs() <= 1e-14 * scale) {
        return Ok(OrderFit { omega_ex: mean, ..base });
    }

    let steps = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize;
    let grid = |i: usize| ALPHA_MIN + i as f64 * ALPHA_STEP;
    let rss = |a: f64| linear_fit(h, omega, a).2;
    let best = (0..=steps).min_by(|&a, &b| rss(grid(a)).total_cmp(&rss(grid(b)))).unwrap_or(0);

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (grid(best.saturating_sub(1)), grid((best + 1).min(steps)));
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (rss(x1), rss(x2));
    while hi - lo > ALPHA_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = rss(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = rss(x2);
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    if rss(grid(best)) < rss(alpha) {
        alpha = grid(best);
    }
    let (omega_ex, c, r) = linear_fit(h, omega, alpha);
    Ok(OrderFit { omega_ex, c, alpha: Some(alpha), residual: r.sqrt(), ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(e: f64, c: f64, a: f64) -> (Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = [16.0, 32.0, 48.0, 64.0].iter().map(|n| 1.0 / n).collect();
        let w = h.iter().map(|h| e + c * h.powf(a)).collect();
        (h, w)
    }

    #[test]
    fn exact_model_is_recovered() {
        let (h, w) = synthetic(2.0, 0.5, 1.3);
        let f = fit_order(&h, &w).unwrap();
        assert!((f.alpha.unwrap() - 1.3).abs() < 1e-6);
        assert!((f.omega_ex - 2.0).abs() < 1e-6);
        assert!((f.c - 0.5).abs() < 1e-6);
        assert!(f.residual < 1e-9);
        assert!(f.within_sanity_band());
    }

    #[test]
    fn listed_rates_are_recovered() {
        for a in [0.6, 1.0, 1.19, 1.34, 2.0] {
            let (h, w) = synthetic(0.68, -0.3, a);
            let f = fit_order(&h, &w).unwrap();
            assert!((f.alpha.unwrap() - a).abs() < 1e-6, "{a}: {:?}", f.alpha);
            assert!((f.omega_ex - 0.68).abs() < 1e-6);
            assert!((f.c + 0.3).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_order(&[0.1, 0.2], &[1.0, 1.0]).is_err());
        assert!(fit_order(&[0.1, 0.1, 0.2, 0.2], &[1.0, 1.0, 1.0, 1.0]).is_err());
        let f = fit_order(&[0.1, 0.2, 0.3], &[1.5, 1.5, 1.5]).unwrap();
        assert_eq!(f.alpha, None);
        assert_eq!(f.omega_ex, 1.5);
        assert!(fit_order(&[0.1, -0.2, 0.3], &[1.0, 1.1, 1.2]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_random_models(e in 0.1f64..5.0, c in prop_oneof![-2.0f64..-0.05, 0.05f64..2.0], a in 0.5f64..3.0) {
            let (h, w) = synthetic(e, c, a);
            let f = fit_order(&h, &w).unwrap();
            prop_assert!((f.alpha.unwrap() - a).abs() < 1e-5);
            prop_assert!((f.omega_ex - e).abs() < 1e-6 * (1.0 + e));
        }
    }
}
