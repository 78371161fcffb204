use serde::{Deserialize, Serialize};

use super::{fit_order, regularity_exponent, OrderFit, RunConfig, TRACKING_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedMode {
    /// Zero-based position in the coarsest run.
    pub mode: usize,
    /// Tracked frequency per refinement level; shorter than the level list
    /// when tracking failed.
    pub omega: Vec<f64>,
    pub fit: Option<OrderFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub n_values: Vec<usize>,
    pub modes: Vec<TrackedMode>,
    /// `2ŝ` for the configured Poisson ratio, when tabulated.
    pub two_s_hat: Option<f64>,
    pub base: RunConfig,
}

/// Index of the entry of `list` nearest to `target`, if it is unambiguous
/// and within [`TRACKING_TOL`].
fn track(list: &[f64], target: f64) -> std::result::Result<usize, String> {
    let rel = |w: f64| (w - target).abs() / target.abs().max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..list.len()).collect();
    order.sort_by(|&a, &b| rel(list[a]).total_cmp(&rel(list[b])));
    let Some(&best) = order.first() else {
        return Err("no frequencies to match".into());
    };
    let d = rel(list[best]);
    if d > TRACKING_TOL {
        return Err(format!("nearest frequency to {target:.7} is {:.2e} away", d));
    }
    if let Some(&second) = order.get(1) {
        let d2 = rel(list[second]);
        let distinct = (list[second] - list[best]).abs() > 1e-8 * target.abs();
        if d2 <= TRACKING_TOL && d2 < 2.0 * d && distinct {
            return Err(format!(
                "{target:.7} matches both {:.7} and {:.7}",
                list[best], list[second]
            ));
        }
    }
    Ok(best)
}

pub fn convergence_study(base: &RunConfig, n_values: &[usize], mode_indices: &[usize]) -> Result<ConvergenceStudy> {
    base.validate()?;
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("N", "values must be strictly ascending"));
    }
    if mode_indices.is_empty() {
        return Err(Error::invalid("modes", "no modes to track"));
    }
    let m = base.m.max(mode_indices.iter().max().unwrap() + 3);
    let mut runs = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let cfg = RunConfig { n, m, ..base.clone() };
        runs.push(cfg.frequencies().map_err(|e| e.context(format!("N = {n}")))?);
    }
    let h: Vec<f64> = n_values.iter().map(|&n| 1.0 / n as f64).collect();
    let modes = mode_indices
        .iter()
        .map(|&mode| {
            let mut omega = Vec::with_capacity(runs.len());
            let mut error = None;
            match runs.first().and_then(|r| r.get(mode)) {
                None => error = Some(format!("coarsest run has no mode {}", mode + 1)),
                Some(&w0) => {
                    omega.push(w0);
                    for (run, n) in runs.iter().zip(n_values).skip(1) {
                        match track(run, *omega.last().unwrap()) {
                            Ok(i) => omega.push(run[i]),
                            Err(e) => {
                                error = Some(format!("N = {n}: {e}"));
                                break;
                            }
                        }
                    }
                }
            }
            let fit = match (&error, omega.len() == h.len()) {
                (None, true) => match fit_order(&h, &omega) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        error = Some(e.to_string());
                        None
                    }
                },
                _ => None,
            };
            TrackedMode { mode, omega, fit, error }
        })
        .collect();
    Ok(ConvergenceStudy {
        n_values: n_values.to_vec(),
        modes,
        two_s_hat: regularity_exponent(base.nu).map(|s| 2.0 * s),
        base: base.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub nu: f64,
    pub lambda: f64,
    pub omega: f64,
    /// `|ω(λ) − ω(∞)|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaLimit {
    pub mode: usize,
    pub reference_omega: f64,
    pub rows: Vec<LimitRow>,
    /// Least-squares slope of `log gap` against `log λ`; `None` with fewer
    /// than two usable rows.
    pub slope: Option<f64>,
    pub base: RunConfig,
}

fn mode_frequency(cfg: &RunConfig, mode: usize) -> Result<f64> {
    let cfg = RunConfig { m: cfg.m.max(mode + 1), ..cfg.clone() };
    let w = cfg.frequencies()?;
    w.get(mode).copied().ok_or_else(|| Error::NoConvergence(format!("run produced no mode {}", mode + 1)))
}

pub fn lambda_limit_study(base: &RunConfig, nu_values: &[f64], mode: usize) -> Result<LambdaLimit> {
    base.validate()?;
    if nu_values.is_empty() {
        return Err(Error::invalid("nu", "no Poisson ratios given"));
    }
    if nu_values.iter().any(|&nu| !(nu < 0.5)) || nu_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("nu", "values must be strictly increasing and below 0.5"));
    }
    let reference_cfg = RunConfig { nu: 0.5, ..base.clone() };
    let reference = mode_frequency(&reference_cfg, mode).map_err(|e| e.context("incompressible reference"))?;
    let mut rows = Vec::with_capacity(nu_values.len());
    for &nu in nu_values {
        let cfg = RunConfig { nu, ..base.clone() };
        let lambda = cfg.material()?.lambda.expect("compressible material has finite λ");
        let omega = mode_frequency(&cfg, mode).map_err(|e| e.context(format!("ν = {nu}")))?;
        rows.push(LimitRow { nu, lambda, omega, gap: (omega - reference).abs() });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.gap > 0.0).map(|r| (r.lambda.ln(), r.gap.ln())).collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(LambdaLimit { mode, reference_omega: reference, rows, slope, base: base.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracking_accepts_nearby_and_rejects_far_or_ambiguous() {
        assert_eq!(track(&[0.5, 0.68, 1.7], 0.6801), Ok(1));
        assert!(track(&[0.5, 1.7], 0.68).is_err());
        assert!(track(&[0.99, 1.01], 1.0).is_err());
        assert_eq!(track(&[1.0, 1.0], 1.0), Ok(0));
    }

    #[test]
    fn single_ratio_gives_one_row_and_no_slope() {
        let base = RunConfig { n: 2, k: 1, m: 2, ..RunConfig::default() };
        let l = lambda_limit_study(&base, &[0.45], 0).unwrap();
        assert_eq!(l.rows.len(), 1);
        assert_eq!(l.slope, None);
        assert!(lambda_limit_study(&base, &[0.49, 0.45], 0).is_err());
        assert!(lambda_limit_study(&base, &[0.45, 0.5], 0).is_err());
    }
}
