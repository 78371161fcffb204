use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{format_sig7, RunConfig, SPURIOUS_TOL};
use crate::error::{Error, Result};

/// Extra reference modes so that near-degenerate pairs at the end of a list
/// still find their partner.
const REFERENCE_MARGIN: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub omega: Vec<f64>,
    pub spurious: Vec<bool>,
    /// Requested modes the run could not supply.
    pub shortfall: usize,
}

/// One column per swept value, one row per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// `aS` or `N`.
    pub axis: String,
    pub values: Vec<f64>,
    pub reference: f64,
    pub reference_omega: Vec<f64>,
    pub m: usize,
    pub cells: Vec<TableCell>,
    pub base: RunConfig,
}

impl FrequencyTable {
    pub fn spurious_count(&self, column: usize) -> usize {
        self.cells[column].spurious.iter().filter(|&&f| f).count()
    }

    fn axis_label(&self, v: f64) -> String {
        format!("{}={}", self.axis, v)
    }

    pub fn write_csv(&self, out: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        let mut header = vec!["mode".to_string()];
        for &v in &self.values {
            header.push(self.axis_label(v));
            header.push(format!("{}_spurious", self.axis_label(v)));
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.m {
            let mut row = vec![(i + 1).to_string()];
            for cell in &self.cells {
                match cell.omega.get(i) {
                    Some(w) => {
                        row.push(format_sig7(*w));
                        row.push(cell.spurious[i].to_string());
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Flags every entry of `values` without a partner in `reference` within
/// relative tolerance `tol`. Pairs are matched globally nearest-first and each
/// reference entry is used once.
pub fn flag_spurious(values: &[f64], reference: &[f64], tol: f64) -> Vec<bool> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            let d = (v - r).abs() / r.abs().max(f64::MIN_POSITIVE);
            if d <= tol {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut flagged = vec![true; values.len()];
    let mut used = vec![false; reference.len()];
    for (_, i, j) in pairs {
        if flagged[i] && !used[j] {
            flagged[i] = false;
            used[j] = true;
        }
    }
    flagged
}

fn cell(cfg: &RunConfig, reference: &[f64]) -> Result<TableCell> {
    let omega = cfg.frequencies()?;
    let spurious = flag_spurious(&omega, reference, SPURIOUS_TOL);
    Ok(TableCell { shortfall: cfg.m - omega.len(), omega, spurious })
}

pub fn sweep_penalty(base: &RunConfig, as_values: &[f64], reference_as: f64) -> Result<FrequencyTable> {
    base.validate()?;
    if as_values.is_empty() {
        return Err(Error::invalid("aS", "no values to sweep"));
    }
    if as_values.iter().any(|&a| a > reference_as) {
        return Err(Error::invalid("aS", format!("reference {reference_as} must not be below any swept value")));
    }
    let reference_cfg = RunConfig { a_s: reference_as, m: base.m + REFERENCE_MARGIN, ..base.clone() };
    let reference = reference_cfg.frequencies().map_err(|e| e.context("reference run"))?;
    let mut cells = Vec::with_capacity(as_values.len());
    for &a_s in as_values {
        let cfg = RunConfig { a_s, ..base.clone() };
        cells.push(cell(&cfg, &reference).map_err(|e| e.context(format!("aS = {a_s}")))?);
    }
    Ok(FrequencyTable {
        axis: "aS".into(),
        values: as_values.to_vec(),
        reference: reference_as,
        reference_omega: reference,
        m: base.m,
        cells,
        base: base.clone(),
    })
}

pub fn refine_study(base: &RunConfig, n_values: &[usize]) -> Result<FrequencyTable> {
    base.validate()?;
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("N", "values must be non-empty and strictly ascending"));
    }
    let finest = *n_values.last().unwrap();
    let reference_cfg = RunConfig { n: finest, m: base.m + REFERENCE_MARGIN, ..base.clone() };
    let reference = reference_cfg.frequencies().map_err(|e| e.context("reference run"))?;
    let mut cells = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let cfg = RunConfig { n, ..base.clone() };
        cells.push(cell(&cfg, &reference).map_err(|e| e.context(format!("N = {n}")))?);
    }
    Ok(FrequencyTable {
        axis: "N".into(),
        values: n_values.iter().map(|&n| n as f64).collect(),
        reference: finest as f64,
        reference_omega: reference,
        m: base.m,
        cells,
        base: base.clone(),
    })
}
