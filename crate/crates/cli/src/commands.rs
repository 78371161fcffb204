use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dgmix::spectral::{ModeClass, ModeSet};
use dgmix::study::{
    convergence_study, fit_order, format_sig7, lambda_limit_study, refine_study, sweep_penalty, FrequencyTable,
    OrderFit,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, Resolved};
use crate::CliError;

fn open_output(cfg: &Resolved) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::usage(format!("output: {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn provenance(cfg: &Resolved) -> String {
    format!(
        "# dgmix {} config={}",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(cfg).expect("config serializes")
    )
}

/// Writes `body` as CSV after the provenance line and `notes`, or as JSON
/// next to the resolved config.
fn emit<T: Serialize>(
    cfg: &Resolved,
    notes: &[String],
    result: &T,
    csv: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    let mut out = open_output(cfg)?;
    match cfg.format {
        Format::Csv => {
            writeln!(out, "{}", provenance(cfg))?;
            for n in notes {
                writeln!(out, "# {n}")?;
            }
            csv(&mut out)?;
        }
        Format::Json => {
            let doc = json!({
                "dgmix": env!("CARGO_PKG_VERSION"),
                "config": cfg,
                "result": result,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("result serializes"))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?))
}

fn export(cfg: &Resolved) -> Result<(), CliError> {
    if let Some(path) = &cfg.export_mesh {
        let mesh = cfg.run.mesh().map_err(CliError::from_core)?;
        let mut f = create(path)?;
        writeln!(f, "{}", mesh.to_json().map_err(|e| CliError::failure(e.to_string()))?)?;
        f.flush()?;
    }
    if let Some(prefix) = &cfg.export_matrices {
        let pencil = cfg.run.pencil().map_err(CliError::from_core)?;
        for (name, m) in [("A", &pencil.a), ("B", &pencil.b)] {
            let mut path = prefix.clone().into_os_string();
            path.push(format!("_{name}.mtx"));
            let mut f = create(Path::new(&path))?;
            m.write_matrix_market(&mut f)?;
            f.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveResult<'a> {
    modes: Vec<&'a dgmix::spectral::Mode>,
    shortfall: usize,
    kernel_cluster: usize,
    trace_null: usize,
    unresolved: usize,
    complete: bool,
    meta: &'a dgmix::spectral::SolverMeta,
}

pub fn solve(cfg: &Resolved) -> Result<(), CliError> {
    export(cfg)?;
    let set: ModeSet = cfg.run.solve().map_err(CliError::from_core)?;
    let modes: Vec<_> = set.physical().take(cfg.run.m).collect();
    let result = SolveResult {
        shortfall: cfg.run.m - modes.len(),
        modes,
        kernel_cluster: set.kernel_cluster,
        trace_null: set.trace_null,
        unresolved: set.count(ModeClass::Unresolved),
        complete: set.complete,
        meta: &set.meta,
    };
    eprintln!(
        "{} physical modes, kernel cluster {}{}, trace-null {}, method {}",
        result.modes.len(),
        if set.complete { "" } else { "≥ " },
        set.kernel_cluster,
        set.trace_null,
        set.meta.method
    );
    let notes = [format!(
        "kernel_cluster={} trace_null={} unresolved={} complete={} method={}",
        result.kernel_cluster, result.trace_null, result.unresolved, result.complete, set.meta.method
    )];
    emit(cfg, &notes, &result, |out| {
        writeln!(out, "index,kappa,omega,class,residual")?;
        for (i, m) in result.modes.iter().enumerate() {
            writeln!(out, "{},{},{},{},{:.2e}", i + 1, format_sig7(m.kappa), format_sig7(m.omega), m.class, m.residual)?;
        }
        Ok(())
    })
}

pub fn sweep_as(cfg: &Resolved) -> Result<(), CliError> {
    let table = sweep_penalty(&cfg.run, &cfg.as_values, cfg.reference).map_err(CliError::from_core)?;
    report_flags(&table);
    emit(cfg, &[format!("reference aS={}", cfg.reference)], &table, |out| table.write_csv(out))
}

fn report_flags(table: &FrequencyTable) {
    for (i, v) in table.values.iter().enumerate() {
        eprintln!("{} = {v}: {} spurious", table.axis, table.spurious_count(i));
    }
}

pub fn refine(cfg: &Resolved) -> Result<(), CliError> {
    let table = refine_study(&cfg.run, &cfg.n_values).map_err(CliError::from_core)?;
    report_flags(&table);
    emit(cfg, &[format!("reference N={}", table.reference)], &table, |out| table.write_csv(out))
}

fn fit_cells(fit: Option<&OrderFit>) -> [String; 4] {
    match fit {
        Some(f) => [
            format_sig7(f.omega_ex),
            format_sig7(f.c),
            f.alpha.map(|a| format!("{a:.4}")).unwrap_or_else(|| "undefined".into()),
            format!("{:.2e}", f.residual),
        ],
        None => Default::default(),
    }
}

pub fn converge(cfg: &Resolved) -> Result<(), CliError> {
    let modes: Vec<usize> = cfg.track.iter().map(|t| t - 1).collect();
    let study = convergence_study(&cfg.run, &cfg.n_values, &modes).map_err(CliError::from_core)?;
    let two_s = study.two_s_hat.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into());
    for t in &study.modes {
        match (&t.fit, &t.error) {
            (Some(f), _) => eprintln!(
                "mode {}: alpha = {}, omega_ex = {}, 2s = {two_s}",
                t.mode + 1,
                f.alpha.map(|a| format!("{a:.4}")).unwrap_or_else(|| "undefined".into()),
                format_sig7(f.omega_ex)
            ),
            (None, e) => eprintln!("mode {}: {}", t.mode + 1, e.as_deref().unwrap_or("no fit")),
        }
    }
    emit(cfg, &[format!("two_s_hat={two_s}")], &study, |out| {
        let mut header = vec!["mode".to_string()];
        header.extend(study.n_values.iter().map(|n| format!("N={n}")));
        header.extend(["omega_ex", "C", "alpha", "residual", "two_s_hat", "error"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for t in &study.modes {
            let mut row = vec![(t.mode + 1).to_string()];
            for i in 0..study.n_values.len() {
                row.push(t.omega.get(i).map(|w| format_sig7(*w)).unwrap_or_default());
            }
            row.extend(fit_cells(t.fit.as_ref()));
            row.push(two_s.clone());
            row.push(t.error.clone().unwrap_or_default().replace(',', ";"));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    })
}

pub fn limit(cfg: &Resolved) -> Result<(), CliError> {
    let [mode] = cfg.track[..] else {
        return Err(CliError::usage("track: limit follows exactly one mode"));
    };
    let study = lambda_limit_study(&cfg.run, &cfg.nu_values, mode - 1).map_err(CliError::from_core)?;
    let slope = study.slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "undefined".into());
    eprintln!("mode {mode}: omega(inf) = {}, slope = {slope}", format_sig7(study.reference_omega));
    let note = format!("reference_omega={} slope={slope}", format_sig7(study.reference_omega));
    emit(cfg, &[note], &study, |out| {
        writeln!(out, "nu,lambda,omega,gap")?;
        for r in &study.rows {
            writeln!(out, "{},{},{},{:.6e}", r.nu, format_sig7(r.lambda), format_sig7(r.omega), r.gap)?;
        }
        Ok(())
    })
}

fn read_fit_input(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let bad = |msg: String| CliError::usage(format!("input: {}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.to_ascii_lowercase().as_str()));
    let omega_col = col(&["omega", "ω"]).ok_or_else(|| bad("missing `omega` column".into()))?;
    let (h_col, from_n) = match (col(&["h"]), col(&["n"])) {
        (Some(c), _) => (c, false),
        (None, Some(c)) => (c, true),
        _ => return Err(bad("missing `h` or `N` column".into())),
    };
    let mut h = Vec::new();
    let mut omega = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| -> Result<f64, CliError> {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: not a number", line + 1)))
        };
        let x = num(h_col)?;
        h.push(if from_n { 1.0 / x } else { x });
        omega.push(num(omega_col)?);
    }
    if h.len() < 3 {
        return Err(bad(format!("need at least 3 data rows, found {}", h.len())));
    }
    Ok((h, omega))
}

pub fn fit(cfg: &Resolved) -> Result<(), CliError> {
    let path = cfg.input.as_deref().ok_or_else(|| CliError::usage("input: no data file given"))?;
    let (h, omega) = read_fit_input(path)?;
    let f = fit_order(&h, &omega).map_err(CliError::from_core)?;
    let cells = fit_cells(Some(&f));
    eprintln!("alpha = {}, omega_ex = {}", cells[2], cells[0]);
    emit(cfg, &[], &f, |out| {
        writeln!(out, "omega_ex,C,alpha,residual,points")?;
        writeln!(out, "{},{}", cells.join(","), h.len())
    })
}
