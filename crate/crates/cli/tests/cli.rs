use std::path::Path;
use std::process::{Command, Output};

fn dgmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgmix")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV with `#` comment lines, header removed.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_reports_kernel_cluster() {
    let o = dgmix(&["solve", "--N", "2", "--k", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let counts = text.lines().find(|l| l.starts_with("# kernel_cluster=")).unwrap();
    let kernel: usize = counts["# kernel_cluster=".len()..].split(' ').next().unwrap().parse().unwrap();
    assert!(kernel >= 8, "{counts}");
    let r = rows(&text);
    assert_eq!(r.len(), 10);
    let omega: Vec<f64> = r.iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(omega.windows(2).all(|w| w[0] < w[1]));
    assert!(r.iter().all(|row| row[3] == "physical"));
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        vec!["solve", "--N", "0"],
        vec!["solve", "--bc", "diagonal"],
        vec!["solve", "--nu", "0.7"],
        vec!["solve", "--aS", "-3"],
        vec!["solve", "--modes", "0"],
        vec!["solve", "--solver", "magic"],
        vec!["solve", "--format", "xml"],
        vec!["converge", "--N", "16,8"],
        vec!["limit", "--nu", "0.49,0.45"],
        vec!["sweep-as", "--as", "10,2000", "--reference", "1000"],
        vec!["fit"],
        vec!["solve", "--bogus"],
    ] {
        let o = dgmix(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let err = String::from_utf8(dgmix(&["solve", "--N", "0"]).stderr).unwrap();
    assert!(err.contains("`N`"), "{err}");
}

#[test]
fn fit_reproduces_tabulated_rates() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "data.csv",
        "N,omega\n16,0.6806068\n32,0.6807467\n48,0.6807850\n64,0.6808020\n",
    );
    let o = dgmix(&["fit", "--input", &input]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    let omega_ex: f64 = r[0][0].parse().unwrap();
    let alpha: f64 = r[0][2].parse().unwrap();
    assert!((alpha - 1.34).abs() <= 0.03, "{alpha}");
    assert!((omega_ex - 0.6808381).abs() <= 2e-4, "{omega_ex}");

    let short = write(dir.path(), "short.csv", "h,omega\n0.1,1.0\n0.05,1.1\n");
    assert_eq!(dgmix(&["fit", "--input", &short]).status.code(), Some(2));
    let missing = dir.path().join("missing.csv");
    assert_eq!(dgmix(&["fit", "--input", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"N": 2, "k": 1, "modes": 3, "bc": "left"}"#);
    let o = dgmix(&["solve", "--config", &cfg, "--modes", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(rows(&text).len(), 4);
    assert!(text.starts_with("# dgmix "));
    assert!(text.contains(r#""partition":"left""#));
    assert!(text.contains(r#""n":2"#));

    let typo = write(dir.path(), "typo.json", r#"{"Nx": 2}"#);
    assert_eq!(dgmix(&["solve", "--config", &typo]).status.code(), Some(2));
}

#[test]
fn output_is_reproducible_and_json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let o = dgmix(&["solve", "--N", "2", "--k", "2", "--nu", "0.5", "-o", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let first = dgmix(&["solve", "--N", "2", "--k", "2", "--nu", "0.5"]);
    let second = dgmix(&["solve", "--N", "2", "--k", "2", "--nu", "0.5"]);
    assert_eq!(first.stdout, second.stdout);

    let o = dgmix(&["solve", "--N", "2", "--k", "2", "--nu", "0.5", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let csv = rows(&String::from_utf8(std::fs::read(&a).unwrap()).unwrap());
    let modes = doc["result"]["modes"].as_array().unwrap();
    assert_eq!(modes.len(), csv.len());
    let w0: f64 = csv[0][2].parse().unwrap();
    assert!((modes[0]["omega"].as_f64().unwrap() - w0).abs() < 1e-6);
    assert!(doc["result"]["trace_null"].as_u64().unwrap() > 0);
    assert_eq!(doc["config"]["run"]["nu"], 0.5);
}

#[test]
fn exports_mesh_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let prefix = dir.path().join("pencil");
    let o = dgmix(&[
        "solve",
        "--N",
        "2",
        "--k",
        "1",
        "--export-mesh",
        mesh.to_str().unwrap(),
        "--export-matrices",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&mesh).unwrap()).unwrap();
    assert!(m["faces"].as_array().unwrap().len() > 0);
    for name in ["pencil_A.mtx", "pencil_B.mtx"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
    }
}

#[test]
fn study_commands_run_on_small_meshes() {
    let o = dgmix(&["sweep-as", "--N", "2", "--k", "1", "--modes", "4", "--as", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("mode,aS=1000,aS=1000_spurious"));
    assert!(rows(&text).iter().all(|r| r[2] == "false"));

    let o = dgmix(&["refine", "--N", "2,4", "--k", "1", "--modes", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mode,N=2,N=2_spurious,N=4,N=4_spurious"));

    let o = dgmix(&["converge", "--N", "2,4,6", "--k", "1", "--track", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2s = 1.3594"));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert!(r[0][6].parse::<f64>().is_ok(), "{:?}", r[0]);

    let o = dgmix(&["limit", "--N", "2", "--k", "1", "--nu", "0.45"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("slope=undefined"));
    assert_eq!(rows(&text).len(), 1);
}
