use std::fs;
use std::path::Path;
use std::process::Command;

const SYNTH: &str = r#"
[generator]
kind = "synthetic_polynomial"
n_trunc = 200
alpha = 2.0
upsilon_scale = 1.0
b_law = { scale = 1.0, q = 2.0 }
f_law = { scale = 0.05, q = 2.0 }

[sector]
alpha = 2.0
upsilon = 1.0
omega = 2.0

[coupling]
beta = 1.0
gamma = 1.0

[feedback]
source = "given"

[sampling]
tau_grid = "0.1:1.0:4"
axis_points = 801

[simulation]
t_end = 1e3
x0 = { scale = 1.0, q = 1.3 }
fit_window = [1e1, 1e3]

[scans]
j_max = 6
exterior_samples = 2000
"#;

const AXIS: &str = r#"
[generator]
kind = "explicit"
modes = [{ lambda = [0.0, 2.0], b = [1.0, 0.0] }, { lambda = [-1.0, 0.0], b = [1.0, 0.0] }]

[sector]
alpha = 1.0
upsilon = 1.0
omega = 2.0

[coupling]
beta = 1.0
gamma = 1.0

[feedback]
source = "given"

[sampling]
tau_grid = "0.1:1.0:4"

[simulation]
t_end = 10.0
x0 = { scale = 1.0, q = 1.0 }
fit_window = [1.0, 10.0]
"#;

fn smodal(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_smodal"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

#[test]
fn audit_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.toml");
    fs::write(&cfg, SYNTH).unwrap();
    let (code, _) = smodal(dir.path(), &["audit", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["audit"].is_object());
}

#[test]
fn margins_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.toml");
    fs::write(&cfg, SYNTH).unwrap();
    let (code, _) = smodal(dir.path(), &["margins", cfg.to_str().unwrap(), "--tau-grid", "0.2:0.8:3"]);
    assert_eq!(code, 0);
    let path = dir.path().join("out/margins.csv");
    assert_eq!(header(&path), "tau,eps_d,nonresonant");
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.toml");
    fs::write(&cfg, SYNTH).unwrap();
    let (code, _) = smodal(
        dir.path(),
        &["simulate", cfg.to_str().unwrap(), "--tau", "0.5", "--tend", "1000", "--substeps", "1"],
    );
    assert_eq!(code, 0);
    let traj = dir.path().join("out/trajectory.csv");
    assert_eq!(header(&traj), "t,norm");
    assert_eq!(header(&dir.path().join("out/fits.csv")), "model,exponent,residual");
    let (code, stdout) = smodal(dir.path(), &["fit", traj.to_str().unwrap(), "--model", "powerlog"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("powerlog"));
}

#[test]
fn resolvent_scan_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.toml");
    fs::write(&cfg, SYNTH).unwrap();
    let (code, _) = smodal(dir.path(), &["resolvent-scan", cfg.to_str().unwrap(), "--tau", "0.5", "--delta", "0.5"]);
    assert!(code == 0 || code == 2);
    assert_eq!(header(&dir.path().join("out/scan.csv")), "r,raw,scaled,nodes");
}

#[test]
fn failed_certificate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("axis.toml");
    fs::write(&cfg, AXIS).unwrap();
    let (code, stdout) = smodal(dir.path(), &["audit", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, SYNTH.replace("[scans]", "[scans]\nbogus = 1")).unwrap();
    let (code, _) = smodal(dir.path(), &["audit", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    let (code, _) = smodal(dir.path(), &["audit", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 1);
}
