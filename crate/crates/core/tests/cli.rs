//! End-to-end runs of the `atomforce` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use atomforce::cli::{self, ForceUnits, RunSpec, SweepSpec};
use atomforce::scenarios::{self, Preset};
use nalgebra::Vector3;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn atomforce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomforce")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn force_on_single_wave() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("force.csv");
    let status = atomforce(&["force", "--config", data("single_wave.json").to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let table = rows(&out);
    assert_eq!(table.len(), 2);
    assert!((column(&table, "F_x")[0] - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(column(&table, "F_y")[0], 0.0);
    assert!((column(&table, "s_eff")[0] - 2.0).abs() < 1e-15);
    assert!((column(&table, "w0")[0] + 1.0 / 6.0).abs() < 1e-15);
    // 17 significant digits
    assert_eq!(table[1][0], "3.3333333333333331e-1");

    let half = dir.path().join("half.csv");
    atomforce(&[
        "force", "--config", data("single_wave.json").to_str().unwrap(), "--output", half.to_str().unwrap(),
        "--force-units", "half-gamma",
    ]);
    assert!((column(&rows(&half), "F_x")[0] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = data("bichromatic.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("sweep{i}.csv"));
        let o = atomforce(&[
            "sweep", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--vrange", "-3,3,7",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "vx,vy,vz,Fx,Fy,Fz,R0,R1,R2,R3,converged");
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().all(|l| l.ends_with(",1") && l.split(',').count() == 11));
}

#[test]
fn shipped_bichromatic_file_is_the_preset() {
    let parsed = cli::parse_config(&data("bichromatic.json")).unwrap();
    let preset = scenarios::preset(&Preset::bichromatic_reference()).unwrap();
    assert_eq!(parsed.weights, preset.weights);
    assert_eq!(parsed.max_den, preset.max_den);
    for (a, b) in parsed.waves.iter().zip(&preset.waves) {
        assert_eq!(a.detuning, b.detuning);
        assert_eq!(a.k, b.k);
        assert!((a.rabi - b.rabi).abs() < 1e-13 && (a.phase - b.phase).abs() < 1e-15);
    }
}

#[test]
fn validate_zero_field_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "zero.json", r#"{"lasers": [{"rabi": 0, "detuning": 1, "k": [1, 0, 0]}]}"#);
    let out = dir.path().join("validate.csv");
    let o = atomforce(&["validate", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(rows(&out)[1..].iter().all(|r| r[1] == "true"));

    let force = dir.path().join("force.csv");
    atomforce(&["force", "--config", &cfg, "--output", force.to_str().unwrap()]);
    assert_eq!(column(&rows(&force), "w0")[0], -0.5);
}

#[test]
fn validate_two_frequency_config_runs_all_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "pair.json",
        r#"{"lasers": [{"rabi": 3, "phase": 0.4, "detuning": 2, "k": [1, 0, 0]},
                       {"rabi": 2, "detuning": {"num": -1, "den": 2}, "k": [-1, 0, 0]}]}"#,
    );
    let out = dir.path().join("validate.csv");
    let o = atomforce(&["validate", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let names: Vec<String> = rows(&out)[1..].iter().map(|r| r[0].clone()).collect();
    assert!(names.iter().any(|n| n == "time-domain oracle"));
    assert!(names.iter().any(|n| n == "continued fraction vs matrix"));
}

#[test]
fn spectrum_and_oracle_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "pair.json",
        r#"{"lasers": [{"rabi": 1, "detuning": 1, "k": [1, 0, 0]}, {"rabi": 1, "detuning": -1, "k": [-1, 0, 0]}]}"#,
    );
    let out = dir.path().join("spectrum.csv");
    let o = atomforce(&["spectrum", "--config", &cfg, "--output", out.to_str().unwrap(), "--nmax", "40", "--gnuplot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = rows(&out);
    assert_eq!(table[0], ["j", "n", "re_R", "im_R"]);
    // g = 2, so n runs over -40, -38, ..., 40 for each of the two waves
    assert_eq!(table.len(), 1 + 2 * 41);
    assert!(dir.path().join("spectrum.gp").exists());
    let solved = scenarios::solve(&cli::parse_config(Path::new(&cfg)).unwrap(), scenarios::Solver::Matrix, &Default::default()).unwrap();
    let zero_row = table.iter().find(|r| r[0] == "0" && r[1] == "0").unwrap();
    let r0: f64 = zero_row[2].parse().unwrap();
    assert!((r0 - solved.forces.rates[0]).abs() < 1e-12);

    let out = dir.path().join("oracle.csv");
    let o = atomforce(&["oracle", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success());
    let table = rows(&out);
    assert_eq!(table[0], ["j", "R_time_domain", "R_harmonic_balance", "abs_diff"]);
    assert!(column(&table, "abs_diff").iter().all(|d| *d < 1e-4));
}

#[test]
fn exit_status_contract() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();

    let bad = write(&dir, "bad.json", r#"{"lasers": [{"rabi": -1, "detuning": 0, "k": [1, 0, 0]}]}"#);
    let o = atomforce(&["force", "--config", &bad, "--output", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lasers.0.rabi"));

    let o = atomforce(&["force", "--config", "/nonexistent/config.json", "--output", out]);
    assert_eq!(o.status.code(), Some(4));

    let good = data("single_wave.json");
    let o = atomforce(&["force", "--config", good.to_str().unwrap(), "--output", "/nonexistent/dir/o.csv"]);
    assert_eq!(o.status.code(), Some(4));

    // beat note 1/1000 under a 10^4 Γ drive needs far more than K_max harmonics
    let hard = write(
        &dir,
        "hard.json",
        r#"{"lasers": [{"rabi": 10000, "detuning": 0, "k": [1, 0, 0]},
                       {"rabi": 10000, "detuning": {"num": 1, "den": 1000}, "k": [-1, 0, 0]}]}"#,
    );
    let o = atomforce(&["force", "--config", &hard, "--output", out, "--solver", "matrix"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("residual history"));

    let o = atomforce(&["sweep", "--config", good.to_str().unwrap(), "--output", out]);
    assert_eq!(o.status.code(), Some(2));
    let o = atomforce(&["force", "--config", good.to_str().unwrap(), "--output", out, "--solver", "contfrac"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overrides_via_set() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.csv");
    let o = atomforce(&[
        "force", "--config", data("single_wave.json").to_str().unwrap(), "--output", out.to_str().unwrap(),
        "--set", "lasers.0.rabi=0.5", "--set", "lasers.0.detuning=0.5",
    ]);
    assert!(o.status.success());
    // s = (0.25/2)/(0.25 + 0.25) = 1/4
    assert!((column(&rows(&out), "s_eff")[0] - 0.25).abs() < 1e-15);
}

#[test]
fn run_through_the_library() {
    let dir = TempDir::new().unwrap();
    let mut spec = RunSpec::new(cli::Command::Sweep, data("single_wave.json"), dir.path().join("s.csv"));
    spec.sweep = Some(SweepSpec::parse_range(Vector3::x(), "-2,2,5").unwrap());
    spec.force_units = ForceUnits::HalfGamma;
    let report = cli::run(&spec).unwrap();
    assert_eq!(report.exit_code, 0);
    let table = rows(&spec.output_path);
    // resonant wave: F(v) = F(-v), peak at v = 0
    let f = column(&table, "Fx");
    assert_eq!(f.len(), 5);
    assert!((f[0] - f[4]).abs() < 1e-15 && f[2] > f[1]);
    assert!((f[2] - 2.0 / 3.0).abs() < 1e-15);
}
