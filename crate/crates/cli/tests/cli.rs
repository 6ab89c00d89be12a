use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use revival_cli::output::sha256_hex;

const SMALL: &str = r#"
[model]
n_spins = 12
zeta = 2.0

[time]
t_end_over_t0 = 2.0
samples = 41

[sweep]
n_values = [4, 8, 12]
ratios = [0.0, 0.25, 0.5]
cross_section_n = [5, 6, 7, 8]
cross_section_ratio = 0.5

[series]
n_values = [6, 10]
zeta_sq = 3.0
samples = 21

[sphere]
n_theta = 12
n_phi = 24
panels = [{ n_spins = 4, zeta_sq = 2.0 }, { n_spins = 6, zeta_sq_over_n = 0.3 }, { n_spins = 8, zeta_sq_over_n = 0.3 }]
"#;

fn revival(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("small.toml");
    if !cfg.exists() {
        fs::write(&cfg, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_revival"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .env_remove("REVIVAL_OUT")
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn unknown_key_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = revival(tmp.path(), &["metrology", "--set", "sweep.bogus=1", "--out", "o"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!tmp.path().join("o/manifest.json").exists());
}

#[test]
fn zero_samples_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["dynamics", "--samples", "0", "--out", "o"])), 2);
}

#[test]
fn empty_sphere_grid_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["wigner", "--n-theta", "0", "--out", "o"])), 2);
}

#[test]
fn mismatched_preset_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["wigner", "--fig2", "--out", "o"])), 2);
    assert_eq!(code(&revival(tmp.path(), &["--fig2", "--fig3", "--out", "o"])), 2);
}

#[test]
fn bad_cli_syntax_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["metrology", "--workers", "many"])), 2);
}

#[test]
fn failed_cells_are_reported_and_kept() {
    let tmp = tempfile::tempdir().unwrap();
    let o = revival(tmp.path(), &["--fig5", "--set", "sweep.ratios=[-0.5, 0.0, 0.5]", "--out", "o"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["cells"]["total"], 9);
    assert_eq!(m["cells"]["failed"], 3);
    assert_eq!(m["cells"]["errors"][0]["col"], -0.5);
    let csv = fs::read_to_string(tmp.path().join("o/precision_surface.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains("error")).count(), 3);
}

#[test]
fn manifest_checksums_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&revival(tmp.path(), &["fidelity-scan", "--out", "o"])), 0);
    let m = manifest(&out);
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    assert_eq!(m["command"], "fidelity-scan");
    assert!(m["config"]["run"].get("out").is_none());
}

#[test]
fn csv_bytes_independent_of_workers() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["dynamics", "--jc", "--cutoff", "40"],
        vec!["fidelity-scan"],
        vec!["wigner"],
        vec!["metrology"],
    ] {
        let mut one = args.clone();
        one.extend(["--workers", "1", "--out", "w1"]);
        let mut four = args.clone();
        four.extend(["--workers", "4", "--out", "w4"]);
        assert_eq!(code(&revival(tmp.path(), &one)), 0);
        assert_eq!(code(&revival(tmp.path(), &four)), 0);
        let (a, b) = (csv_files(&tmp.path().join("w1")), csv_files(&tmp.path().join("w4")));
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
        assert_eq!(manifest(&tmp.path().join("w1"))["config_hash"], manifest(&tmp.path().join("w4"))["config_hash"]);
        fs::remove_dir_all(tmp.path().join("w1")).unwrap();
        fs::remove_dir_all(tmp.path().join("w4")).unwrap();
    }
}

#[test]
fn rerun_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["--fig6", "--out", "o"])), 0);
    let first = csv_files(&tmp.path().join("o"));
    assert_eq!(code(&revival(tmp.path(), &["--fig6", "--out", "o"])), 0);
    assert_eq!(first, csv_files(&tmp.path().join("o")));
}

#[test]
fn wigner_writes_one_file_per_panel() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["--fig4", "--oracle", "--out", "o"])), 0);
    let names: Vec<String> = csv_files(&tmp.path().join("o")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["wigner_panel1_N4.csv", "wigner_panel2_N6.csv", "wigner_panel3_N8.csv"]);
    let text = fs::read_to_string(tmp.path().join("o/wigner_panel3_N8.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# sphere_integral=")));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12 * 24);
}

#[test]
fn zero_ratio_column_sits_at_standard_limit() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&revival(tmp.path(), &["--fig5", "--oracle", "--out", "o"])), 0);
    let csv = fs::read_to_string(tmp.path().join("o/precision_surface.csv")).unwrap();
    let mut rows = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next().unwrap(), "N,zeta_sq_over_N,N_over_F,heisenberg_limit,status");
    let mut seen = 0;
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        if f[1].parse::<f64>().unwrap() == 0.0 {
            assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{row}");
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}

#[test]
fn dynamics_oracle_and_jc_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let o = revival(tmp.path(), &["--fig1", "--cutoff", "40", "--oracle", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("o"));
    assert!(m["oracle"]["max_deviation"].as_f64().unwrap() < 1e-10);
    let spin = fs::read_to_string(tmp.path().join("o/dynamics.csv")).unwrap();
    let first = spin.lines().find(|l| !l.starts_with('#') && !l.starts_with('t')).unwrap();
    let f: Vec<f64> = first.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(f[0], 0.0);
    assert!((f[1] - 1.0).abs() < 1e-12 && f[2].abs() < 1e-12, "{first}");
    assert!(tmp.path().join("o/dynamics_jc.csv").exists());
}

#[test]
fn out_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.toml"), SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_revival"))
        .args(["--fig6", "--config", "small.toml"])
        .env("REVIVAL_OUT", "from-env")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("from-env/cross_section.csv").exists());
}
