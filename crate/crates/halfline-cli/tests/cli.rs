use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfline-cli")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn unknown_command_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn malformed_or_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in ["[grids\n", "[grids]\neps = [0.1, 0.2]\n", "[tolerances]\node_rtol = 0.0\n"].iter().enumerate() {
        let path = dir.path().join(format!("c{i}.toml"));
        fs::write(&path, text).unwrap();
        let o = cli(dir.path(), &["validate-data", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{text}");
    }
}

#[test]
fn example_profile_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["validate-data", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/validation.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["meta"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn profile_touching_the_margin_fails_validation() {
    // U = 2H exactly, so the margin clause cannot hold.
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,H,U\n");
    for i in 0..400 {
        let t = 1e-4 * 1.03f64.powi(i);
        let h = 0.5 * t.sqrt() / t.cosh();
        csv.push_str(&format!("{t},{h},{}\n", 2.0 * h));
    }
    fs::write(dir.path().join("flat.csv"), csv).unwrap();
    fs::write(dir.path().join("run.toml"), "[profile]\nname = \"table\"\ntable = \"flat.csv\"\n").unwrap();
    let o = cli(dir.path(), &["validate-data", "--config", "run.toml", "--out", "o"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("o/validation.json")).unwrap();
    assert!(report.contains("\"pass\": false"));
    // Downstream commands refuse the same profile.
    let o = cli(dir.path(), &["emit-transforms", "--config", "run.toml", "--out", "o"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn transforms_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[grids]\nk_points = 41\n").unwrap();
    for out in ["a", "b"] {
        let o = cli(dir.path(), &["emit-transforms", "--config", "run.toml", "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["transforms.csv", "transforms.csv.meta.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let text = fs::read_to_string(dir.path().join("a/transforms.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,tau,phi,dphi,d2phi,ell"));
    assert_eq!(lines.count(), 41);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/transforms.csv.meta.json")).unwrap()).unwrap();
    for key in ["S_inf", "C_a", "C_b", "config_hash", "tolerances", "k_points"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
}

#[test]
fn solve_rhp_reports_the_requested_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["solve-rhp", "--x", "0.5", "--t", "1.0", "--eps", "0.3", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/rhp.json")).unwrap()).unwrap();
    for key in ["q_re", "q_im", "eps_qx_re", "eps_qx_im", "jump_residual", "cond_estimate"] {
        assert!(v[key].is_f64(), "{key}");
    }
    assert!(v["jump_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["meta"]["x"], 0.5);
}

#[test]
fn too_few_rhp_nodes_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["solve-rhp", "--nodes", "4", "--out", "o"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn whitham_grid_carries_configuration_tags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[grids]\nwhitham_t = [0.25, 1.05, 3.0]\nwhitham_x = [0.1, 0.0]\n").unwrap();
    let o = cli(dir.path(), &["whitham", "--config", "run.toml", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("o/whitham.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // t = 1.05 sits on a critical time and is clipped.
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[0][0], rows[0][7]), ("0.0", "VBV"));
    assert_eq!(rows[3][7], "SBS");
    let meta = fs::read_to_string(dir.path().join("o/whitham.csv.meta.json")).unwrap();
    assert!(meta.contains("\"t\": 1.05"));
}

#[test]
fn scan_and_vacuum_outputs_have_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[grids]\nscan_k_points = 3\neps = [0.2, 0.1]\nvacuum_points = 5\n").unwrap();
    for (cmd, file, header, rows) in [
        ("scan-gamma", "scan_gamma.csv", "k,eps,re_gamma0,im_gamma0,abs_err_vs_tilde,det_defect", 6),
        ("vacuum-boundary", "vacuum_boundary.csv", "t,X,kstar,X0,Xinf", 5),
    ] {
        let o = cli(dir.path(), &[cmd, "--config", "run.toml", "--out", "o"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(dir.path().join("o").join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header));
        assert_eq!(text.lines().count(), rows + 1);
    }
}

#[test]
fn verify_exit_code_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["verify", "--out", "o"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/acceptance.json")).unwrap()).unwrap();
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 12);
    let all_pass = criteria.iter().all(|c| c["pass"] == true);
    assert_eq!(report["all_pass"], all_pass);
    assert_eq!(code(&o), if all_pass { 0 } else { 5 });
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| l.starts_with('[')).count(), 12);
}
