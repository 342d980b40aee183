use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tidal-dunes"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ok");
    assert_eq!(code(&run(&["validate"], Some(&shipped()), &out)), 0);
    assert!(std::fs::read_to_string(out.join("validate.txt")).unwrap().contains("violations: 0"));

    for bad in [
        "[flux]\ng_thr = 5.0\n",
        "[forcing]\ntheta_alpha = 0.6\ntheta_omega = 0.4\n",
        "[grid]\nnx = 8\ncolour = \"red\"\n",
        "[model\nepsilon = 0.1\n",
        "regime = 3\n",
    ] {
        let c = write_config(&dir, bad);
        let o = run(&["validate"], Some(&c), &dir.path().join("bad"));
        assert_eq!(code(&o), 2, "{bad}");
        assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
    }
    let missing = dir.path().join("absent.toml");
    assert_eq!(code(&run(&["validate"], Some(&missing), &out)), 2);

    let c = write_config(&dir, "regime = \"long\"\n[forcing]\nfreeze = false\n");
    let o = run(&["validate"], Some(&c), &dir.path().join("viol"));
    assert_eq!(code(&o), 1);
    assert_eq!(summary(&dir.path().join("viol"))["verdicts"]["hypotheses_hold"], false);
}

#[test]
fn solve_zero_data_gives_zero_trajectory() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "[model]\nc = 0.0\n[initial]\nkind = \"zero\"\n[time]\nt_final = 0.25\n[grid]\nnx = 8\nny = 8\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["solve"], Some(&c), &out)), 0);
    let snaps = csv_rows(&out.join("snapshots.csv"));
    assert!(snaps.len() > 2);
    for row in snaps {
        let text = std::fs::read_to_string(out.join(&row[2])).unwrap();
        for v in text.lines().skip(2).flat_map(|l| l.split(',')) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn solve_default_is_finite_balanced_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run(&["solve"], Some(&shipped()), &a)), 0);
    assert_eq!(code(&run(&["solve"], Some(&shipped()), &b)), 0);
    let rows = csv_rows(&a.join("diagnostics.csv"));
    assert!(!rows.is_empty());
    for r in &rows {
        let v: Vec<f64> = r.iter().map(|s| s.parse().unwrap()).collect();
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(v[5] <= 1e-10, "identity gap {}", v[5]);
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        let (x, y) = (std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
        assert_eq!(x, y, "{n:?} differs between runs");
    }
}

#[test]
fn solve_eps_override() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "[grid]\nnx = 8\nny = 8\n[time]\nt_final = 0.1\n");
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_tidal-dunes"))
        .args(["solve", "--eps", "0.25", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(summary(&out)["norms"]["epsilon"], 0.25);
    let o = Command::new(env!("CARGO_BIN_EXE_tidal-dunes"))
        .args(["solve", "--eps", "1.5", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn cell_default_is_periodic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["cell"], Some(&shipped()), &out)), 0);
    let meta = csv_rows(&out.join("profile_meta.csv"));
    assert_eq!(meta.len(), 128);
    for r in &meta {
        assert!(r[1].parse::<f64>().unwrap() <= 1e-9);
        assert_eq!(r[2], "0");
    }
    assert!(out.join("profile_0127.csv").exists());
    assert_eq!(summary(&out)["verdicts"]["periodic"], true);
}

#[test]
fn cell_homogeneous_profile_is_zero() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "[model]\nc = 0.0\n[grid]\nnx = 8\nny = 8\n[cell]\ntheta_steps = 32\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["cell"], Some(&c), &out)), 0);
    for r in csv_rows(&out.join("profile_meta.csv")) {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn cell_continuation_ladders() {
    let dir = TempDir::new().unwrap();
    let c = write_config(
        &dir,
        "[grid]\nnx = 8\nny = 8\n[cell]\ntheta_steps = 32\nmu_ladder = [0.1, 0.01, 0.001]\nnu_ladder = [0.1, 0.01]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["cell"], Some(&c), &out)), 0);
    let s = summary(&out);
    assert_eq!(s["verdicts"]["mu_increments_decreasing"], true);
    assert_eq!(csv_rows(&out.join("continuation_mu.csv")).len(), 3);
    assert_eq!(csv_rows(&out.join("continuation_nu.csv")).len(), 2);
}

#[test]
fn cell_non_convergence_writes_history() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "[grid]\nnx = 8\nny = 8\n[cell]\nmax_periods = 1\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["cell"], Some(&c), &out)), 1);
    assert_eq!(csv_rows(&out.join("residual_history.csv")).len(), 1);
}

#[test]
fn homogenize_always_active_long_tide_has_no_threshold_nodes() {
    let dir = TempDir::new().unwrap();
    let c = write_config(
        &dir,
        "regime = \"long\"\n[grid]\nnx = 16\nny = 16\n[forcing]\nmean_flow = [2.0, 0.0]\nfreeze = false\n",
    );
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["homogenize"], Some(&c), &out)), 0);
    assert!(csv_rows(&out.join("profile_meta.csv")).iter().all(|r| r[2] == "0"));
    assert_eq!(summary(&out)["verdicts"]["threshold_set_empty"], true);
}

#[test]
fn homogenize_dead_window_is_flagged() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "regime = \"long\"\n[grid]\nnx = 16\nny = 16\n[forcing]\nfreeze = false\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["homogenize"], Some(&c), &out)), 0);
    let flags: Vec<bool> = csv_rows(&out.join("profile_meta.csv")).iter().map(|r| r[2] == "1").collect();
    assert!(flags.iter().any(|&b| b) && flags.iter().any(|&b| !b));
}

#[test]
fn studies_reject_short_ladders() {
    let dir = TempDir::new().unwrap();
    for cmd in ["twoscale", "corrector"] {
        let o = Command::new(env!("CARGO_BIN_EXE_tidal-dunes"))
            .args([cmd, "--ladder", "0.1,0.05", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&o), 2, "{cmd}");
    }
    let c = write_config(&dir, "[twoscale]\nladder = [0.1, 0.2, 0.05]\n");
    assert_eq!(code(&run(&["twoscale"], Some(&c), dir.path())), 2);
}

#[test]
fn twoscale_default_ladder_decreases() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "[grid]\nnx = 16\nny = 16\n[twoscale]\nladder = [0.125, 0.0625, 0.03125]\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["twoscale"], Some(&c), &out)), 0);
    assert_eq!(summary(&out)["verdicts"]["monotone_decrease"], true);
    let rows = csv_rows(&out.join("twoscale_report.csv"));
    assert_eq!(rows.len(), 3 * 32);
    for r in rows {
        let (p, l, e): (f64, f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(((p - l).abs() - e).abs() <= 1e-15 * (1.0 + p.abs()));
    }
}

#[test]
fn synthetic_corrector_is_bounded_and_flat() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "[grid]\nnx = 16\nny = 16\n[twoscale]\nsynthetic = true\nladder = [0.125, 0.0625, 0.03125]\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["corrector"], Some(&c), &out)), 0);
    assert_eq!(summary(&out)["verdicts"]["corrector_bounded"], true);
    let rows = csv_rows(&out.join("corrector_report.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[0][2].is_empty());
    for r in &rows[1..] {
        let q: f64 = r[2].parse().unwrap();
        assert!((q - 1.0).abs() < 0.05, "ratio {q}");
    }
}

#[test]
fn corrector_needs_short_regime() {
    let dir = TempDir::new().unwrap();
    let c = write_config(&dir, "regime = \"mean\"\n[twoscale]\nladder = [0.125, 0.0625, 0.03125]\n");
    assert_eq!(code(&run(&["corrector"], Some(&c), dir.path())), 2);
}
