//! CLI behavior: exit codes, determinism of emitted files, config handling.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_combdrive"))
}

#[test]
fn inadmissible_orbit_exits_2() {
    let out = bin()
        .args(["orbit", "--m", "1", "--p", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("1 <= p <= 0"),
        "error should cite nu_1 = 0: {err}"
    );
}

#[test]
fn invalid_energy_window_exits_2() {
    let out = bin()
        .args(["period", "--grid-size", "5", "--hbar-max-frac", "1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn period_csv_row_count_matches_grid() {
    let out = bin()
        .args(["period", "--grid-size", "17"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 18, "header + 17 rows");
    assert_eq!(rows[0], "hbar,T,dT_dhbar");
}

#[test]
fn stability_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "4")] {
        let out = bin()
            .args(["stability", "--m-max", "3", "--workers", workers])
            .arg("--out")
            .arg(path)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(
        bytes_a, bytes_b,
        "stability output must be byte-identical across runs"
    );
}

#[test]
fn continue_family_persists_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family.jsonl");
    let run = |resume: bool| {
        let mut cmd = bin();
        cmd.args([
            "continue",
            "--m",
            "2",
            "--p",
            "1",
            "--symmetry",
            "odd",
            "--delta-grid",
            "0,1e-4,2e-4",
        ])
        .arg("--out")
        .arg(&path);
        if resume {
            cmd.arg("--resume");
        }
        cmd.output().unwrap()
    };
    let first = run(false);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let persisted = std::fs::read(&path).unwrap();
    assert_eq!(
        persisted.iter().filter(|&&b| b == b'\n').count(),
        3,
        "three family rows"
    );

    let second = run(true);
    assert!(second.status.success());
    let err = String::from_utf8_lossy(&second.stderr);
    assert!(err.contains("reproduced identically"), "{err}");
    assert_eq!(std::fs::read(&path).unwrap(), persisted);
    assert!(err.contains("slope comparison"), "{err}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[model]\nbeta = 0.25\nv0 = 0.4\n\n[task]\nm = 2\np = 1\n",
    )
    .unwrap();
    // config supplies m, p and v0
    let out = bin()
        .args(["orbit", "--points", "8"])
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // flags override the file: v0 = 2.0 is past pull-in and must be rejected
    let out = bin()
        .args(["orbit", "--points", "8", "--v0", "2.0"])
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // the env var names the default config
    let out = bin()
        .args(["orbit", "--points", "8"])
        .env("COMBDRIVE_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn verify_subset_selection() {
    let out = bin()
        .args(["verify", "--criteria", "1,2"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("period-infimum") && text.contains("period-divergence"));
    assert!(!text.contains("orbit-construction"));
    assert!(text.contains("2/2 checks pass"));
}

#[test]
fn negative_control_detects_loosened_tolerances() {
    let out = bin()
        .args(["verify", "--criteria", "1", "--negative-control"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("negative-control-loose-integrator"));
    assert!(
        text.contains("detected as intended") || text.contains("PASS"),
        "{text}"
    );
}
