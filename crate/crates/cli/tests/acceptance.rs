//! CLI acceptance: worker-count reproducibility of CSV bodies (the last
//! acceptance criterion), subcommand output contracts and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stable-heat"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "stable-heat-test-{}-{tag}",
        std::process::id()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn criterion_11_worker_count_reproducibility() {
    let mut bodies = Vec::new();
    for &workers in &[1u32, 4, 8] {
        let out = temp_dir(&format!("workers{workers}"));
        let status = binary()
            .args([
                "simulate",
                "--alpha",
                "1.5",
                "--t-grid",
                "0.01:0.1:3",
                "--paths",
                "20000",
                "--steps",
                "64,256,1024",
                "--seed",
                "99",
                "--workers",
                &workers.to_string(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        bodies.push(read(&out.join("simulate_alpha1.5.csv")));
    }
    let identical = bodies[0] == bodies[1] && bodies[1] == bodies[2];
    println!(
        "criterion 11 worker-count reproducibility: {} (1/4/8 workers, {} bytes)",
        if identical { "PASS" } else { "FAIL" },
        bodies[0].len()
    );
    assert!(identical, "CSV bodies differ across worker counts");
}

#[test]
fn verify_report_is_byte_identical_across_reruns() {
    // same resolved config (including the output directory) twice over
    let out = temp_dir("verify-rerun");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let status = binary()
            .args([
                "verify",
                "--alpha",
                "1.5",
                "--t-grid",
                "0.01:0.1:3",
                "--paths",
                "5000",
                "--steps",
                "64,256,1024",
                "--seed",
                "123",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        reports.push(read(&out.join("verify_alpha1.5.report.txt")));
    }
    assert_eq!(reports[0], reports[1], "report bodies differ across reruns");
}

#[test]
fn density_matches_closed_forms_and_handles_open_indices() {
    let out = temp_dir("density");
    // alpha = 1: abs_err column must stay below 1e-8
    let status = binary()
        .args([
            "density",
            "--alpha",
            "1",
            "--x-grid",
            "-20:0.5:81",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let body = read(&out.join("density_alpha1.csv"));
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,p1_alpha,closed_form_if_any,abs_err"
    );
    for line in lines {
        let err: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(err < 1e-8, "line {line}");
    }

    // alpha = 2: same contract
    let status = binary()
        .args([
            "density",
            "--alpha",
            "2",
            "--x-grid",
            "-20:0.5:81",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for line in read(&out.join("density_alpha2.csv")).lines().skip(1) {
        let err: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(err < 1e-8, "line {line}");
    }

    // alpha = 0.7: no closed form, empty columns, still exit 0
    let status = binary()
        .args([
            "density",
            "--alpha",
            "0.7",
            "--x-grid",
            "-2:0.5:9",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for line in read(&out.join("density_alpha0.7.csv")).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert!(fields[2].is_empty() && fields[3].is_empty(), "line {line}");
        assert!(fields[1].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn heat_rows_descend_and_converge_toward_constant() {
    let out = temp_dir("heat");
    let status = binary()
        .args([
            "heat",
            "--alpha",
            "1.5",
            "--t-grid",
            "0.01:0.1:4",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let body = read(&out.join("heat_alpha1.5.csv"));
    let rows: Vec<Vec<f64>> = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for w in rows.windows(2) {
        assert!(w[1][0] < w[0][0], "t must descend");
    }
    let constant = rows[0][3];
    let first_gap = (rows[0][2] - constant).abs();
    let last_gap = (rows.last().unwrap()[2] - constant).abs();
    assert!(
        last_gap < first_gap,
        "H/normalizer must move toward the constant"
    );
}

#[test]
fn heat_constant_scales_with_interval_length_below_one() {
    // |Omega|-scaling of the alpha < 1 constant: ratio 2^{1-alpha}
    let out = temp_dir("heat-scaling");
    let mut constants = Vec::new();
    for interval in ["0,1", "0,2"] {
        let status = binary()
            .args([
                "heat",
                "--alpha",
                "0.5",
                "--interval",
                interval,
                "--t-grid",
                "0.01:0.1:2",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let body = read(&out.join("heat_alpha0.5.csv"));
        let first = body.lines().nth(1).unwrap();
        constants.push(first.split(',').nth(3).unwrap().parse::<f64>().unwrap());
    }
    let ratio = constants[1] / constants[0];
    assert!(
        (ratio - 2f64.powf(0.5)).abs() < 1e-12,
        "scaling ratio {ratio}"
    );
}

#[test]
fn config_file_is_merged_and_flags_override() {
    let out = temp_dir("config");
    let config_path = out.join("experiment.toml");
    std::fs::write(
        &config_path,
        r#"
alpha = 1.0
interval = [0.0, 1.0]

[x_grid]
start = -1.0
step = 1.0
count = 3
"#,
    )
    .unwrap();
    // flag overrides file alpha
    let status = binary()
        .args([
            "density",
            "--config",
            config_path.to_str().unwrap(),
            "--alpha",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("density_alpha2.csv").exists());
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let out = temp_dir("exit-codes");

    // configuration error: malformed interval -> exit 2
    let status = binary()
        .args(["heat", "--alpha", "1.5", "--interval", "3,1", "--t-grid", "0.1:0.1:2"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // perimeter rejects alpha >= 1 -> exit 2
    let status = binary()
        .args(["perimeter", "--alpha", "1.5", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // check failure: deterministic verify with an absurd tolerance -> exit 1
    let config_path = out.join("strict.toml");
    std::fs::write(
        &config_path,
        r#"
alpha = 2.0

[t_grid]
start = 0.1
ratio = 0.1
count = 2

[tolerances]
deterministic_rel = 1e-30
"#,
    )
    .unwrap();
    let status = binary()
        .args([
            "verify",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // success -> exit 0
    let status = binary()
        .args([
            "verify",
            "--alpha",
            "2",
            "--t-grid",
            "0.01:0.1:4",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
