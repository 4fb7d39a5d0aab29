//! End-to-end checks of the command-line surface: formats, exit codes, and
//! round trips through the pair-file contract.

use std::path::PathBuf;
use std::process::Command;

fn gran() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gran"))
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("gran_cli_{}_{name}", std::process::id()))
}

#[test]
fn gen_then_infer_json_round_trip() {
    let pair_path = temp_path("pair.txt");
    let status = gran()
        .args(["gen", "--mechanism", "m1", "--cause", "p1", "--noise", "laplace"])
        .args(["--n", "80", "--seed", "4", "--out"])
        .arg(&pair_path)
        .status()
        .unwrap();
    assert!(status.success());

    let out = gran()
        .args(["infer", "--method", "gran", "--seed", "4"])
        .args(["--grid-size", "3", "--folds", "5", "--json", "--pair"])
        .arg(&pair_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let decision: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(decision["n"], 80);
    assert!(decision["confidence"].as_f64().unwrap() >= 0.0);
    assert!(decision["direction"].is_string());
    std::fs::remove_file(&pair_path).ok();
}

#[test]
fn infer_reports_parse_errors_with_exit_code_2() {
    let pair_path = temp_path("malformed.txt");
    let mut body = String::new();
    for i in 0..6 {
        body.push_str(&format!("{i} {}\n", i * 2));
    }
    body.push_str("7 not-a-number\n");
    std::fs::write(&pair_path, body).unwrap();
    let out = gran().args(["infer", "--pair"]).arg(&pair_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 7"), "stderr: {stderr}");
    std::fs::remove_file(&pair_path).ok();
}

#[test]
fn tie_heavy_pairs_are_undecidable_with_exit_code_4() {
    let pair_path = temp_path("ties.txt");
    let mut body = String::new();
    for i in 0..60 {
        body.push_str(&format!("{} {}\n", i / 3, i as f64 * 1.7));
    }
    std::fs::write(&pair_path, body).unwrap();
    let out = gran()
        .args(["infer", "--method", "gran", "--grid-size", "3", "--folds", "5", "--pair"])
        .arg(&pair_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_file(&pair_path).ok();
}

#[test]
fn curve_emits_the_prefix_rule_points() {
    let results_path = temp_path("results.csv");
    std::fs::write(&results_path, "correct,confidence\n1,0.9\n0,0.1\n").unwrap();
    let out = gran().args(["curve", "--results"]).arg(&results_path).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "threshold,decision_fraction,accuracy");
    assert_eq!(lines[1], "0.900000,0.500000,1.00000");
    assert_eq!(lines[2], "0.100000,1.00000,0.500000");
    std::fs::remove_file(&results_path).ok();
}

#[test]
fn lab_cn_grid_has_the_requested_shape() {
    let out = gran()
        .args(["lab", "cn", "--orders", "3,4", "--points", "21"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,w,c_n");
    assert_eq!(lines.len(), 1 + 2 * 21);
    // All c_n values within the unit bound.
    for line in &lines[1..] {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(value.abs() <= 1.0 + 1e-9, "{line}");
    }
}

#[test]
fn bench_emits_one_csv_row_per_cell() {
    let out_path = temp_path("bench.csv");
    let status = gran()
        .args(["bench", "--mechanism", "m1", "--cause", "p1", "--noise", "laplace,gauss"])
        .args(["--reps", "2", "--n", "60", "--grid-size", "3", "--folds", "5", "--seed", "3"])
        .args(["--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "mechanism,cause,noise,method,n,reps,accuracy,undecided");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("M1,p1,laplace,gran,60,2,"));
    assert!(lines[2].starts_with("M1,p1,gauss,gran,60,2,"));
    std::fs::remove_file(&out_path).ok();
}

#[test]
fn diagnose_writes_the_plot_ingredients() {
    let prefix = temp_path("diag").to_string_lossy().into_owned();
    let status = gran()
        .args(["diagnose", "--mechanism", "m3", "--cause", "p2", "--noise", "laplace"])
        .args(["--n", "60", "--seed", "6", "--grid-size", "3", "--folds", "5"])
        .args(["--grid-points", "8", "--out-prefix", &prefix])
        .status()
        .unwrap();
    assert!(status.success());
    for side in ["causal", "anticausal"] {
        for kind in ["preimage", "z", "hist"] {
            let path = format!("{prefix}_{side}_{kind}.csv");
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(text.lines().count() > 1, "{path} is empty");
            std::fs::remove_file(&path).ok();
        }
    }
    let summary = std::fs::read_to_string(format!("{prefix}_summary.csv")).unwrap();
    assert!(summary.starts_with("direction,energy_statistic,gamma,tau,fit_mean,fit_sd"));
    assert_eq!(summary.lines().count(), 3);
    std::fs::remove_file(format!("{prefix}_summary.csv")).ok();
}

#[test]
fn gen_output_loads_back_identically() {
    let pair_path = temp_path("roundtrip.txt");
    let status = gran()
        .args(["gen", "--mechanism", "m4", "--cause", "p3", "--noise", "bimodal"])
        .args(["--n", "64", "--seed", "12", "--out"])
        .arg(&pair_path)
        .status()
        .unwrap();
    assert!(status.success());
    let loaded = gran::pairfile::load_pair(&pair_path).unwrap();
    let direct = gran::synthetic::generate(&gran::synthetic::SyntheticSpec {
        mechanism: gran::synthetic::Mechanism::M4,
        cause: gran::synthetic::CauseDistribution::P3,
        noise: gran::synthetic::NoiseDistribution::Bimodal,
        n: 64,
        seed: 12,
    })
    .unwrap();
    assert_eq!(loaded.pair.x, direct.x);
    assert_eq!(loaded.pair.y, direct.y);
    std::fs::remove_file(&pair_path).ok();
}
