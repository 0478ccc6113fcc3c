//! End-to-end CLI checks: the run/report/sweep subcommands, golden-file
//! stability of the smoke fixture, and an independent re-ranking of
//! results.csv against ranks.json.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use bamoes_bench::synth;

const SMOKE_CONFIG: &str = r#"
data = "series.csv"
metadata = "meta.csv"
seed = 7

[[method]]
name = "builtin"
base = "ols"
ue = "builtin"

[[method]]
name = "naive-bs"
base = "ols"
ue = "naive"
replicas = 8

[[method]]
name = "bamoes"
base = "ols"
ue = "bamoes"
weight_c = 0.7
epochs = 40
"#;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bamoes-bench")
}

/// Build the deterministic smoke fixture and run the CLI on it.
fn run_smoke(dir: &Path) -> PathBuf {
    let suite = synth::standard_suite(2, 90, 6, 3, 7);
    synth::write_suite_csv(&suite, &dir.join("series.csv"), &dir.join("meta.csv")).unwrap();
    std::fs::write(dir.join("bench.toml"), SMOKE_CONFIG).unwrap();
    let out = dir.join("out");
    let status = Command::new(bin())
        .arg("run")
        .arg(dir.join("bench.toml"))
        .args(["--jobs", "2", "--out"])
        .arg(&out)
        .status()
        .expect("run bench binary");
    assert!(status.success());
    out
}

#[test]
fn smoke_run_produces_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_smoke(dir.path());
    for required in [
        "results.csv",
        "ranks.json",
        "cd_miscal_area.svg",
        "cd_rmse.svg",
    ] {
        assert!(out.join(required).exists(), "missing {required}");
    }
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3); // header + 2 series x 3 methods
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));
    // one calibration plot per successful cell
    let n_cal = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("calibration_")
        })
        .count();
    assert_eq!(n_cal, 6);
}

/// Regeneration path for the golden files after an intentional numeric
/// change:
/// `cargo test -p bamoes-bench --test cli -- --ignored regenerate_golden`
#[test]
#[ignore]
fn regenerate_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_smoke(dir.path());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    std::fs::create_dir_all(&golden).unwrap();
    for name in ["results.csv", "ranks.json"] {
        std::fs::copy(out.join(name), golden.join(name)).unwrap();
    }
}

/// The committed golden files freeze the smoke fixture's exact output.
#[test]
fn smoke_outputs_match_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_smoke(dir.path());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    for name in ["results.csv", "ranks.json"] {
        let got = std::fs::read_to_string(out.join(name)).unwrap();
        let want = std::fs::read_to_string(golden.join(name))
            .unwrap_or_else(|_| panic!("golden file {name} missing"));
        assert_eq!(got, want, "{name} deviates from the frozen golden output");
    }
}

/// Re-rank results.csv with an independent implementation (hand-rolled CSV
/// split + average-rank) and compare against ranks.json.
#[test]
fn ranks_json_matches_independent_reranking() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_smoke(dir.path());

    // independent parse of results.csv
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let mut per_series: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[6], "ok");
        per_series
            .entry(f[0].to_string())
            .or_default()
            .push((f[1].to_string(), f[3].parse().unwrap())); // miscal_area
    }
    // average ranks per series, then mean per method
    let mut totals: BTreeMap<String, f64> = BTreeMap::new();
    let n_series = per_series.len() as f64;
    for methods in per_series.values() {
        let mut sorted: Vec<usize> = (0..methods.len()).collect();
        sorted.sort_by(|&a, &b| methods[a].1.partial_cmp(&methods[b].1).unwrap());
        for (pos, &idx) in sorted.iter().enumerate() {
            // count ties around this value
            let v = methods[idx].1;
            let tied: Vec<usize> = (0..methods.len()).filter(|&i| methods[i].1 == v).collect();
            let rank = if tied.len() > 1 {
                let first = sorted.iter().position(|i| methods[*i].1 == v).unwrap();
                (first + 1 + first + tied.len()) as f64 / 2.0
            } else {
                (pos + 1) as f64
            };
            *totals.entry(methods[idx].0.clone()).or_default() += rank / n_series;
        }
    }

    let ranks_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ranks.json")).unwrap()).unwrap();
    let reported = ranks_json["metrics"]["miscal_area"]["mean_ranks"]
        .as_object()
        .unwrap();
    for (method, mean_rank) in &totals {
        let got = reported[method].as_f64().unwrap();
        assert!(
            (got - mean_rank).abs() < 1e-9,
            "method {method}: ranks.json {got} vs independent {mean_rank}"
        );
    }
}

#[test]
fn report_subcommand_rebuilds_ranks_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_smoke(dir.path());
    let rebuilt = dir.path().join("rebuilt");
    let status = Command::new(bin())
        .arg("report")
        .arg(out.join("results.csv"))
        .arg("--out")
        .arg(&rebuilt)
        .status()
        .expect("run report subcommand");
    assert!(status.success());
    let a = std::fs::read_to_string(out.join("ranks.json")).unwrap();
    let b = std::fs::read_to_string(rebuilt.join("ranks.json")).unwrap();
    assert_eq!(a, b, "report subcommand must reproduce ranks.json");
    assert!(rebuilt.join("cd_miscal_area.svg").exists());
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = run_smoke(dir.path());
    let renamed = dir.path().join("out-first");
    std::fs::rename(&out1, &renamed).unwrap();
    let out2 = run_smoke(dir.path());
    let mut names: Vec<String> = std::fs::read_dir(&renamed)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for name in names {
        let a = std::fs::read(renamed.join(&name)).unwrap();
        let b = std::fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn sweep_subcommand_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let suite = synth::standard_suite(1, 50, 4, 2, 3);
    synth::write_suite_csv(
        &suite,
        &dir.path().join("series.csv"),
        &dir.path().join("meta.csv"),
    )
    .unwrap();
    let config = r#"
data = "series.csv"
metadata = "meta.csv"
seed = 3

[[method]]
name = "bamoes"
base = "ols"
ue = "bamoes"
epochs = 2
"#;
    std::fs::write(dir.path().join("bench.toml"), config).unwrap();
    let status = Command::new(bin())
        .arg("sweep")
        .arg(dir.path().join("bench.toml"))
        .args(["--jobs", "2", "--out"])
        .arg(dir.path().join("sweep-out"))
        .status()
        .expect("run sweep subcommand");
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("sweep-out/sweep.csv")).unwrap();
    assert!(text.starts_with("weight_c,doe_factor,mean_miscal_area,series_used"));
    assert_eq!(text.lines().count(), 1 + 9 * 4);
}
