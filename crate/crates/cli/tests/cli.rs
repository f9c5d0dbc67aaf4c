use std::fs;
use std::path::Path;
use std::process::Command;

use olsid_cli::commands::{sweep_rows, SWEEP_HEADER};
use olsid_cli::settings::Overrides;

fn olsid(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_olsid")).args(args).output().expect("binary runs")
}

fn out_arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_passes_and_lists_suites() {
    let d = tempfile::tempdir().unwrap();
    let o = olsid(&["verify", "--out", &out_arg(d.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(d.path().join("verify_report.csv")).unwrap();
    let suites: std::collections::BTreeSet<&str> = report.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(suites.len() >= 12);
}

#[test]
fn verify_single_suite() {
    let d = tempfile::tempdir().unwrap();
    let o = olsid(&["verify", "--suite", "neg2mom", "--out", &out_arg(d.path())]);
    assert!(o.status.success());
    let report = fs::read_to_string(d.path().join("verify_report.csv")).unwrap();
    assert!(report.lines().skip(1).all(|l| l.starts_with("neg2mom,")));
    assert!(!olsid(&["verify", "--suite", "bogus", "--out", &out_arg(d.path())]).status.success());
}

#[test]
fn corrupted_bundle_fails_verification() {
    let d = tempfile::tempdir().unwrap();
    let out = out_arg(d.path());
    assert!(olsid(&["simulate", "--n", "3", "--N", "50", "--out", &out]).status.success());
    assert!(olsid(&["verify", "--bundle", &out, "--out", &out]).status.success());
    let p = d.path().join("bundle_x_plus.csv");
    let text = fs::read_to_string(&p).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<&str> = lines[2].split(',').collect();
    fields[10] = "7.5";
    lines[2] = fields.join(",");
    fs::write(&p, lines.join("\n") + "\n").unwrap();
    let o = olsid(&["verify", "--bundle", &out, "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bundle/recursion_residual"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "# ols run\nlambda = 0.5\nn = 3\nN = 120\ntrials = 2\nseed = 9\n").unwrap();
    let out = out_arg(d.path());
    let o = olsid(&["ols", "--config", cfg.to_str().unwrap(), "--n", "2", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("ols.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("9,2,120,0.5,"));
    fs::write(&cfg, "lamda = 0.5\n").unwrap();
    assert_eq!(olsid(&["ols", "--config", cfg.to_str().unwrap(), "--out", &out]).status.code(), Some(2));
}

#[test]
fn figure_is_reproducible_and_plots() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |p: &Path| {
        vec!["figure".to_string(), "row-curse".into(), "--n-list".into(), "4,6".into(), "--N".into(), "300".into(), "--trials".into(), "5".into(), "--out".into(), out_arg(p)]
    };
    let mut with_plot = args(a.path());
    with_plot.push("--plot".into());
    assert!(Command::new(env!("CARGO_BIN_EXE_olsid")).args(&with_plot).status().unwrap().success());
    assert!(Command::new(env!("CARGO_BIN_EXE_olsid")).args(args(b.path())).status().unwrap().success());
    for f in ["row-curse_n4.csv", "row-curse_n6.csv", "row-curse_summary.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(a.path().join("row-curse_n4.csv")).unwrap().lines().next(), Some("x,median,q25,q75"));
    assert!(a.path().join("row-curse.svg").exists());
    assert!(!b.path().join("row-curse.svg").exists());
    assert!(!olsid(&["figure", "nope", "--out", &out_arg(a.path())]).status.success());
}

#[test]
fn oversized_jobs_need_the_flag() {
    let d = tempfile::tempdir().unwrap();
    let o = olsid(&["sweep", "--N", "9000", "--out", &out_arg(d.path())]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid too large"));
    assert!(!o.status.success());
}

#[test]
fn one_cell_sweep_matches_ols() {
    let d = tempfile::tempdir().unwrap();
    let out = out_arg(d.path());
    let common = ["--lambda", "0.8", "--n", "3", "--N", "200", "--trials", "4", "--seed", "5", "--out", &out];
    assert!(olsid(&[&["ols"], &common[..]].concat()).status.success());
    assert!(olsid(&[&["sweep"], &common[..]].concat()).status.success());
    let ols = fs::read_to_string(d.path().join("ols.csv")).unwrap();
    let sweep = fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    let cut: Vec<String> = sweep.lines().map(|l| l.split(',').take(14).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(cut, ols.lines().collect::<Vec<_>>());
    assert_eq!(sweep.lines().next().unwrap().split(',').count(), SWEEP_HEADER.len());
}

fn median_errors(family: &str, lambda: f64, n: usize, lens: &[usize]) -> Vec<f64> {
    let s = Overrides {
        family: Some(family.into()),
        lambda: Some(lambda),
        n: Some(n),
        len_list: Some(lens.to_vec()),
        trials: Some(20),
        seed: Some(3),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    let rows = sweep_rows(&s).unwrap();
    lens.iter()
        .map(|&len| {
            let e: Vec<f64> = rows.iter().filter(|r| r[2] == len.to_string()).map(|r| r[4].parse().unwrap()).collect();
            olsid_core::mc::median(&e)
        })
        .collect()
}

#[test]
fn sweep_separates_consistent_and_transient_regimes() {
    let h = median_errors("hermitian", 0.5, 4, &[500, 2000, 8000]);
    assert!(h.windows(2).all(|w| w[1] < w[0]), "{h:?}");
    let j = median_errors("jordan", 0.95, 15, &[500, 2000, 4000]);
    assert!(!j.windows(2).all(|w| w[1] < w[0]), "{j:?}");
}
