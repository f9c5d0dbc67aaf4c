//! Subcommand implementations. Each returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use olsid_core::lds::{simulate_trial, DataBundle, SystemSpec};
use olsid_core::mc::{map_trials, median};
use olsid_core::moments::oracle_table;
use olsid_core::ols::error_bounds;
use olsid_core::spectra::{spectrum, spectrum_table};
use olsid_core::talagrand::{scaling_study, talagrand_ratio};

use crate::figures::{run_figure, scaling_rows};
use crate::output::{num, write_csv};
use crate::settings::{Settings, MAX_CELLS};
use crate::verify::{report_csv, run_verify, verify_bundle, Check, VerifyContext};

pub const OLS_HEADER: [&str; 14] = [
    "seed",
    "n",
    "N",
    "lambda",
    "error",
    "lower_svd",
    "upper_svd",
    "lower_2mom",
    "upper_2mom",
    "sandwich_lower",
    "sandwich_upper",
    "combined_upper",
    "kappa",
    "trial",
];

pub const SWEEP_HEADER: [&str; 19] = [
    "seed",
    "n",
    "N",
    "lambda",
    "error",
    "lower_svd",
    "upper_svd",
    "lower_2mom",
    "upper_2mom",
    "sandwich_lower",
    "sandwich_upper",
    "combined_upper",
    "kappa",
    "trial",
    "family",
    "sigma_max",
    "sigma_min",
    "talagrand_ratio",
    "talagrand_bound",
];

fn spec_of(s: &Settings, lambda: f64, n: usize) -> Result<SystemSpec> {
    Ok(s.family.spec(lambda, n)?)
}

fn family_name(s: &Settings) -> &'static str {
    match s.family {
        olsid_core::talagrand::Family::Jordan => "jordan",
        olsid_core::talagrand::Family::Hermitian => "hermitian",
    }
}

/// Exports one trajectory as `bundle_*.csv` plus `bundle_meta.txt`.
pub fn cmd_simulate(s: &Settings) -> Result<Vec<PathBuf>> {
    let spec = spec_of(s, s.lambda_or(0.9), s.n_or(4))?;
    let len = s.len_or(200);
    s.check_caps(len, 1)?;
    let b = simulate_trial(&spec, len, s.seed, 0)?;
    fs::create_dir_all(&s.out)?;
    b.write_csv(&s.out, "bundle")?;
    Ok(["x_minus.csv", "x_plus.csv", "noise.csv", "meta.txt"].iter().map(|f| s.out.join(format!("bundle_{f}"))).collect())
}

/// Per-coordinate spectrum of one trajectory and the moment-oracle table.
pub fn cmd_spectra(s: &Settings) -> Result<Vec<PathBuf>> {
    let (lambda, n, len) = (s.lambda_or(0.9), s.n_or(4), s.len_or(500));
    s.check_caps(len, 1)?;
    let b = simulate_trial(&spec_of(s, lambda, n)?, len, s.seed, 0)?;
    let rows: Vec<Vec<String>> = spectrum_table(&b.x_minus)?
        .iter()
        .map(|r| {
            vec![
                r.j.to_string(),
                num(r.sigma),
                num(r.lambda),
                num(r.distance),
                num(r.v_jj),
                num(r.residual_lin1),
                num(r.max_residual_lin2),
            ]
        })
        .collect();
    let p1 = s.out.join("spectra.csv");
    write_csv(
        &p1,
        &["j", "sigma_j", "lambda_j", "distance_j", "v_jj", "residual_lin1", "max_residual_lin2"],
        &rows,
    )?;
    let oracle: Vec<Vec<String>> = oracle_table(lambda, s.rho.unwrap_or(0.5), n, len)?
        .into_iter()
        .map(|r| {
            vec![
                r.name.to_string(),
                num(r.lambda),
                num(r.rho),
                r.n.to_string(),
                r.len.to_string(),
                num(r.value),
                num(r.lower_bound),
                num(r.upper_bound),
            ]
        })
        .collect();
    let p2 = s.out.join("oracles.csv");
    write_csv(&p2, &["name", "lambda", "rho", "n", "N", "value", "lower_bound", "upper_bound"], &oracle)?;
    Ok(vec![p1, p2])
}

fn ols_row(seed: u64, lambda: f64, b: &DataBundle) -> Vec<String> {
    let e = error_bounds(b);
    vec![
        seed.to_string(),
        b.dim().to_string(),
        b.len().to_string(),
        num(lambda),
        num(e.error),
        num(e.lower_svd),
        num(e.upper_svd),
        num(e.lower_2mom),
        num(e.upper_2mom),
        num(e.sandwich_lower),
        num(e.sandwich_upper),
        num(e.combined_upper),
        num(e.kappa),
        b.trial.to_string(),
    ]
}

/// OLS rows for one parameter cell, one per trial.
pub fn ols_rows(s: &Settings, lambda: f64, n: usize, len: usize, trials: usize) -> Result<Vec<Vec<String>>> {
    let spec = spec_of(s, lambda, n)?;
    let seed = s.seed;
    Ok(map_trials(&spec, len, trials, seed, s.threads, |b| ols_row(seed, lambda, b))?)
}

pub fn cmd_ols(s: &Settings) -> Result<Vec<PathBuf>> {
    let (len, trials) = (s.len_or(1000), s.trials_or(10));
    s.check_caps(len, trials)?;
    let rows = ols_rows(s, s.lambda_or(0.9), s.n_or(4), len, trials)?;
    let p = s.out.join("ols.csv");
    write_csv(&p, &OLS_HEADER, &rows)?;
    Ok(vec![p])
}

pub fn cmd_talagrand(s: &Settings) -> Result<Vec<PathBuf>> {
    let (lambda, len, trials) = (s.lambda_or(0.95), s.len_or(2000), s.trials_or(30));
    s.check_caps(len, trials)?;
    let study = scaling_study(s.family, lambda, &s.n_list_or(&[10, 13, 16, 19]), len, trials, s.seed, s.threads)?;
    let mut rows = Vec::new();
    for p in &study.points {
        for (t, r) in p.ratios.iter().enumerate() {
            rows.push(vec![num(lambda), p.n.to_string(), len.to_string(), t.to_string(), num(*r)]);
        }
    }
    let p1 = s.out.join("talagrand.csv");
    write_csv(&p1, &["lambda", "n", "N", "trial", "ratio"], &rows)?;
    let p2 = s.out.join("talagrand_summary.csv");
    write_csv(&p2, &["n", "median_ratio", "q99", "log_median"], &scaling_rows(&study))?;
    let p3 = s.out.join("talagrand_fit.csv");
    write_csv(&p3, &["slope", "ci_low", "ci_high"], &[vec![num(study.slope), num(study.ci.0), num(study.ci.1)]])?;
    Ok(vec![p1, p2, p3])
}

/// Grid over `lambda_list x n_list x N_list`, one row per cell and trial.
pub fn sweep_rows(s: &Settings) -> Result<Vec<Vec<String>>> {
    let lambdas = s.lambda_list.clone().unwrap_or_else(|| vec![s.lambda_or(0.9)]);
    let dims = s.n_list.clone().unwrap_or_else(|| vec![s.n_or(4)]);
    let lens = s.len_list.clone().unwrap_or_else(|| vec![s.len_or(1000)]);
    let trials = s.trials_or(10);
    if lambdas.is_empty() || dims.is_empty() || lens.is_empty() {
        bail!("sweep grids must be non-empty");
    }
    let cells = lambdas.len() * dims.len() * lens.len();
    if cells > MAX_CELLS && !s.allow_large {
        bail!("grid too large: {cells} cells (cap {MAX_CELLS}; pass --allow-large)");
    }
    for &len in &lens {
        s.check_caps(len, trials)?;
    }
    let seed = s.seed;
    let fam = family_name(s);
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        for &n in &dims {
            let spec = spec_of(s, lambda, n)?;
            for &len in &lens {
                rows.extend(map_trials(&spec, len, trials, seed, s.threads, |b| {
                    let mut r = ols_row(seed, lambda, b);
                    let sp = spectrum(&b.x_minus);
                    let t = talagrand_ratio(b);
                    r.extend([
                        fam.to_string(),
                        num(sp.singular_values[0]),
                        num(sp.singular_values[b.dim() - 1]),
                        num(t.ratio),
                        num(t.bound),
                    ]);
                    r
                })?);
            }
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(s: &Settings) -> Result<Vec<PathBuf>> {
    let rows = sweep_rows(s)?;
    let p = s.out.join("sweep.csv");
    write_csv(&p, &SWEEP_HEADER, &rows)?;
    let mut summary: Vec<Vec<String>> = Vec::new();
    let mut k = 0;
    while k < rows.len() {
        let key = (&rows[k][1], &rows[k][2], &rows[k][3]);
        let mut errs = Vec::new();
        while k < rows.len() && (&rows[k][1], &rows[k][2], &rows[k][3]) == key {
            errs.push(rows[k][4].parse::<f64>()?);
            k += 1;
        }
        summary.push(vec![key.2.clone(), key.0.clone(), key.1.clone(), num(median(&errs))]);
    }
    let p2 = s.out.join("sweep_summary.csv");
    write_csv(&p2, &["lambda", "n", "N", "median_error"], &summary)?;
    Ok(vec![p, p2])
}

pub fn cmd_figure(name: &str, s: &Settings) -> Result<Vec<PathBuf>> {
    s.check_caps(s.len_or(0), s.trials_or(0))?;
    let fig = run_figure(name, s)?;
    fig.write(&s.out, s.plot)?;
    let mut paths: Vec<PathBuf> = fig.curves.iter().map(|c| s.out.join(format!("{name}_{}.csv", c.name))).collect();
    paths.push(s.out.join(format!("{name}_summary.csv")));
    if s.plot {
        paths.push(s.out.join(format!("{name}.svg")));
    }
    for note in &fig.notes {
        println!("{note}");
    }
    Ok(paths)
}

/// Outcome of `verify`: all checks plus the report path.
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub report: PathBuf,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| format!("{}/{}", c.suite, c.name)).collect()
    }
}

/// Runs the suites, or only the bundle checks when `bundle_dir` is given.
pub fn cmd_verify(s: &Settings, bundle_dir: Option<&Path>) -> Result<VerifyOutcome> {
    let checks = match bundle_dir {
        Some(dir) => {
            let b = DataBundle::read_csv(dir, "bundle").with_context(|| format!("reading bundle from {}", dir.display()))?;
            verify_bundle(&b)
        }
        None => run_verify(s.suite.as_deref(), &VerifyContext { seed: s.seed, threads: s.threads })?,
    };
    fs::create_dir_all(&s.out)?;
    let report = s.out.join("verify_report.csv");
    fs::write(&report, report_csv(&checks))?;
    Ok(VerifyOutcome { checks, report })
}
