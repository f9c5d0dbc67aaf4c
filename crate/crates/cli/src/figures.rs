//! Figure experiments. Each figure simulates once per trial at the largest
//! length and evaluates its statistic on trajectory prefixes.

use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use olsid_core::lds::{DataBundle, SystemSpec};
use olsid_core::linalg::singular_values;
use olsid_core::mc::{map_trials, quantile_sorted};
use olsid_core::ols::{ols_fit, sandwich_bound_swsscs};
use olsid_core::talagrand::{scaling_study, talagrand_ratio, ScalingStudy};

use crate::output::{num, write_csv, write_curve, Curve};
use crate::settings::Settings;
use crate::svg;

pub const FIGURES: [&str; 6] =
    ["row-curse", "row-no-curse", "sigma1-tracks-row", "talagrand-growth", "ols-transience", "error-sandwich"];

#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub curves: Vec<Curve>,
    pub summary_header: Vec<String>,
    pub summary_rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl FigureOutput {
    pub fn write(&self, dir: &Path, plot: bool) -> Result<()> {
        fs::create_dir_all(dir)?;
        for c in &self.curves {
            write_curve(dir, &self.name, c)?;
        }
        let header: Vec<&str> = self.summary_header.iter().map(String::as_str).collect();
        write_csv(&dir.join(format!("{}_summary.csv", self.name)), &header, &self.summary_rows)?;
        if plot {
            let s = svg::render(&self.name, &self.x_label, &self.y_label, &self.curves, self.log_y);
            fs::write(dir.join(format!("{}.svg", self.name)), s)?;
        }
        Ok(())
    }
}

fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    (quantile_sorted(&s, 0.5), quantile_sorted(&s, 0.25), quantile_sorted(&s, 0.75))
}

/// Evenly spaced prefix lengths ending at `len`, all above `min`.
pub fn checkpoints(len: usize, count: usize, min: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=count).map(|k| len * k / count).filter(|&x| x > min).collect();
    v.dedup();
    v
}

/// Curve over prefixes from per-trial series aligned with `xs`.
fn curve_from_series(name: String, xs: &[usize], series: &[Vec<f64>]) -> Curve {
    let points = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let col: Vec<f64> = series.iter().map(|s| s[k]).collect();
            let (m, a, b) = quartiles(&col);
            (x as f64, m, a, b)
        })
        .collect();
    Curve { name, points }
}

fn prefix_row1_norms(b: &DataBundle, xs: &[usize]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(xs.len());
    let mut t = 0;
    for &x in xs {
        while t < x {
            acc += b.x_minus[(0, t)].powi(2);
            t += 1;
        }
        out.push(acc.sqrt());
    }
    out
}

/// Median of `||y_1||^2 / N` per dimension.
#[derive(Debug, Clone)]
pub struct RowGrowth {
    pub lambda: f64,
    /// `(n, median, q25, q75)`.
    pub per_n: Vec<(usize, f64, f64, f64)>,
    /// `(last / first)^(1 / (n_last - n_first))`.
    pub per_unit_factor: f64,
    /// `last / first`.
    pub overall_factor: f64,
}

pub fn row_growth(
    lambda: f64,
    n_list: &[usize],
    len: usize,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<(RowGrowth, Vec<Curve>)> {
    if n_list.len() < 2 {
        bail!("need at least two dimensions");
    }
    let xs = checkpoints(len, 10, *n_list.iter().max().unwrap());
    let mut per_n = Vec::new();
    let mut curves = Vec::new();
    for &n in n_list {
        let spec = SystemSpec::jordan(lambda, n)?;
        let series = map_trials(&spec, len, trials, seed, threads, |b| prefix_row1_norms(b, &xs))?;
        let finals: Vec<f64> = series.iter().map(|s| s[s.len() - 1].powi(2) / len as f64).collect();
        let (m, a, b) = quartiles(&finals);
        per_n.push((n, m, a, b));
        curves.push(curve_from_series(format!("n{n}"), &xs, &series));
    }
    let (n0, m0, ..) = per_n[0];
    let (n1, m1, ..) = per_n[per_n.len() - 1];
    let overall = m1 / m0;
    let g = RowGrowth { lambda, per_n, per_unit_factor: overall.powf(1.0 / (n1 as f64 - n0 as f64)), overall_factor: overall };
    Ok((g, curves))
}

fn row_figure(name: &str, default_lambda: f64, s: &Settings) -> Result<FigureOutput> {
    let lambda = s.lambda_or(default_lambda);
    let (g, curves) = row_growth(lambda, &s.n_list_or(&[12, 13, 14, 16]), s.len_or(3000), s.trials_or(20), s.seed, s.threads)?;
    Ok(FigureOutput {
        name: name.into(),
        x_label: "N".into(),
        y_label: "||y_1||".into(),
        log_y: true,
        curves,
        summary_header: ["n", "median_row1_sq_per_step", "q25", "q75"].map(String::from).to_vec(),
        summary_rows: g.per_n.iter().map(|&(n, m, a, b)| vec![n.to_string(), num(m), num(a), num(b)]).collect(),
        notes: vec![
            format!("lambda={lambda}"),
            format!("per_unit_factor={}", num(g.per_unit_factor)),
            format!("overall_factor={}", num(g.overall_factor)),
        ],
    })
}

/// Largest singular value against the first row norm.
#[derive(Debug, Clone)]
pub struct SigmaTracking {
    /// `(n, median sigma_1 / ||y_1||, violations of sigma_1 >= max_j ||y_j||)`.
    pub per_n: Vec<(usize, f64, usize)>,
}

pub fn sigma1_tracking(
    lambda: f64,
    n_list: &[usize],
    len: usize,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<(SigmaTracking, Vec<Curve>)> {
    let xs = checkpoints(len, 10, *n_list.iter().max().unwrap_or(&1));
    let mut per_n = Vec::new();
    let mut curves = Vec::new();
    for &n in n_list {
        let spec = SystemSpec::jordan(lambda, n)?;
        let series = map_trials(&spec, len, trials, seed, threads, |b| {
            let mut s1 = Vec::with_capacity(xs.len());
            let mut r1 = Vec::with_capacity(xs.len());
            let mut viol = 0usize;
            for &x in &xs {
                let p = b.x_minus.columns(0, x).into_owned();
                let s = singular_values(&p)[0];
                let rmax = (0..n).map(|j| p.row(j).norm()).fold(0.0, f64::max);
                if s < rmax * (1.0 - 1e-12) {
                    viol += 1;
                }
                s1.push(s);
                r1.push(p.row(0).norm());
            }
            (s1, r1, viol)
        })?;
        let s1: Vec<Vec<f64>> = series.iter().map(|t| t.0.clone()).collect();
        let r1: Vec<Vec<f64>> = series.iter().map(|t| t.1.clone()).collect();
        let ratio: Vec<f64> = series.iter().map(|t| t.0[xs.len() - 1] / t.1[xs.len() - 1]).collect();
        let viol = series.iter().map(|t| t.2).sum();
        per_n.push((n, quartiles(&ratio).0, viol));
        curves.push(curve_from_series(format!("sigma1_n{n}"), &xs, &s1));
        curves.push(curve_from_series(format!("row1_n{n}"), &xs, &r1));
    }
    Ok((SigmaTracking { per_n }, curves))
}

fn sigma_figure(s: &Settings) -> Result<FigureOutput> {
    let (t, curves) =
        sigma1_tracking(s.lambda_or(0.95), &s.n_list_or(&[14, 15, 17]), s.len_or(3000), s.trials_or(20), s.seed, s.threads)?;
    Ok(FigureOutput {
        name: "sigma1-tracks-row".into(),
        x_label: "N".into(),
        y_label: "sigma_1 and ||y_1||".into(),
        log_y: true,
        curves,
        summary_header: ["n", "median_sigma1_over_row1", "violations"].map(String::from).to_vec(),
        summary_rows: t.per_n.iter().map(|&(n, r, v)| vec![n.to_string(), num(r), v.to_string()]).collect(),
        notes: vec![],
    })
}

fn talagrand_figure(s: &Settings) -> Result<FigureOutput> {
    let lambda = s.lambda_or(0.95);
    let n_list = s.n_list_or(&[17, 20, 24]);
    let len = s.len_or(4000);
    let trials = s.trials_or(30);
    let xs = checkpoints(len, 10, *n_list.iter().max().unwrap_or(&1));
    let mut curves = Vec::new();
    for &n in &n_list {
        let spec = s.family.spec(lambda, n)?;
        let series = map_trials(&spec, len, trials, s.seed, s.threads, |b| {
            xs.iter().map(|&x| talagrand_ratio(&b.prefix(x)).ratio).collect::<Vec<f64>>()
        })?;
        curves.push(curve_from_series(format!("n{n}"), &xs, &series));
    }
    let study = scaling_study(s.family, lambda, &n_list, len, trials, s.seed, s.threads)?;
    Ok(FigureOutput {
        name: "talagrand-growth".into(),
        x_label: "N".into(),
        y_label: "||X||_F / ||E||_F".into(),
        log_y: true,
        curves,
        summary_header: ["n", "median_ratio", "q99", "log_median"].map(String::from).to_vec(),
        summary_rows: scaling_rows(&study),
        notes: vec![format!("slope={} ci=[{}, {}]", num(study.slope), num(study.ci.0), num(study.ci.1))],
    })
}

pub fn scaling_rows(study: &ScalingStudy) -> Vec<Vec<String>> {
    study
        .points
        .iter()
        .map(|p| vec![p.n.to_string(), num(p.median_ratio), num(p.q99), num(p.log_median)])
        .collect()
}

/// Median OLS error over prefixes of length `lens`.
pub fn ols_error_curve(
    name: &str,
    spec: &SystemSpec,
    lens: &[usize],
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Curve> {
    let max = *lens.iter().max().unwrap();
    let series = map_trials(spec, max, trials, seed, threads, |b| {
        lens.iter().map(|&x| ols_fit(&b.prefix(x)).error).collect::<Vec<f64>>()
    })?;
    Ok(curve_from_series(name.into(), lens, &series))
}

fn doubling(from: usize, to: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut x = from;
    while x < to {
        v.push(x);
        x *= 2;
    }
    v.push(to);
    v
}

fn transience_figure(s: &Settings) -> Result<FigureOutput> {
    let lambda = s.lambda_or(0.95);
    let n = s.n_or(15);
    let len = s.len_or(4000);
    let trials = s.trials_or(30);
    let jordan = ols_error_curve("jordan", &SystemSpec::jordan(lambda, n)?, &doubling(500.min(len), len), trials, s.seed, s.threads)?;
    let control_len = len.max(8000);
    let control = ols_error_curve(
        "hermitian",
        &SystemSpec::hermitian(&[0.5; 4])?,
        &doubling(500.min(control_len), control_len),
        trials,
        s.seed,
        s.threads,
    )?;
    let rows = [&jordan, &control]
        .iter()
        .flat_map(|c| c.points.iter().map(move |p| vec![c.name.clone(), num(p.0), num(p.1), num(p.2), num(p.3)]))
        .collect();
    Ok(FigureOutput {
        name: "ols-transience".into(),
        x_label: "N".into(),
        y_label: "||A - A_hat||_F".into(),
        log_y: true,
        curves: vec![jordan, control],
        summary_header: ["curve", "N", "median", "q25", "q75"].map(String::from).to_vec(),
        summary_rows: rows,
        notes: vec![format!("jordan lambda={lambda} n={n}; hermitian lambda=0.5 n=4")],
    })
}

/// Measured error against the explicit Jordan-block sandwich, per length.
#[derive(Debug, Clone)]
pub struct SandwichCoverage {
    /// `(N, lower, upper, containment rate)`.
    pub per_len: Vec<(usize, f64, f64, f64)>,
}

pub fn sandwich_coverage(
    lambda: f64,
    n: usize,
    lens: &[usize],
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<(SandwichCoverage, Vec<Curve>)> {
    let spec = SystemSpec::jordan(lambda, n)?;
    let max = *lens.iter().max().unwrap();
    let series = map_trials(&spec, max, trials, seed, threads, |b| {
        lens.iter().map(|&x| ols_fit(&b.prefix(x)).error).collect::<Vec<f64>>()
    })?;
    let mut per_len = Vec::new();
    let mut lo_pts = Vec::new();
    let mut hi_pts = Vec::new();
    for (k, &x) in lens.iter().enumerate() {
        let (lo, hi) = sandwich_bound_swsscs(n, x, lambda)?;
        let inside = series.iter().filter(|s| s[k] >= lo && s[k] <= hi).count();
        per_len.push((x, lo, hi, inside as f64 / trials as f64));
        lo_pts.push((x as f64, lo, lo, lo));
        hi_pts.push((x as f64, hi, hi, hi));
    }
    let curves = vec![
        curve_from_series("error".into(), lens, &series),
        Curve { name: "sandwich_lower".into(), points: lo_pts },
        Curve { name: "sandwich_upper".into(), points: hi_pts },
    ];
    Ok((SandwichCoverage { per_len }, curves))
}

fn sandwich_figure(s: &Settings) -> Result<FigureOutput> {
    let lambda = s.lambda_or(0.92);
    let n = s.n_or(10);
    let len = s.len_or(4000);
    let (c, curves) = sandwich_coverage(lambda, n, &doubling(500.min(len), len), s.trials_or(30), s.seed, s.threads)?;
    Ok(FigureOutput {
        name: "error-sandwich".into(),
        x_label: "N".into(),
        y_label: "||A - A_hat||_F".into(),
        log_y: true,
        curves,
        summary_header: ["N", "sandwich_lower", "sandwich_upper", "containment_rate"].map(String::from).to_vec(),
        summary_rows: c.per_len.iter().map(|&(x, a, b, r)| vec![x.to_string(), num(a), num(b), num(r)]).collect(),
        notes: vec![format!("lambda={lambda} n={n}")],
    })
}

pub fn run_figure(name: &str, s: &Settings) -> Result<FigureOutput> {
    match name {
        "row-curse" => row_figure(name, 0.95, s),
        "row-no-curse" => row_figure(name, 0.47, s),
        "sigma1-tracks-row" => sigma_figure(s),
        "talagrand-growth" => talagrand_figure(s),
        "ols-transience" => transience_figure(s),
        "error-sandwich" => sandwich_figure(s),
        other => bail!("unknown figure `{other}`; expected one of {}", FIGURES.join(", ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_increasing_and_end_at_len() {
        let c = checkpoints(3000, 10, 16);
        assert_eq!(c.len(), 10);
        assert_eq!(*c.last().unwrap(), 3000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(doubling(500, 4000), vec![500, 1000, 2000, 4000]);
        assert_eq!(doubling(500, 3000), vec![500, 1000, 2000, 3000]);
    }
}
