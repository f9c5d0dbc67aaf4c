//! Deterministic parallel Monte Carlo over simulated trajectories.
//!
//! Trial `t` of a plan with base seed `s` uses the noise stream `(s, t)`, so a
//! trial can be rerun alone and results do not depend on the thread count:
//! values are collected in trial order and reduced sequentially.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lds::{simulate_trial, DataBundle, SystemSpec};
use crate::linalg::singular_values;
use crate::ols::ols_fit;
use crate::talagrand::talagrand_ratio;

pub type Statistic = Arc<dyn Fn(&DataBundle) -> f64 + Send + Sync>;

/// Named scalar statistics of a bundle.
#[derive(Clone, Default)]
pub struct Registry {
    map: BTreeMap<String, Statistic>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.map.keys()).finish()
    }
}

fn row_inner(b: &DataBundle, j: usize, k: usize) -> f64 {
    b.x_minus.row(j).dot(&b.x_minus.row(k))
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry with the statistics used by the experiments.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("row1_sq_norm", |b| row_inner(b, 0, 0));
        r.register("row1_sq_norm_per_step", |b| row_inner(b, 0, 0) / b.len() as f64);
        r.register("row_last_sq_norm", |b| {
            let n = b.dim() - 1;
            row_inner(b, n, n)
        });
        r.register("cross_12", |b| row_inner(b, 0, 1.min(b.dim() - 1)));
        r.register("cross_12_sq", |b| row_inner(b, 0, 1.min(b.dim() - 1)).powi(2));
        r.register("adjacent_inner", |b| {
            let n = b.dim();
            row_inner(b, n.saturating_sub(2), n - 1)
        });
        r.register("ols_error", |b| ols_fit(b).error);
        r.register("talagrand_ratio", |b| talagrand_ratio(b).ratio);
        r.register("sigma1", |b| singular_values(&b.x_minus)[0]);
        r.register("sigma1_over_row1", |b| singular_values(&b.x_minus)[0] / b.x_minus.row(0).norm());
        r.register("martingale_sigma1_sq", |b| {
            singular_values(&(&b.noise * b.x_minus.transpose()))[0].powi(2)
        });
        r
    }

    pub fn register(&mut self, name: &str, f: impl Fn(&DataBundle) -> f64 + Send + Sync + 'static) {
        self.map.insert(name.to_string(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Result<Statistic> {
        self.map
            .get(name)
            .cloned()
            .ok_or_else(|| Error::StatisticNotRegistered(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.map.keys().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub spec: SystemSpec,
    pub len: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub statistic: String,
}

pub const QUANTILE_LEVELS: [f64; 6] = [0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
    pub se: f64,
    /// At [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 6],
    pub trials: usize,
    pub base_seed: u64,
    pub values: Vec<f64>,
}

impl Estimate {
    pub fn median(&self) -> f64 {
        self.quantiles[2]
    }

    pub fn q25(&self) -> f64 {
        self.quantiles[1]
    }

    pub fn q75(&self) -> f64 {
        self.quantiles[3]
    }

    pub fn q99(&self) -> f64 {
        self.quantiles[5]
    }
}

/// Linear-interpolation quantile of sorted data (position `p (M - 1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

/// Mean, sample standard deviation, standard error and quantiles, reduced in
/// input order.
pub fn summarize(values: Vec<f64>, base_seed: u64) -> Estimate {
    let m = values.len();
    let mf = m as f64;
    let mean = values.iter().sum::<f64>() / mf;
    let std = if m > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (mf - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = QUANTILE_LEVELS.map(|p| quantile_sorted(&sorted, p));
    Estimate { mean, std, se: std / mf.sqrt(), quantiles, trials: m, base_seed, values }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::BadParameter(e.to_string())),
    }
}

/// Simulates `trials` trajectories and maps each through `f`, in trial order.
pub fn map_trials<T: Send>(
    spec: &SystemSpec,
    len: usize,
    trials: usize,
    base_seed: u64,
    threads: Option<usize>,
    f: impl Fn(&DataBundle) -> T + Sync + Send,
) -> Result<Vec<T>> {
    if len <= spec.dim() {
        return Err(Error::ShortTrajectory { len, dim: spec.dim() });
    }
    with_threads(threads, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let b = simulate_trial(spec, len, base_seed, t).expect("length checked above");
                f(&b)
            })
            .collect()
    })
}

/// Runs a plan on the global thread pool.
pub fn run_trials(plan: &TrialPlan, registry: &Registry) -> Result<Estimate> {
    run_trials_with(plan, registry, None)
}

/// Runs a plan with an explicit thread count (`None` uses the global pool).
pub fn run_trials_with(plan: &TrialPlan, registry: &Registry, threads: Option<usize>) -> Result<Estimate> {
    let stat = registry.get(&plan.statistic)?;
    if plan.trials == 0 {
        return Err(Error::BadParameter("trials must be positive".into()));
    }
    let values = map_trials(&plan.spec, plan.len, plan.trials, plan.base_seed, threads, |b| stat(b))?;
    Ok(summarize(values, plan.base_seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub pass: bool,
    pub z_score: f64,
}

/// `|mean - oracle| <= z SE`; with zero spread the comparison is exact to `1e-9`.
pub fn compare_to_oracle(est: &Estimate, oracle: f64, z: f64) -> OracleComparison {
    let diff = est.mean - oracle;
    if est.se == 0.0 {
        let pass = diff.abs() <= 1e-9 * oracle.abs().max(1.0);
        return OracleComparison { pass, z_score: if diff == 0.0 { 0.0 } else { f64::INFINITY } };
    }
    let z_score = diff / est.se;
    OracleComparison { pass: z_score.abs() <= z, z_score }
}
