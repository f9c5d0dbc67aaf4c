//! Run settings merged from a flat `key=value` config file and command-line flags.
//! Flags win over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use olsid_core::lds::read_key_values;
use olsid_core::talagrand::Family;

pub const MAX_LEN: usize = 8000;
pub const MAX_TRIALS: usize = 50;
pub const MAX_CELLS: usize = 64;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub len: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plot: Option<bool>,
    pub suite: Option<String>,
    pub family: Option<String>,
    pub threads: Option<usize>,
    pub lambda_list: Option<Vec<f64>>,
    pub len_list: Option<Vec<usize>>,
    pub rho: Option<f64>,
    pub allow_large: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub len: Option<usize>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub plot: bool,
    pub suite: Option<String>,
    pub family: Family,
    pub threads: Option<usize>,
    pub lambda_list: Option<Vec<f64>>,
    pub len_list: Option<Vec<usize>>,
    pub rho: Option<f64>,
    pub allow_large: bool,
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().ok().with_context(|| format!("bad entry `{s}` for {key}")))
        .collect()
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().ok().with_context(|| format!("bad value `{v}` for {key}"))
}

impl Overrides {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut o = Overrides::default();
        for (k, v) in map {
            match k.as_str() {
                "lambda" => o.lambda = Some(parse(k, v)?),
                "n" => o.n = Some(parse(k, v)?),
                "n_list" | "n-list" => o.n_list = Some(parse_list(k, v)?),
                "N" => o.len = Some(parse(k, v)?),
                "trials" => o.trials = Some(parse(k, v)?),
                "seed" => o.seed = Some(parse(k, v)?),
                "out" => o.out = Some(PathBuf::from(v)),
                "plot" => o.plot = Some(parse(k, v)?),
                "suite" => o.suite = Some(v.clone()),
                "family" => o.family = Some(v.clone()),
                "threads" => o.threads = Some(parse(k, v)?),
                "lambda_list" | "lambda-list" => o.lambda_list = Some(parse_list(k, v)?),
                "N_list" | "N-list" => o.len_list = Some(parse_list(k, v)?),
                "rho" => o.rho = Some(parse(k, v)?),
                "allow_large" | "allow-large" => o.allow_large = Some(parse(k, v)?),
                other => bail!("unknown config key `{other}`"),
            }
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let map = read_key_values(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_map(&map)
    }

    /// Fields set in `self` take precedence over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            lambda: self.lambda.or(base.lambda),
            n: self.n.or(base.n),
            n_list: self.n_list.or(base.n_list),
            len: self.len.or(base.len),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            plot: self.plot.or(base.plot),
            suite: self.suite.or(base.suite),
            family: self.family.or(base.family),
            threads: self.threads.or(base.threads),
            lambda_list: self.lambda_list.or(base.lambda_list),
            len_list: self.len_list.or(base.len_list),
            rho: self.rho.or(base.rho),
            allow_large: self.allow_large.or(base.allow_large),
        }
    }

    pub fn resolve(self) -> Result<Settings> {
        let family = match self.family.as_deref() {
            None => Family::Jordan,
            Some(f) => Family::parse(f)?,
        };
        if let Some(t) = self.threads {
            if t == 0 {
                bail!("threads must be positive");
            }
        }
        Ok(Settings {
            lambda: self.lambda,
            n: self.n,
            n_list: self.n_list,
            len: self.len,
            trials: self.trials,
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            plot: self.plot.unwrap_or(false),
            suite: self.suite,
            family,
            threads: self.threads,
            lambda_list: self.lambda_list,
            len_list: self.len_list,
            rho: self.rho,
            allow_large: self.allow_large.unwrap_or(false),
        })
    }
}

impl Settings {
    pub fn lambda_or(&self, d: f64) -> f64 {
        self.lambda.unwrap_or(d)
    }

    pub fn n_or(&self, d: usize) -> usize {
        self.n.unwrap_or(d)
    }

    pub fn len_or(&self, d: usize) -> usize {
        self.len.unwrap_or(d)
    }

    pub fn trials_or(&self, d: usize) -> usize {
        self.trials.unwrap_or(d)
    }

    pub fn n_list_or(&self, d: &[usize]) -> Vec<usize> {
        self.n_list.clone().unwrap_or_else(|| d.to_vec())
    }

    /// Rejects jobs above the desk-scale caps unless `allow_large` is set.
    pub fn check_caps(&self, len: usize, trials: usize) -> Result<()> {
        if !self.allow_large && (len > MAX_LEN || trials > MAX_TRIALS) {
            bail!("grid too large: N={len}, trials={trials} (caps N<={MAX_LEN}, trials<={MAX_TRIALS}; pass --allow-large)");
        }
        Ok(())
    }
}
