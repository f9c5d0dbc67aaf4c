//! Stable linear stochastic systems `x_{t+1} = A x_t + w_t` driven by standard
//! Gaussian noise, started at `x_0 = 0`.
//!
//! A trajectory of length `N` is stored as three `n x N` matrices: `x_minus`
//! holds `x_0 .. x_{N-1}`, `x_plus` holds `x_1 .. x_N` and `noise` holds
//! `w_0 .. w_{N-1}`. Row `j` of `x_minus` is the row vector `y_j`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::noise::noise_matrix;

/// Unvalidated description of a system matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecKind {
    /// Real diagonal matrix with the given eigenvalues.
    HermitianDiagonal(Vec<f64>),
    /// Single upper Jordan block `J_n(lambda)`.
    Jordan { lambda: f64, n: usize },
    /// Block-diagonal stack of upper Jordan blocks `(lambda, size)`.
    BlockDiagonal(Vec<(f64, usize)>),
    /// Arbitrary square matrix.
    Dense(DMatrix<f64>),
}

/// A validated, strictly stable system matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    kind: SpecKind,
    a: DMatrix<f64>,
    spectral_radius: f64,
}

fn jordan_block(lambda: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            lambda
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    })
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("{what} is not finite")))
    }
}

/// Validates `kind` and builds the system matrix.
pub fn make_spec(kind: SpecKind) -> Result<SystemSpec> {
    let (a, rho) = match &kind {
        SpecKind::HermitianDiagonal(eigs) => {
            if eigs.is_empty() {
                return Err(Error::BadParameter("no eigenvalues".into()));
            }
            for &e in eigs {
                check_finite(e, "eigenvalue")?;
            }
            let rho = eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            (DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigs.clone())), rho)
        }
        SpecKind::Jordan { lambda, n } => {
            check_finite(*lambda, "lambda")?;
            if *n == 0 {
                return Err(Error::BadParameter("dimension must be positive".into()));
            }
            (jordan_block(*lambda, *n), lambda.abs())
        }
        SpecKind::BlockDiagonal(blocks) => {
            if blocks.is_empty() || blocks.iter().any(|&(_, s)| s == 0) {
                return Err(Error::BadParameter("blocks must be non-empty".into()));
            }
            let n: usize = blocks.iter().map(|b| b.1).sum();
            let mut a = DMatrix::zeros(n, n);
            let mut off = 0;
            let mut rho = 0.0f64;
            for &(l, s) in blocks {
                check_finite(l, "lambda")?;
                a.view_mut((off, off), (s, s)).copy_from(&jordan_block(l, s));
                off += s;
                rho = rho.max(l.abs());
            }
            (a, rho)
        }
        SpecKind::Dense(m) => {
            if m.nrows() != m.ncols() || m.nrows() == 0 {
                return Err(Error::BadParameter("matrix must be square and non-empty".into()));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadParameter("matrix has non-finite entries".into()));
            }
            let rho = m
                .complex_eigenvalues()
                .iter()
                .fold(0.0f64, |acc, z| acc.max(z.norm()));
            (m.clone(), rho)
        }
    };
    if rho >= 1.0 {
        return Err(Error::SpectralRadiusViolation(rho));
    }
    Ok(SystemSpec { kind, a, spectral_radius: rho })
}

impl SystemSpec {
    pub fn hermitian(eigs: &[f64]) -> Result<Self> {
        make_spec(SpecKind::HermitianDiagonal(eigs.to_vec()))
    }

    pub fn jordan(lambda: f64, n: usize) -> Result<Self> {
        make_spec(SpecKind::Jordan { lambda, n })
    }

    pub fn kind(&self) -> &SpecKind {
        &self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// Distinct eigenvalues with `(algebraic - geometric)` multiplicity, for the
    /// canonical forms. `None` for dense matrices.
    pub fn defects(&self) -> Option<Vec<(f64, usize)>> {
        let mut groups: Vec<(f64, usize, usize)> = Vec::new();
        let mut push = |l: f64, am: usize, gm: usize| {
            if let Some(g) = groups.iter_mut().find(|g| g.0 == l) {
                g.1 += am;
                g.2 += gm;
            } else {
                groups.push((l, am, gm));
            }
        };
        match &self.kind {
            SpecKind::HermitianDiagonal(e) => e.iter().for_each(|&l| push(l, 1, 1)),
            SpecKind::Jordan { lambda, n } => push(*lambda, *n, 1),
            SpecKind::BlockDiagonal(b) => b.iter().for_each(|&(l, s)| push(l, s, 1)),
            SpecKind::Dense(_) => return None,
        }
        Some(groups.into_iter().map(|(l, am, gm)| (l, am - gm)).collect())
    }

    /// `Some(lambda)` when the spec is a single Jordan block with `0 < lambda < 1`.
    pub fn swsscs_lambda(&self) -> Option<f64> {
        match self.kind {
            SpecKind::Jordan { lambda, .. } if lambda > 0.0 => Some(lambda),
            _ => None,
        }
    }

    fn meta(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";");
        match &self.kind {
            SpecKind::HermitianDiagonal(e) => vec![
                ("kind".into(), "hermitian".into()),
                ("eigenvalues".into(), join(e)),
            ],
            SpecKind::Jordan { lambda, n } => vec![
                ("kind".into(), "jordan".into()),
                ("lambda".into(), format!("{lambda:?}")),
                ("n".into(), n.to_string()),
            ],
            SpecKind::BlockDiagonal(b) => vec![
                ("kind".into(), "block".into()),
                (
                    "blocks".into(),
                    b.iter().map(|(l, s)| format!("{l:?}x{s}")).collect::<Vec<_>>().join(";"),
                ),
            ],
            SpecKind::Dense(m) => {
                let rows: Vec<f64> = (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| m[(i, j)])
                    .collect();
                vec![
                    ("kind".into(), "dense".into()),
                    ("n".into(), m.nrows().to_string()),
                    ("a".into(), join(&rows)),
                ]
            }
        }
    }

    fn from_meta(meta: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| Error::BadParameter(format!("metadata lacks `{k}`")))
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadParameter(format!("not a number: {s}")))
        };
        let list = |s: &str| s.split(';').filter(|p| !p.is_empty()).map(num).collect::<Result<Vec<_>>>();
        let dim = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::BadParameter(format!("not a dimension: {s}")))
        };
        let kind = match get("kind")?.as_str() {
            "hermitian" => SpecKind::HermitianDiagonal(list(get("eigenvalues")?)?),
            "jordan" => SpecKind::Jordan { lambda: num(get("lambda")?)?, n: dim(get("n")?)? },
            "block" => SpecKind::BlockDiagonal(
                get("blocks")?
                    .split(';')
                    .map(|b| {
                        let (l, s) = b
                            .split_once('x')
                            .ok_or_else(|| Error::BadParameter(format!("bad block {b}")))?;
                        Ok((num(l)?, dim(s)?))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            "dense" => {
                let n = dim(get("n")?)?;
                let v = list(get("a")?)?;
                if v.len() != n * n {
                    return Err(Error::BadParameter("dense matrix has wrong size".into()));
                }
                SpecKind::Dense(DMatrix::from_row_slice(n, n, &v))
            }
            other => return Err(Error::BadParameter(format!("unknown kind {other}"))),
        };
        make_spec(kind)
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub spec: SystemSpec,
    pub seed: u64,
    pub trial: u64,
    pub x_minus: DMatrix<f64>,
    pub x_plus: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

impl DataBundle {
    pub fn dim(&self) -> usize {
        self.x_minus.nrows()
    }

    pub fn len(&self) -> usize {
        self.x_minus.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x_minus.ncols() == 0
    }

    /// The first `len` steps of this trajectory, itself a valid bundle.
    pub fn prefix(&self, len: usize) -> DataBundle {
        let n = self.dim();
        DataBundle {
            spec: self.spec.clone(),
            seed: self.seed,
            trial: self.trial,
            x_minus: self.x_minus.view((0, 0), (n, len)).into_owned(),
            x_plus: self.x_plus.view((0, 0), (n, len)).into_owned(),
            noise: self.noise.view((0, 0), (n, len)).into_owned(),
        }
    }

    /// Frobenius norm of `x_plus - (A x_minus + noise)` relative to `||x_plus||_F`.
    pub fn recursion_residual(&self) -> f64 {
        let r = &self.x_plus - (self.spec.matrix() * &self.x_minus + &self.noise);
        r.norm() / self.x_plus.norm().max(f64::MIN_POSITIVE)
    }

    /// Writes `{prefix}_x_minus.csv`, `{prefix}_x_plus.csv`, `{prefix}_noise.csv`
    /// and a `{prefix}_meta.txt` key=value sidecar into `dir`.
    pub fn write_csv(&self, dir: &Path, prefix: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, m) in [("x_minus", &self.x_minus), ("x_plus", &self.x_plus), ("noise", &self.noise)] {
            write_matrix_csv(&dir.join(format!("{prefix}_{name}.csv")), m)?;
        }
        let mut meta = self.spec.meta();
        meta.push(("N".into(), self.len().to_string()));
        meta.push(("seed".into(), self.seed.to_string()));
        meta.push(("trial".into(), self.trial.to_string()));
        let text: String = meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        fs::write(dir.join(format!("{prefix}_meta.txt")), text)?;
        Ok(())
    }

    /// Reads a bundle written by [`DataBundle::write_csv`]. No consistency check is
    /// applied to the matrices.
    pub fn read_csv(dir: &Path, prefix: &str) -> Result<DataBundle> {
        let meta = read_key_values(&dir.join(format!("{prefix}_meta.txt")))?;
        let spec = SystemSpec::from_meta(&meta)?;
        let parse = |k: &str| -> Result<u64> {
            meta.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::BadParameter(format!("metadata lacks `{k}`")))
        };
        let x_minus = read_matrix_csv(&dir.join(format!("{prefix}_x_minus.csv")))?;
        let x_plus = read_matrix_csv(&dir.join(format!("{prefix}_x_plus.csv")))?;
        let noise = read_matrix_csv(&dir.join(format!("{prefix}_noise.csv")))?;
        let n = spec.dim();
        for m in [&x_minus, &x_plus, &noise] {
            if m.nrows() != n || m.ncols() != x_minus.ncols() {
                return Err(Error::BadParameter("bundle matrices have inconsistent shapes".into()));
            }
        }
        Ok(DataBundle { spec, seed: parse("seed")?, trial: parse("trial")?, x_minus, x_plus, noise })
    }
}

/// Parses a flat `key=value` file; blank lines and `#` comments are skipped.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::BadParameter(format!("expected key=value, got `{line}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record((0..m.ncols()).map(|i| format!("col_{i}"))).map_err(csv_err)?;
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let cols = r.headers().map_err(csv_err)?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        for f in rec.iter() {
            data.push(f.parse::<f64>().map_err(|_| Error::BadParameter(format!("bad number {f}")))?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Simulates trial 0 of `seed`.
pub fn simulate(spec: &SystemSpec, len: usize, seed: u64) -> Result<DataBundle> {
    simulate_trial(spec, len, seed, 0)
}

/// Simulates a trajectory of length `len` with noise addressed by `(seed, trial)`.
pub fn simulate_trial(spec: &SystemSpec, len: usize, seed: u64, trial: u64) -> Result<DataBundle> {
    let n = spec.dim();
    if len <= n {
        return Err(Error::ShortTrajectory { len, dim: n });
    }
    let e = noise_matrix(seed, trial, n, len);
    simulate_with_noise(spec, e, seed, trial)
}

/// Runs the recursion on caller-supplied noise (`n x N`, column `t` is `w_t`).
pub fn simulate_with_noise(spec: &SystemSpec, noise: DMatrix<f64>, seed: u64, trial: u64) -> Result<DataBundle> {
    let n = spec.dim();
    let len = noise.ncols();
    if noise.nrows() != n {
        return Err(Error::BadParameter(format!("noise has {} rows, expected {n}", noise.nrows())));
    }
    if len <= n {
        return Err(Error::ShortTrajectory { len, dim: n });
    }
    let a = spec.matrix();
    let mut states = DMatrix::zeros(n, len + 1);
    let mut next = nalgebra::DVector::zeros(n);
    for t in 0..len {
        next.gemv(1.0, a, &states.column(t), 0.0);
        next += noise.column(t);
        states.set_column(t + 1, &next);
    }
    Ok(DataBundle {
        spec: spec.clone(),
        seed,
        trial,
        x_minus: states.columns(0, len).into_owned(),
        x_plus: states.columns(1, len).into_owned(),
        noise,
    })
}

/// Entry `(j, i)` of the state history, i.e. coordinate `j` (1-based) of `x_i`,
/// rebuilt from the noise through the binomial expansion of Jordan-block powers.
/// `i` ranges over `0..=N`; `i = 0` is the zero initial state.
pub fn closed_form_entry(bundle: &DataBundle, j: usize, i: usize) -> Result<f64> {
    let lambda = bundle
        .spec
        .swsscs_lambda()
        .ok_or_else(|| Error::UnsupportedSpec("closed form needs a Jordan block with lambda in (0,1)".into()))?;
    let n = bundle.dim();
    if j == 0 || j > n || i > bundle.len() {
        return Err(Error::IndexOutOfRange(format!("(j={j}, i={i}) for n={n}, N={}", bundle.len())));
    }
    let ln_l = lambda.ln();
    let mut acc = 0.0;
    for t in 1..=i {
        let k = (i - t) as u64;
        for m in 0..=k.min((n - j) as u64) {
            let coef = (ln_binomial(k, m) + (k - m) as f64 * ln_l).exp();
            acc += coef * bundle.noise[(j - 1 + m as usize, t - 1)];
        }
    }
    Ok(acc)
}

/// Result of a discrete Lyapunov solve.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub p: DMatrix<f64>,
    pub iterations: usize,
    /// `||A^T P A - P + I||_F / max(1, ||P||_F)`.
    pub residual: f64,
}

const LYAP_TOL: f64 = 1e-13;
const LYAP_MAX_ITER: usize = 100_000;

fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let r = a.transpose() * p * a - p + DMatrix::identity(n, n);
    r.norm() / p.norm().max(1.0)
}

fn fixed_point(a: &DMatrix<f64>) -> Result<LyapunovSolution> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let mut p = id.clone();
    for it in 1..=LYAP_MAX_ITER {
        let next = &at * &p * a + &id;
        let change = (&next - &p).norm();
        p = next;
        if change <= LYAP_TOL * p.norm() {
            let residual = lyapunov_residual(a, &p);
            return Ok(LyapunovSolution { p, iterations: it, residual });
        }
    }
    Err(Error::NonConvergent(LYAP_MAX_ITER))
}

/// Solves `A^T P A - P + I = 0` by the fixed-point iteration `P <- A^T P A + I`.
pub fn solve_lyapunov(spec: &SystemSpec) -> Result<LyapunovSolution> {
    fixed_point(spec.matrix())
}

/// Stationary state covariance, the solution of `A S A^T - S + I = 0`.
pub fn stationary_covariance(spec: &SystemSpec) -> Result<LyapunovSolution> {
    fixed_point(&spec.matrix().transpose())
}

/// Entry-wise substitution for upper triangular `A`: `P_ij` depends only on
/// entries `P_kl` with `k <= i`, `l <= j`.
fn triangular_lyapunov(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = if i == j { 1.0 } else { 0.0 };
            for k in 0..=i {
                for l in 0..=j {
                    if (k, l) != (i, j) {
                        acc += a[(k, i)] * p[(k, l)] * a[(l, j)];
                    }
                }
            }
            p[(i, j)] = acc / (1.0 - a[(i, i)] * a[(j, j)]);
        }
    }
    p
}

/// Direct solve of `A^T P A - P + I = 0`: closed form for diagonal specs,
/// triangular substitution for upper triangular `A`, and a
/// Kronecker-vectorised linear system otherwise (limited to `n <= 32`).
pub fn solve_lyapunov_direct(spec: &SystemSpec) -> Result<LyapunovSolution> {
    let a = spec.matrix();
    let n = a.nrows();
    let p = if let SpecKind::HermitianDiagonal(e) = spec.kind() {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, e.iter().map(|l| 1.0 / (1.0 - l * l))))
    } else if (0..n).all(|j| (j + 1..n).all(|i| a[(i, j)] == 0.0)) {
        triangular_lyapunov(a)
    } else {
        if n > 32 {
            return Err(Error::TooLarge(format!("direct Lyapunov solve limited to n <= 32, got {n}")));
        }
        let at = a.transpose();
        let k = at.kronecker(&at);
        let lhs = DMatrix::<f64>::identity(n * n, n * n) - k;
        let rhs = nalgebra::DVector::from_iterator(n * n, DMatrix::<f64>::identity(n, n).iter().copied());
        let sol = lhs.lu().solve(&rhs).ok_or(Error::NonConvergent(0))?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    };
    let residual = lyapunov_residual(a, &p);
    Ok(LyapunovSolution { p, iterations: 0, residual })
}

/// Spectral norm of `A^k` next to the multiplicity-aware bound
/// `max_lambda k^D |lambda|^k (1 - |lambda|) / (1 - |lambda|^(D+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRatio {
    pub actual: f64,
    /// `None` for dense specs, whose Jordan structure is not tracked.
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn power_norm_ratio(spec: &SystemSpec, k: u32) -> PowerRatio {
    let ak = spec.matrix().pow(k);
    let actual = singular_values(&ak)[0];
    let bound = spec.defects().map(|groups| {
        groups
            .iter()
            .map(|&(l, d)| {
                let m = l.abs();
                if m == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                let tail = if m == 1.0 { 1.0 / (d as f64 + 1.0) } else { (1.0 - m) / (1.0 - m.powi(d as i32 + 1)) };
                (k as f64).powi(d as i32) * m.powi(k as i32) * tail
            })
            .fold(0.0f64, f64::max)
    });
    PowerRatio { actual, bound, ratio: bound.map(|b| actual / b) }
}

/// Spectral projector and nilpotent part for one distinct eigenvalue.
#[derive(Debug, Clone)]
pub struct Projector {
    pub lambda: f64,
    pub projector: DMatrix<f64>,
    pub nilpotent: DMatrix<f64>,
}

/// Decomposes `A = sum_lambda (lambda P_lambda + N_lambda)` for canonical specs.
pub fn projector_decomposition(spec: &SystemSpec) -> Result<Vec<Projector>> {
    let n = spec.dim();
    let mut labels: Vec<f64> = Vec::with_capacity(n);
    match spec.kind() {
        SpecKind::HermitianDiagonal(e) => labels.extend(e.iter().copied()),
        SpecKind::Jordan { lambda, n } => labels.extend(std::iter::repeat_n(*lambda, *n)),
        SpecKind::BlockDiagonal(b) => {
            for &(l, s) in b {
                labels.extend(std::iter::repeat_n(l, s));
            }
        }
        SpecKind::Dense(_) => return Err(Error::UnsupportedSpec("projectors need a canonical form".into())),
    }
    let mut distinct: Vec<f64> = Vec::new();
    for &l in &labels {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }
    let a = spec.matrix();
    Ok(distinct
        .into_iter()
        .map(|l| {
            let p = DMatrix::from_fn(n, n, |i, j| if i == j && labels[i] == l { 1.0 } else { 0.0 });
            let shifted = a - DMatrix::identity(n, n) * l;
            let nilpotent = shifted * &p;
            Projector { lambda: l, projector: p, nilpotent }
        })
        .collect())
}
