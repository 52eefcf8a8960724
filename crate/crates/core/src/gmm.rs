//! Second tactile layer: a Gaussian mixture fitted by expectation-maximization.
//!
//! Homunculus activations repeat heavily (every sample of one stimulation is
//! identical, and there are only a few hundred distinct regions), so fitting
//! runs on [`WeightedPoints`]: distinct vectors with multiplicities. EM on
//! that form is algebraically the same as EM on the expanded data.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::Rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Responsibilities of each component for one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorVector(Vec<f64>);

impl PosteriorVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PosteriorVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceKind {
    #[default]
    Full,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// k-means++ seeds, hard nearest-seed partition, one M-step.
    #[default]
    SeedPartition,
    /// k-means++ means, every covariance the global covariance, uniform weights.
    GlobalCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    /// Stop when the log-likelihood gains less than `tol * |LL|`.
    pub tol: f64,
    pub max_iters: usize,
    /// Ridge added to every covariance, as a multiple of the mean data variance.
    pub reg_scale: f64,
    pub n_init: usize,
    pub covariance: CovarianceKind,
    pub init: InitStrategy,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            tol: 1e-6,
            max_iters: 300,
            reg_scale: 1e-6,
            n_init: 5,
            covariance: CovarianceKind::Full,
            init: InitStrategy::SeedPartition,
        }
    }
}

impl GmmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::arg("tol must be finite and non-negative"));
        }
        if !(self.reg_scale > 0.0 && self.reg_scale.is_finite()) {
            return Err(Error::arg("reg_scale must be positive"));
        }
        if self.n_init == 0 {
            return Err(Error::arg("n_init must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of the EM run that produced a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitInfo {
    pub seed: Option<u64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood before each M-step, then of the returned parameters.
    pub trace: Vec<f64>,
}

/// Distinct data vectors with multiplicities. `index[n]` maps original point
/// `n` to its row in `points`.
#[derive(Debug, Clone)]
pub struct WeightedPoints {
    points: DMatrix<f64>,
    weights: Vec<f64>,
    index: Vec<usize>,
}

impl WeightedPoints {
    /// Collapses bit-identical vectors. Rows appear in order of first occurrence.
    pub fn dedup<T: AsRef<[f64]>>(data: &[T]) -> Result<Self> {
        let dim = data.first().map_or(0, |x| x.as_ref().len());
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut weights = Vec::new();
        let mut index = Vec::with_capacity(data.len());
        for (n, x) in data.iter().enumerate() {
            let x = x.as_ref();
            if x.len() != dim {
                return Err(Error::arg(format!(
                    "point {n} has dimension {}, expected {dim}",
                    x.len()
                )));
            }
            if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
                return Err(Error::arg(format!("point {n} has non-finite entry {bad}")));
            }
            // +0.0 and -0.0 must land in the same bucket
            let key: Vec<u64> = x.iter().map(|v| (v + 0.0).to_bits()).collect();
            let k = *seen.entry(key).or_insert_with(|| {
                rows.push(x);
                weights.push(0.0);
                rows.len() - 1
            });
            weights[k] += 1.0;
            index.push(k);
        }
        let points = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Ok(WeightedPoints {
            points,
            weights,
            index,
        })
    }

    /// Explicit points and positive weights, one original point per row.
    pub fn new(points: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.nrows() {
            return Err(Error::arg("one weight per point required"));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::arg("weights must be positive and finite"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("points must be finite"));
        }
        let index = (0..weights.len()).collect();
        Ok(WeightedPoints {
            points,
            weights,
            index,
        })
    }

    pub fn n_unique(&self) -> usize {
        self.points.nrows()
    }

    pub fn n_original(&self) -> usize {
        self.index.len()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    fn mean_and_cov(&self) -> (DVector<f64>, DMatrix<f64>) {
        let full = vec![1.0; self.n_unique()];
        weighted_moments(&self.points, &self.weights, &full)
    }
}

/// Weighted mean and covariance using per-row weights `w[n] * g[n]`.
fn weighted_moments(x: &DMatrix<f64>, w: &[f64], g: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let (n, d) = x.shape();
    let wg: Vec<f64> = w.iter().zip(g).map(|(a, b)| a * b).collect();
    let total: f64 = wg.iter().sum();
    let mut mean = DVector::zeros(d);
    for i in 0..n {
        if wg[i] > 0.0 {
            mean.axpy(wg[i], &x.row(i).transpose(), 1.0);
        }
    }
    mean /= total;
    let mut centred = DMatrix::zeros(n, d);
    for i in 0..n {
        let s = wg[i].sqrt();
        for j in 0..d {
            centred[(i, j)] = s * (x[(i, j)] - mean[j]);
        }
    }
    let cov = centred.tr_mul(&centred) / total;
    (mean, cov)
}

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    half_log_det: f64,
}

impl Component {
    fn new(weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(cov.clone()).ok_or_else(|| {
            Error::Numerical("covariance is not positive definite".into())
        })?;
        let chol_l = chol.l();
        let half_log_det = chol_l.diagonal().iter().map(|v| v.ln()).sum();
        Ok(Component {
            weight,
            mean,
            cov,
            chol_l,
            half_log_det,
        })
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let mut z = DVector::from_fn(d, |i, _| x[i] - self.mean[i]);
        self.chol_l.solve_lower_triangular_mut(&mut z);
        -0.5 * (d as f64 * LN_2PI + z.norm_squared()) - self.half_log_det
    }

    /// Log densities of every row of `x`.
    fn log_density_rows(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let (n, d) = x.shape();
        let mut z = DMatrix::from_fn(d, n, |j, i| x[(i, j)] - self.mean[j]);
        self.chol_l.solve_lower_triangular_mut(&mut z);
        let c = d as f64 * LN_2PI;
        z.column_iter()
            .map(|col| -0.5 * (c + col.norm_squared()) - self.half_log_det)
            .collect()
    }
}

/// Log of the multivariate normal density, via a Cholesky factor.
pub fn gaussian_logdensity(x: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    let d = mean.len();
    if x.len() != d || cov.shape() != (d, d) {
        return Err(Error::arg("dimension mismatch in gaussian_logdensity"));
    }
    let c = Component::new(1.0, DVector::from_column_slice(mean), cov.clone())?;
    Ok(c.log_density(x))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A fitted or hand-built mixture. Covariance factors are cached.
#[derive(Debug, Clone)]
pub struct GmmModel {
    components: Vec<Component>,
    pub info: FitInfo,
}

impl GmmModel {
    /// Validates the simplex and factorizes every covariance.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covs: Vec<DMatrix<f64>>) -> Result<Self> {
        let j = weights.len();
        if j == 0 || means.len() != j || covs.len() != j {
            return Err(Error::arg("need matching, non-empty weights, means and covariances"));
        }
        let d = means[0].len();
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::arg("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("mixture weights sum to {total}")));
        }
        let mut components = Vec::with_capacity(j);
        for ((w, m), s) in weights.into_iter().zip(means).zip(covs) {
            if m.len() != d || s.shape() != (d, d) {
                return Err(Error::arg("component dimensions disagree"));
            }
            if (&s - s.transpose()).amax() > 1e-12 * s.amax().max(1.0) {
                return Err(Error::arg("covariance is not symmetric"));
            }
            components.push(Component::new(w, DVector::from_vec(m), s)?);
        }
        Ok(GmmModel {
            components,
            info: FitInfo::default(),
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn mean(&self, j: usize) -> &[f64] {
        self.components[j].mean.as_slice()
    }

    pub fn covariance(&self, j: usize) -> &DMatrix<f64> {
        &self.components[j].cov
    }

    /// `ln r_j + ln l(x | theta_j)` for every component.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(x))
            .collect()
    }

    /// `ln l(x | theta_j)` for every distinct row of `data`.
    pub fn component_log_density(&self, j: usize, data: &WeightedPoints) -> Vec<f64> {
        self.components[j].log_density_rows(&data.points)
    }

    /// Per-row `ln r_j + ln l(x_n | theta_j)`, indexed `[n][j]`.
    fn log_joint_rows(&self, x: &DMatrix<f64>) -> Vec<Vec<f64>> {
        let per_comp: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|c| {
                let lw = c.weight.ln();
                c.log_density_rows(x).into_iter().map(|v| v + lw).collect()
            })
            .collect();
        (0..x.nrows())
            .map(|n| per_comp.iter().map(|c| c[n]).collect())
            .collect()
    }

    /// Total log-likelihood of weighted points.
    pub fn log_likelihood(&self, data: &WeightedPoints) -> f64 {
        self.log_joint_rows(&data.points)
            .iter()
            .zip(&data.weights)
            .map(|(lj, w)| w * log_sum_exp(lj))
            .sum()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# bodymap gmm v1")?;
        writeln!(w, "components {}", self.n_components())?;
        writeln!(w, "dim {}", self.dim())?;
        match self.info.seed {
            Some(s) => writeln!(w, "seed {s}")?,
            None => writeln!(w, "seed none")?,
        }
        writeln!(w, "log_likelihood {}", self.info.log_likelihood)?;
        writeln!(w, "iterations {}", self.info.iterations)?;
        for c in &self.components {
            writeln!(w, "weight {}", c.weight)?;
            writeln!(w, "mean {}", join(c.mean.iter()))?;
            for row in c.cov.row_iter() {
                writeln!(w, "cov {}", join(row.iter()))?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut j = None;
        let mut d = None;
        let mut info = FitInfo::default();
        let mut weights = Vec::new();
        let mut means: Vec<Vec<f64>> = Vec::new();
        let mut covs: Vec<Vec<f64>> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let bad = || Error::parse(lineno, format!("bad `{key}` record"));
            let nums = || -> Result<Vec<f64>> {
                rest.split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|_| bad()))
                    .collect()
            };
            match key {
                "components" => j = Some(rest.trim().parse::<usize>().map_err(|_| bad())?),
                "dim" => d = Some(rest.trim().parse::<usize>().map_err(|_| bad())?),
                "seed" => {
                    info.seed = match rest.trim() {
                        "none" => None,
                        v => Some(v.parse().map_err(|_| bad())?),
                    }
                }
                "log_likelihood" => info.log_likelihood = rest.trim().parse().map_err(|_| bad())?,
                "iterations" => info.iterations = rest.trim().parse().map_err(|_| bad())?,
                "weight" => {
                    weights.push(rest.trim().parse().map_err(|_| bad())?);
                    covs.push(Vec::new());
                }
                "mean" => means.push(nums()?),
                "cov" => covs.last_mut().ok_or_else(bad)?.extend(nums()?),
                _ => return Err(Error::parse(lineno, format!("unknown record `{key}`"))),
            }
        }
        let j = j.ok_or_else(|| Error::parse(0, "missing `components`"))?;
        let d = d.ok_or_else(|| Error::parse(0, "missing `dim`"))?;
        if weights.len() != j || means.len() != j {
            return Err(Error::parse(0, "component count disagrees with header"));
        }
        let covs = covs
            .into_iter()
            .map(|c| {
                if c.len() != d * d {
                    Err(Error::parse(0, "covariance has wrong size"))
                } else {
                    Ok(DMatrix::from_row_slice(d, d, &c))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if means.iter().any(|m| m.len() != d) {
            return Err(Error::parse(0, "mean has wrong size"));
        }
        let mut m = GmmModel::new(weights, means, covs)?;
        m.info = info;
        Ok(m)
    }
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// `y_j = r_j l(x|theta_j) / sum_k r_k l(x|theta_k)`, in log space.
pub fn posteriors(model: &GmmModel, x: &[f64]) -> Result<PosteriorVector> {
    if x.len() != model.dim() {
        return Err(Error::arg("dimension mismatch in posteriors"));
    }
    let lj = model.log_joint(x);
    let lse = log_sum_exp(&lj);
    if !lse.is_finite() {
        return Err(Error::Numerical(format!(
            "every component density underflows (log-sum-exp = {lse})"
        )));
    }
    Ok(PosteriorVector(lj.iter().map(|v| (v - lse).exp()).collect()))
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in v.iter().enumerate().skip(1) {
        if s > v[best] {
            best = j;
        }
    }
    best
}

/// Most probable component per point; exact ties go to the lowest index.
pub fn assign_hard<T: AsRef<[f64]>>(model: &GmmModel, data: &[T]) -> Vec<usize> {
    data.iter()
        .map(|x| argmax_first(&model.log_joint(x.as_ref())))
        .collect()
}

/// [`assign_hard`] on the distinct rows of `data`.
pub fn assign_hard_weighted(model: &GmmModel, data: &WeightedPoints) -> Vec<usize> {
    model
        .log_joint_rows(&data.points)
        .iter()
        .map(|lj| argmax_first(lj))
        .collect()
}

/// Fits a `j`-component mixture to raw points; duplicates are merged first.
pub fn fit_em<T: AsRef<[f64]>>(
    data: &[T],
    j: usize,
    config: &GmmConfig,
    rng: &mut Rng,
) -> Result<GmmModel> {
    if j == 0 {
        return Err(Error::arg("need at least one component"));
    }
    if data.len() < j {
        return Err(Error::arg(format!(
            "{} points cannot support {j} components",
            data.len()
        )));
    }
    fit_em_weighted(&WeightedPoints::dedup(data)?, j, config, rng)
}

/// Best of `config.n_init` EM runs by final log-likelihood.
pub fn fit_em_weighted(
    data: &WeightedPoints,
    j: usize,
    config: &GmmConfig,
    rng: &mut Rng,
) -> Result<GmmModel> {
    config.validate()?;
    if j == 0 {
        return Err(Error::arg("need at least one component"));
    }
    if data.n_unique() == 0 || data.dim() == 0 {
        return Err(Error::arg("no data to fit"));
    }
    if data.total_weight() < j as f64 {
        return Err(Error::arg(format!(
            "total weight {} cannot support {j} components",
            data.total_weight()
        )));
    }
    let (_, gcov) = data.mean_and_cov();
    let trace = gcov.trace();
    let eps = if trace > 0.0 {
        config.reg_scale * trace / data.dim() as f64
    } else {
        config.reg_scale
    };

    let mut best: Option<GmmModel> = None;
    let mut last_err = None;
    for _ in 0..config.n_init {
        let seed: u64 = rng.random();
        let mut run_rng = crate::seed::rng_from_seed(seed);
        match em_run(data, j, config, eps, &gcov, &mut run_rng) {
            Ok(mut m) => {
                m.info.seed = Some(seed);
                if best
                    .as_ref()
                    .is_none_or(|b| m.info.log_likelihood > b.info.log_likelihood)
                {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::Fit(format!(
            "all {} EM restarts failed: {}",
            config.n_init,
            last_err.map_or_else(String::new, |e| e.to_string())
        ))
    })
}

/// k-means++ over weighted rows: first pick by weight, then by weight times
/// squared distance to the nearest chosen seed.
fn kmeanspp(data: &WeightedPoints, j: usize, rng: &mut Rng) -> Vec<usize> {
    let n = data.n_unique();
    let pick = |p: &[f64], rng: &mut Rng| -> usize {
        let total: f64 = p.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, &v) in p.iter().enumerate() {
            if u < v {
                return i;
            }
            u -= v;
        }
        p.iter().rposition(|&v| v > 0.0).unwrap_or(n - 1)
    };
    let row_d2 = |a: usize, b: usize| -> f64 {
        (0..data.dim())
            .map(|k| (data.points[(a, k)] - data.points[(b, k)]).powi(2))
            .sum()
    };
    let mut seeds = vec![pick(&data.weights, rng)];
    let mut d2: Vec<f64> = (0..n).map(|i| row_d2(i, seeds[0])).collect();
    while seeds.len() < j {
        let p: Vec<f64> = d2.iter().zip(&data.weights).map(|(d, w)| d * w).collect();
        let s = if p.iter().sum::<f64>() > 0.0 {
            pick(&p, rng)
        } else {
            pick(&data.weights, rng)
        };
        seeds.push(s);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(row_d2(i, s));
        }
    }
    seeds
}

fn regularize(mut cov: DMatrix<f64>, eps: f64, kind: CovarianceKind) -> DMatrix<f64> {
    if kind == CovarianceKind::Diagonal {
        cov = DMatrix::from_diagonal(&cov.diagonal());
    }
    for i in 0..cov.nrows() {
        cov[(i, i)] += eps;
    }
    // exact symmetry for the factorization
    let t = cov.transpose();
    (cov + t) * 0.5
}

/// Components whose share of the data drops below this keep their old
/// parameters with zero weight.
const DEAD_SHARE: f64 = 1e-12;

fn m_step(
    data: &WeightedPoints,
    resp: &[Vec<f64>],
    prev: &[Component],
    eps: f64,
    kind: CovarianceKind,
) -> Result<Vec<Component>> {
    let total = data.total_weight();
    let j = prev.len();
    let mut out = Vec::with_capacity(j);
    for k in 0..j {
        let g: Vec<f64> = resp.iter().map(|r| r[k]).collect();
        let nk: f64 = g.iter().zip(&data.weights).map(|(a, b)| a * b).sum();
        if nk <= DEAD_SHARE * total {
            let mut c = prev[k].clone();
            c.weight = 0.0;
            out.push(c);
            continue;
        }
        let (mean, cov) = weighted_moments(&data.points, &data.weights, &g);
        out.push(Component::new(nk / total, mean, regularize(cov, eps, kind))?);
    }
    Ok(out)
}

fn e_step(data: &WeightedPoints, comps: &[Component]) -> (f64, Vec<Vec<f64>>) {
    let model = GmmModel {
        components: comps.to_vec(),
        info: FitInfo::default(),
    };
    let lj = model.log_joint_rows(&data.points);
    let mut ll = 0.0;
    let resp = lj
        .iter()
        .zip(&data.weights)
        .map(|(row, w)| {
            let lse = log_sum_exp(row);
            ll += w * lse;
            row.iter().map(|v| (v - lse).exp()).collect()
        })
        .collect();
    (ll, resp)
}

fn em_run(
    data: &WeightedPoints,
    j: usize,
    config: &GmmConfig,
    eps: f64,
    gcov: &DMatrix<f64>,
    rng: &mut Rng,
) -> Result<GmmModel> {
    let seeds = kmeanspp(data, j, rng);
    let global = regularize(gcov.clone(), eps, config.covariance);
    let seed_comps: Vec<Component> = seeds
        .iter()
        .map(|&s| {
            Component::new(
                1.0 / j as f64,
                data.points.row(s).transpose(),
                global.clone(),
            )
        })
        .collect::<Result<_>>()?;
    let mut comps = match config.init {
        InitStrategy::GlobalCovariance => seed_comps,
        InitStrategy::SeedPartition => {
            let n = data.n_unique();
            let mut resp = vec![vec![0.0; j]; n];
            for (i, r) in resp.iter_mut().enumerate() {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (k, &s) in seeds.iter().enumerate() {
                    let d: f64 = (0..data.dim())
                        .map(|c| (data.points[(i, c)] - data.points[(s, c)]).powi(2))
                        .sum();
                    if d < best_d {
                        best_d = d;
                        best = k;
                    }
                }
                r[best] = 1.0;
            }
            m_step(data, &resp, &seed_comps, eps, config.covariance)?
        }
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut ll;
    loop {
        let (l, resp) = e_step(data, &comps);
        if !l.is_finite() {
            return Err(Error::Numerical(format!("log-likelihood became {l}")));
        }
        ll = l;
        if let Some(&prev) = trace.last() {
            if ll - prev < config.tol * ll.abs() {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == config.max_iters {
            break;
        }
        comps = m_step(data, &resp, &comps, eps, config.covariance)?;
        iterations += 1;
    }
    Ok(GmmModel {
        components: comps,
        info: FitInfo {
            seed: None,
            log_likelihood: ll,
            iterations,
            converged,
            trace,
        },
    })
}
