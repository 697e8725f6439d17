use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::component::{log_density, CovarianceMode, CovarianceRep, GaussianComponent};

/// Components whose total responsibility falls below this are treated as empty.
pub const EMPTY_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    /// Best of several k-means++ / Lloyd runs (raw and row-normalized);
    /// EM starts from the winning hard partition.
    #[default]
    KmeansLike,
    /// Responsibility rows drawn from a flat Dirichlet, followed by an M-step.
    RandomResponsibility,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyClusterPolicy {
    #[default]
    ReinitFarthest,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EmConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once `|Δℓ| / (|ℓ| + 1)` drops below this. Zero runs every iteration.
    pub tolerance: f64,
    pub init: InitMethod,
    pub covariance: CovarianceMode,
    pub shrinkage: f64,
    /// Variance floor / ridge. `None` means `1e-6 ×` the mean per-term variance.
    pub ridge: Option<f64>,
    pub seed: u64,
    pub empty_cluster: EmptyClusterPolicy,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            k: 3,
            max_iterations: 500,
            tolerance: 1e-6,
            init: InitMethod::KmeansLike,
            covariance: CovarianceMode::Diagonal,
            shrinkage: 0.1,
            ridge: None,
            seed: 0,
            empty_cluster: EmptyClusterPolicy::ReinitFarthest,
        }
    }
}

impl EmConfig {
    pub fn with_k(k: usize) -> Self {
        EmConfig {
            k,
            ..EmConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.shrinkage) {
            return Err(Error::Config("shrinkage must lie in [0, 1]".into()));
        }
        if let Some(r) = self.ridge {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config("ridge must be a positive finite number".into()));
            }
        }
        Ok(())
    }

    /// The ridge actually used for `data`.
    pub fn resolve_ridge(&self, data: ArrayView2<f64>) -> f64 {
        if let Some(r) = self.ridge {
            return r;
        }
        let mean_var = column_variances(data).mean().unwrap_or(0.0);
        let r = 1e-6 * mean_var;
        if r > 0.0 && r.is_finite() {
            r
        } else {
            1e-10
        }
    }
}

/// Maximum-likelihood (denominator N) per-column variances.
pub fn column_variances(data: ArrayView2<f64>) -> Array1<f64> {
    let n = data.nrows() as f64;
    let mean = data.sum_axis(Axis(0)) / n;
    let mut var = Array1::zeros(data.ncols());
    for row in data.rows() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var / n
}

/// Mixing weights and components.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub components: Vec<GaussianComponent>,
}

impl Mixture {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }
}

/// Posterior component memberships, one row per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub matrix: Array2<f64>,
}

impl Responsibilities {
    /// Total responsibility per component.
    pub fn masses(&self) -> Array1<f64> {
        self.matrix.sum_axis(Axis(0))
    }

    /// Index of the largest entry of every row (lowest index on ties).
    pub fn argmax(&self) -> Vec<usize> {
        self.matrix.rows().into_iter().map(|r| argmax(r.iter().copied())).collect()
    }
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in values.enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best.0
}

/// A fitted mixture and its fitting history.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub mixture: Mixture,
    /// Log-likelihood after initialization, then after every iteration.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub ridge: f64,
    pub config: EmConfig,
    /// `(iteration, component)` pairs where an empty component was reseeded.
    pub reinitialized: Vec<(usize, usize)>,
    /// Number of full-covariance updates rejected because they lowered the
    /// expected complete-data log-likelihood.
    pub rejected_covariance_updates: usize,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.mixture.k()
    }

    pub fn dim(&self) -> usize {
        self.mixture.dim()
    }

    pub fn final_loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace is never empty")
    }
}

/// Numerically stable `ln Σ exp(x)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Posterior responsibilities and the total log-likelihood of `data`.
pub fn e_step(data: ArrayView2<f64>, mixture: &Mixture) -> Result<(Responsibilities, f64)> {
    if data.ncols() != mixture.dim() {
        return Err(Error::Data(format!(
            "data has {} columns but the model has dimension {}",
            data.ncols(),
            mixture.dim()
        )));
    }
    let log_weights: Vec<f64> = mixture.weights.iter().map(|w| w.ln()).collect();
    let rows: Vec<(Vec<f64>, f64)> = (0..data.nrows())
        .into_par_iter()
        .map(|k| {
            let x = data.row(k);
            let mut logp = Vec::with_capacity(mixture.k());
            for (j, c) in mixture.components.iter().enumerate() {
                let ld = log_density(x, c)?;
                if ld.is_nan() || ld == f64::INFINITY {
                    return Err(Error::Numerical(format!(
                        "non-finite log density {ld} for row {k}, component {j}"
                    )));
                }
                logp.push(log_weights[j] + ld);
            }
            let lse = log_sum_exp(&logp);
            if !lse.is_finite() {
                return Err(Error::Numerical(format!(
                    "row {k} has zero likelihood under every component"
                )));
            }
            let resp = logp.iter().map(|lp| (lp - lse).exp()).collect();
            Ok((resp, lse))
        })
        .collect::<Result<_>>()?;

    let mut matrix = Array2::zeros((data.nrows(), mixture.k()));
    let mut total = 0.0;
    // fixed-order reduction keeps the total independent of thread scheduling
    for (k, (resp, lse)) in rows.into_iter().enumerate() {
        for (j, r) in resp.into_iter().enumerate() {
            matrix[[k, j]] = r;
        }
        total += lse;
    }
    Ok((Responsibilities { matrix }, total))
}

/// Responsibility-weighted mean and full covariance (about that mean) for one
/// component, together with its total mass.
pub fn weighted_moments(data: ArrayView2<f64>, weights: ndarray::ArrayView1<f64>) -> (f64, Array1<f64>, Array2<f64>) {
    let mass: f64 = weights.sum();
    let mean = weights.dot(&data) / mass;
    let mut centred = data.to_owned();
    for (mut row, &w) in centred.rows_mut().into_iter().zip(weights) {
        let s = w.sqrt();
        row.zip_mut_with(&mean, |x, m| *x = (*x - m) * s);
    }
    let cov = centred.t().dot(&centred) / mass;
    (mass, mean, cov)
}

fn weighted_mean_and_variances(
    data: ArrayView2<f64>,
    weights: ndarray::ArrayView1<f64>,
) -> (f64, Array1<f64>, Array1<f64>) {
    let mass: f64 = weights.sum();
    let mean = weights.dot(&data) / mass;
    let mut var = Array1::zeros(data.ncols());
    for (row, &w) in data.rows().into_iter().zip(weights) {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += w * (x - m) * (x - m);
        }
    }
    (mass, mean, var / mass)
}

/// Re-estimates weights, means and covariances from responsibilities.
///
/// The covariance of each component is taken about its new mean and then
/// regularized according to `cfg.covariance`. Empty components are either
/// reseeded at a poorly explained point or reported, per `cfg.empty_cluster`.
pub fn m_step(data: ArrayView2<f64>, resp: &Responsibilities, cfg: &EmConfig) -> Result<Mixture> {
    let ridge = cfg.resolve_ridge(data);
    m_step_at(data, resp, cfg, ridge, 0).map(|(m, _)| m)
}

pub(crate) fn m_step_at(
    data: ArrayView2<f64>,
    resp: &Responsibilities,
    cfg: &EmConfig,
    ridge: f64,
    iteration: usize,
) -> Result<(Mixture, Vec<usize>)> {
    let (n, k) = resp.matrix.dim();
    if n != data.nrows() {
        return Err(Error::Data(format!(
            "responsibilities have {n} rows but data has {}",
            data.nrows()
        )));
    }
    let mut masses = Vec::with_capacity(k);
    let mut components: Vec<Option<GaussianComponent>> = Vec::with_capacity(k);
    let mut empty = Vec::new();
    for j in 0..k {
        let w = resp.matrix.column(j);
        let mass: f64 = w.sum();
        if !(mass >= EMPTY_MASS) {
            if cfg.empty_cluster == EmptyClusterPolicy::Fail {
                return Err(Error::EmptyCluster {
                    component: j,
                    iteration,
                });
            }
            empty.push(j);
            masses.push(0.0);
            components.push(None);
            continue;
        }
        let component = match cfg.covariance {
            CovarianceMode::Diagonal => {
                let (_, mean, var) = weighted_mean_and_variances(data, w);
                GaussianComponent {
                    mean,
                    cov: CovarianceRep::diagonal(var, ridge),
                }
            }
            CovarianceMode::FullShrinkage => {
                let (_, mean, s) = weighted_moments(data, w);
                GaussianComponent {
                    mean,
                    cov: CovarianceRep::shrunk(&s, cfg.shrinkage, ridge)?,
                }
            }
        };
        masses.push(mass);
        components.push(Some(component));
    }

    if !empty.is_empty() {
        if empty.len() == k {
            return Err(Error::Numerical("every component is empty".into()));
        }
        reseed_empty(data, resp, cfg, ridge, &mut masses, &mut components, &empty)?;
    }

    let total: f64 = masses.iter().sum();
    Ok((
        Mixture {
            weights: masses.iter().map(|m| m / total).collect(),
            components: components.into_iter().map(Option::unwrap).collect(),
        },
        empty,
    ))
}

/// Moves each empty component onto the point farthest from the mean of the
/// component that currently claims it, with weight 1/N.
fn reseed_empty(
    data: ArrayView2<f64>,
    resp: &Responsibilities,
    cfg: &EmConfig,
    ridge: f64,
    masses: &mut [f64],
    components: &mut [Option<GaussianComponent>],
    empty: &[usize],
) -> Result<()> {
    let owners = resp.argmax();
    let variances = column_variances(data);
    let mut taken = vec![false; data.nrows()];
    for &j in empty {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (i, row) in data.rows().into_iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = match &components[owners[i]] {
                Some(c) => row.iter().zip(&c.mean).map(|(x, m)| (x - m) * (x - m)).sum(),
                None => 0.0,
            };
            if d > best.1 {
                best = (i, d);
            }
        }
        let i = best.0;
        if i == usize::MAX {
            return Err(Error::Numerical("no point left to reseed an empty component".into()));
        }
        taken[i] = true;
        components[j] = Some(GaussianComponent {
            mean: data.row(i).to_owned(),
            cov: initial_covariance(&variances, cfg, ridge)?,
        });
        masses[j] = 1.0;
    }
    Ok(())
}

fn initial_covariance(variances: &Array1<f64>, cfg: &EmConfig, ridge: f64) -> Result<CovarianceRep> {
    let floored = variances.mapv(|v| v.max(ridge));
    match cfg.covariance {
        CovarianceMode::Diagonal => Ok(CovarianceRep::diagonal(floored, ridge)),
        CovarianceMode::FullShrinkage => {
            CovarianceRep::from_matrix(Array2::from_diag(&floored), cfg.shrinkage, ridge)
        }
    }
}

/// Farthest-point seeding: a random first mean, then repeatedly the point
/// farthest (squared Euclidean) from every mean chosen so far.
/// Restarts of the k-means initializer; the lowest-inertia run is kept.
pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERATIONS: usize = 100;

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: each new seed is drawn with probability proportional to
/// its squared distance from the nearest seed already chosen.
pub fn kmeans_plus_plus_seeds(data: ArrayView2<f64>, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = data.nrows();
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut min_dist: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), data.row(first))).collect();
    while chosen.len() < k {
        let total: f64 = min_dist.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in min_dist.iter().enumerate() {
                acc += d;
                if d > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| min_dist.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every remaining point duplicates a chosen seed
            let rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            rest[rng.random_range(0..rest.len())]
        };
        chosen.push(next);
        for (i, d) in min_dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), data.row(next)));
        }
    }
    chosen
}

/// Rows scaled to unit Euclidean norm; all-zero rows stay zero.
fn unit_rows(data: ArrayView2<f64>) -> Array2<f64> {
    let mut out = data.to_owned();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Lloyd iterations from the given seed rows. Returns hard labels and the
/// within-cluster sum of squares. A cluster that loses all its points keeps
/// its previous centroid.
pub fn kmeans(data: ArrayView2<f64>, seeds: &[usize]) -> (Vec<usize>, f64) {
    let (n, v) = data.dim();
    let k = seeds.len();
    let mut centroids = Array2::zeros((k, v));
    for (j, &s) in seeds.iter().enumerate() {
        centroids.row_mut(j).assign(&data.row(s));
    }
    let assign = |centroids: &Array2<f64>| -> (Vec<usize>, f64) {
        let mut inertia = 0.0;
        let labels = (0..n)
            .map(|i| {
                let (best, d) = (0..k)
                    .map(|j| (j, sq_dist(data.row(i), centroids.row(j))))
                    .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                inertia += d;
                best
            })
            .collect();
        (labels, inertia)
    };
    let (mut labels, mut inertia) = assign(&centroids);
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut sums = Array2::<f64>::zeros((k, v));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &data.row(i));
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids.row_mut(j).assign(&(&sums.row(j) / counts[j] as f64));
            }
        }
        let (next, next_inertia) = assign(&centroids);
        let done = next == labels;
        labels = next;
        inertia = next_inertia;
        if done {
            break;
        }
    }
    (labels, inertia)
}

fn initialize(
    data: ArrayView2<f64>,
    cfg: &EmConfig,
    ridge: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Mixture> {
    let (n, k) = (data.nrows(), cfg.k);
    match cfg.init {
        InitMethod::KmeansLike => {
            // restarts run in both raw and cosine geometry and are ranked by
            // the likelihood of the mixture they induce
            let unit = unit_rows(data);
            let mut best: Option<(Mixture, f64)> = None;
            for _ in 0..KMEANS_RESTARTS {
                for points in [data, unit.view()] {
                    let seeds = kmeans_plus_plus_seeds(points, k, rng);
                    let (labels, _) = kmeans(points, &seeds);
                    let matrix = Array2::from_shape_fn((n, k), |(i, j)| {
                        if labels[i] == j { 1.0 } else { 0.0 }
                    });
                    let (mixture, _) = m_step_at(data, &Responsibilities { matrix }, cfg, ridge, 0)?;
                    let (_, ll) = e_step(data, &mixture)?;
                    if best.as_ref().is_none_or(|b| ll > b.1) {
                        best = Some((mixture, ll));
                    }
                }
            }
            Ok(best.expect("at least one restart").0)
        }
        InitMethod::RandomResponsibility => {
            let mut matrix = Array2::zeros((n, k));
            for mut row in matrix.rows_mut() {
                let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = draws.iter().sum();
                for (r, d) in row.iter_mut().zip(draws) {
                    *r = d / total;
                }
            }
            m_step_at(data, &Responsibilities { matrix }, cfg, ridge, 0).map(|(m, _)| m)
        }
    }
}

/// `ln|Σ| + mean_k r_k (x_k - μ)ᵀ Σ⁻¹ (x_k - μ)`: the part of the expected
/// complete-data log-likelihood (up to a factor −½ N_j) that depends on Σ.
fn covariance_objective(data: ArrayView2<f64>, weights: ndarray::ArrayView1<f64>, c: &GaussianComponent) -> f64 {
    let mass: f64 = weights.sum();
    let mut q = 0.0;
    for (row, &w) in data.rows().into_iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let centred = &row - &c.mean;
        q += w * c.cov.mahalanobis_sq(centred.view());
    }
    c.cov.log_det() + q / mass
}

/// Keeps a component's previous covariance whenever the shrunk estimate would
/// lower the expected complete-data log-likelihood, so every iteration is a
/// generalized EM step.
fn guard_shrunk_covariances(
    data: ArrayView2<f64>,
    resp: &Responsibilities,
    previous: &Mixture,
    next: &mut Mixture,
    reseeded: &[usize],
) -> usize {
    let mut rejected = 0;
    for j in 0..next.k() {
        if reseeded.contains(&j) {
            continue;
        }
        let w = resp.matrix.column(j);
        let candidate = &next.components[j];
        let fallback = GaussianComponent {
            mean: candidate.mean.clone(),
            cov: previous.components[j].cov.clone(),
        };
        let new_q = covariance_objective(data, w, candidate);
        let old_q = covariance_objective(data, w, &fallback);
        if new_q > old_q {
            next.components[j] = fallback;
            rejected += 1;
        }
    }
    rejected
}

/// Runs EM from the configured initialization until the relative
/// log-likelihood change drops below `cfg.tolerance` or `cfg.max_iterations`
/// is reached. Returns the model and the responsibilities of its final E-step.
pub fn fit_em(data: ArrayView2<f64>, cfg: &EmConfig) -> Result<(GmmModel, Responsibilities)> {
    cfg.validate()?;
    let (n, v) = data.dim();
    if n == 0 || v == 0 {
        return Err(Error::Data("data matrix is empty".into()));
    }
    if cfg.k > n {
        return Err(Error::Config(format!("K = {} exceeds the number of rows {n}", cfg.k)));
    }
    if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite value at row {}, column {}",
            pos / v,
            pos % v
        )));
    }

    let ridge = cfg.resolve_ridge(data);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mixture = initialize(data, cfg, ridge, &mut rng)?;
    let (mut resp, mut loglik) = e_step(data, &mixture)?;
    let mut trace = vec![loglik];
    let mut reinitialized = Vec::new();
    let mut rejected = 0;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        let (mut next, reseeded) = m_step_at(data, &resp, cfg, ridge, it)?;
        reinitialized.extend(reseeded.iter().map(|&j| (it, j)));
        if cfg.covariance == CovarianceMode::FullShrinkage {
            rejected += guard_shrunk_covariances(data, &resp, &mixture, &mut next, &reseeded);
        }
        let (next_resp, next_loglik) = e_step(data, &next)?;
        let change = (next_loglik - loglik).abs() / (loglik.abs() + 1.0);
        mixture = next;
        resp = next_resp;
        loglik = next_loglik;
        trace.push(loglik);
        iterations = it;
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok((
        GmmModel {
            mixture,
            loglik_trace: trace,
            iterations,
            converged,
            seed: cfg.seed,
            ridge,
            config: cfg.clone(),
            reinitialized,
            rejected_covariance_updates: rejected,
        },
        resp,
    ))
}
