//! Bagged kriging over random domain decompositions: per-iteration local
//! models, intrinsic-mean aggregation, bootstrap variance and leave-one-out
//! cross-validation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{assign_target, draw_partition, DomainGraph, PartitionOptions, ResolvedTarget, Target};
use crate::error::{Error, Result};
use crate::kriging::{krige_predict, TileModel};
use crate::manifold::{
    dist, extrinsic_mean, intrinsic_mean, ManifoldKind, ManifoldPoint, MeanOptions, TangentChart, TangentVector,
};
use crate::variogram::{
    empirical_variogram, fit_or_fallback, kernel_weight, EmpiricalVariogram, KernelConfig, LagBins, VariogramFamily,
    VariogramModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanStrategy {
    /// Fail when an intrinsic mean does not converge.
    Intrinsic,
    /// Fall back to the extrinsic mean, then to the first observation.
    ExtrinsicFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub b: usize,
    pub kernel: KernelConfig,
    pub family: VariogramFamily,
    pub manifold: ManifoldKind,
    pub mean_strategy: MeanStrategy,
    pub master_seed: u64,
    pub partition: PartitionOptions,
    pub bins: LagBins,
    pub mean: MeanOptions,
    pub workers: usize,
    /// Keep every iteration's predictions in the result.
    pub keep_iterations: bool,
}

impl RunConfig {
    pub fn new(k: usize, b: usize, manifold: ManifoldKind) -> Self {
        Self {
            k,
            b,
            kernel: KernelConfig::Gaussian { bandwidth: 1.5 },
            family: VariogramFamily::Spherical,
            manifold,
            mean_strategy: MeanStrategy::ExtrinsicFallback,
            master_seed: 0,
            partition: PartitionOptions::default(),
            bins: LagBins::default(),
            mean: MeanOptions::default(),
            workers: 1,
            keep_iterations: false,
        }
    }

    pub fn validate(&self, n_data: usize) -> Result<()> {
        if self.k == 0 || self.k > n_data {
            return Err(Error::PreconditionViolation(format!(
                "1 <= K <= n violated: K = {}, n = {n_data}",
                self.k
            )));
        }
        if self.b == 0 {
            return Err(Error::PreconditionViolation("B must be at least 1".into()));
        }
        self.kernel.validate()?;
        self.manifold.validate()
    }
}

/// Observed values at graph sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    sites: Vec<usize>,
    values: Vec<ManifoldPoint>,
}

impl Observations {
    pub fn new(sites: Vec<usize>, values: Vec<ManifoldPoint>) -> Result<Self> {
        if sites.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: sites.len(),
                got: values.len(),
            });
        }
        if let Some(first) = values.first() {
            let kind = first.kind();
            if values.iter().any(|v| v.kind() != kind) {
                return Err(Error::InvalidPoint("observations mix manifold kinds".into()));
            }
        }
        Ok(Self { sites, values })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn values(&self) -> &[ManifoldPoint] {
        &self.values
    }

    /// The observations with position `i` held out.
    pub fn without(&self, i: usize) -> Self {
        let mut sites = self.sites.clone();
        let mut values = self.values.clone();
        sites.remove(i);
        values.remove(i);
        Self { sites, values }
    }
}

#[derive(Debug, Clone)]
pub struct TileReport {
    pub tile: usize,
    pub nucleus: usize,
    pub n_sites: usize,
    pub empirical: Option<EmpiricalVariogram>,
    pub model: VariogramModel,
    /// The tangent point is not the intrinsic mean.
    pub mean_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct IterationOutput {
    pub predictions: Vec<ManifoldPoint>,
    pub tiles: Vec<TileReport>,
}

#[derive(Debug, Clone)]
pub struct PredictionResult {
    pub predictions: Vec<ManifoldPoint>,
    pub bootstrap_variance: Vec<f64>,
    /// `iterations[b][t]`, when requested.
    pub iterations: Option<Vec<Vec<ManifoldPoint>>>,
}

/// Independent stream for iteration `b`, fixed by the master seed alone.
pub fn iteration_rng(master_seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(b as u64);
    rng
}

pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn tangent_point(config: &RunConfig, values: &[ManifoldPoint]) -> Result<(ManifoldPoint, bool)> {
    match intrinsic_mean(values, None, config.mean) {
        Ok(m) => Ok((m, false)),
        Err(e) if config.mean_strategy == MeanStrategy::Intrinsic => Err(e),
        Err(_) => Ok((extrinsic_mean(values, None).unwrap_or_else(|_| values[0].clone()), true)),
    }
}

/// Fits one tile: tangent point at the mean of the tile's data, logs of all
/// observations there, kernel-weighted variogram around `nucleus`, and the
/// kriging system over the tile's own sites. `members` are positions into
/// `obs`. With a single tile every site weighs 1, which is the classical
/// unweighted estimator.
pub fn fit_tile(
    config: &RunConfig,
    graph: &DomainGraph,
    obs: &Observations,
    tile: usize,
    nucleus: usize,
    members: &[usize],
    single_tile: bool,
) -> Result<(TileModel, TileReport)> {
    let tile_values: Vec<ManifoldPoint> = members.iter().map(|&i| obs.values[i].clone()).collect();
    let (base, mean_fallback) = tangent_point(config, &tile_values)?;
    let chart = TangentChart::new(base)?;

    let mut in_tile = vec![false; obs.len()];
    for &i in members {
        in_tile[i] = true;
    }
    let mut coords = Vec::with_capacity(obs.len());
    let mut weights = Vec::with_capacity(obs.len());
    let mut tile_logs = Vec::with_capacity(members.len());
    for (i, v) in obs.values.iter().enumerate() {
        match chart.log(v) {
            Ok(l) => {
                coords.push(chart.isometric_coords(&l));
                weights.push(if single_tile {
                    1.0
                } else {
                    kernel_weight(config.kernel, graph.site_dist(nucleus, obs.sites[i]), in_tile[i])
                });
                if in_tile[i] {
                    tile_logs.push(l);
                }
            }
            // Far observations beyond the cut locus drop out of the variogram.
            Err(Error::AntipodalPoint { .. }) if !in_tile[i] => {
                coords.push(Vec::new());
                weights.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    let empirical = empirical_variogram(&coords, &weights, |i, j| graph.site_dist(obs.sites[i], obs.sites[j]), &config.bins).ok();
    let model = match &empirical {
        Some(emp) => fit_or_fallback(emp, config.family),
        None => VariogramModel::nugget_only(0.0),
    };
    let sites: Vec<usize> = members.iter().map(|&i| obs.sites[i]).collect();
    let n_sites = sites.len();
    let tm = TileModel::new(tile, chart, sites, tile_logs, model, graph)?;
    Ok((
        tm,
        TileReport {
            tile,
            nucleus,
            n_sites,
            empirical,
            model,
            mean_fallback,
        },
    ))
}

/// One bootstrap iteration: draw a partition, fit every tile, predict each
/// target from the tile of its nearest nucleus.
pub fn run_iteration(
    config: &RunConfig,
    graph: &DomainGraph,
    obs: &Observations,
    targets: &[ResolvedTarget],
    b: usize,
) -> Result<IterationOutput> {
    let mut rng = iteration_rng(config.master_seed, b);
    let partition = draw_partition(graph, &obs.sites, config.k, &mut rng, config.partition)?;
    let positions = partition.tile_positions(&obs.sites);
    let single = partition.k() == 1;
    let mut models = Vec::with_capacity(partition.k());
    let mut tiles = Vec::with_capacity(partition.k());
    for (k, members) in positions.iter().enumerate() {
        let (m, r) = fit_tile(config, graph, obs, k, partition.nuclei()[k], members, single)?;
        models.push(m);
        tiles.push(r);
    }
    let predictions = targets
        .iter()
        .map(|t| krige_predict(&models[assign_target(graph, &partition, t)], graph, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(IterationOutput { predictions, tiles })
}

/// Intrinsic mean of the ensemble and `ς² = mean_b d²(χᵇ, χ*)`.
pub fn aggregate(config: &RunConfig, ensemble: &[ManifoldPoint]) -> Result<(ManifoldPoint, f64)> {
    let mean = match intrinsic_mean(ensemble, None, config.mean) {
        Ok(m) => m,
        Err(e) if config.mean_strategy == MeanStrategy::Intrinsic => return Err(e),
        Err(_) => extrinsic_mean(ensemble, None)?,
    };
    let mut s = 0.0;
    for p in ensemble {
        s += dist(p, &mean)?.powi(2);
    }
    Ok((mean, s / ensemble.len() as f64))
}

pub fn run_rdd_mk(
    config: &RunConfig,
    graph: &DomainGraph,
    obs: &Observations,
    targets: &[ResolvedTarget],
) -> Result<PredictionResult> {
    config.validate(obs.len())?;
    with_workers(config.workers, || {
        let iterations: Vec<Vec<ManifoldPoint>> = (0..config.b)
            .into_par_iter()
            .map(|b| run_iteration(config, graph, obs, targets, b).map(|o| o.predictions))
            .collect::<Result<_>>()?;
        let aggregated: Vec<(ManifoldPoint, f64)> = (0..targets.len())
            .into_par_iter()
            .map(|t| {
                let ensemble: Vec<ManifoldPoint> = iterations.iter().map(|it| it[t].clone()).collect();
                aggregate(config, &ensemble).map_err(|e| Error::AggregationFailure {
                    target: t,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        let (predictions, bootstrap_variance) = aggregated.into_iter().unzip();
        Ok(PredictionResult {
            predictions,
            bootstrap_variance,
            iterations: config.keep_iterations.then_some(iterations),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Squared geodesic error per held-out site.
    pub per_site: Vec<f64>,
    pub mean: f64,
    pub median: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Leave-one-out: every fold drops one site from the data, keeps it as a
/// graph vertex, and predicts it from the rest with the same configuration.
pub fn loo_cross_validate(config: &RunConfig, graph: &DomainGraph, obs: &Observations) -> Result<CvResult> {
    if obs.len() < config.k + 1 {
        return Err(Error::PreconditionViolation(format!(
            "leave-one-out needs n >= K + 1, got n = {}, K = {}",
            obs.len(),
            config.k
        )));
    }
    let mut per_site = Vec::with_capacity(obs.len());
    for i in 0..obs.len() {
        let fold = obs.without(i);
        let target = graph.resolve(Target::Vertex(obs.sites[i]))?;
        let res = run_rdd_mk(config, graph, &fold, &[target])?;
        per_site.push(dist(&obs.values[i], &res.predictions[0])?.powi(2));
    }
    let mean = per_site.iter().sum::<f64>() / per_site.len() as f64;
    let median = median(&per_site);
    Ok(CvResult { per_site, mean, median })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    /// Geodesic error per target.
    pub spe: Vec<f64>,
    pub mspe: f64,
    /// Squared difference of the off-diagonal correlation, 2×2 Cholesky only.
    pub rho_sq: Option<Vec<f64>>,
}

impl ErrorMetrics {
    pub fn mean_rho_sq(&self) -> Option<f64> {
        self.rho_sq.as_ref().map(|r| r.iter().sum::<f64>() / r.len() as f64)
    }

    /// Mean of squared geodesic errors.
    pub fn mean_sq(&self) -> f64 {
        self.spe.iter().map(|e| e * e).sum::<f64>() / self.spe.len() as f64
    }
}

pub fn error_metrics(predictions: &[ManifoldPoint], truth: &[ManifoldPoint]) -> Result<ErrorMetrics> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("error metrics over no targets"));
    }
    let spe = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| dist(t, p))
        .collect::<Result<Vec<_>>>()?;
    let mspe = spe.iter().sum::<f64>() / spe.len() as f64;
    let rho_sq = match truth[0].kind() {
        ManifoldKind::Cholesky(2) => Some(
            predictions
                .iter()
                .zip(truth)
                .map(|(p, t)| {
                    let rp = p.as_chol().map(|h| h.get(0, 1)).unwrap_or(f64::NAN);
                    let rt = t.as_chol().map(|h| h.get(0, 1)).unwrap_or(f64::NAN);
                    (rp - rt).powi(2)
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(ErrorMetrics { spe, mspe, rho_sq })
}

/// Sum of tangent vectors, exposed for first-order checks on aggregates.
pub fn log_sum(base: &ManifoldPoint, points: &[ManifoldPoint]) -> Result<f64> {
    let chart = TangentChart::new(base.clone())?;
    let logs = points.iter().map(|p| chart.log(p)).collect::<Result<Vec<_>>>()?;
    let sum = TangentVector::linear_combination(&vec![1.0; logs.len()], &logs);
    Ok(chart.norm(&sum))
}
