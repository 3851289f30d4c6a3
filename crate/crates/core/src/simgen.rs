//! Synthetic non-stationary SPD and correlation fields on a C-shaped domain,
//! and the Monte Carlo harness that scores bagged kriging on them.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainGraph, Point, ResolvedTarget, SiteSet, Target};
use crate::engine::{error_metrics, median, run_rdd_mk, with_workers, Observations, RunConfig};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower_in_place, SpdMatrix, SymMatrix};
use crate::manifold::{spd_exp, CholFactor, ManifoldKind, ManifoldPoint};

/// Grid cardinality of the reference study.
pub const REFERENCE_GRID_SIZE: usize = 1582;
const JITTER: f64 = 1e-10;
const JITTER_ATTEMPTS: usize = 3;

/// C-shaped band around a centreline made of an upper arm, a left
/// semicircular bend and a lower arm. `phi ∈ [0, phi_max]` runs along the
/// centreline from the upper arm tip; `r` is the signed offset along the
/// outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CDomainSpec {
    pub phi_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub radius: f64,
    pub arm_length: f64,
    pub n_phi: usize,
    pub n_r: usize,
}

impl Default for CDomainSpec {
    fn default() -> Self {
        let (n_phi, n_r) = default_resolution(REFERENCE_GRID_SIZE, 8.88, 1.0);
        Self {
            phi_max: 8.88,
            r_min: -0.5,
            r_max: 0.5,
            radius: 0.6,
            arm_length: 3.5,
            n_phi,
            n_r,
        }
    }
}

/// `(n_phi, n_r)` with product closest to `target`, ties broken by how well
/// the node spacings match, so that `phi_span / (n_phi − 1) ≈ r_span / (n_r − 1)`.
pub fn default_resolution(target: usize, phi_span: f64, r_span: f64) -> (usize, usize) {
    let mut best = (2, 2);
    let mut best_key = (usize::MAX, f64::INFINITY);
    for n_r in 2..=target / 2 {
        for n_phi in [target / n_r, target / n_r + 1] {
            if n_phi < 2 {
                continue;
            }
            let miss = (n_phi * n_r).abs_diff(target);
            let aspect = ((phi_span / (n_phi - 1) as f64) / (r_span / (n_r - 1) as f64)).ln().abs();
            if (miss, aspect) < best_key {
                best_key = (miss, aspect);
                best = (n_phi, n_r);
            }
        }
    }
    best
}

impl CDomainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_phi < 2 || self.n_r < 2 {
            return Err(Error::PreconditionViolation("grid resolution must be at least 2 x 2".into()));
        }
        if !(self.phi_max > 0.0 && self.radius > 0.0 && self.arm_length > 0.0 && self.r_max > self.r_min) {
            return Err(Error::PreconditionViolation("invalid C-domain geometry".into()));
        }
        if self.radius + self.r_min <= 0.0 {
            return Err(Error::PreconditionViolation("band is wider than the bend radius".into()));
        }
        Ok(())
    }

    pub fn centerline_length(&self) -> f64 {
        2.0 * self.arm_length + PI * self.radius
    }

    /// Maps `(phi, r)` into the plane. `phi` is rescaled to arc length so the
    /// whole centreline is covered by `[0, phi_max]`.
    pub fn map(&self, phi: f64, r: f64) -> Point {
        let s = phi * self.centerline_length() / self.phi_max;
        let bend = PI * self.radius;
        if s <= self.arm_length {
            Point::new(self.arm_length - s, self.radius + r)
        } else if s <= self.arm_length + bend {
            let theta = (s - self.arm_length) / self.radius;
            let rr = self.radius + r;
            Point::new(-rr * theta.sin(), rr * theta.cos())
        } else {
            Point::new(s - self.arm_length - bend, -(self.radius + r))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CGrid {
    pub spec: CDomainSpec,
    pub phi: Vec<f64>,
    pub r: Vec<f64>,
    pub points: Vec<Point>,
}

impl CGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The outer ring of the grid: `r = r_max` forward in `phi`, then
    /// `r = r_min` backward.
    pub fn boundary(&self) -> Vec<Point> {
        let s = &self.spec;
        let phis = linspace(0.0, s.phi_max, s.n_phi);
        let mut ring: Vec<Point> = phis.iter().map(|&p| s.map(p, s.r_max)).collect();
        ring.extend(phis.iter().rev().map(|&p| s.map(p, s.r_min)));
        ring
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Regular `n_phi × n_r` grid, `phi`-major.
pub fn c_domain_grid(spec: &CDomainSpec) -> Result<CGrid> {
    spec.validate()?;
    let phis = linspace(0.0, spec.phi_max, spec.n_phi);
    let rs = linspace(spec.r_min, spec.r_max, spec.n_r);
    let mut grid = CGrid {
        spec: *spec,
        phi: Vec::with_capacity(spec.n_phi * spec.n_r),
        r: Vec::with_capacity(spec.n_phi * spec.n_r),
        points: Vec::with_capacity(spec.n_phi * spec.n_r),
    };
    for &p in &phis {
        for &r in &rs {
            grid.phi.push(p);
            grid.r.push(r);
            grid.points.push(spec.map(p, r));
        }
    }
    Ok(grid)
}

/// The grid with its trimmed-Delaunay graph over all grid points.
#[derive(Debug, Clone)]
pub struct CDomain {
    pub grid: CGrid,
    pub graph: DomainGraph,
}

impl CDomain {
    pub fn build(spec: &CDomainSpec) -> Result<Self> {
        let grid = c_domain_grid(spec)?;
        let sites = SiteSet::from_points(&grid.points)?;
        let boundary = grid.boundary();
        let graph = DomainGraph::delaunay(&sites, Some(&boundary), &[])?;
        Ok(Self { grid, graph })
    }

    pub fn targets(&self) -> Vec<ResolvedTarget> {
        (0..self.grid.len())
            .map(|i| self.graph.resolve(Target::Vertex(i)).expect("grid vertex"))
            .collect()
    }
}

/// Spherical covariance `σ²(1 − 1.5u + 0.5u³)` for `u = h/ρ ≤ 1`, 0 beyond.
pub fn spherical_covariance(h: f64, range: f64, sill: f64) -> f64 {
    let u = h / range;
    if u >= 1.0 {
        0.0
    } else {
        sill * (1.0 - 1.5 * u + 0.5 * u * u * u)
    }
}

/// Zero-mean stationary Gaussian field on a fixed point set, sampled by a
/// dense lower Cholesky factor of its covariance matrix.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    n: usize,
    factor: Vec<f64>,
}

impl GrfSampler {
    /// Spherical covariance over Euclidean distances between `coords`.
    pub fn spherical(coords: &[(f64, f64)], range: f64, sill: f64) -> Result<Self> {
        if !(range > 0.0 && sill > 0.0) {
            return Err(Error::PreconditionViolation("GRF range and sill must be positive".into()));
        }
        let n = coords.len();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let h = (coords[i].0 - coords[j].0).hypot(coords[i].1 - coords[j].1);
                let c = spherical_covariance(h, range, sill);
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
        }
        let mut jitter = JITTER;
        for _ in 0..JITTER_ATTEMPTS {
            let mut a = cov.clone();
            for i in 0..n {
                a[i * n + i] += jitter;
            }
            if cholesky_lower_in_place(&mut a, n).is_ok() {
                return Ok(Self { n, factor: a });
            }
            jitter *= 10.0;
        }
        Err(Error::FactorizationFailure)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        (0..self.n)
            .map(|i| {
                let row = &self.factor[i * self.n..i * self.n + i + 1];
                row.iter().zip(&z).map(|(l, z)| l * z).sum()
            })
            .collect()
    }
}

/// Parameters of the generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub sigma: SpdMatrix,
    pub grf_range: f64,
    pub grf_sill: f64,
    /// Drift coefficients on `phi`, `phi_max − phi` and `r`.
    pub drift_phi: SymMatrix,
    pub drift_rest: SymMatrix,
    pub drift_r: SymMatrix,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            sigma: SpdMatrix::new(SymMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap()).unwrap(),
            grf_range: 10.0,
            grf_sill: 3.75 * 3.75,
            drift_phi: SymMatrix::new(2, vec![0.5, 0.4, 0.4, 0.5]).unwrap(),
            drift_rest: SymMatrix::new(2, vec![0.2, -0.1, -0.1, 0.2]).unwrap(),
            drift_r: SymMatrix::new(2, vec![-0.2, 0.1, 0.1, 0.4]).unwrap(),
        }
    }
}

/// Dispersion scale `(0.1 + (phi_max − phi)/phi_max)^{1/2}`.
pub fn alpha(phi: f64, phi_max: f64) -> f64 {
    (0.1 + (phi_max - phi) / phi_max).sqrt()
}

pub fn drift(spec: &FieldSpec, phi: f64, r: f64, phi_max: f64) -> SymMatrix {
    spec.drift_phi
        .scale(phi)
        .add(&spec.drift_rest.scale(phi_max - phi))
        .add(&spec.drift_r.scale(r))
}

/// Builds the GRF sampler over the grid's `(phi, r)` coordinates.
pub fn grid_sampler(grid: &CGrid, spec: &FieldSpec) -> Result<GrfSampler> {
    let coords: Vec<(f64, f64)> = grid.phi.iter().zip(&grid.r).map(|(&p, &r)| (p, r)).collect();
    GrfSampler::spherical(&coords, spec.grf_range, spec.grf_sill)
}

/// `χ = exp_Ψ(A + δ)` with `Ψ = ½·α·exp_Σ(A)` and `δ = α²·δ̃`, the residual
/// `δ̃` having three independent GRF components (the off-diagonal shared).
pub fn generate_spd_field<R: Rng + ?Sized>(
    grid: &CGrid,
    spec: &FieldSpec,
    sampler: &GrfSampler,
    rng: &mut R,
) -> Result<Vec<SpdMatrix>> {
    if sampler.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: sampler.len(),
        });
    }
    let d11 = sampler.sample(rng);
    let d12 = sampler.sample(rng);
    let d22 = sampler.sample(rng);
    let phi_max = grid.spec.phi_max;
    (0..grid.len())
        .map(|i| {
            let (phi, r) = (grid.phi[i], grid.r[i]);
            let a = alpha(phi, phi_max);
            let drift = drift(spec, phi, r, phi_max);
            let psi = spd_exp(&spec.sigma, &drift)?;
            let psi = SpdMatrix::new(psi.as_sym().scale(0.5 * a))?;
            let a2 = a * a;
            let delta = SymMatrix::new(2, vec![a2 * d11[i], a2 * d12[i], a2 * d12[i], a2 * d22[i]])?;
            spd_exp(&psi, &drift.add(&delta))
        })
        .collect()
}

/// `R_ij = C_ij / √(C_ii C_jj)`.
pub fn covariance_to_correlation(c: &SpdMatrix) -> Result<SpdMatrix> {
    let n = c.dim();
    let d: Vec<f64> = (0..n).map(|i| c.get(i, i).sqrt()).collect();
    let r = SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { c.get(i, j) / (d[i] * d[j]) });
    SpdMatrix::new(r)
}

pub fn generate_corr_field<R: Rng + ?Sized>(
    grid: &CGrid,
    spec: &FieldSpec,
    sampler: &GrfSampler,
    rng: &mut R,
) -> Result<Vec<CholFactor>> {
    generate_spd_field(grid, spec, sampler, rng)?
        .iter()
        .map(|c| CholFactor::from_corr(&covariance_to_correlation(c)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Spd,
    Correlation,
}

impl FieldKind {
    pub fn manifold(&self) -> ManifoldKind {
        match self {
            FieldKind::Spd => ManifoldKind::Spd(2),
            FieldKind::Correlation => ManifoldKind::Cholesky(2),
        }
    }
}

/// Draws one field realization as manifold points.
pub fn generate_field<R: Rng + ?Sized>(
    kind: FieldKind,
    grid: &CGrid,
    spec: &FieldSpec,
    sampler: &GrfSampler,
    rng: &mut R,
) -> Result<Vec<ManifoldPoint>> {
    Ok(match kind {
        FieldKind::Spd => generate_spd_field(grid, spec, sampler, rng)?.into_iter().map(ManifoldPoint::Spd).collect(),
        FieldKind::Correlation => generate_corr_field(grid, spec, sampler, rng)?
            .into_iter()
            .map(ManifoldPoint::Chol)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_replicates: usize,
    pub n_sites: usize,
    pub k_values: Vec<usize>,
    pub field: FieldKind,
    /// Draw a new field per replicate instead of subsampling one realization.
    pub regenerate_field: bool,
    pub seed: u64,
    pub workers: usize,
}

impl StudyConfig {
    /// Settings of the reference covariance study: one realization, 30
    /// subsamples of 100 sites.
    pub fn covariance_reference(seed: u64) -> Self {
        Self {
            n_replicates: 30,
            n_sites: 100,
            k_values: vec![1, 2, 4, 6, 8, 10],
            field: FieldKind::Spd,
            regenerate_field: false,
            seed,
            workers: 1,
        }
    }

    /// Settings of the reference correlation study: 30 fresh realizations.
    pub fn correlation_reference(seed: u64) -> Self {
        Self {
            field: FieldKind::Correlation,
            regenerate_field: true,
            ..Self::covariance_reference(seed)
        }
    }
}

/// Per-replicate scores for one tile count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub k: usize,
    /// Primary error per replicate: mean geodesic error over the whole grid
    /// for SPD fields, mean squared geodesic error over unobserved points
    /// for correlation fields.
    pub errors: Vec<f64>,
    /// Mean squared correlation difference over unobserved points
    /// (correlation fields only).
    pub rho_errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

/// Mean, median and sample standard deviation.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Summary {
        mean,
        median: median(values),
        sd,
    }
}

impl StudyRow {
    pub fn summary(&self) -> Summary {
        summarize(&self.errors)
    }

    pub fn rho_summary(&self) -> Option<Summary> {
        self.rho_errors.as_deref().map(summarize)
    }
}

/// One replicate's field and observed grid indices.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub field: Vec<ManifoldPoint>,
    pub observed: Vec<usize>,
    pub run_seed: u64,
}

fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fields and subsamples for every replicate, fixed by the study seed.
pub fn draw_replicates(
    domain: &CDomain,
    field_spec: &FieldSpec,
    study: &StudyConfig,
) -> Result<Vec<Replicate>> {
    let n = domain.grid.len();
    if study.n_sites > n || study.n_sites == 0 {
        return Err(Error::PreconditionViolation(format!(
            "cannot draw {} sites from a grid of {n}",
            study.n_sites
        )));
    }
    let sampler = grid_sampler(&domain.grid, field_spec)?;
    let shared = if study.regenerate_field {
        None
    } else {
        Some(generate_field(study.field, &domain.grid, field_spec, &sampler, &mut replicate_rng(study.seed, u64::MAX))?)
    };
    (0..study.n_replicates)
        .map(|j| {
            let mut rng = replicate_rng(study.seed, j as u64);
            let field = match &shared {
                Some(f) => f.clone(),
                None => generate_field(study.field, &domain.grid, field_spec, &sampler, &mut rng)?,
            };
            let mut observed = sample(&mut rng, n, study.n_sites).into_vec();
            observed.sort_unstable();
            Ok(Replicate {
                field,
                observed,
                run_seed: rng.gen(),
            })
        })
        .collect()
}

/// Errors of one replicate at one tile count.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateScore {
    /// Geodesic error at every grid point.
    pub spe: Vec<f64>,
    /// Squared correlation difference at every grid point (correlation fields).
    pub rho_sq: Option<Vec<f64>>,
    pub error: f64,
    pub rho_error: Option<f64>,
}

/// Primary and secondary study errors recomputed from per-target errors.
pub fn study_error(kind: FieldKind, spe: &[f64], rho_sq: Option<&[f64]>, observed: &[usize]) -> (f64, Option<f64>) {
    match kind {
        FieldKind::Spd => (spe.iter().sum::<f64>() / spe.len() as f64, None),
        FieldKind::Correlation => {
            let mut seen = vec![false; spe.len()];
            for &i in observed {
                seen[i] = true;
            }
            let keep: Vec<usize> = (0..spe.len()).filter(|&i| !seen[i]).collect();
            let m = keep.len() as f64;
            let err = keep.iter().map(|&i| spe[i] * spe[i]).sum::<f64>() / m;
            let rho = rho_sq.map(|r| keep.iter().map(|&i| r[i]).sum::<f64>() / m);
            (err, rho)
        }
    }
}

/// Scores one replicate at one tile count.
pub fn score_replicate(
    domain: &CDomain,
    targets: &[ResolvedTarget],
    replicate: &Replicate,
    template: &RunConfig,
    kind: FieldKind,
    k: usize,
) -> Result<ReplicateScore> {
    let mut cfg = template.clone();
    cfg.k = k;
    cfg.manifold = kind.manifold();
    cfg.master_seed = replicate.run_seed;
    cfg.workers = 1;
    let values = replicate.observed.iter().map(|&i| replicate.field[i].clone()).collect();
    let obs = Observations::new(replicate.observed.clone(), values)?;
    let res = run_rdd_mk(&cfg, &domain.graph, &obs, targets)?;
    let m = error_metrics(&res.predictions, &replicate.field)?;
    let (error, rho_error) = study_error(kind, &m.spe, m.rho_sq.as_deref(), &replicate.observed);
    Ok(ReplicateScore {
        spe: m.spe,
        rho_sq: m.rho_sq,
        error,
        rho_error,
    })
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub rows: Vec<StudyRow>,
    /// Observed grid indices per replicate.
    pub observed: Vec<Vec<usize>>,
    /// `scores[j][c]`: replicate `j` at the `c`-th tile count.
    pub scores: Vec<Vec<ReplicateScore>>,
}

/// Runs every `(replicate, K)` pair; replicates run concurrently.
pub fn monte_carlo_study(
    domain: &CDomain,
    field_spec: &FieldSpec,
    template: &RunConfig,
    study: &StudyConfig,
) -> Result<StudyOutput> {
    let replicates = draw_replicates(domain, field_spec, study)?;
    let targets = domain.targets();
    let scores: Vec<Vec<ReplicateScore>> = with_workers(study.workers, || {
        replicates
            .par_iter()
            .map(|rep| {
                study
                    .k_values
                    .iter()
                    .map(|&k| score_replicate(domain, &targets, rep, template, study.field, k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows = study
        .k_values
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let errors = scores.iter().map(|s| s[c].error).collect();
            let rho_errors = match study.field {
                FieldKind::Correlation => Some(scores.iter().map(|s| s[c].rho_error.unwrap_or(f64::NAN)).collect()),
                FieldKind::Spd => None,
            };
            StudyRow { k, errors, rho_errors }
        })
        .collect();
    Ok(StudyOutput {
        rows,
        observed: replicates.into_iter().map(|r| r.observed).collect(),
        scores,
    })
}
