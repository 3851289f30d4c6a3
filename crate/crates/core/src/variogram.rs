//! Kernel-weighted empirical trace-semivariograms and weighted least-squares
//! fits of valid parametric models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs whose kernel weight product falls below this are skipped.
pub const DEFAULT_WEIGHT_CUTOFF: f64 = 1e-6;
pub const DEFAULT_N_BINS: usize = 15;
const RANGE_GRID: usize = 64;
const GOLDEN_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelConfig {
    Gaussian { bandwidth: f64 },
    /// Weight 1 inside the tile, 0 outside.
    TileIndicator,
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelConfig::Gaussian { bandwidth } if !(bandwidth > 0.0) || !bandwidth.is_finite() => Err(
                Error::PreconditionViolation(format!("kernel bandwidth must be positive, got {bandwidth}")),
            ),
            _ => Ok(()),
        }
    }
}

pub fn kernel_weight(cfg: KernelConfig, d: f64, same_tile: bool) -> f64 {
    match cfg {
        KernelConfig::Gaussian { bandwidth } => (-d * d / (2.0 * bandwidth * bandwidth)).exp(),
        KernelConfig::TileIndicator => {
            if same_tile {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Equal-width bins on `(0, h_max]`. Without an explicit `h_max`, half the
/// largest distance among retained pairs is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagBins {
    pub n_bins: usize,
    pub h_max: Option<f64>,
    pub weight_cutoff: f64,
}

impl Default for LagBins {
    fn default() -> Self {
        Self {
            n_bins: DEFAULT_N_BINS,
            h_max: None,
            weight_cutoff: DEFAULT_WEIGHT_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    pub lag_centers: Vec<f64>,
    /// NaN for empty bins.
    pub semivariances: Vec<f64>,
    pub pair_weights: Vec<f64>,
    pub bin_counts: Vec<usize>,
}

impl EmpiricalVariogram {
    /// `(lag, semivariance, weight)` for populated bins with positive weight.
    pub fn populated(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.lag_centers.len())
            .filter(|&b| self.bin_counts[b] > 0 && self.pair_weights[b] > 0.0)
            .map(|b| (self.lag_centers[b], self.semivariances[b], self.pair_weights[b]))
    }

    /// Pair-weighted mean semivariance over populated bins.
    pub fn weighted_mean(&self) -> f64 {
        let (s, w) = self.populated().fold((0.0, 0.0), |(s, w), (_, g, wt)| (s + g * wt, w + wt));
        if w > 0.0 {
            s / w
        } else {
            0.0
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Kernel-weighted estimator over all pairs `i < j`:
/// `γ̂(h) = Σ wᵢwⱼ‖Lᵢ − Lⱼ‖² / (2 Σ wᵢwⱼ)` over pairs whose distance falls in
/// the bin of `h`. `coords` are isometric tangent coordinates at the tile's
/// base point, `site_weights[i]` the kernel weight of site `i` with respect
/// to the tile centre, and `dist(i, j)` the domain distance.
pub fn empirical_variogram(
    coords: &[Vec<f64>],
    site_weights: &[f64],
    dist: impl Fn(usize, usize) -> f64,
    bins: &LagBins,
) -> Result<EmpiricalVariogram> {
    let n = coords.len();
    if site_weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: site_weights.len(),
        });
    }
    if bins.n_bins == 0 {
        return Err(Error::PreconditionViolation("at least one lag bin is required".into()));
    }
    let mut pairs = Vec::new();
    let mut far: f64 = 0.0;
    for i in 0..n {
        if site_weights[i] == 0.0 {
            continue;
        }
        for j in (i + 1)..n {
            let w = site_weights[i] * site_weights[j];
            if w < bins.weight_cutoff || w == 0.0 {
                continue;
            }
            let h = dist(i, j);
            if h > 0.0 {
                far = far.max(h);
                pairs.push((i, j, h, w));
            }
        }
    }
    let h_max = bins.h_max.unwrap_or(0.5 * far);
    if pairs.is_empty() || !(h_max > 0.0) {
        return Err(Error::NoPairs);
    }
    let nb = bins.n_bins;
    let width = h_max / nb as f64;
    let mut num = vec![0.0; nb];
    let mut den = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for (i, j, h, w) in pairs {
        if h > h_max {
            continue;
        }
        let b = ((h / width).ceil() as usize).clamp(1, nb) - 1;
        num[b] += w * sq_dist(&coords[i], &coords[j]);
        den[b] += w;
        counts[b] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::NoPairs);
    }
    Ok(EmpiricalVariogram {
        lag_centers: (0..nb).map(|b| (b as f64 + 0.5) * width).collect(),
        semivariances: (0..nb)
            .map(|b| if counts[b] > 0 { num[b] / (2.0 * den[b]) } else { f64::NAN })
            .collect(),
        pair_weights: den,
        bin_counts: counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariogramFamily {
    Spherical,
    /// Parameterized by the practical range: 95% of the sill at `h = range`.
    Exponential,
    NuggetOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub family: VariogramFamily,
    pub nugget: f64,
    pub partial_sill: f64,
    pub range: f64,
}

impl VariogramModel {
    pub fn nugget_only(nugget: f64) -> Self {
        Self {
            family: VariogramFamily::NuggetOnly,
            nugget: nugget.max(0.0),
            partial_sill: 0.0,
            range: 1.0,
        }
    }

    #[inline]
    pub fn eval(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        self.nugget + self.partial_sill * shape(self.family, h / self.range)
    }

    pub fn sill(&self) -> f64 {
        self.nugget + self.partial_sill
    }
}

/// Structured part of the model on `h / range`, rising from 0 to 1.
#[inline]
fn shape(family: VariogramFamily, u: f64) -> f64 {
    match family {
        VariogramFamily::Spherical => {
            if u >= 1.0 {
                1.0
            } else {
                1.5 * u - 0.5 * u * u * u
            }
        }
        VariogramFamily::Exponential => 1.0 - (-3.0 * u).exp(),
        VariogramFamily::NuggetOnly => 0.0,
    }
}

struct Bins {
    lags: Vec<f64>,
    gammas: Vec<f64>,
    weights: Vec<f64>,
}

/// Best `(nugget, sill, sse)` with both coefficients nonnegative for a fixed
/// range: the unconstrained weighted normal equations, else the better of
/// the two single-coefficient boundaries.
fn profile(bins: &Bins, family: VariogramFamily, range: f64) -> (f64, f64, f64) {
    let (mut sw, mut sf, mut sff, mut sg, mut sfg) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let f: Vec<f64> = bins.lags.iter().map(|&h| shape(family, h / range)).collect();
    for ((&fi, &g), &w) in f.iter().zip(&bins.gammas).zip(&bins.weights) {
        sw += w;
        sf += w * fi;
        sff += w * fi * fi;
        sg += w * g;
        sfg += w * fi * g;
    }
    let sse = |a: f64, b: f64| -> f64 {
        f.iter()
            .zip(&bins.gammas)
            .zip(&bins.weights)
            .map(|((&fi, &g), &w)| w * (g - a - b * fi).powi(2))
            .sum()
    };
    let det = sw * sff - sf * sf;
    if det > 1e-14 * sw * sff {
        let a = (sff * sg - sf * sfg) / det;
        let b = (sw * sfg - sf * sg) / det;
        if a >= 0.0 && b >= 0.0 {
            return (a, b, sse(a, b));
        }
    }
    let mut best = (sg / sw, 0.0, sse(sg / sw, 0.0));
    if sff > 0.0 {
        let b = (sfg / sff).max(0.0);
        let s = sse(0.0, b);
        if s < best.2 {
            best = (0.0, b, s);
        }
    }
    best
}

/// Weighted least squares over `(nugget, sill, range)` with nonnegative
/// coefficients and `range ∈ [min lag, 2·max lag]`: a log-spaced range grid
/// with the linear coefficients profiled out, then golden-section refinement
/// around the best grid point. A vanishing structured sill yields a
/// nugget-only model.
pub fn fit_variogram(emp: &EmpiricalVariogram, family: VariogramFamily) -> Result<VariogramModel> {
    let mut bins = Bins {
        lags: Vec::new(),
        gammas: Vec::new(),
        weights: Vec::new(),
    };
    for (h, g, w) in emp.populated() {
        bins.lags.push(h);
        bins.gammas.push(g);
        bins.weights.push(w);
    }
    if family == VariogramFamily::NuggetOnly {
        if bins.lags.is_empty() {
            return Err(Error::FitFailed("no populated bins".into()));
        }
        return Ok(VariogramModel::nugget_only(emp.weighted_mean()));
    }
    if bins.lags.len() < 3 {
        return Err(Error::FitFailed(format!("{} populated bins, need 3", bins.lags.len())));
    }
    // Normalize weights to keep sums well scaled.
    let wmax = bins.weights.iter().cloned().fold(0.0, f64::max);
    bins.weights.iter_mut().for_each(|w| *w /= wmax);

    let lo = bins.lags[0].ln();
    let hi = (2.0 * bins.lags[bins.lags.len() - 1]).ln();
    let grid: Vec<f64> = (0..RANGE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (RANGE_GRID - 1) as f64)
        .collect();
    let obj = |t: f64| profile(&bins, family, t.exp()).2;
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let v = obj(t);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(RANGE_GRID - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = obj(d);
        }
    }
    let mut t = if fc < fd { c } else { d };
    if obj(t) > best_v {
        t = grid[best_i];
    }
    let range = t.exp();
    let (nugget, sill, sse) = profile(&bins, family, range);
    if !sse.is_finite() {
        return Err(Error::FitFailed("non-finite objective".into()));
    }
    if sill <= 1e-12 * (nugget + sill).max(f64::MIN_POSITIVE) {
        return Ok(VariogramModel::nugget_only(nugget));
    }
    Ok(VariogramModel {
        family,
        nugget,
        partial_sill: sill,
        range,
    })
}

/// Fit with the nugget-only fallback on failure.
pub fn fit_or_fallback(emp: &EmpiricalVariogram, family: VariogramFamily) -> VariogramModel {
    fit_variogram(emp, family).unwrap_or_else(|_| VariogramModel::nugget_only(emp.weighted_mean()))
}
