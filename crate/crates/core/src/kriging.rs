//! Ordinary kriging of tangent vectors within one tile.

use crate::domain::{DomainGraph, ResolvedTarget};
use crate::error::{Error, Result};
use crate::linalg::SaddleSystem;
use crate::manifold::{ManifoldPoint, TangentChart, TangentVector};
use crate::variogram::VariogramModel;

/// Target-to-site distance below which the target is taken to be that site.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// One tile's fitted local model. The saddle matrix depends only on the
/// tile sites, so it is factored once and reused for every target.
#[derive(Debug, Clone)]
pub struct TileModel {
    pub tile: usize,
    chart: TangentChart,
    sites: Vec<usize>,
    logs: Vec<TangentVector>,
    variogram: VariogramModel,
    /// `None` when the system is singular: predictions use uniform weights.
    system: Option<SaddleSystem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingWeights {
    pub weights: Vec<f64>,
    pub multiplier: f64,
    /// `λᵀγ₀ + μ`, clamped at 0.
    pub variance: f64,
}

/// Variogram matrix `Γᵢⱼ = γ(d(sᵢ, sⱼ))`, row-major.
pub fn variogram_matrix(graph: &DomainGraph, sites: &[usize], variogram: &VariogramModel) -> Vec<f64> {
    let n = sites.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = variogram.eval(graph.site_dist(sites[i], sites[j]));
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

impl TileModel {
    /// `logs[i]` is the logarithm at the chart base of the observation at
    /// graph site `sites[i]`.
    pub fn new(
        tile: usize,
        chart: TangentChart,
        sites: Vec<usize>,
        logs: Vec<TangentVector>,
        variogram: VariogramModel,
        graph: &DomainGraph,
    ) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Empty("tile without sites"));
        }
        if sites.len() != logs.len() {
            return Err(Error::DimensionMismatch {
                expected: sites.len(),
                got: logs.len(),
            });
        }
        let gamma = variogram_matrix(graph, &sites, &variogram);
        let system = SaddleSystem::factor(&gamma, sites.len()).ok();
        Ok(Self {
            tile,
            chart,
            sites,
            logs,
            variogram,
            system,
        })
    }

    pub fn chart(&self) -> &TangentChart {
        &self.chart
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn logs(&self) -> &[TangentVector] {
        &self.logs
    }

    pub fn variogram(&self) -> &VariogramModel {
        &self.variogram
    }

    /// False when the saddle system was singular and predictions fall back
    /// to the tile average.
    pub fn is_regular(&self) -> bool {
        self.system.is_some()
    }
}

pub fn kriging_weights(model: &TileModel, graph: &DomainGraph, target: &ResolvedTarget) -> Result<KrigingWeights> {
    let n = model.sites.len();
    let mut gamma0 = Vec::with_capacity(n);
    let mut coincident = None;
    for (i, &s) in model.sites.iter().enumerate() {
        let d = graph.dist_to(s, target);
        if d < COINCIDENCE_TOL && coincident.is_none() {
            coincident = Some(i);
        }
        gamma0.push(model.variogram.eval(d));
    }
    let variance_of = |w: &[f64], mu: f64| (w.iter().zip(&gamma0).map(|(a, b)| a * b).sum::<f64>() + mu).max(0.0);
    if let (Some(i), true) = (coincident, model.variogram.nugget == 0.0) {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        return Ok(KrigingWeights {
            weights,
            multiplier: 0.0,
            variance: 0.0,
        });
    }
    match &model.system {
        Some(sys) => {
            let sol = sys.solve(&gamma0)?;
            let variance = variance_of(&sol.weights, sol.multiplier);
            Ok(KrigingWeights {
                weights: sol.weights,
                multiplier: sol.multiplier,
                variance,
            })
        }
        None => {
            let weights = vec![1.0 / n as f64; n];
            let variance = variance_of(&weights, 0.0);
            Ok(KrigingWeights {
                weights,
                multiplier: 0.0,
                variance,
            })
        }
    }
}

/// `Σ λᵢ log(χ_{sᵢ})` over the tile sites.
pub fn krige_tangent(model: &TileModel, weights: &KrigingWeights) -> TangentVector {
    TangentVector::linear_combination(&weights.weights, &model.logs)
}

pub fn krige_predict(model: &TileModel, graph: &DomainGraph, target: &ResolvedTarget) -> Result<ManifoldPoint> {
    let w = kriging_weights(model, graph, target)?;
    model.chart.exp(&krige_tangent(model, &w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Point, SiteSet, Target};
    use crate::linalg::{matrix_exp_sym, SpdMatrix, SymMatrix};
    use crate::manifold::{dist, log};
    use crate::variogram::VariogramFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spherical(nugget: f64) -> VariogramModel {
        VariogramModel {
            family: VariogramFamily::Spherical,
            nugget,
            partial_sill: 1.0,
            range: 3.0,
        }
    }

    fn setup(rng: &mut impl Rng, n: usize, nugget: f64) -> (DomainGraph, TileModel, Vec<ManifoldPoint>) {
        let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0))).collect();
        let graph = DomainGraph::euclidean(&SiteSet::from_points(&pts).unwrap());
        let obs: Vec<ManifoldPoint> = (0..n)
            .map(|_| ManifoldPoint::Spd(matrix_exp_sym(&SymMatrix::from_fn(2, |_, _| rng.gen_range(-1.0..1.0))).unwrap()))
            .collect();
        let base = obs[0].clone();
        let logs = obs.iter().map(|o| log(&base, o).unwrap()).collect();
        let chart = TangentChart::new(base).unwrap();
        let model = TileModel::new(0, chart, (0..n).collect(), logs, spherical(nugget), &graph).unwrap();
        (graph, model, obs)
    }

    #[test]
    fn single_site_gets_full_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (g, m, _) = setup(&mut rng, 1, 0.1);
        let t = g.resolve(Target::Point(Point::new(9.0, 9.0))).unwrap();
        assert_eq!(kriging_weights(&m, &g, &t).unwrap().weights, vec![1.0]);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let pts = [Point::new(0.0, 0.0), Point::new(2.0, 0.0)];
        let g = DomainGraph::euclidean(&SiteSet::from_points(&pts).unwrap());
        let base = ManifoldPoint::Spd(SpdMatrix::identity(2));
        let logs = vec![TangentVector::Sym(SymMatrix::diag(&[1.0, 0.0])), TangentVector::Sym(SymMatrix::diag(&[0.0, 1.0]))];
        let m = TileModel::new(0, TangentChart::new(base).unwrap(), vec![0, 1], logs, spherical(0.0), &g).unwrap();
        let t = g.resolve(Target::Point(Point::new(1.0, 0.7))).unwrap();
        let w = kriging_weights(&m, &g, &t).unwrap();
        assert!((w.weights[0] - 0.5).abs() < 1e-12 && (w.weights[1] - 0.5).abs() < 1e-12);
        let v = krige_tangent(&m, &w);
        let TangentVector::Sym(v) = v else { unreachable!() };
        assert!(v.max_abs_diff(&SymMatrix::diag(&[0.5, 0.5])) < 1e-12);
    }

    #[test]
    fn exact_at_data_sites() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (g, m, obs) = setup(&mut rng, 8, 0.0);
        for (i, o) in obs.iter().enumerate() {
            let t = g.resolve(Target::Vertex(i)).unwrap();
            assert!(dist(&krige_predict(&m, &g, &t).unwrap(), o).unwrap() < 1e-8);
        }
    }

    #[test]
    fn constant_tile_reproduces_value() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(i as f64, (i * i) as f64 * 0.3)).collect();
        let g = DomainGraph::euclidean(&SiteSet::from_points(&pts).unwrap());
        let x = ManifoldPoint::Spd(SpdMatrix::new(SymMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap()).unwrap());
        let chart = TangentChart::new(ManifoldPoint::Spd(SpdMatrix::identity(2))).unwrap();
        let logs = vec![chart.log(&x).unwrap(); 5];
        let m = TileModel::new(0, chart, (0..5).collect(), logs, spherical(0.3), &g).unwrap();
        let t = g.resolve(Target::Point(Point::new(2.2, -1.0))).unwrap();
        assert!(dist(&krige_predict(&m, &g, &t).unwrap(), &x).unwrap() < 1e-10);
    }

    #[test]
    fn zero_variogram_falls_back_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..4).map(|i| Point::new(i as f64, 0.0)).collect();
        let g = DomainGraph::euclidean(&SiteSet::from_points(&pts).unwrap());
        let (_, base_model, _) = setup(&mut rng, 4, 0.0);
        let m = TileModel::new(
            0,
            base_model.chart().clone(),
            (0..4).collect(),
            base_model.logs().to_vec(),
            VariogramModel::nugget_only(0.0),
            &g,
        )
        .unwrap();
        assert!(!m.is_regular());
        let t = g.resolve(Target::Point(Point::new(0.5, 0.5))).unwrap();
        assert_eq!(kriging_weights(&m, &g, &t).unwrap().weights, vec![0.25; 4]);
    }

    #[test]
    fn predictions_stay_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let nugget = rng.gen_range(0.0..0.5);
            let (g, m, _) = setup(&mut rng, 4, nugget);
            let t = g.resolve(Target::Point(Point::new(rng.gen_range(-1.0..5.0), rng.gen_range(-1.0..5.0)))).unwrap();
            let p = krige_predict(&m, &g, &t).unwrap();
            assert!(SpdMatrix::new(p.as_spd().unwrap().as_sym().clone()).is_ok());
        }
    }
}
