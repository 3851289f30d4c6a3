//! Intrinsic (Karcher) and extrinsic sample means.

use super::chol::CholFactor;
use super::sphere::{norm, SpherePoint};
use super::{ManifoldPoint, TangentChart, TangentVector};
use crate::error::{Error, Result};
use crate::linalg::{SpdMatrix, SymMatrix};

const DEGENERATE_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOptions {
    /// Bound on `‖Σᵢ n·wᵢ log_Ψ(xᵢ)‖_Ψ` at return; with uniform weights this
    /// is the norm of the plain sum of logarithms.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MeanOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct MeanReport {
    pub mean: ManifoldPoint,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::PreconditionViolation("mean weights must be nonnegative".into()));
            }
            let s: f64 = w.iter().sum();
            if !(s > 0.0) {
                return Err(Error::PreconditionViolation("mean weights sum to zero".into()));
            }
            Ok(w.iter().map(|v| v / s).collect())
        }
    }
}

/// Karcher fixed-point iteration `Ψ ← exp_Ψ(Σ wᵢ log_Ψ(xᵢ))` from `points[0]`.
pub fn intrinsic_mean_report(
    points: &[ManifoldPoint],
    weights: Option<&[f64]>,
    options: MeanOptions,
) -> Result<MeanReport> {
    let first = points.first().ok_or(Error::Empty("mean of no points"))?;
    let w = normalized_weights(points.len(), weights)?;
    let scale = points.len() as f64;
    let mut chart = TangentChart::new(first.clone())?;
    let mut gradient_norm = f64::INFINITY;
    for it in 0..=options.max_iter {
        let logs = points.iter().map(|p| chart.log(p)).collect::<Result<Vec<_>>>()?;
        let step = TangentVector::linear_combination(&w, &logs);
        gradient_norm = scale * chart.norm(&step);
        if gradient_norm <= options.tol {
            return Ok(MeanReport {
                mean: chart.base().clone(),
                iterations: it,
                gradient_norm,
            });
        }
        if it == options.max_iter {
            break;
        }
        chart = TangentChart::new(chart.exp(&step)?)?;
    }
    Err(Error::NoConvergence {
        iterations: options.max_iter,
        gradient_norm,
    })
}

pub fn intrinsic_mean(points: &[ManifoldPoint], weights: Option<&[f64]>, options: MeanOptions) -> Result<ManifoldPoint> {
    intrinsic_mean_report(points, weights, options).map(|r| r.mean)
}

/// Column-wise arithmetic mean projected back onto each sphere.
pub fn extrinsic_mean_chol(points: &[CholFactor], weights: Option<&[f64]>) -> Result<CholFactor> {
    let first = points.first().ok_or(Error::Empty("mean of no points"))?;
    let w = normalized_weights(points.len(), weights)?;
    let p = first.dim();
    let mut columns = Vec::with_capacity(p.saturating_sub(1));
    for q in 1..p {
        let mut acc = vec![0.0; q + 1];
        for (h, wi) in points.iter().zip(&w) {
            if h.dim() != p {
                return Err(Error::DimensionMismatch { expected: p, got: h.dim() });
            }
            for (a, v) in acc.iter_mut().zip(h.column(q)) {
                *a += wi * v;
            }
        }
        let n = norm(&acc);
        if n < DEGENERATE_MEAN_TOL {
            return Err(Error::DegenerateMean { column: q });
        }
        acc.iter_mut().for_each(|v| *v /= n);
        columns.push(acc);
    }
    Ok(CholFactor::from_columns(p, &columns))
}

/// Arithmetic mean in the ambient space, projected onto the manifold. For
/// SPD the arithmetic mean is already SPD and needs no projection.
pub fn extrinsic_mean(points: &[ManifoldPoint], weights: Option<&[f64]>) -> Result<ManifoldPoint> {
    let first = points.first().ok_or(Error::Empty("mean of no points"))?;
    let w = normalized_weights(points.len(), weights)?;
    let kind = first.kind();
    if points.iter().any(|p| p.kind() != kind) {
        return Err(Error::InvalidPoint("manifold kind mismatch".into()));
    }
    match first {
        ManifoldPoint::Spd(m) => {
            let mut acc = SymMatrix::zeros(m.dim());
            for (p, wi) in points.iter().zip(&w) {
                acc.axpy(*wi, p.as_spd().expect("checked kind").as_sym());
            }
            Ok(ManifoldPoint::Spd(SpdMatrix::new(acc)?))
        }
        ManifoldPoint::Sphere(z) => {
            let mut acc = vec![0.0; z.dim()];
            for (p, wi) in points.iter().zip(&w) {
                for (a, v) in acc.iter_mut().zip(p.as_sphere().expect("checked kind").coords()) {
                    *a += wi * v;
                }
            }
            if norm(&acc) < DEGENERATE_MEAN_TOL {
                return Err(Error::DegenerateMean { column: 0 });
            }
            Ok(ManifoldPoint::Sphere(SpherePoint::normalized(acc)?))
        }
        ManifoldPoint::Chol(_) => {
            let hs: Vec<CholFactor> = points.iter().map(|p| p.as_chol().expect("checked kind").clone()).collect();
            extrinsic_mean_chol(&hs, Some(&w)).map(ManifoldPoint::Chol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix_exp_sym;
    use crate::manifold::{dist, log};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut impl Rng, n: usize) -> ManifoldPoint {
        ManifoldPoint::Spd(matrix_exp_sym(&SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.5..1.5))).unwrap())
    }

    fn objective(m: &ManifoldPoint, pts: &[ManifoldPoint]) -> f64 {
        pts.iter().map(|p| dist(m, p).unwrap().powi(2)).sum()
    }

    #[test]
    fn single_point_is_its_own_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_spd(&mut rng, 3);
        let m = intrinsic_mean(std::slice::from_ref(&p), None, MeanOptions::default()).unwrap();
        assert!(dist(&m, &p).unwrap() < 1e-12);
        let h = ManifoldPoint::Chol(CholFactor::identity(3));
        assert_eq!(extrinsic_mean(std::slice::from_ref(&h), None).unwrap(), h);
    }

    #[test]
    fn commuting_pair_geometric_mean() {
        let a = ManifoldPoint::Spd(SpdMatrix::identity(2));
        let b = ManifoldPoint::Spd(SpdMatrix::diag(&[2f64.exp(), 2f64.exp()]).unwrap());
        let m = intrinsic_mean(&[a, b], None, MeanOptions::default()).unwrap();
        let e = std::f64::consts::E;
        assert!(m.as_spd().unwrap().as_sym().max_abs_diff(&SymMatrix::diag(&[e, e])) < 1e-12);
    }

    #[test]
    fn first_order_condition_at_return() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pts: Vec<_> = (0..7).map(|_| random_spd(&mut rng, 2)).collect();
            let rep = intrinsic_mean_report(&pts, None, MeanOptions::default()).unwrap();
            let chart = TangentChart::new(rep.mean.clone()).unwrap();
            let logs: Vec<_> = pts.iter().map(|p| log(&rep.mean, p).unwrap()).collect();
            let sum = TangentVector::linear_combination(&[1.0; 7], &logs);
            assert!(chart.norm(&sum) <= 1e-9);
        }
    }

    #[test]
    fn objective_oracle_over_perturbation_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<_> = (0..5).map(|_| random_spd(&mut rng, 2)).collect();
        let m = intrinsic_mean(&pts, None, MeanOptions::default()).unwrap();
        let f0 = objective(&m, &pts);
        let chart = TangentChart::new(m.clone()).unwrap();
        let steps = [-1e-2, -1e-3, 0.0, 1e-3, 1e-2];
        for &a in &steps {
            for &b in &steps {
                for &c in &steps {
                    let y = TangentVector::Sym(SymMatrix::new(2, vec![a, b, b, c]).unwrap());
                    let q = chart.exp(&y).unwrap();
                    assert!(objective(&q, &pts) >= f0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut pts: Vec<_> = (0..6).map(|_| random_spd(&mut rng, 3)).collect();
        let m0 = intrinsic_mean(&pts, None, MeanOptions::default()).unwrap();
        for _ in 0..5 {
            pts.shuffle(&mut rng);
            let m1 = intrinsic_mean(&pts, None, MeanOptions::default()).unwrap();
            assert!(dist(&m0, &m1).unwrap() < 1e-9);
        }
    }

    #[test]
    fn extrinsic_chol_examples() {
        let a = CholFactor::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = CholFactor::new(2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let m = extrinsic_mean_chol(&[a, b], None).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.get(0, 1) - r).abs() < 1e-15 && (m.get(1, 1) - r).abs() < 1e-15);
        let c = CholFactor::new(2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let d = CholFactor::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(extrinsic_mean_chol(&[c, d], None), Err(Error::DegenerateMean { column: 1 }));
    }

    #[test]
    fn sphere_intrinsic_mean_of_symmetric_pair() {
        let a = ManifoldPoint::Sphere(SpherePoint::normalized(vec![1.0, 1.0, 0.0]).unwrap());
        let b = ManifoldPoint::Sphere(SpherePoint::normalized(vec![1.0, -1.0, 0.0]).unwrap());
        let m = intrinsic_mean(&[a, b], None, MeanOptions::default()).unwrap();
        let z = m.as_sphere().unwrap().coords();
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12);
    }
}
