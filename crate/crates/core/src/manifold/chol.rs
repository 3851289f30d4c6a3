//! The Cholesky manifold: upper-triangular factors `H` of full-rank
//! correlation matrices `R = HᵀH`.
//!
//! Column 0 is pinned to `e₁`; every later column `q` (0-based) restricted to
//! its first `q + 1` rows is a unit vector, so the manifold is a product of
//! spheres and all geometry is inherited column by column.

use super::sphere::{exp_column, great_circle, log_column, norm};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_upper, Matrix, SpdMatrix, SymMatrix};

const UNIT_TOL: f64 = 1e-12;
/// Allowed deviation of a correlation diagonal from 1.
pub const CORR_DIAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    dim: usize,
    data: Vec<f64>,
}

impl CholFactor {
    /// Validates a row-major `dim × dim` upper-triangular matrix.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("cholesky factor"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != 0.0 {
                    return Err(Error::InvalidPoint(format!("entry ({i},{j}) below the diagonal is nonzero")));
                }
            }
        }
        if (data[0] - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidPoint("first column must be e1".into()));
        }
        let f = Self { dim, data };
        for q in 1..dim {
            let n = norm(&f.column(q));
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidPoint(format!("column {q} has norm {n}")));
            }
        }
        Ok(f)
    }

    /// Assembles a factor from its sphere columns `1..dim`, each of length `q + 1`.
    pub(crate) fn from_columns(dim: usize, columns: &[Vec<f64>]) -> Self {
        let mut data = vec![0.0; dim * dim];
        data[0] = 1.0;
        for (q, col) in (1..dim).zip(columns) {
            for (i, v) in col.iter().enumerate() {
                data[i * dim + q] = *v;
            }
        }
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The first `q + 1` entries of column `q`.
    pub fn column(&self, q: usize) -> Vec<f64> {
        (0..=q).map(|i| self.data[i * self.dim + q]).collect()
    }

    /// `R = HᵀH`.
    pub fn to_corr(&self) -> SpdMatrix {
        let n = self.dim;
        let r = SymMatrix::from_fn(n, |i, j| {
            if i == j {
                1.0
            } else {
                (0..=i.min(j)).map(|k| self.get(k, i) * self.get(k, j)).sum()
            }
        });
        SpdMatrix::new_unchecked(r)
    }

    /// The unique upper Cholesky factor with positive diagonal of a
    /// correlation matrix.
    pub fn from_corr(r: &SpdMatrix) -> Result<Self> {
        let n = r.dim();
        for i in 0..n {
            let d = r.get(i, i);
            if (d - 1.0).abs() > CORR_DIAG_TOL {
                return Err(Error::NotCorrelation { index: i, value: d });
            }
        }
        let h = cholesky_upper(r)?;
        let columns: Vec<Vec<f64>> = (1..n)
            .map(|q| {
                let col: Vec<f64> = (0..=q).map(|i| h.get(i, q)).collect();
                let s = norm(&col);
                col.into_iter().map(|v| v / s).collect()
            })
            .collect();
        Ok(Self::from_columns(n, &columns))
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(self.dim, self.dim, self.data.clone()).unwrap()
    }
}

/// Tangent vector at a Cholesky factor: upper triangular, zero first column,
/// column `q` orthogonal to the base's column `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholTangent {
    dim: usize,
    data: Vec<f64>,
}

impl CholTangent {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub(crate) fn from_columns(dim: usize, columns: &[Vec<f64>]) -> Self {
        let mut data = vec![0.0; dim * dim];
        for (q, col) in (1..dim).zip(columns) {
            for (i, v) in col.iter().enumerate() {
                data[i * dim + q] = *v;
            }
        }
        Self { dim, data }
    }

    /// Builds from a full row-major matrix; only the upper-triangular part of
    /// columns `1..dim` is read.
    pub fn from_matrix(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let cols: Vec<Vec<f64>> = (1..dim).map(|q| (0..=q).map(|i| data[i * dim + q]).collect()).collect();
        Ok(Self::from_columns(dim, &cols))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn column(&self, q: usize) -> Vec<f64> {
        (0..=q).map(|i| self.data[i * self.dim + q]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Euclidean norm, which is the Riemannian norm at any base.
    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }
}

fn check(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

pub fn chol_exp(base: &CholFactor, tangent: &CholTangent) -> Result<CholFactor> {
    check(base.dim, tangent.dim)?;
    let cols: Vec<Vec<f64>> = (1..base.dim)
        .map(|q| exp_column(&base.column(q), &tangent.column(q)))
        .collect();
    Ok(CholFactor::from_columns(base.dim, &cols))
}

/// Column-wise sphere logarithm; antipodal columns are reported by index.
pub fn chol_log(base: &CholFactor, point: &CholFactor) -> Result<CholTangent> {
    check(base.dim, point.dim)?;
    let cols = (1..base.dim)
        .map(|q| log_column(&base.column(q), &point.column(q), Some(q)).map(|t| t.coords))
        .collect::<Result<Vec<_>>>()?;
    Ok(CholTangent::from_columns(base.dim, &cols))
}

/// `sqrt(Σ_q d²_{S}(H⁽q⁾, Z⁽q⁾))` over the sphere columns.
pub fn chol_dist(a: &CholFactor, b: &CholFactor) -> Result<f64> {
    check(a.dim, b.dim)?;
    Ok((1..a.dim)
        .map(|q| great_circle(&a.column(q), &b.column(q)).powi(2))
        .sum::<f64>()
        .sqrt())
}

pub fn corr_to_chol(r: &SpdMatrix) -> Result<CholFactor> {
    CholFactor::from_corr(r)
}

pub fn chol_to_corr(h: &CholFactor) -> SpdMatrix {
    h.to_corr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn h_of_rho(rho: f64) -> CholFactor {
        let r = SpdMatrix::new(SymMatrix::new(2, vec![1.0, rho, rho, 1.0]).unwrap()).unwrap();
        corr_to_chol(&r).unwrap()
    }

    fn random_chol(rng: &mut impl Rng, p: usize) -> CholFactor {
        let cols: Vec<Vec<f64>> = (1..p)
            .map(|q| {
                let mut v: Vec<f64> = (0..=q).map(|_| rng.gen_range(-1.0..1.0)).collect();
                v[q] = v[q].abs() + 0.2;
                let n = norm(&v);
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        CholFactor::from_columns(p, &cols)
    }

    #[test]
    fn two_by_two_factor() {
        let h = h_of_rho(0.5);
        assert_abs_diff_eq!(h.get(0, 0), 1.0);
        assert_abs_diff_eq!(h.get(0, 1), 0.5, epsilon = 1e-15);
        assert_eq!(h.get(1, 0), 0.0);
        assert_abs_diff_eq!(h.get(1, 1), 0.8660254, epsilon = 1e-7);
        assert_eq!(corr_to_chol(&SpdMatrix::identity(3)).unwrap(), CholFactor::identity(3));
    }

    #[test]
    fn rejects_non_correlation() {
        let m = SpdMatrix::diag(&[1.0, 2.0]).unwrap();
        assert!(matches!(corr_to_chol(&m), Err(Error::NotCorrelation { index: 1, .. })));
        assert!(CholFactor::new(2, vec![1.0, 0.5, 0.0, 0.5]).is_err());
    }

    #[test]
    fn distance_examples() {
        let h0 = h_of_rho(0.0);
        let h5 = h_of_rho(0.5);
        assert_eq!(chol_dist(&h5, &h5).unwrap(), 0.0);
        assert_abs_diff_eq!(chol_dist(&h0, &h5).unwrap(), PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chol_dist(&h0, &h5).unwrap(), 0.5235988, epsilon = 1e-7);
    }

    #[test]
    fn distance_is_columnwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let a = random_chol(&mut rng, 3);
            let b = random_chol(&mut rng, 3);
            // Oracle: arccos of per-column dot products.
            let mut s = 0.0;
            for q in 1..3 {
                let c: f64 = a.column(q).iter().zip(b.column(q)).map(|(x, y)| x * y).sum();
                s += c.clamp(-1.0, 1.0).acos().powi(2);
            }
            assert!((chol_dist(&a, &b).unwrap().powi(2) - s).abs() < 1e-10);
        }
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let a = random_chol(&mut rng, 4);
            let b = random_chol(&mut rng, 4);
            let l = chol_log(&a, &b).unwrap();
            let back = chol_exp(&a, &l).unwrap();
            assert!(chol_dist(&back, &b).unwrap() < 1e-10);
            assert!((l.norm() - chol_dist(&a, &b).unwrap()).abs() < 1e-10);
            for q in 1..4 {
                let d: f64 = l.column(q).iter().zip(a.column(q)).map(|(x, y)| x * y).sum();
                assert!(d.abs() < 1e-10);
            }
            assert_eq!(l.get(0, 0), 0.0);
        }
    }

    #[test]
    fn antipodal_column_reported() {
        let a = h_of_rho(0.0);
        let b = CholFactor::new(2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(chol_log(&a, &b), Err(Error::AntipodalPoint { column: Some(1) }));
    }

    #[test]
    fn correlation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let h = random_chol(&mut rng, 4);
            let r = chol_to_corr(&h);
            for i in 0..4 {
                assert_eq!(r.get(i, i), 1.0);
            }
            let back = corr_to_chol(&SpdMatrix::new(r.as_sym().clone()).unwrap()).unwrap();
            assert!(back.to_matrix().max_abs_diff(&h.to_matrix()) < 1e-10);
        }
    }
}
