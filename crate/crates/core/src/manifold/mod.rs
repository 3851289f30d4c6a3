//! Riemannian geometry of the data manifolds behind a single interface.
//!
//! [`ManifoldPoint`] and [`TangentVector`] are closed enums over the three
//! supported geometries. [`TangentChart`] fixes a base point and caches what
//! repeated exp/log calls at that base need; it also exposes *isometric
//! coordinates*, a flat `Vec<f64>` representation of tangent vectors whose
//! Euclidean inner product equals the Riemannian one at the base. The
//! variogram and kriging code work on those coordinates and never need to
//! know which manifold they are on.

pub mod chol;
pub mod mean;
pub mod spd;
pub mod sphere;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SpdMatrix, SymMatrix};

pub use chol::{chol_dist, chol_exp, chol_log, chol_to_corr, corr_to_chol, CholFactor, CholTangent};
pub use mean::{extrinsic_mean, extrinsic_mean_chol, intrinsic_mean, intrinsic_mean_report, MeanOptions, MeanReport};
pub use spd::{spd_dist, spd_exp, spd_inner, spd_log, SpdChart};
pub use sphere::{sphere_dist, sphere_exp, sphere_log, SpherePoint, SphereTangent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dim", rename_all = "snake_case")]
pub enum ManifoldKind {
    /// `PD(p)` with the affine-invariant metric.
    Spd(usize),
    /// `S^q ⊂ R^q`.
    Sphere(usize),
    /// `Chol(p)`, correlation matrices through their Cholesky factors.
    Cholesky(usize),
}

impl ManifoldKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ManifoldKind::Spd(p) | ManifoldKind::Cholesky(p) if p < 2 => Err(Error::PreconditionViolation(format!(
                "matrix manifolds need p >= 2, got {p}"
            ))),
            ManifoldKind::Sphere(0) => Err(Error::PreconditionViolation("sphere needs q >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Matrix side length for the matrix manifolds, ambient dimension for spheres.
    pub fn dim(&self) -> usize {
        match *self {
            ManifoldKind::Spd(p) | ManifoldKind::Sphere(p) | ManifoldKind::Cholesky(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldPoint {
    Spd(SpdMatrix),
    Sphere(SpherePoint),
    Chol(CholFactor),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TangentVector {
    Sym(SymMatrix),
    Sphere(SphereTangent),
    Chol(CholTangent),
}

fn kind_mismatch() -> Error {
    Error::InvalidPoint("manifold kind mismatch".into())
}

impl ManifoldPoint {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            ManifoldPoint::Spd(m) => ManifoldKind::Spd(m.dim()),
            ManifoldPoint::Sphere(z) => ManifoldKind::Sphere(z.dim()),
            ManifoldPoint::Chol(h) => ManifoldKind::Cholesky(h.dim()),
        }
    }

    pub fn as_spd(&self) -> Option<&SpdMatrix> {
        match self {
            ManifoldPoint::Spd(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_chol(&self) -> Option<&CholFactor> {
        match self {
            ManifoldPoint::Chol(h) => Some(h),
            _ => None,
        }
    }

    pub fn as_sphere(&self) -> Option<&SpherePoint> {
        match self {
            ManifoldPoint::Sphere(z) => Some(z),
            _ => None,
        }
    }

    /// Numeric payload for serialization: upper triangle of the matrix for
    /// SPD, upper triangle of `HᵀH` for Cholesky factors, coordinates for
    /// sphere points.
    pub fn export_values(&self) -> Vec<f64> {
        match self {
            ManifoldPoint::Spd(m) => m.as_sym().upper(),
            ManifoldPoint::Chol(h) => h.to_corr().as_sym().upper(),
            ManifoldPoint::Sphere(z) => z.coords().to_vec(),
        }
    }

    /// Inverse of [`ManifoldPoint::export_values`].
    pub fn import_values(kind: ManifoldKind, values: &[f64]) -> Result<Self> {
        match kind {
            ManifoldKind::Spd(p) => Ok(ManifoldPoint::Spd(SpdMatrix::new(SymMatrix::from_upper(p, values)?)?)),
            ManifoldKind::Cholesky(p) => {
                let r = SpdMatrix::new(SymMatrix::from_upper(p, values)?)?;
                Ok(ManifoldPoint::Chol(CholFactor::from_corr(&r)?))
            }
            ManifoldKind::Sphere(q) => {
                if values.len() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        got: values.len(),
                    });
                }
                Ok(ManifoldPoint::Sphere(SpherePoint::new(values.to_vec())?))
            }
        }
    }
}

/// Geodesic distance between two points of the same manifold.
pub fn dist(a: &ManifoldPoint, b: &ManifoldPoint) -> Result<f64> {
    match (a, b) {
        (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => spd_dist(a, b),
        (ManifoldPoint::Sphere(a), ManifoldPoint::Sphere(b)) => sphere_dist(a, b),
        (ManifoldPoint::Chol(a), ManifoldPoint::Chol(b)) => chol_dist(a, b),
        _ => Err(kind_mismatch()),
    }
}

pub fn exp(base: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    match (base, v) {
        (ManifoldPoint::Spd(b), TangentVector::Sym(y)) => spd_exp(b, y).map(ManifoldPoint::Spd),
        (ManifoldPoint::Sphere(b), TangentVector::Sphere(y)) => sphere_exp(b, y).map(ManifoldPoint::Sphere),
        (ManifoldPoint::Chol(b), TangentVector::Chol(y)) => chol_exp(b, y).map(ManifoldPoint::Chol),
        _ => Err(kind_mismatch()),
    }
}

pub fn log(base: &ManifoldPoint, p: &ManifoldPoint) -> Result<TangentVector> {
    match (base, p) {
        (ManifoldPoint::Spd(b), ManifoldPoint::Spd(p)) => spd_log(b, p).map(TangentVector::Sym),
        (ManifoldPoint::Sphere(b), ManifoldPoint::Sphere(p)) => sphere_log(b, p).map(TangentVector::Sphere),
        (ManifoldPoint::Chol(b), ManifoldPoint::Chol(p)) => chol_log(b, p).map(TangentVector::Chol),
        _ => Err(kind_mismatch()),
    }
}

/// Riemannian inner product at `base`.
pub fn inner(base: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
    match (base, u, v) {
        (ManifoldPoint::Spd(b), TangentVector::Sym(u), TangentVector::Sym(v)) => spd_inner(b, u, v),
        (ManifoldPoint::Sphere(_), TangentVector::Sphere(u), TangentVector::Sphere(v)) => {
            Ok(sphere::dot(&u.coords, &v.coords))
        }
        (ManifoldPoint::Chol(_), TangentVector::Chol(u), TangentVector::Chol(v)) => {
            Ok(sphere::dot(u.as_slice(), v.as_slice()))
        }
        _ => Err(kind_mismatch()),
    }
}

impl TangentVector {
    pub fn zeros(kind: ManifoldKind) -> Self {
        match kind {
            ManifoldKind::Spd(p) => TangentVector::Sym(SymMatrix::zeros(p)),
            ManifoldKind::Sphere(q) => TangentVector::Sphere(SphereTangent::zeros(q)),
            ManifoldKind::Cholesky(p) => TangentVector::Chol(CholTangent::zeros(p)),
        }
    }

    /// `self += alpha * other`. Panics on mismatched variants.
    pub fn axpy(&mut self, alpha: f64, other: &TangentVector) {
        match (self, other) {
            (TangentVector::Sym(a), TangentVector::Sym(b)) => a.axpy(alpha, b),
            (TangentVector::Sphere(a), TangentVector::Sphere(b)) => {
                for (x, y) in a.coords.iter_mut().zip(&b.coords) {
                    *x += alpha * y;
                }
            }
            (TangentVector::Chol(a), TangentVector::Chol(b)) => {
                for (x, y) in a.data_mut().iter_mut().zip(b.as_slice()) {
                    *x += alpha * y;
                }
            }
            _ => panic!("tangent vector kind mismatch"),
        }
    }

    /// `Σ wᵢ vᵢ`; `vectors` must be nonempty.
    pub fn linear_combination(weights: &[f64], vectors: &[TangentVector]) -> TangentVector {
        let mut acc = match &vectors[0] {
            TangentVector::Sym(m) => TangentVector::Sym(SymMatrix::zeros(m.dim())),
            TangentVector::Sphere(s) => TangentVector::Sphere(SphereTangent::zeros(s.coords.len())),
            TangentVector::Chol(c) => TangentVector::Chol(CholTangent::zeros(c.dim())),
        };
        for (w, v) in weights.iter().zip(vectors) {
            acc.axpy(*w, v);
        }
        acc
    }
}

/// Base point plus cached factorizations for repeated exp/log at that base.
#[derive(Debug, Clone)]
pub struct TangentChart {
    base: ManifoldPoint,
    spd: Option<SpdChart>,
}

impl TangentChart {
    pub fn new(base: ManifoldPoint) -> Result<Self> {
        let spd = match &base {
            ManifoldPoint::Spd(m) => Some(SpdChart::new(m)?),
            _ => None,
        };
        Ok(Self { base, spd })
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn log(&self, p: &ManifoldPoint) -> Result<TangentVector> {
        match (&self.spd, p) {
            (Some(chart), ManifoldPoint::Spd(p)) => chart.log(p).map(TangentVector::Sym),
            _ => log(&self.base, p),
        }
    }

    pub fn exp(&self, v: &TangentVector) -> Result<ManifoldPoint> {
        match (&self.spd, v) {
            (Some(chart), TangentVector::Sym(y)) => chart.exp(y).map(ManifoldPoint::Spd),
            _ => exp(&self.base, v),
        }
    }

    pub fn inner(&self, u: &TangentVector, v: &TangentVector) -> f64 {
        match (&self.spd, u, v) {
            (Some(chart), TangentVector::Sym(u), TangentVector::Sym(v)) => chart.inner(u, v),
            _ => inner(&self.base, u, v).expect("tangent vectors must match the chart"),
        }
    }

    pub fn norm(&self, v: &TangentVector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Coordinates in which the Euclidean inner product is the Riemannian
    /// one at the base. For SPD these are the entries of `Ψ^{-1/2} Y Ψ^{-1/2}`
    /// with off-diagonal entries (upper triangle only) scaled by `√2`.
    pub fn isometric_coords(&self, v: &TangentVector) -> Vec<f64> {
        match (&self.spd, v) {
            (Some(chart), TangentVector::Sym(y)) => {
                let w = chart.whiten(y);
                let n = w.dim();
                let mut out = Vec::with_capacity(n * (n + 1) / 2);
                for i in 0..n {
                    out.push(w.get(i, i));
                    for j in (i + 1)..n {
                        out.push(std::f64::consts::SQRT_2 * w.get(i, j));
                    }
                }
                out
            }
            (_, TangentVector::Sphere(s)) => s.coords.clone(),
            (_, TangentVector::Chol(c)) => {
                let n = c.dim();
                (1..n).flat_map(|q| c.column(q)).collect()
            }
            _ => panic!("tangent vector kind mismatch"),
        }
    }
}
