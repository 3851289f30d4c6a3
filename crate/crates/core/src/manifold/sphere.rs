//! Unit hypersphere `S^q = { z ∈ R^q : ‖z‖ = 1 }` with the great-circle metric.

use crate::error::{Error, Result};

/// Guard on `⟨z₀, z⟩ + 1` below which the logarithm is refused.
pub const ANTIPODAL_TOL: f64 = 1e-8;
const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Accepts `coords` if its Euclidean norm is 1 within `1e-12`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("sphere point"));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidPoint(format!("sphere point has norm {n}")));
        }
        Ok(Self { coords })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidPoint("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|v| *v /= n);
        Ok(Self { coords })
    }

    pub(crate) fn new_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Tangent vector at some base point; orthogonality to the base is the
/// caller's contract (checked in debug builds by the maps below).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereTangent {
    pub coords: Vec<f64>,
}

impl SphereTangent {
    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `P_{z₀}(z) = z − ⟨z₀, z⟩ z₀`.
fn project(base: &[f64], v: &[f64]) -> Vec<f64> {
    let c = dot(base, v);
    v.iter().zip(base).map(|(x, b)| x - c * b).collect()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

pub fn sphere_exp(base: &SpherePoint, tangent: &SphereTangent) -> Result<SpherePoint> {
    check_dims(base.dim(), tangent.coords.len())?;
    debug_assert!(dot(&base.coords, &tangent.coords).abs() <= 1e-8 * (1.0 + tangent.norm()));
    Ok(SpherePoint::new_unchecked(exp_column(&base.coords, &tangent.coords)))
}

pub fn sphere_log(base: &SpherePoint, point: &SpherePoint) -> Result<SphereTangent> {
    log_column(&base.coords, &point.coords, None)
}

/// Great-circle distance. Evaluated as `2·atan2(‖a − b‖, ‖a + b‖)`, which
/// equals `arccos(⟨a, b⟩)` but stays accurate for nearly coincident and
/// nearly antipodal points, and is exactly 0 for identical inputs.
pub fn sphere_dist(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(great_circle(&a.coords, &b.coords))
}

pub(crate) fn great_circle(a: &[f64], b: &[f64]) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

pub(crate) fn log_column(base: &[f64], point: &[f64], column: Option<usize>) -> Result<SphereTangent> {
    check_dims(base.len(), point.len())?;
    let c = dot(base, point);
    if c <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::AntipodalPoint { column });
    }
    let p = project(base, point);
    let pn = norm(&p);
    if pn == 0.0 {
        return Ok(SphereTangent::zeros(base.len()));
    }
    let d = pn.atan2(c.clamp(-1.0, 1.0));
    Ok(SphereTangent {
        coords: p.iter().map(|v| v * d / pn).collect(),
    })
}

pub(crate) fn exp_column(base: &[f64], tangent: &[f64]) -> Vec<f64> {
    let t = norm(tangent);
    if t == 0.0 {
        return base.to_vec();
    }
    let (s, c) = t.sin_cos();
    let mut v: Vec<f64> = base.iter().zip(tangent).map(|(z, y)| c * z + s * y / t).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}
