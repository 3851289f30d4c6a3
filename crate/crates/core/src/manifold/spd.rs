//! Affine-invariant geometry of symmetric positive definite matrices.

use crate::error::Result;
use crate::linalg::{matrix_exp_sym, matrix_log_sym, spd_inverse, spd_sqrt, sym_eigen, SpdMatrix, SymMatrix};

/// Exponential map `Ψ^{1/2} exp(Ψ^{-1/2} Y Ψ^{-1/2}) Ψ^{1/2}`.
pub fn spd_exp(base: &SpdMatrix, tangent: &SymMatrix) -> Result<SpdMatrix> {
    SpdChart::new(base)?.exp(tangent)
}

/// Logarithm map `Ψ^{1/2} log(Ψ^{-1/2} X Ψ^{-1/2}) Ψ^{1/2}`.
pub fn spd_log(base: &SpdMatrix, point: &SpdMatrix) -> Result<SymMatrix> {
    SpdChart::new(base)?.log(point)
}

/// Geodesic distance `‖log(A^{-1/2} B A^{-1/2})‖_F`.
pub fn spd_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (_, inv_root) = spd_sqrt(a)?;
    let eig = sym_eigen(&b.as_sym().congruence(inv_root.as_sym()))?;
    let mut s = 0.0;
    for l in eig.values {
        if !(l > 0.0) {
            return Err(crate::Error::NotPD { min_eigenvalue: l });
        }
        s += l.ln().powi(2);
    }
    Ok(s.sqrt())
}

/// Riemannian inner product `trace(Ψ⁻¹ U Ψ⁻¹ V)`.
pub fn spd_inner(base: &SpdMatrix, u: &SymMatrix, v: &SymMatrix) -> Result<f64> {
    let inv = spd_inverse(base)?;
    let n = base.dim();
    let iu = inv.as_sym().to_matrix().matmul(&u.to_matrix())?;
    let iv = inv.as_sym().to_matrix().matmul(&v.to_matrix())?;
    // trace(AB) = Σ_ij A_ij B_ji
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += iu.get(i, j) * iv.get(j, i);
        }
    }
    Ok(t)
}

/// A base point together with its square roots, so that repeated exp/log
/// calls at the same base skip the eigendecompositions of `Ψ`.
#[derive(Debug, Clone)]
pub struct SpdChart {
    base: SpdMatrix,
    root: SpdMatrix,
    inv_root: SpdMatrix,
}

impl SpdChart {
    pub fn new(base: &SpdMatrix) -> Result<Self> {
        let (root, inv_root) = spd_sqrt(base)?;
        Ok(Self {
            base: base.clone(),
            root,
            inv_root,
        })
    }

    pub fn base(&self) -> &SpdMatrix {
        &self.base
    }

    /// `Ψ^{-1/2} Y Ψ^{-1/2}`: the tangent vector in whitened coordinates,
    /// where the Riemannian inner product becomes the Frobenius one.
    pub fn whiten(&self, tangent: &SymMatrix) -> SymMatrix {
        tangent.congruence(self.inv_root.as_sym())
    }

    pub fn unwhiten(&self, whitened: &SymMatrix) -> SymMatrix {
        whitened.congruence(self.root.as_sym())
    }

    /// `log(Ψ^{-1/2} X Ψ^{-1/2})`, the whitened logarithm.
    pub fn log_whitened(&self, point: &SpdMatrix) -> Result<SymMatrix> {
        matrix_log_sym(&point.as_sym().congruence(self.inv_root.as_sym()))
    }

    pub fn exp_whitened(&self, whitened: &SymMatrix) -> Result<SpdMatrix> {
        let e = matrix_exp_sym(whitened)?;
        Ok(SpdMatrix::new_unchecked(e.as_sym().congruence(self.root.as_sym())))
    }

    pub fn log(&self, point: &SpdMatrix) -> Result<SymMatrix> {
        Ok(self.unwhiten(&self.log_whitened(point)?))
    }

    pub fn exp(&self, tangent: &SymMatrix) -> Result<SpdMatrix> {
        self.exp_whitened(&self.whiten(tangent))
    }

    pub fn inner(&self, u: &SymMatrix, v: &SymMatrix) -> f64 {
        self.whiten(u).frobenius_inner(&self.whiten(v))
    }
}
