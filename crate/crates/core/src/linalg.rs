//! Dense linear algebra for small symmetric matrices.
//!
//! Everything here works on row-major `Vec<f64>` storage. The matrices that
//! flow through the geometric layer are tiny (p = 2 in every experiment), so
//! the routines favour clarity and stability over blocking or vectorization.
//! The one large-scale consumer is the random field sampler, which uses
//! [`cholesky_lower_in_place`] on covariance matrices of a few thousand rows.

use crate::error::{Error, Result};

/// Relative eigenvalue floor used to decide positive definiteness.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;
/// Largest eigenvalue accepted by [`matrix_exp_sym`].
pub const EXP_OVERFLOW_GUARD: f64 = 300.0;
/// Sweep budget for the cyclic Jacobi eigensolver.
pub const MAX_JACOBI_SWEEPS: usize = 100;
/// Pivot threshold (relative to the largest entry) for the saddle-point solver.
pub const SADDLE_PIVOT_TOL: f64 = 1e-12;

/// Dense `rows × cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric `dim × dim` matrix. Symmetry is exact: the constructors mirror
/// the upper triangle onto the lower one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from full row-major storage. Entries must agree with their
    /// transpose to within `1e-12` relative; the result is then symmetrized.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("symmetric matrix dimension"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let scale = data.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                worst = worst.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if worst > 1e-12 * scale {
            return Err(Error::NotSymmetric(worst));
        }
        Ok(Self::symmetrized(dim, data))
    }

    /// Averages `data` with its transpose. No tolerance check.
    pub fn symmetrized(dim: usize, mut data: Vec<f64>) -> Self {
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    /// Evaluates `f` on the upper triangle (`i <= j`) and mirrors it.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    /// Builds from the upper triangle listed row by row (`m11, m12, .., m22, ..`).
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: upper.len(),
            });
        }
        let mut data = vec![0.0; dim * dim];
        let mut it = upper.iter();
        for i in 0..dim {
            for j in i..dim {
                let v = *it.next().unwrap();
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, v) in values.iter().enumerate() {
            m.data[i * dim + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Upper triangle, row by row.
    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * (self.dim + 1) / 2);
        for i in 0..self.dim {
            for j in i..self.dim {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_inner(self).sqrt()
    }

    pub fn frobenius_inner(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `outer · self · outer`, symmetrized against round-off.
    pub fn congruence(&self, outer: &SymMatrix) -> SymMatrix {
        let n = self.dim;
        let mut tmp = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = outer.get(i, k);
                for j in 0..n {
                    tmp[i * n + j] += a * self.get(k, j);
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = tmp[i * n + k];
                for j in 0..n {
                    out[i * n + j] += a * outer.get(k, j);
                }
            }
        }
        SymMatrix::symmetrized(n, out)
    }

    /// `mᵀ · self · m` for a general square `m`.
    pub fn congruence_by(&self, m: &Matrix) -> Result<SymMatrix> {
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.rows(),
            });
        }
        let prod = m.transpose().matmul(&self.to_matrix())?.matmul(m)?;
        Ok(SymMatrix::symmetrized(self.dim, prod.data))
    }
}

/// Symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(SymMatrix);

impl SpdMatrix {
    /// Checks positive definiteness with the default relative floor.
    pub fn new(m: SymMatrix) -> Result<Self> {
        Self::with_floor(m, DEFAULT_EIG_FLOOR)
    }

    /// Accepts `m` if its smallest eigenvalue exceeds `floor` times the
    /// largest one (and is positive).
    pub fn with_floor(m: SymMatrix, floor: f64) -> Result<Self> {
        let eig = sym_eigen(&m)?;
        check_spectrum(&eig.values, floor)?;
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: SymMatrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(SymMatrix::identity(dim))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::diag(values))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

fn check_spectrum(values: &[f64], floor: f64) -> Result<()> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !(min > floor * max) {
        return Err(Error::NotPD { min_eigenvalue: min });
    }
    Ok(())
}

/// Eigendecomposition `m = V diag(values) Vᵀ`, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as the columns of a row-major matrix.
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * fl[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen(m: &SymMatrix) -> Result<SymEigen> {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = Matrix::identity(n);

    let mut converged = n == 1;
    for sweep in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off == 0.0 || off < f64::MIN_POSITIVE {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                // Negligible against both diagonal entries: drop it.
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence(MAX_JACOBI_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok(SymEigen { values, vectors })
}

/// Matrix exponential of a symmetric matrix.
pub fn matrix_exp_sym(y: &SymMatrix) -> Result<SpdMatrix> {
    let eig = sym_eigen(y)?;
    if eig.values[0] > EXP_OVERFLOW_GUARD {
        return Err(Error::Overflow(eig.values[0]));
    }
    Ok(SpdMatrix::new_unchecked(eig.map(f64::exp)))
}

/// Principal matrix logarithm of an SPD matrix.
pub fn matrix_log_spd(m: &SpdMatrix) -> Result<SymMatrix> {
    matrix_log_sym(m.as_sym())
}

/// Logarithm of a symmetric matrix that is expected to be positive definite;
/// fails with `NotPD` otherwise.
pub fn matrix_log_sym(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(m)?;
    check_spectrum(&eig.values, DEFAULT_EIG_FLOOR)?;
    Ok(eig.map(f64::ln))
}

/// Square root and inverse square root of an SPD matrix.
pub fn spd_sqrt(m: &SpdMatrix) -> Result<(SpdMatrix, SpdMatrix)> {
    let eig = sym_eigen(m.as_sym())?;
    check_spectrum(&eig.values, DEFAULT_EIG_FLOOR)?;
    let root = eig.map(f64::sqrt);
    let inv_root = eig.map(|l| 1.0 / l.sqrt());
    Ok((
        SpdMatrix::new_unchecked(root),
        SpdMatrix::new_unchecked(inv_root),
    ))
}

/// Inverse of an SPD matrix through its eigendecomposition.
pub fn spd_inverse(m: &SpdMatrix) -> Result<SpdMatrix> {
    let eig = sym_eigen(m.as_sym())?;
    check_spectrum(&eig.values, DEFAULT_EIG_FLOOR)?;
    Ok(SpdMatrix::new_unchecked(eig.map(|l| 1.0 / l)))
}

/// In-place lower Cholesky factorization of a dense row-major `n × n`
/// matrix. On success the lower triangle holds `L` with `L Lᵀ = a` and the
/// strict upper triangle is zeroed.
pub fn cholesky_lower_in_place(a: &mut [f64], n: usize) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    for j in 0..n {
        let (upper, lower) = a.split_at_mut((j + 1) * n);
        let row_j = &mut upper[j * n..];
        let d = row_j[j] - row_j[..j].iter().map(|v| v * v).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::NotPD { min_eigenvalue: d });
        }
        let d = d.sqrt();
        row_j[j] = d;
        row_j[(j + 1)..].fill(0.0);
        let row_j = &upper[j * n..];
        for row_i in lower.chunks_exact_mut(n) {
            let s = row_i[j] - row_i[..j].iter().zip(&row_j[..j]).map(|(x, y)| x * y).sum::<f64>();
            row_i[j] = s / d;
        }
    }
    Ok(())
}

/// Upper Cholesky factor `H` with positive diagonal and `Hᵀ H = m`.
pub fn cholesky_upper(m: &SpdMatrix) -> Result<Matrix> {
    let n = m.dim();
    let mut a = m.as_sym().as_slice().to_vec();
    cholesky_lower_in_place(&mut a, n)?;
    Ok(Matrix::from_vec(n, n, a)?.transpose())
}

/// Solution of the ordinary-kriging saddle system.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub weights: Vec<f64>,
    pub multiplier: f64,
}

/// LU factorization (partial pivoting) of the augmented matrix
/// `[[A, 1], [1ᵀ, 0]]`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl SaddleSystem {
    /// Factors the augmented system built from the `n × n` row-major `a`.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("saddle system"));
        }
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: a.len(),
            });
        }
        let m = n + 1;
        let mut lu = vec![0.0; m * m];
        for i in 0..n {
            lu[i * m..i * m + n].copy_from_slice(&a[i * n..(i + 1) * n]);
            lu[i * m + n] = 1.0;
            lu[n * m + i] = 1.0;
        }
        let scale = lu.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        let tol = SADDLE_PIVOT_TOL * scale;
        let mut perm: Vec<usize> = (0..m).collect();
        for col in 0..m {
            let (piv_row, piv_val) = (col..m)
                .map(|r| (r, lu[r * m + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val < tol {
                return Err(Error::SingularSystem(piv_val));
            }
            if piv_row != col {
                for j in 0..m {
                    lu.swap(col * m + j, piv_row * m + j);
                }
                perm.swap(col, piv_row);
            }
            let pivot = lu[col * m + col];
            for r in (col + 1)..m {
                let f = lu[r * m + col] / pivot;
                if f == 0.0 {
                    continue;
                }
                lu[r * m + col] = f;
                for j in (col + 1)..m {
                    lu[r * m + j] -= f * lu[col * m + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves `A λ + μ 1 = b`, `1ᵀ λ = 1`.
    pub fn solve(&self, b: &[f64]) -> Result<SaddleSolution> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let m = self.n + 1;
        let rhs = |i: usize| if i < self.n { b[i] } else { 1.0 };
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs(p)).collect();
        for i in 0..m {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * m + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = x[i];
            for j in (i + 1)..m {
                s -= self.lu[i * m + j] * x[j];
            }
            x[i] = s / self.lu[i * m + i];
        }
        let multiplier = x.pop().unwrap();
        Ok(SaddleSolution {
            weights: x,
            multiplier,
        })
    }
}

/// One-shot solve of the saddle system `A λ + μ 1 = b`, `Σ λ = 1`.
pub fn solve_saddle(a: &[f64], n: usize, b: &[f64]) -> Result<SaddleSolution> {
    SaddleSystem::factor(a, n)?.solve(b)
}
