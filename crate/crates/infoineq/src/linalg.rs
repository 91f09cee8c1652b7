//! Small dense symmetric matrices: Cholesky, quadratic forms `Mᵀ A⁻¹ M`,
//! Schur complements.
//!
//! Every matrix in this artifact is a covariance Gram of at most a handful of
//! scores, so there is no pivoting and no large-matrix machinery; a failed
//! factorization is an informative result, not something to paper over.

use crate::error::{Error, Result};

/// Hard cap on matrix dimension; anything larger indicates misuse.
pub const MAX_DIM: usize = 64;

/// Pivot-ratio floor below which a factorization is reported as singular.
pub const PIVOT_RATIO_FLOOR: f64 = 1e-12;

/// Dense symmetric matrix. Writes mirror both triangles so symmetry is exact
/// by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionTooLarge(dim, MAX_DIM));
        }
        Ok(Self { dim, data: vec![0.0; dim * dim] })
    }

    /// Build from full rows; the strict lower triangle is ignored and mirrored
    /// from the upper one.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            for j in i..dim {
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i,j)` and `(j,i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Leading principal submatrix of dimension `k`.
    pub fn leading(&self, k: usize) -> Result<Self> {
        let mut m = Self::zeros(k)?;
        for i in 0..k {
            for j in i..k {
                m.set(i, j, self.get(i, j));
            }
        }
        Ok(m)
    }

    /// Max absolute entry; used to scale tolerances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }
}

/// Lower-triangular Cholesky factor with `L Lᵀ = A`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

/// Factor a symmetric matrix. On failure the error carries the 1-based index
/// of the first non-positive pivot.
pub fn cholesky(a: &SymMatrix) -> Result<Cholesky> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = a.get(i, j);
            for k in 0..i {
                s -= l[k * n + i] * l[k * n + j];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite { pivot: i + 1, value: s });
                }
                l[i * n + j] = s.sqrt();
            } else {
                l[i * n + j] = s / l[i * n + i];
            }
        }
    }
    // stored row-major as upper (Lᵀ); transpose into lower for clarity
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            lower[i * n + j] = l[j * n + i];
        }
    }
    Ok(Cholesky { dim: n, l: lower })
}

/// Factor and additionally reject near-singular matrices whose smallest
/// squared-pivot ratio falls below [`PIVOT_RATIO_FLOOR`]. Engines use this so
/// that a silently ill-conditioned covariance never produces a "bound".
pub fn cholesky_strict(a: &SymMatrix) -> Result<Cholesky> {
    let c = cholesky(a)?;
    let (min_p, max_p) = c.pivot_range();
    if (min_p / max_p).powi(2) < PIVOT_RATIO_FLOOR {
        let idx = (0..c.dim).min_by(|&i, &j| c.diag(i).total_cmp(&c.diag(j))).unwrap_or(0);
        return Err(Error::NotPositiveDefinite { pivot: idx + 1, value: c.diag(idx).powi(2) });
    }
    Ok(c)
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn diag(&self, i: usize) -> f64 {
        self.l[i * self.dim + i]
    }

    fn pivot_range(&self) -> (f64, f64) {
        let mut min_p = f64::INFINITY;
        let mut max_p = 0.0_f64;
        for i in 0..self.dim {
            let d = self.diag(i);
            min_p = min_p.min(d);
            max_p = max_p.max(d);
        }
        (min_p, max_p)
    }

    /// Squared pivot ratio `(max l_ii / min l_ii)^2`, a cheap condition
    /// number estimate for the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let (min_p, max_p) = self.pivot_range();
        (max_p / min_p).powi(2)
    }

    /// Solve `A x = b` via the two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.diag(i);
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.diag(i);
        }
        x
    }

    /// Reassemble `L Lᵀ`; used by tests to bound the factorization residual.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        let mut a = SymMatrix::zeros(n).expect("dim already validated");
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.l[i * n + k] * self.l[j * n + k];
                }
                a.set(i, j, s);
            }
        }
        a
    }
}

/// `Mᵀ A⁻¹ M` for positive definite `A`. Nonnegative by construction; tiny
/// negative roundoff is clamped to zero.
pub fn quadratic_form_inv(a: &SymMatrix, m: &[f64]) -> Result<f64> {
    if m.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs matrix dim {}",
            m.len(),
            a.dim()
        )));
    }
    let c = cholesky(a)?;
    let x = c.solve(m);
    let q: f64 = m.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(q.max(0.0))
}

/// Plain rectangular matrix for the cross-covariance block `Σ_TS`.
#[derive(Clone, Debug)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RectMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

/// Schur complement `Σ_T − Σ_TS Σ_S⁻¹ Σ_ST` of a positive definite `Σ_S`.
///
/// Returns `(complement, J)` with `J = Σ_TS Σ_S⁻¹ Σ_ST`, the quantity reported
/// as the vector-estimator lower bound.
pub fn schur_complement(
    sigma_t: &SymMatrix,
    cross: &RectMatrix,
    sigma_s: &SymMatrix,
) -> Result<(SymMatrix, SymMatrix)> {
    let r = sigma_t.dim();
    let m = sigma_s.dim();
    if cross.rows() != r || cross.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "cross block is {}x{}, expected {}x{}",
            cross.rows(),
            cross.cols(),
            r,
            m
        )));
    }
    let c = cholesky_strict(sigma_s)?;
    // X = Σ_S⁻¹ Σ_ST, one solve per row of Σ_TS
    let mut x = RectMatrix::zeros(r, m);
    for i in 0..r {
        let row: Vec<f64> = (0..m).map(|j| cross.get(i, j)).collect();
        let sol = c.solve(&row);
        for j in 0..m {
            x.set(i, j, sol[j]);
        }
    }
    let mut j_mat = SymMatrix::zeros(r)?;
    let mut comp = SymMatrix::zeros(r)?;
    for i in 0..r {
        for j in i..r {
            let mut s = 0.0;
            for k in 0..m {
                s += cross.get(i, k) * x.get(j, k);
            }
            j_mat.set(i, j, s);
            comp.set(i, j, sigma_t.get(i, j) - s);
        }
    }
    Ok((comp, j_mat))
}

/// Result of a positive-semidefiniteness probe on a symmetric matrix.
///
/// The Schur complement of an attained estimator direction is singular, so the
/// certificate factors `A + tol·I` and reports the smallest shifted pivot.
#[derive(Clone, Debug)]
pub struct PsdCertificate {
    pub psd: bool,
    pub min_shifted_pivot: f64,
    pub tol: f64,
}

/// Certify `A ⪰ −tol·scale` via Cholesky of the shifted matrix. The scale
/// should come from the parent problem (for a Schur complement, the covariance
/// block it was subtracted from), not from `A` itself, which may be tiny.
pub fn psd_certificate(a: &SymMatrix, rel_tol: f64, scale: f64) -> PsdCertificate {
    let tol = rel_tol * scale.max(1e-300);
    let mut shifted = a.clone();
    for i in 0..a.dim() {
        shifted.set(i, i, a.get(i, i) + tol);
    }
    match cholesky(&shifted) {
        Ok(c) => {
            let (min_p, _) = c.pivot_range();
            PsdCertificate { psd: true, min_shifted_pivot: min_p * min_p, tol }
        }
        Err(Error::NotPositiveDefinite { value, .. }) => {
            PsdCertificate { psd: false, min_shifted_pivot: value, tol }
        }
        Err(_) => PsdCertificate { psd: false, min_shifted_pivot: f64::NAN, tol },
    }
}
