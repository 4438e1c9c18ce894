//! Symmetric matrix factorizations used for whitening and the kernel
//! reformulation.
//!
//! The Cholesky factor follows the `LᵀL = A` convention, i.e. the returned
//! factor is *upper* triangular. Substituting `b = L a` turns the constraint
//! `aᵀ A a = 1` into `bᵀ b = 1`, and coefficients are recovered with
//! `a = L⁻¹ b` via [`solve_triangular`].

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`SymmetricMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default relative eigenvalue floor for [`inverse_sqrt_default`].
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Validates symmetry and stores the exactly symmetrized matrix.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(format!(
                "symmetric matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::arg("symmetric matrix must have positive dimension"));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let n = a.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let gap = (a[(i, j)] - a[(j, i)]).abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        let sym = (&a + a.transpose()) * 0.5;
        Ok(SymmetricMatrix(sym))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Eigenpairs sorted by decreasing eigenvalue.
    pub fn eigen_sorted(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let eig = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok((values, vectors))
    }

    /// `Q f(Λ) Qᵀ` with eigenvalues clamped from below at `floor`.
    fn spectral_map(&self, floor: f64, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let (values, q) = self.eigen_sorted()?;
        let mut scaled = q.clone();
        for (c, &lam) in values.iter().enumerate() {
            let s = f(lam.max(floor));
            scaled.column_mut(c).scale_mut(s);
        }
        let out = scaled * q.transpose();
        Ok((&out + out.transpose()) * 0.5)
    }

    /// Principal square root, eigenvalues clamped at `floor` (use 0 for PSD input).
    pub fn sqrt(&self, floor: f64) -> Result<DMatrix<f64>> {
        self.spectral_map(floor.max(0.0), f64::sqrt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    InverseSqrt,
    /// Upper triangular `L` with `LᵀL = A`.
    Cholesky,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    pub kind: FactorKind,
    pub matrix: DMatrix<f64>,
}

/// Symmetric inverse square root `QΛ^{-1/2}Qᵀ`, clamping eigenvalues below
/// `floor` up to `floor`.
pub fn inverse_sqrt(a: &SymmetricMatrix, floor: f64) -> Result<SpdFactor> {
    if !(floor > 0.0) {
        return Err(Error::arg(format!("eigenvalue floor must be positive, got {floor}")));
    }
    let matrix = a.spectral_map(floor, |l| 1.0 / l.sqrt())?;
    Ok(SpdFactor {
        kind: FactorKind::InverseSqrt,
        matrix,
    })
}

/// [`inverse_sqrt`] with the floor set to `1e-12` times the largest eigenvalue.
pub fn inverse_sqrt_default(a: &SymmetricMatrix) -> Result<SpdFactor> {
    let (values, _) = a.eigen_sorted()?;
    let top = values[0].max(0.0);
    let floor = (DEFAULT_RELATIVE_FLOOR * top).max(f64::MIN_POSITIVE);
    inverse_sqrt(a, floor)
}

/// Upper-triangular `L` with `LᵀL = a`.
pub fn cholesky(a: &SymmetricMatrix) -> Result<SpdFactor> {
    let a = a.matrix();
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(k, j)] * l[(k, j)];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(j, i)];
            for k in 0..j {
                s -= l[(k, j)] * l[(k, i)];
            }
            l[(j, i)] = s / d;
        }
    }
    Ok(SpdFactor {
        kind: FactorKind::Cholesky,
        matrix: l,
    })
}

/// `L⁻¹ · rhs` for a triangular factor. Upper and lower triangular matrices
/// are both accepted; the shape is detected from the zero pattern.
pub fn solve_triangular(l: &SpdFactor, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_triangular_matrix(&l.matrix, rhs)
}

pub fn solve_triangular_matrix(l: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    if !l.is_square() || rhs.nrows() != n {
        return Err(Error::dim(format!(
            "triangular solve of {}x{} with rhs {}x{}",
            l.nrows(),
            l.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    let is_upper = (0..n).all(|i| (0..i).all(|j| l[(i, j)] == 0.0));
    let is_lower = (0..n).all(|i| (i + 1..n).all(|j| l[(i, j)] == 0.0));
    if !is_upper && !is_lower {
        return Err(Error::arg("matrix is not triangular"));
    }
    if let Some(i) = (0..n).find(|&i| l[(i, i)] == 0.0) {
        return Err(Error::SingularFactor(i));
    }
    let mut x = rhs.clone();
    for c in 0..x.ncols() {
        if is_lower {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        } else {
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        }
    }
    Ok(x)
}
