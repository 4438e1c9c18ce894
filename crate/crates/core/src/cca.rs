//! Two-view regularized CCA and the multi-view MAXVAR generalization.
//!
//! Both baselines use unnormalized variance matrices `C_pp = X_p X_pᵀ` (no
//! `1/N`), so `ε` here is on a different scale from the tensor methods: a
//! baseline `ε` equals `N` times the tensor-side `ε` for the same problem.
//!
//! MAXVAR is solved in batch form. The consensus variables are the leading
//! eigenvectors of `Σ_p X_pᵀ (X_p X_pᵀ + εI)⁻¹ X_p`, obtained from the much
//! smaller `D × D` Gram matrix of the stacked whitened views
//! (`D = Σ_p d_p`).

use nalgebra::DMatrix;

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::{inverse_sqrt_default, SymmetricMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    pub view_pair: (usize, usize),
    /// `d_1 × r` and `d_2 × r` canonical vectors, normalized so `hᵀC̃h = 1`.
    pub projections: (DMatrix<f64>, DMatrix<f64>),
    pub correlations: Vec<f64>,
    pub eps: f64,
}

fn whitener(x: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let d = x.nrows();
    let c = SymmetricMatrix::new(x * x.transpose() + DMatrix::identity(d, d) * eps)?;
    Ok(inverse_sqrt_default(&c)?.matrix)
}

/// Top-`r` regularized canonical pairs of two centered views (`d × N` each).
pub fn fit_cca(x1: &DMatrix<f64>, x2: &DMatrix<f64>, eps: f64, r: usize) -> Result<CcaModel> {
    if x1.ncols() != x2.ncols() {
        return Err(Error::Inconsistent {
            first_name: "view 1".into(),
            first: x1.ncols(),
            second_name: "view 2".into(),
            second: x2.ncols(),
        });
    }
    let max_r = x1.nrows().min(x2.nrows());
    if r == 0 || r > max_r {
        return Err(Error::arg(format!("CCA rank must lie in 1..={max_r}, got {r}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::arg(format!("eps must be nonnegative, got {eps}")));
    }
    let w1 = whitener(x1, eps)?;
    let w2 = whitener(x2, eps)?;
    let k = &w1 * (x1 * x2.transpose()) * &w2;
    let svd = k.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return Vᵀ".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut h1 = DMatrix::zeros(x1.nrows(), r);
    let mut h2 = DMatrix::zeros(x2.nrows(), r);
    let mut correlations = Vec::with_capacity(r);
    for (c, &i) in order.iter().take(r).enumerate() {
        let mut a = u.column(i).into_owned();
        let mut b = vt.row(i).transpose();
        // Pair sign: the largest-magnitude entry across both vectors is positive.
        let lead = a.iter().chain(b.iter()).fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m });
        if lead < 0.0 {
            a.neg_mut();
            b.neg_mut();
        }
        h1.set_column(c, &(&w1 * a));
        h2.set_column(c, &(&w2 * b));
        correlations.push(svd.singular_values[i].clamp(0.0, 1.0));
    }
    Ok(CcaModel {
        view_pair: (0, 1),
        projections: (h1, h2),
        correlations,
        eps,
    })
}

impl CcaModel {
    pub fn rank(&self) -> usize {
        self.correlations.len()
    }

    /// Canonical variables `(X_1ᵀ H_1, X_2ᵀ H_2)` for centered views.
    pub fn variates(&self, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (x1.transpose() * &self.projections.0, x2.transpose() * &self.projections.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxvarModel {
    /// Per-view least-squares maps `H_p = (X_pX_pᵀ + εI)⁻¹ X_p Z`, `d_p × r`.
    pub projections: Vec<DMatrix<f64>>,
    /// `N × r` consensus variables with orthonormal columns.
    pub consensus: DMatrix<f64>,
    /// Eigenvalues of the summed projection operator, decreasing.
    pub eigenvalues: Vec<f64>,
    /// `m × r` combination weights `α_p = ‖X_pᵀ h_p‖` per component.
    pub weights: DMatrix<f64>,
    pub eps: f64,
}

pub fn fit_maxvar(data: &MultiViewDataset, eps: f64, r: usize) -> Result<MaxvarModel> {
    data.require_centered()?;
    let n = data.n_instances();
    let total: usize = data.dims().iter().sum();
    if r == 0 || r > n {
        return Err(Error::arg(format!("MAXVAR rank must lie in 1..={n}, got {r}")));
    }
    if r > total {
        return Err(Error::arg(format!(
            "MAXVAR rank {r} exceeds the total feature dimension {total}"
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::arg(format!("eps must be nonnegative, got {eps}")));
    }
    let whiteners = data
        .views()
        .iter()
        .map(|x| whitener(x, eps))
        .collect::<Result<Vec<_>>>()?;
    let mut stacked = DMatrix::zeros(total, n);
    let mut row = 0;
    for (x, w) in data.views().iter().zip(&whiteners) {
        stacked.rows_mut(row, x.nrows()).copy_from(&(w * x));
        row += x.nrows();
    }
    let gram = SymmetricMatrix::new(&stacked * stacked.transpose())?;
    let (values, vectors) = gram.eigen_sorted()?;
    let mut consensus = DMatrix::zeros(n, r);
    for i in 0..r {
        let mu = values[i];
        if !(mu > 1e-12 * values[0].max(f64::MIN_POSITIVE)) {
            return Err(Error::Degenerate(format!(
                "MAXVAR component {i} has eigenvalue {mu:e}; lower the rank"
            )));
        }
        let mut z = stacked.transpose() * vectors.column(i) / mu.sqrt();
        if z.iter().fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m }) < 0.0 {
            z.neg_mut();
        }
        consensus.set_column(i, &z);
    }
    let mut projections = Vec::with_capacity(data.n_views());
    let mut weights = DMatrix::zeros(data.n_views(), r);
    for (p, (x, w)) in data.views().iter().zip(&whiteners).enumerate() {
        let h = w * w * x * &consensus;
        let z = x.transpose() * &h;
        for i in 0..r {
            weights[(p, i)] = z.column(i).norm();
        }
        projections.push(h);
    }
    Ok(MaxvarModel {
        projections,
        consensus,
        eigenvalues: values[..r].to_vec(),
        weights,
        eps,
    })
}

impl MaxvarModel {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}
