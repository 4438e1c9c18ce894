//! Linear tensor CCA.
//!
//! With centered views `X_p` (`d_p × N`), the covariance tensor is
//! `C = (1/N) Σ_n x_1n ∘ .. ∘ x_mn` and the per-view variances are
//! `C̃_pp = (1/N) X_p X_pᵀ + εI`. Whitening every mode,
//! `M = C ×_1 C̃_11^{-1/2} .. ×_m C̃_mm^{-1/2}`, turns the constrained
//! correlation maximization into a best rank-r approximation of `M` over unit
//! vectors `u_p`; the canonical vectors are `h_p = C̃_pp^{-1/2} u_p`.
//!
//! Scaling conventions: both `C` and `C̃_pp` carry the `1/N` factor, so `ε`
//! is relative to per-instance variance. [`canonical_correlation`] evaluates
//! the unscaled `(z_1 ⊙ .. ⊙ z_m)ᵀ e`, which is `N` times `C ×_1 h_1ᵀ ..`.

use nalgebra::{DMatrix, DVector};

use crate::cp::{cp_als, AlsConfig, AlsTrace, CpFactors};
use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::{inverse_sqrt_default, SymmetricMatrix};
use crate::tensor::{DenseTensor, EntryCap};

/// `C = (1/N) Σ_n x_1n ∘ .. ∘ x_mn` over centered data.
pub fn covariance_tensor(data: &MultiViewDataset, cap: EntryCap) -> Result<DenseTensor> {
    data.require_centered()?;
    let mut c = DenseTensor::zeros_capped(&data.dims(), cap)?;
    let n = data.n_instances();
    let w = 1.0 / n as f64;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); data.n_views()];
    for i in 0..n {
        for (c, v) in cols.iter_mut().zip(data.views()) {
            *c = v.column(i).iter().copied().collect();
        }
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        c.outer_product_accumulate(&refs, w)?;
    }
    Ok(c)
}

/// `(z_1 ⊙ .. ⊙ z_m)ᵀ e` with `z_p = X_pᵀ h_p`.
pub fn canonical_correlation(data: &MultiViewDataset, hs: &[DVector<f64>]) -> Result<f64> {
    if hs.len() != data.n_views() {
        return Err(Error::dim(format!(
            "{} canonical vectors for {} views",
            hs.len(),
            data.n_views()
        )));
    }
    let mut prod = DVector::from_element(data.n_instances(), 1.0);
    for (p, (x, h)) in data.views().iter().zip(hs).enumerate() {
        if h.len() != x.nrows() {
            return Err(Error::dim(format!(
                "canonical vector {p} has length {}, view has {} features",
                h.len(),
                x.nrows()
            )));
        }
        prod.component_mul_assign(&(x.transpose() * h));
    }
    Ok(prod.sum())
}

/// `C̃ = (1/N) X Xᵀ + εI`.
pub fn regularized_variance(x: &DMatrix<f64>, eps: f64) -> Result<SymmetricMatrix> {
    let n = x.ncols() as f64;
    let d = x.nrows();
    SymmetricMatrix::new(x * x.transpose() / n + DMatrix::identity(d, d) * eps)
}

/// Covariance tensor together with its whitened form.
#[derive(Debug, Clone)]
pub struct WhitenedProblem {
    pub covariance: DenseTensor,
    pub variances: Vec<SymmetricMatrix>,
    /// `C̃_pp^{-1/2}` per view.
    pub whiteners: Vec<DMatrix<f64>>,
    pub whitened: DenseTensor,
}

impl WhitenedProblem {
    pub fn build(data: &MultiViewDataset, eps: f64, cap: EntryCap) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::arg(format!("eps must be nonnegative, got {eps}")));
        }
        let covariance = covariance_tensor(data, cap)?;
        let variances = data
            .views()
            .iter()
            .map(|x| regularized_variance(x, eps))
            .collect::<Result<Vec<_>>>()?;
        let whiteners = variances
            .iter()
            .map(|v| inverse_sqrt_default(v).map(|f| f.matrix))
            .collect::<Result<Vec<_>>>()?;
        let mut whitened = covariance.clone();
        for (p, w) in whiteners.iter().enumerate() {
            whitened = whitened.mode_product_capped(w, p, cap)?;
        }
        Ok(WhitenedProblem {
            covariance,
            variances,
            whiteners,
            whitened,
        })
    }

    /// `C ×_1 h_1ᵀ .. ×_m h_mᵀ`.
    pub fn objective_h(&self, hs: &[DVector<f64>]) -> Result<f64> {
        let refs: Vec<&DVector<f64>> = hs.iter().collect();
        self.covariance.contract_all(&refs)
    }

    /// `M ×_1 u_1ᵀ .. ×_m u_mᵀ`.
    pub fn objective_u(&self, us: &[DVector<f64>]) -> Result<f64> {
        let refs: Vec<&DVector<f64>> = us.iter().collect();
        self.whitened.contract_all(&refs)
    }

    /// Maps unit-sphere vectors to canonical vectors, `h_p = C̃_pp^{-1/2} u_p`.
    pub fn to_canonical(&self, us: &[DVector<f64>]) -> Vec<DVector<f64>> {
        us.iter().zip(&self.whiteners).map(|(u, w)| w * u).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TccaOptions {
    pub eps: f64,
    pub rank: usize,
    pub als: AlsConfig,
    pub entry_cap: EntryCap,
}

impl TccaOptions {
    pub fn new(eps: f64, rank: usize) -> Self {
        TccaOptions {
            eps,
            rank,
            als: AlsConfig::default(),
            entry_cap: EntryCap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TccaModel {
    /// `T_p = C̃_pp^{-1/2} U_p`, one `d_p × r` matrix per view.
    pub transforms: Vec<DMatrix<f64>>,
    /// CP weights, i.e. the high-order canonical correlations of the whitened problem.
    pub correlations: Vec<f64>,
    pub eps: f64,
    /// Feature means removed during fitting.
    pub means: Vec<DVector<f64>>,
}

pub fn fit_tcca(data: &MultiViewDataset, opts: &TccaOptions) -> Result<TccaModel> {
    fit_tcca_traced(data, opts).map(|(m, _)| m)
}

pub fn fit_tcca_traced(
    data: &MultiViewDataset,
    opts: &TccaOptions,
) -> Result<(TccaModel, AlsTrace)> {
    let data = data.centered();
    let problem = WhitenedProblem::build(&data, opts.eps, opts.entry_cap)?;
    let (CpFactors { factors, weights }, trace) =
        cp_als(&problem.whitened, opts.rank, &opts.als)?;
    let transforms = problem
        .whiteners
        .iter()
        .zip(&factors)
        .map(|(w, u)| w * u)
        .collect();
    let model = TccaModel {
        transforms,
        correlations: weights,
        eps: opts.eps,
        means: data.means().to_vec(),
    };
    Ok((model, trace))
}

impl TccaModel {
    pub fn rank(&self) -> usize {
        self.correlations.len()
    }

    pub fn n_views(&self) -> usize {
        self.transforms.len()
    }

    /// The model restricted to its `r` strongest components.
    pub fn truncate(&self, r: usize) -> TccaModel {
        let r = r.min(self.rank());
        TccaModel {
            transforms: self.transforms.iter().map(|t| t.columns(0, r).into_owned()).collect(),
            correlations: self.correlations[..r].to_vec(),
            eps: self.eps,
            means: self.means.clone(),
        }
    }

    /// Per-view projections `Z_p = (X_p - mean_p)ᵀ T_p`, each `N × r`.
    pub fn project_views(&self, data: &MultiViewDataset) -> Result<Vec<DMatrix<f64>>> {
        if data.n_views() != self.n_views() {
            return Err(Error::dim(format!(
                "model has {} views, data has {}",
                self.n_views(),
                data.n_views()
            )));
        }
        let views = data.views_relative_to(&self.means)?;
        Ok(views
            .iter()
            .zip(&self.transforms)
            .map(|(x, t)| x.transpose() * t)
            .collect())
    }

    /// Concatenated projection `[Z_1 .. Z_m]`, an `N × (m·r)` matrix whose
    /// column `p·r + k` is component `k` of view `p`.
    pub fn transform(&self, data: &MultiViewDataset) -> Result<DMatrix<f64>> {
        Ok(concat_columns(&self.project_views(data)?))
    }
}

pub(crate) fn concat_columns(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.columns_mut(c0, b.ncols()).copy_from(b);
        c0 += b.ncols();
    }
    out
}
