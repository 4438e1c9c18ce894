//! Kernel tensor CCA.
//!
//! Each view is represented by an exponential kernel
//! `k(x, y) = exp(-d(x, y) / λ)` with `λ` the largest pairwise training
//! distance. Writing the canonical vectors in representer form turns the
//! covariance tensor into `K = (1/N) Σ_n k_1n ∘ .. ∘ k_mn` (kernel columns
//! only, no explicit feature maps) and the constraints into
//! `a_pᵀ (K_pp² + εK_pp) a_p = 1`. With `RᵀR = K_pp² + εK_pp` and
//! `b_p = R a_p`, the problem is a best rank-r approximation of
//! `S = K ×_1 R_1⁻ᵀ .. ×_m R_m⁻ᵀ` over unit vectors.
//!
//! Kernels are used uncentered. Out-of-sample projections evaluate the kernel
//! against the stored training instances with the training width.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cp::{cp_als, AlsConfig, AlsTrace, CpFactors};
use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_triangular_matrix, SymmetricMatrix};
use crate::tcca::concat_columns;
use crate::tensor::{DenseTensor, EntryCap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    L2,
    ChiSquare,
    /// Plain inner product `xᵀy`, no width. Only meant for testing the
    /// reduction to linear TCCA.
    #[doc(hidden)]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Width {
    /// `λ = max_{i,j} d(x_i, x_j)` over the training instances.
    #[default]
    MaxDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub distance: Distance,
    #[serde(default)]
    pub width: Width,
}

impl KernelSpec {
    pub fn l2() -> Self {
        KernelSpec {
            distance: Distance::L2,
            width: Width::MaxDistance,
        }
    }

    pub fn chi_square() -> Self {
        KernelSpec {
            distance: Distance::ChiSquare,
            width: Width::MaxDistance,
        }
    }

    #[doc(hidden)]
    pub fn linear() -> Self {
        KernelSpec {
            distance: Distance::Linear,
            width: Width::MaxDistance,
        }
    }

    /// Parses `l2` or `chi_square` (also `chi2`, `chisquare`).
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(Self::l2()),
            "chi_square" | "chi2" | "chisquare" | "chi-square" => Ok(Self::chi_square()),
            other => Err(Error::arg(format!(
                "unknown kernel '{other}', expected l2 or chi_square"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.distance {
            Distance::L2 => "l2",
            Distance::ChiSquare => "chi_square",
            Distance::Linear => "linear",
        }
    }
}

/// Distance between columns; for `Linear` this is the inner product.
fn pair_value(distance: Distance, a: &[f64], b: &[f64]) -> f64 {
    match distance {
        Distance::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        Distance::ChiSquare => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let s = x + y;
                if s == 0.0 {
                    0.0
                } else {
                    (x - y) * (x - y) / s
                }
            })
            .sum(),
        Distance::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
    }
}

fn column(x: &DMatrix<f64>, j: usize) -> &[f64] {
    let d = x.nrows();
    &x.as_slice()[j * d..(j + 1) * d]
}

fn check_features(x: &DMatrix<f64>, spec: &KernelSpec) -> Result<()> {
    if spec.distance == Distance::ChiSquare {
        if let Some(i) = x.iter().position(|&v| v < 0.0) {
            return Err(Error::Shape {
                context: "chi_square kernel".into(),
                message: format!(
                    "negative feature {} at row {}, column {}",
                    x[i],
                    i % x.nrows(),
                    i / x.nrows()
                ),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub spec: KernelSpec,
    /// Width `λ`; 1 for the linear kernel.
    pub width: f64,
}

/// Kernel matrix over the columns (instances) of `x` (`d × N`).
pub fn build_kernel(x: &DMatrix<f64>, spec: KernelSpec) -> Result<KernelMatrix> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::arg(format!("a kernel needs at least 2 instances, got {n}")));
    }
    check_features(x, &spec)?;
    let cols: Vec<&[f64]> = (0..n).map(|j| column(x, j)).collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = pair_value(spec.distance, cols[i], cols[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    if spec.distance == Distance::Linear {
        return Ok(KernelMatrix {
            entries: d,
            spec,
            width: 1.0,
        });
    }
    let width = d.iter().copied().fold(0.0, f64::max);
    if !(width > 0.0) {
        return Err(Error::Degenerate(
            "all instances are identical, so the kernel width is zero".into(),
        ));
    }
    let entries = d.map(|v| (-v / width).exp());
    Ok(KernelMatrix {
        entries,
        spec,
        width,
    })
}

/// `M × N` kernel between new instances (columns of `x_new`) and training
/// instances, using the training width.
pub fn cross_kernel(
    x_new: &DMatrix<f64>,
    x_train: &DMatrix<f64>,
    spec: KernelSpec,
    width: f64,
) -> Result<DMatrix<f64>> {
    if x_new.nrows() != x_train.nrows() {
        return Err(Error::dim(format!(
            "new instances have {} features, training instances have {}",
            x_new.nrows(),
            x_train.nrows()
        )));
    }
    check_features(x_new, &spec)?;
    let mut k = DMatrix::zeros(x_new.ncols(), x_train.ncols());
    for i in 0..x_new.ncols() {
        for j in 0..x_train.ncols() {
            let v = pair_value(spec.distance, column(x_new, i), column(x_train, j));
            k[(i, j)] = match spec.distance {
                Distance::Linear => v,
                _ => (-v / width).exp(),
            };
        }
    }
    Ok(k)
}

/// `K = (1/N) Σ_n k_1n ∘ .. ∘ k_mn`, an `N × .. × N` tensor.
pub fn kernel_covariance_tensor(kernels: &[&DMatrix<f64>], cap: EntryCap) -> Result<DenseTensor> {
    let Some(first) = kernels.first() else {
        return Err(Error::arg("no kernels given"));
    };
    let n = first.nrows();
    for (p, k) in kernels.iter().enumerate() {
        if k.nrows() != n || k.ncols() != n {
            return Err(Error::dim(format!(
                "kernel {p} is {}x{}, expected {n}x{n}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    let mut t = DenseTensor::zeros_capped(&vec![n; kernels.len()], cap)?;
    let w = 1.0 / n as f64;
    for i in 0..n {
        let cols: Vec<&[f64]> = kernels.iter().map(|k| column(k, i)).collect();
        t.outer_product_accumulate(&cols, w)?;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KtccaOptions {
    pub eps: f64,
    pub rank: usize,
    pub als: AlsConfig,
    pub entry_cap: EntryCap,
}

impl KtccaOptions {
    pub fn new(eps: f64, rank: usize) -> Self {
        KtccaOptions {
            eps,
            rank,
            als: AlsConfig::default(),
            entry_cap: EntryCap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KtccaModel {
    /// `A_p = R_p⁻¹ B_p`, one `N × r` matrix per view.
    pub coefs: Vec<DMatrix<f64>>,
    pub correlations: Vec<f64>,
    pub eps: f64,
    pub specs: Vec<KernelSpec>,
    pub widths: Vec<f64>,
    /// Training views (`d_p × N`), kept for out-of-sample kernels.
    pub training: Vec<DMatrix<f64>>,
    /// Identifiers of the training instances in the source dataset.
    pub training_ids: Vec<usize>,
    kernels: Vec<DMatrix<f64>>,
}

pub fn fit_ktcca(data: &MultiViewDataset, specs: &[KernelSpec], opts: &KtccaOptions) -> Result<KtccaModel> {
    fit_ktcca_traced(data, specs, opts).map(|(m, _)| m)
}

pub fn fit_ktcca_traced(
    data: &MultiViewDataset,
    specs: &[KernelSpec],
    opts: &KtccaOptions,
) -> Result<(KtccaModel, AlsTrace)> {
    let m = data.n_views();
    if specs.len() != m {
        return Err(Error::arg(format!("{} kernel specs for {m} views", specs.len())));
    }
    if !(opts.eps >= 0.0) {
        return Err(Error::arg(format!("eps must be nonnegative, got {}", opts.eps)));
    }
    let n = data.n_instances();
    opts.entry_cap.check(&vec![n; m])?;
    let training = data.raw_views();
    let kernels = training
        .iter()
        .zip(specs)
        .map(|(x, s)| build_kernel(x, *s))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DMatrix<f64>> = kernels.iter().map(|k| &k.entries).collect();
    let mut s = kernel_covariance_tensor(&refs, opts.entry_cap)?;
    let mut inv_factors = Vec::with_capacity(m);
    for (p, k) in refs.iter().enumerate() {
        let g = SymmetricMatrix::new(*k * *k + *k * opts.eps)?;
        let r = cholesky(&g)
            .map_err(|e| Error::Numerical(format!("view {p}: K² + εK: {e}")))?
            .matrix;
        let r_inv = solve_triangular_matrix(&r, &DMatrix::identity(n, n))?;
        s = s.mode_product_capped(&r_inv.transpose(), p, opts.entry_cap)?;
        inv_factors.push(r_inv);
    }
    let (CpFactors { factors, weights }, trace) = cp_als(&s, opts.rank, &opts.als)?;
    let coefs = inv_factors.iter().zip(&factors).map(|(ri, b)| ri * b).collect();
    let model = KtccaModel {
        coefs,
        correlations: weights,
        eps: opts.eps,
        specs: specs.to_vec(),
        widths: kernels.iter().map(|k| k.width).collect(),
        training,
        training_ids: (0..n).collect(),
        kernels: refs.into_iter().cloned().collect(),
    };
    Ok((model, trace))
}

impl KtccaModel {
    /// Rebuilds a model from stored parts, recomputing the training kernels.
    pub fn from_parts(
        coefs: Vec<DMatrix<f64>>,
        correlations: Vec<f64>,
        eps: f64,
        specs: Vec<KernelSpec>,
        training: Vec<DMatrix<f64>>,
        training_ids: Vec<usize>,
    ) -> Result<Self> {
        if coefs.len() != specs.len() || training.len() != specs.len() {
            return Err(Error::dim(format!(
                "{} coefficient blocks, {} kernel specs, {} training views",
                coefs.len(),
                specs.len(),
                training.len()
            )));
        }
        let kernels = training
            .iter()
            .zip(&specs)
            .map(|(x, s)| build_kernel(x, *s))
            .collect::<Result<Vec<_>>>()?;
        for (p, (a, k)) in coefs.iter().zip(&kernels).enumerate() {
            if a.nrows() != k.entries.nrows() || a.ncols() != correlations.len() {
                return Err(Error::dim(format!(
                    "coefficient block {p} is {}x{}, expected {}x{}",
                    a.nrows(),
                    a.ncols(),
                    k.entries.nrows(),
                    correlations.len()
                )));
            }
        }
        Ok(KtccaModel {
            coefs,
            correlations,
            eps,
            widths: kernels.iter().map(|k| k.width).collect(),
            specs,
            training,
            training_ids,
            kernels: kernels.into_iter().map(|k| k.entries).collect(),
        })
    }

    pub fn rank(&self) -> usize {
        self.correlations.len()
    }

    pub fn n_views(&self) -> usize {
        self.coefs.len()
    }

    pub fn n_training(&self) -> usize {
        self.training_ids.len()
    }

    pub fn kernels(&self) -> &[DMatrix<f64>] {
        &self.kernels
    }

    pub fn truncate(&self, r: usize) -> KtccaModel {
        let r = r.min(self.rank());
        KtccaModel {
            coefs: self.coefs.iter().map(|a| a.columns(0, r).into_owned()).collect(),
            correlations: self.correlations[..r].to_vec(),
            ..self.clone()
        }
    }

    /// `B_p = R_p A_p`, recomputed from the stored kernels.
    pub fn unit_factors(&self) -> Result<Vec<DMatrix<f64>>> {
        self.kernels
            .iter()
            .zip(&self.coefs)
            .map(|(k, a)| {
                let g = SymmetricMatrix::new(k * k + k * self.eps)?;
                Ok(cholesky(&g)?.matrix * a)
            })
            .collect()
    }

    /// Training projections `Z_p = K_pp A_p`.
    pub fn project_training(&self) -> Vec<DMatrix<f64>> {
        self.kernels.iter().zip(&self.coefs).map(|(k, a)| k * a).collect()
    }

    pub fn transform_training(&self) -> DMatrix<f64> {
        concat_columns(&self.project_training())
    }

    /// Projections of new instances through cross-kernels with the training set.
    pub fn project_views(&self, data: &MultiViewDataset) -> Result<Vec<DMatrix<f64>>> {
        if data.n_views() != self.n_views() {
            return Err(Error::dim(format!(
                "model has {} views, data has {}",
                self.n_views(),
                data.n_views()
            )));
        }
        data.raw_views()
            .iter()
            .enumerate()
            .map(|(p, x)| {
                let k = cross_kernel(x, &self.training[p], self.specs[p], self.widths[p])?;
                Ok(k * &self.coefs[p])
            })
            .collect()
    }

    pub fn transform(&self, data: &MultiViewDataset) -> Result<DMatrix<f64>> {
        Ok(concat_columns(&self.project_views(data)?))
    }
}
