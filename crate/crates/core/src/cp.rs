//! Rank-r CP approximation by alternating least squares.
//!
//! All `r` components are updated jointly: each mode update solves the
//! normal equations `U_n V = T_(n) (Khatri-Rao of the other factors)` with
//! `V` the Hadamard product of the other factors' Gram matrices. No
//! orthogonality is imposed between components.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::rng;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlsInit {
    /// Leading left singular vectors of each matricization.
    Hosvd,
    /// Seeded Gaussian columns.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub max_iters: usize,
    /// Stop once the fit changes by less than this between sweeps.
    pub tol: f64,
    pub seed: u64,
    pub init: AlsInit,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
            init: AlsInit::Hosvd,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::arg("ALS max_iters must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::arg(format!("ALS tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Weighted sum of rank-1 terms. Factor columns have unit norm and weights
/// are nonnegative, sorted in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    pub factors: Vec<DMatrix<f64>>,
    pub weights: Vec<f64>,
}

impl CpFactors {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Keeps the leading `r` components.
    pub fn truncate(&self, r: usize) -> CpFactors {
        let r = r.min(self.rank());
        CpFactors {
            factors: self.factors.iter().map(|f| f.columns(0, r).into_owned()).collect(),
            weights: self.weights[..r].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlsTrace {
    pub iterations: usize,
    /// `1 - ‖T - T̂‖ / ‖T‖` after every sweep.
    pub fits: Vec<f64>,
    pub converged: bool,
}

impl AlsTrace {
    pub fn final_fit(&self) -> f64 {
        self.fits.last().copied().unwrap_or(0.0)
    }
}

/// Dense `Σ_k λ_k u_0^(k) ∘ .. ∘ u_{m-1}^(k)`.
pub fn cp_reconstruct(f: &CpFactors, shape: &[usize]) -> Result<DenseTensor> {
    if f.factors.len() != shape.len() {
        return Err(Error::dim(format!(
            "{} factors for an order-{} shape",
            f.factors.len(),
            shape.len()
        )));
    }
    for (q, (u, &e)) in f.factors.iter().zip(shape).enumerate() {
        if u.nrows() != e || u.ncols() != f.rank() {
            return Err(Error::dim(format!(
                "factor {q} is {}x{}, expected {e}x{}",
                u.nrows(),
                u.ncols(),
                f.rank()
            )));
        }
    }
    let mut t = DenseTensor::zeros(shape)?;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); shape.len()];
    for k in 0..f.rank() {
        for (c, u) in cols.iter_mut().zip(&f.factors) {
            *c = u.column(k).iter().copied().collect();
        }
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        t.outer_product_accumulate(&refs, f.weights[k])?;
    }
    Ok(t)
}

pub fn cp_als(t: &DenseTensor, rank: usize, cfg: &AlsConfig) -> Result<(CpFactors, AlsTrace)> {
    cfg.validate()?;
    let shape = t.shape().to_vec();
    let order = shape.len();
    let min_extent = *shape.iter().min().expect("order >= 1");
    if rank == 0 || rank > min_extent {
        return Err(Error::arg(format!(
            "CP rank must lie in 1..={min_extent} for shape {shape:?}, got {rank}"
        )));
    }
    let norm = t.frobenius_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot decompose a tensor with norm {norm}"
        )));
    }

    let mut factors = initial_factors(t, rank, cfg)?;
    let mut grams: Vec<DMatrix<f64>> = factors.iter().map(|u| u.transpose() * u).collect();
    let mut weights = vec![1.0; rank];
    let mut trace = AlsTrace::default();

    for _ in 0..cfg.max_iters {
        for n in 0..order {
            let m = t.mttkrp(&factors, n)?;
            let mut v = DMatrix::from_element(rank, rank, 1.0);
            for (q, g) in grams.iter().enumerate() {
                if q != n {
                    v.component_mul_assign(g);
                }
            }
            let mut u = solve_normal(&v, &m)?;
            for (k, w) in weights.iter_mut().enumerate() {
                let nk = u.column(k).norm();
                if nk > 0.0 && nk.is_finite() {
                    u.column_mut(k).unscale_mut(nk);
                    *w = nk;
                } else {
                    u.column_mut(k).fill(0.0);
                    u[(0, k)] = 1.0;
                    *w = 0.0;
                }
            }
            grams[n] = u.transpose() * &u;
            factors[n] = u;
        }
        let current = CpFactors {
            factors: factors.clone(),
            weights: weights.clone(),
        };
        let approx = cp_reconstruct(&current, &shape)?;
        let resid: f64 = t
            .data()
            .iter()
            .zip(approx.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let fit = 1.0 - resid / norm;
        let prev = trace.fits.last().copied();
        trace.fits.push(fit);
        trace.iterations += 1;
        if let Some(p) = prev {
            if (fit - p).abs() < cfg.tol {
                trace.converged = true;
                break;
            }
        }
    }
    log::debug!(
        "cp-als rank {rank}: {} sweeps, fit {:.6}, converged {}",
        trace.iterations,
        trace.final_fit(),
        trace.converged
    );

    Ok((canonicalize(factors, weights), trace))
}

/// Solves `U V = M` for `U` with a symmetric positive semidefinite `V`.
fn solve_normal(v: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rhs = m.transpose();
    if let Some(ch) = v.clone().cholesky() {
        return Ok(ch.solve(&rhs).transpose());
    }
    // Numerically singular: CP degeneracy. Ridge with a trace-scaled shift.
    let n = v.nrows();
    let mut shift = 1e-12 * v.trace().max(f64::MIN_POSITIVE);
    for _ in 0..8 {
        let reg = v + DMatrix::identity(n, n) * shift;
        if let Some(ch) = reg.cholesky() {
            return Ok(ch.solve(&rhs).transpose());
        }
        shift *= 100.0;
    }
    Err(Error::Numerical("ALS normal equations could not be solved".into()))
}

fn initial_factors(t: &DenseTensor, rank: usize, cfg: &AlsConfig) -> Result<Vec<DMatrix<f64>>> {
    (0..t.order())
        .map(|n| {
            if cfg.init == AlsInit::Hosvd {
                if let Some(u) = hosvd_factor(t, n, rank)? {
                    return Ok(u);
                }
            }
            Ok(random_factor(t.shape()[n], rank, cfg.seed, n))
        })
        .collect()
}

/// Leading `rank` left singular vectors of the mode-`n` unfolding, or `None`
/// when the unfolding has rank below `rank`.
fn hosvd_factor(t: &DenseTensor, n: usize, rank: usize) -> Result<Option<DMatrix<f64>>> {
    let a = t.matricize(n)?.matrix;
    let gram = SymmetricMatrix::new(&a * a.transpose())?;
    let (values, vectors) = gram.eigen_sorted()?;
    if !(values[0] > 0.0) || values[rank - 1] <= 1e-12 * values[0] {
        return Ok(None);
    }
    Ok(Some(vectors.columns(0, rank).into_owned()))
}

fn random_factor(rows: usize, rank: usize, seed: u64, mode: usize) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, "cp-als-init", mode as u64);
    let mut u = DMatrix::from_fn(rows, rank, |_, _| StandardNormal.sample(&mut rng));
    for mut c in u.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c.unscale_mut(n);
        }
    }
    u
}

/// Sorts components by weight and fixes signs: in every mode but the last,
/// each column's largest-magnitude entry is made nonnegative; the last mode
/// absorbs the compensating sign so weights stay nonnegative.
fn canonicalize(mut factors: Vec<DMatrix<f64>>, weights: Vec<f64>) -> CpFactors {
    let order = factors.len();
    let rank = weights.len();
    for k in 0..rank {
        let mut flips = 0usize;
        for u in factors.iter_mut().take(order - 1) {
            if leading_entry(u, k) < 0.0 {
                u.column_mut(k).neg_mut();
                flips += 1;
            }
        }
        if flips % 2 == 1 {
            factors[order - 1].column_mut(k).neg_mut();
        }
    }
    let mut perm: Vec<usize> = (0..rank).collect();
    perm.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let factors = factors
        .iter()
        .map(|u| DMatrix::from_fn(u.nrows(), rank, |i, c| u[(i, perm[c])]))
        .collect();
    let weights = perm.iter().map(|&k| weights[k]).collect();
    CpFactors { factors, weights }
}

fn leading_entry(u: &DMatrix<f64>, k: usize) -> f64 {
    let col = u.column(k);
    let mut best = 0.0f64;
    for &v in col.iter() {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    best
}
