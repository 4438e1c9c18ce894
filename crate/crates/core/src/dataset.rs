//! Multi-view data over a shared set of instances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Absolute tolerance on row means for a view to count as centered.
pub const CENTERING_TOL: f64 = 1e-9;

/// `m` views stored as `d_p × N` matrices (instances are columns).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<DMatrix<f64>>,
    centered: bool,
    means: Vec<DVector<f64>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::arg("a dataset needs at least one view"));
        };
        let n = first.ncols();
        if n == 0 {
            return Err(Error::arg("a dataset needs at least one instance"));
        }
        for (p, v) in views.iter().enumerate() {
            if v.ncols() != n {
                return Err(Error::Inconsistent {
                    first_name: "view 0".into(),
                    first: n,
                    second_name: format!("view {p}"),
                    second: v.ncols(),
                });
            }
            if v.nrows() == 0 {
                return Err(Error::arg(format!("view {p} has no features")));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("view {p}"),
                    row: i % v.nrows(),
                    col: i / v.nrows(),
                });
            }
        }
        let means = views.iter().map(|v| DVector::zeros(v.nrows())).collect();
        Ok(MultiViewDataset {
            views,
            centered: false,
            means,
        })
    }

    /// Builds a dataset from `N × d_p` matrices with instances as rows.
    pub fn from_row_major(views: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(views.into_iter().map(|v| v.transpose()).collect())
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn view(&self, p: usize) -> &DMatrix<f64> {
        &self.views[p]
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_instances(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.nrows()).collect()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Means subtracted by [`Self::centered`]; zero for uncentered data.
    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    /// A copy with every feature row shifted to zero mean. Idempotent.
    pub fn centered(&self) -> Self {
        if self.centered {
            return self.clone();
        }
        let n = self.n_instances() as f64;
        let mut views = Vec::with_capacity(self.views.len());
        let mut means = Vec::with_capacity(self.views.len());
        for v in &self.views {
            let mu = v.column_sum() / n;
            let mut c = v.clone();
            for mut col in c.column_iter_mut() {
                col -= &mu;
            }
            views.push(c);
            means.push(mu);
        }
        MultiViewDataset {
            views,
            centered: true,
            means,
        }
    }

    /// Marks the data as centered without touching it; recorded means are zero.
    #[doc(hidden)]
    pub fn assume_centered(mut self) -> Self {
        self.centered = true;
        self
    }

    /// Largest absolute row mean over all views.
    pub fn max_abs_row_mean(&self) -> f64 {
        let n = self.n_instances() as f64;
        self.views
            .iter()
            .flat_map(|v| (v.column_sum() / n).iter().map(|x| x.abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn require_centered(&self) -> Result<()> {
        if !self.centered {
            return Err(Error::arg("dataset must be centered first"));
        }
        Ok(())
    }

    /// Uncentered subset of the instances at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.n_instances();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::arg(format!("instance index {bad} out of range for {n}")));
        }
        let views = self
            .raw_views()
            .iter()
            .map(|v| v.select_columns(indices))
            .collect();
        Self::new(views)
    }

    /// The views with any stored means added back.
    pub fn raw_views(&self) -> Vec<DMatrix<f64>> {
        if !self.centered || self.means.iter().all(|m| m.iter().all(|&x| x == 0.0)) {
            return self.views.clone();
        }
        self.views
            .iter()
            .zip(&self.means)
            .map(|(v, mu)| {
                let mut r = v.clone();
                for mut col in r.column_iter_mut() {
                    col += mu;
                }
                r
            })
            .collect()
    }

    /// The views expressed relative to `means` (one vector per view).
    pub fn views_relative_to(&self, means: &[DVector<f64>]) -> Result<Vec<DMatrix<f64>>> {
        if means.len() != self.n_views() {
            return Err(Error::dim(format!(
                "{} mean vectors for {} views",
                means.len(),
                self.n_views()
            )));
        }
        if self.centered && self.means.as_slice() == means {
            return Ok(self.views.clone());
        }
        let raw = self.raw_views();
        raw.into_iter()
            .zip(means)
            .enumerate()
            .map(|(p, (mut v, mu))| {
                if mu.len() != v.nrows() {
                    return Err(Error::dim(format!(
                        "view {p} has {} features, model expects {}",
                        v.nrows(),
                        mu.len()
                    )));
                }
                for mut col in v.column_iter_mut() {
                    col -= mu;
                }
                Ok(v)
            })
            .collect()
    }
}
