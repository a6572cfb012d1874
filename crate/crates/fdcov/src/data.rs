//! Domain types: functional samples and covariance surfaces.
//!
//! A [`FunctionalGroup`] stores one sample of curves as an `n_i × J` matrix
//! (one row per subject, one column per grid point). A [`FunctionalDataset`]
//! bundles `k ≥ 2` groups observed on one shared [`Grid`]. Validation happens
//! at construction, so downstream estimators never re-check shapes.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::Mat;

/// Absolute tolerance for the symmetry check on covariance surfaces.
pub const COV_SYMMETRY_TOL: f64 = 1e-10;

/// A single curve sampled on the dataset's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub values: Vec<f64>,
}

/// A `J × J` symmetric surface, e.g. a sample covariance function.
#[derive(Clone, Debug, PartialEq)]
pub struct CovSurface {
    values: Mat,
}

impl CovSurface {
    /// Wrap a square matrix, rejecting asymmetry beyond [`COV_SYMMETRY_TOL`].
    pub fn new(values: Mat) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::InvalidParameter(format!(
                "covariance surface must be square, got {}×{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let defect = values.symmetry_defect();
        if defect > COV_SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "covariance surface asymmetric by {defect:e}"
            )));
        }
        Ok(CovSurface { values })
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    #[inline]
    pub fn at(&self, j: usize, l: usize) -> f64 {
        self.values[(j, l)]
    }

    pub fn into_values(self) -> Mat {
        self.values
    }
}

/// Centered curves of one group (rows are subject effects; columns sum to zero).
#[derive(Clone, Debug)]
pub struct EffectMatrix {
    values: Mat,
}

impl EffectMatrix {
    pub(crate) fn from_centered(values: Mat) -> Self {
        EffectMatrix { values }
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    /// Largest absolute column sum; zero (up to rounding) by construction.
    pub fn centering_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for c in 0..self.values.ncols() {
            let sum: f64 = (0..self.values.nrows())
                .map(|r| self.values[(r, c)])
                .sum();
            worst = worst.max(sum.abs());
        }
        worst
    }
}

/// One functional sample: `n_i ≥ 2` curves on a common grid.
#[derive(Clone, Debug)]
pub struct FunctionalGroup {
    label: String,
    curves: Mat,
}

impl FunctionalGroup {
    pub fn new(label: impl Into<String>, curves: Mat) -> Result<Self> {
        let label = label.into();
        if curves.nrows() < 2 {
            return Err(Error::InvalidGroup {
                label,
                msg: format!(
                    "needs at least 2 curves for a sample covariance, got {}",
                    curves.nrows()
                ),
            });
        }
        Ok(FunctionalGroup { label, curves })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn curves(&self) -> &Mat {
        &self.curves
    }

    /// Number of subjects `n_i`.
    pub fn len(&self) -> usize {
        self.curves.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `k ≥ 2` functional groups sharing one grid.
#[derive(Clone, Debug)]
pub struct FunctionalDataset {
    grid: Grid,
    groups: Vec<FunctionalGroup>,
}

impl FunctionalDataset {
    pub fn new(grid: Grid, groups: Vec<FunctionalGroup>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        for g in &groups {
            if g.curves().ncols() != grid.len() {
                return Err(Error::InvalidDataset(format!(
                    "group '{}' has {} columns but the grid has {} points",
                    g.label(),
                    g.curves().ncols(),
                    grid.len()
                )));
            }
        }
        let n: usize = groups.iter().map(|g| g.len()).sum();
        if n < groups.len() + 1 {
            return Err(Error::InvalidDataset(format!(
                "total sample size {n} leaves no error degrees of freedom for k = {}",
                groups.len()
            )));
        }
        Ok(FunctionalDataset { grid, groups })
    }

    /// Convenience constructor from `(label, curves)` pairs.
    pub fn from_matrices(grid: Grid, groups: Vec<(String, Mat)>) -> Result<Self> {
        let groups = groups
            .into_iter()
            .map(|(label, m)| FunctionalGroup::new(label, m))
            .collect::<Result<Vec<_>>>()?;
        FunctionalDataset::new(grid, groups)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn groups(&self) -> &[FunctionalGroup] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &FunctionalGroup {
        &self.groups[i]
    }

    /// Number of groups `k`.
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Total sample size `n = Σ n_i`.
    pub fn total_n(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// Apply a pointwise transform `value ↦ f(grid index, value)` to every
    /// curve of every group. Used for scale/shift invariance checks.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> FunctionalDataset {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let mut m = g.curves().clone();
                let cols = m.ncols();
                for r in 0..m.nrows() {
                    for (j, v) in m.row_mut(r).iter_mut().enumerate() {
                        let _ = cols;
                        *v = f(j, *v);
                    }
                }
                FunctionalGroup {
                    label: g.label.clone(),
                    curves: m,
                }
            })
            .collect();
        FunctionalDataset {
            grid: self.grid.clone(),
            groups,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Grid {
        Grid::uniform(0.0, 1.0, 2).unwrap()
    }

    #[test]
    fn group_needs_two_curves() {
        let err = FunctionalGroup::new("g", Mat::from_rows(&[vec![1.0, 2.0]]));
        assert!(err.is_err());
        assert!(FunctionalGroup::new("g", Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]])).is_ok());
    }

    #[test]
    fn dataset_checks_shapes() {
        let g1 = FunctionalGroup::new("a", Mat::zeros(2, 2)).unwrap();
        let g2 = FunctionalGroup::new("b", Mat::zeros(2, 3)).unwrap();
        assert!(FunctionalDataset::new(grid2(), vec![g1.clone()]).is_err());
        assert!(FunctionalDataset::new(grid2(), vec![g1.clone(), g2]).is_err());
        let g3 = FunctionalGroup::new("b", Mat::zeros(2, 2)).unwrap();
        assert!(FunctionalDataset::new(grid2(), vec![g1, g3]).is_ok());
    }

    #[test]
    fn dataset_rejects_no_error_dof() {
        // k = 2 with n = 2 each would be fine (n - k = 2); the minimal
        // failing case n = k is unreachable because groups need n_i >= 2,
        // so n >= 2k > k + 1 for k >= 2. Assert the arithmetic anyway.
        let g1 = FunctionalGroup::new("a", Mat::zeros(2, 2)).unwrap();
        let g2 = FunctionalGroup::new("b", Mat::zeros(2, 2)).unwrap();
        let ds = FunctionalDataset::new(grid2(), vec![g1, g2]).unwrap();
        assert_eq!(ds.total_n() - ds.k(), 2);
    }

    #[test]
    fn cov_surface_rejects_asymmetry() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(CovSurface::new(m).is_err());
        let mut s = Mat::zeros(2, 2);
        s[(0, 1)] = 1.0;
        s[(1, 0)] = 1.0;
        assert!(CovSurface::new(s).is_ok());
    }
}
