//! Pointwise SSB/SSE surfaces, the quasi-F ratio surface, and its
//! globalizations.
//!
//! At every grid cell `(s, t)` the between-group discrepancy of the sample
//! covariance surfaces is
//!
//! ```text
//! SSB(s,t) = Σ_i (n_i − 1) [γ̂_i(s,t) − γ̂(s,t)]²
//! ```
//!
//! and the within-group dispersion of the subject products is
//!
//! ```text
//! SSE(s,t) = Σ_i Σ_j [v̂_ij(s) v̂_ij(t) − γ̂_i(s,t)]².
//! ```
//!
//! The quasi-F surface is `F(s,t) = (SSB/(k−1)) / (SSE/(n−k))`; integrating
//! it over the grid gives the statistic `T_n`, taking its supremum gives
//! `F_max`. Both ratios are scale-invariant: multiplying every curve by a
//! nonvanishing function of time leaves the surface unchanged.

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::estimators::{group_cov, pooled_cov, subject_effects};
use crate::grid::Grid;
use crate::matrix::Mat;

/// Default relative floor applied to near-zero SSE cells. The floor is
/// `eps · max_cell(SSE)`; cells below it are clamped and counted in
/// `eps_hits` so reports can surface them.
pub const DEFAULT_SSE_FLOOR_EPS: f64 = 1e-12;

/// The quasi-F ratio surface together with the number of floored cells.
#[derive(Clone, Debug)]
pub struct FSurface {
    values: Mat,
    eps_hits: usize,
}

impl FSurface {
    pub fn values(&self) -> &Mat {
        &self.values
    }

    /// Grid cells where the SSE floor was applied.
    pub fn eps_hits(&self) -> usize {
        self.eps_hits
    }
}

/// Global statistics of a surface: its double integral and its supremum.
#[derive(Clone, Copy, Debug)]
pub struct GlobalStats {
    /// Tensor-product quadrature of the surface over the grid square.
    pub t_n: f64,
    /// Largest cell value.
    pub f_max: f64,
    /// Lexicographically smallest maximizing cell `(row, col)`.
    pub argmax: (usize, usize),
}

/// Between-group covariance discrepancy surface.
pub fn ssb_surface(dataset: &FunctionalDataset) -> Mat {
    let j = dataset.grid().len();
    let pooled = pooled_cov(dataset);
    let mut out = Mat::zeros(j, j);
    for group in dataset.groups() {
        let cov = group_cov(group);
        let w = (group.len() - 1) as f64;
        for (acc, (&gi, &g)) in out
            .as_mut_slice()
            .iter_mut()
            .zip(cov.values().as_slice().iter().zip(pooled.values().as_slice()))
        {
            let d = gi - g;
            *acc += w * d * d;
        }
    }
    out
}

/// Within-group product dispersion surface.
pub fn sse_surface(dataset: &FunctionalDataset) -> Mat {
    let j = dataset.grid().len();
    let mut out = Mat::zeros(j, j);
    for group in dataset.groups() {
        let effects = subject_effects(group);
        let cov = group_cov(group);
        // literal per-subject accumulation over the upper triangle
        for a in 0..j {
            for b in a..j {
                let g = cov.at(a, b);
                let mut sum = 0.0;
                for r in 0..group.len() {
                    let p = effects.values()[(r, a)] * effects.values()[(r, b)];
                    let d = p - g;
                    sum += d * d;
                }
                out[(a, b)] += sum;
            }
        }
    }
    for a in 0..j {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    out
}

/// Cellwise quasi-F ratio with the SSE floor applied.
///
/// # Errors
///
/// [`Error::DegenerateSse`] when SSE is identically zero, which happens
/// exactly when every group consists of identical curves.
pub fn quasi_f_surface(dataset: &FunctionalDataset, eps: f64) -> Result<FSurface> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SSE floor eps must be nonnegative, got {eps}"
        )));
    }
    let ssb = ssb_surface(dataset);
    let sse = sse_surface(dataset);
    quasi_f_from_parts(&ssb, &sse, dataset.k(), dataset.total_n(), eps)
}

/// Assemble the ratio surface from precomputed SSB/SSE parts.
pub(crate) fn quasi_f_from_parts(
    ssb: &Mat,
    sse: &Mat,
    k: usize,
    n: usize,
    eps: f64,
) -> Result<FSurface> {
    let max_sse = sse.max_abs();
    if max_sse <= 0.0 {
        return Err(Error::DegenerateSse);
    }
    let floor = eps * max_sse;
    let num_scale = 1.0 / (k - 1) as f64;
    let den_scale = 1.0 / (n - k) as f64;
    let mut values = Mat::zeros(ssb.nrows(), ssb.ncols());
    let mut eps_hits = 0;
    for ((f, &b), &e) in values
        .as_mut_slice()
        .iter_mut()
        .zip(ssb.as_slice())
        .zip(sse.as_slice())
    {
        let e_floored = if e < floor {
            eps_hits += 1;
            floor
        } else {
            e
        };
        *f = (b * num_scale) / (e_floored * den_scale);
    }
    Ok(FSurface { values, eps_hits })
}

/// Integral and supremum of a quasi-F surface.
pub fn globalize(surface: &FSurface, grid: &Grid) -> GlobalStats {
    globalize_values(surface.values(), grid)
}

/// Integral and supremum of any surface sampled on the grid.
pub fn globalize_values(values: &Mat, grid: &Grid) -> GlobalStats {
    let t_n = grid.integrate_surface(values);
    let j = values.nrows();
    let mut f_max = f64::NEG_INFINITY;
    let mut argmax = (0, 0);
    for a in 0..j {
        let row = values.row(a);
        for (b, &v) in row.iter().enumerate() {
            if v > f_max {
                f_max = v;
                argmax = (a, b);
            }
        }
    }
    debug_assert!(t_n <= grid.span() * grid.span() * f_max + 1e-12);
    GlobalStats { t_n, f_max, argmax }
}
