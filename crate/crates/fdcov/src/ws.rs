//! Fourth-moment surface estimation, its correlation normalization, trace
//! functionals, and the scaled chi-square calibration of the integrated
//! quasi-F statistic.
//!
//! The fourth-moment surface maps two grid cells `(s1,t1)`, `(s2,t2)` to the
//! estimated covariance between the subject products `v(s1)v(t1)` and
//! `v(s2)v(t2)`. Two estimators are provided:
//!
//! * **empirical** — pooled subject products with divisor `n`, minus the
//!   pooled covariance product; valid without distributional assumptions,
//! * **gaussian** — a closed-form product expression in the pooled
//!   covariance surface, consistent for Gaussian samples.
//!
//! Normalizing by the diagonal yields a correlation-like kernel with unit
//! diagonal. Matching the first two moments of the integrated statistic to a
//! scaled chi-square `β χ²_d` gives the calibration used by the `gpf-nv`
//! test: `β̂ = tr/( (k−1)(b−a)² )`-style expressions below, with the traces
//! computed by tensor-product quadrature over grid-cell pairs.
//!
//! A full `J² × J²` kernel matrix is never materialized: the evaluator keeps
//! the `n` subject products per (unordered) grid cell and computes entries
//! and traces blockwise from them.

use rayon::prelude::*;

use crate::chi2::{chi2_sf, chi2_upper_quantile};
use crate::data::{CovSurface, FunctionalDataset};
use crate::error::{Error, Result};
use crate::estimators::{effects_pool, pooled_cov};
use crate::grid::Grid;
use crate::matrix::Mat;
use crate::report::{CalibrationMethod, GridSummary, TestReport};
use crate::surfaces::{globalize, quasi_f_surface, DEFAULT_SSE_FLOOR_EPS};

/// Relative floor under which a fourth-moment diagonal entry is treated as
/// degenerate: normalization is rejected rather than floored, because a
/// vanishing diagonal signals a degenerate dataset.
pub const DIAG_FLOOR_REL: f64 = 1e-12;

/// Number of cell rows each parallel task processes in the trace sums.
pub const DEFAULT_TRACE_BLOCK: usize = 64;

/// Which estimator backs the fourth-moment surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourthMomentVariant {
    Empirical,
    Gaussian,
}

impl std::fmt::Display for FourthMomentVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FourthMomentVariant::Empirical => write!(f, "empirical"),
            FourthMomentVariant::Gaussian => write!(f, "gaussian"),
        }
    }
}

/// Packed upper-triangle indexing over grid cells `(a, b)` with `a ≤ b`.
#[inline]
fn tri_index(j: usize, a: usize, b: usize) -> usize {
    debug_assert!(a <= b && b < j);
    a * j - (a * a - a) / 2 + (b - a)
}

#[inline]
fn tri_len(j: usize) -> usize {
    j * (j + 1) / 2
}

#[inline]
fn sort_cell(c: (usize, usize)) -> (usize, usize) {
    if c.0 <= c.1 {
        c
    } else {
        (c.1, c.0)
    }
}

/// Estimated covariance surface of the subject products, evaluated lazily
/// over pairs of grid cells.
#[derive(Clone, Debug)]
pub struct FourthMomentSurface {
    j: usize,
    n: usize,
    variant: FourthMomentVariant,
    pooled: CovSurface,
    /// Empirical variant only: row `tri_index(a,b)` holds the `n` subject
    /// products `v_i(t_a) v_i(t_b)`.
    tri_products: Option<Mat>,
    /// Diagonal cache over all `J²` cells in row-major cell order.
    diag: Vec<f64>,
}

impl FourthMomentSurface {
    /// Pooled empirical estimator with divisor `n`.
    pub fn empirical(dataset: &FunctionalDataset) -> Self {
        let j = dataset.grid().len();
        let n = dataset.total_n();
        let pool = effects_pool(dataset);
        let pooled = pooled_cov(dataset);

        let mut tri_products = Mat::zeros(tri_len(j), n);
        for i in 0..n {
            let row = pool.row(i);
            let mut c = 0;
            for a in 0..j {
                let va = row[a];
                for &vb in &row[a..] {
                    tri_products[(c, i)] = va * vb;
                    c += 1;
                }
            }
        }

        let inv_n = 1.0 / n as f64;
        let mut diag = vec![0.0; j * j];
        for a in 0..j {
            for b in a..j {
                let r = tri_products.row(tri_index(j, a, b));
                let sum_sq: f64 = r.iter().map(|p| p * p).sum();
                let g = pooled.at(a, b);
                let d = sum_sq * inv_n - g * g;
                diag[a * j + b] = d;
                diag[b * j + a] = d;
            }
        }

        FourthMomentSurface {
            j,
            n,
            variant: FourthMomentVariant::Empirical,
            pooled,
            tri_products: Some(tri_products),
            diag,
        }
    }

    /// Closed-form estimator from the pooled covariance surface alone.
    pub fn gaussian(pooled: CovSurface) -> Self {
        let j = pooled.len();
        let mut diag = vec![0.0; j * j];
        for a in 0..j {
            for b in 0..j {
                let g = pooled.at(a, b);
                diag[a * j + b] = pooled.at(a, a) * pooled.at(b, b) + g * g;
            }
        }
        FourthMomentSurface {
            j,
            n: 0,
            variant: FourthMomentVariant::Gaussian,
            pooled,
            tri_products: None,
            diag,
        }
    }

    pub fn variant(&self) -> FourthMomentVariant {
        self.variant
    }

    pub fn grid_len(&self) -> usize {
        self.j
    }

    /// Diagonal entries over all `J²` cells, row-major in `(s, t)`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Evaluate the surface at a pair of grid cells.
    pub fn eval(&self, c1: (usize, usize), c2: (usize, usize)) -> f64 {
        match self.variant {
            FourthMomentVariant::Empirical => {
                let (a1, b1) = sort_cell(c1);
                let (a2, b2) = sort_cell(c2);
                let products = self.tri_products.as_ref().expect("empirical storage");
                let r1 = products.row(tri_index(self.j, a1, b1));
                let r2 = products.row(tri_index(self.j, a2, b2));
                let dot: f64 = r1.iter().zip(r2).map(|(x, y)| x * y).sum();
                dot / self.n as f64 - self.pooled.at(a1, b1) * self.pooled.at(a2, b2)
            }
            FourthMomentVariant::Gaussian => {
                let (s1, t1) = c1;
                let (s2, t2) = c2;
                self.pooled.at(s1, s2) * self.pooled.at(t1, t2)
                    + self.pooled.at(s1, t2) * self.pooled.at(s2, t1)
            }
        }
    }
}

/// Correlation-normalized fourth-moment kernel with unit diagonal.
#[derive(Clone, Debug)]
pub struct FourthMomentCorrelation {
    varpi: FourthMomentSurface,
    /// `sqrt(diag)` over all `J²` cells.
    sd: Vec<f64>,
}

impl FourthMomentCorrelation {
    /// Normalize by the diagonal.
    ///
    /// # Errors
    ///
    /// [`Error::DegenerateFourthMoment`] listing the offending cells when any
    /// diagonal entry is at or below `DIAG_FLOOR_REL · max(diag)`.
    pub fn normalize(varpi: FourthMomentSurface) -> Result<Self> {
        let j = varpi.j;
        let max_diag = varpi.diag.iter().fold(0.0_f64, |m, &v| m.max(v));
        let floor = DIAG_FLOOR_REL * max_diag;
        let mut offenders = Vec::new();
        for a in 0..j {
            for b in a..j {
                if varpi.diag[a * j + b] <= floor {
                    offenders.push((a, b));
                }
            }
        }
        if !offenders.is_empty() {
            return Err(Error::DegenerateFourthMoment { cells: offenders });
        }
        let sd: Vec<f64> = varpi.diag.iter().map(|d| d.sqrt()).collect();
        Ok(FourthMomentCorrelation { varpi, sd })
    }

    pub fn variant(&self) -> FourthMomentVariant {
        self.varpi.variant()
    }

    pub fn grid_len(&self) -> usize {
        self.varpi.j
    }

    /// Evaluate the normalized kernel; exactly 1 on the diagonal.
    pub fn eval(&self, c1: (usize, usize), c2: (usize, usize)) -> f64 {
        let s1 = sort_cell(c1);
        let s2 = sort_cell(c2);
        if s1 == s2 {
            return 1.0;
        }
        let j = self.varpi.j;
        self.varpi.eval(s1, s2) / (self.sd[s1.0 * j + s1.1] * self.sd[s2.0 * j + s2.1])
    }
}

/// Trace functionals of the normalized kernel.
#[derive(Clone, Copy, Debug)]
pub struct KernelTraces {
    /// Integral of the unit diagonal over the grid square: `(b − a)²`,
    /// returned analytically with no quadrature error.
    pub trace: f64,
    /// Quadruple quadrature sum of the squared kernel over all pairs of
    /// grid cells.
    pub trace_squared: f64,
}

/// Compute both traces with the default block width.
pub fn traces(corr: &FourthMomentCorrelation, grid: &Grid) -> KernelTraces {
    traces_with_block(corr, grid, DEFAULT_TRACE_BLOCK)
}

/// Compute both traces, processing `block` cell rows per parallel task.
///
/// The result is independent of `block` and of the worker count: per-row
/// partial sums are accumulated in a fixed order.
pub fn traces_with_block(
    corr: &FourthMomentCorrelation,
    grid: &Grid,
    block: usize,
) -> KernelTraces {
    let j = corr.varpi.j;
    assert_eq!(j, grid.len(), "kernel does not match grid");
    let block = block.max(1);
    let w = grid.weights();
    let span = grid.span();

    // per unordered cell: multiplicity × quadrature weight / diagonal
    let tri = tri_len(j);
    let mut cells = Vec::with_capacity(tri);
    let mut q = Vec::with_capacity(tri);
    for a in 0..j {
        for b in a..j {
            let mult = if a == b { 1.0 } else { 2.0 };
            cells.push((a, b));
            q.push(mult * w[a] * w[b] / corr.varpi.diag[a * j + b]);
        }
    }

    let partials: Vec<f64> = (0..tri)
        .collect::<Vec<_>>()
        .par_chunks(block)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&c1| {
                    let inner = trace_row_sum(&corr.varpi, &cells, &q, c1);
                    q[c1] * inner
                })
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let trace_squared: f64 = partials.iter().sum();
    KernelTraces {
        trace: span * span,
        trace_squared,
    }
}

/// `Σ_{c2} q[c2] · ϖ̂(c1, c2)²` over all unordered cells.
fn trace_row_sum(
    varpi: &FourthMomentSurface,
    cells: &[(usize, usize)],
    q: &[f64],
    c1: usize,
) -> f64 {
    match varpi.variant {
        FourthMomentVariant::Empirical => {
            let products = varpi.tri_products.as_ref().expect("empirical storage");
            let inv_n = 1.0 / varpi.n as f64;
            let (a1, b1) = cells[c1];
            let g1 = varpi.pooled.at(a1, b1);
            let r1 = products.row(c1);
            let mut sum = 0.0;
            for (c2, &qc) in q.iter().enumerate() {
                let r2 = products.row(c2);
                let dot: f64 = r1.iter().zip(r2).map(|(x, y)| x * y).sum();
                let (a2, b2) = cells[c2];
                let v = dot * inv_n - g1 * varpi.pooled.at(a2, b2);
                sum += qc * v * v;
            }
            sum
        }
        FourthMomentVariant::Gaussian => {
            let (s1, t1) = cells[c1];
            let mut sum = 0.0;
            for (c2, &qc) in q.iter().enumerate() {
                let (s2, t2) = cells[c2];
                let v = varpi.pooled.at(s1, s2) * varpi.pooled.at(t1, t2)
                    + varpi.pooled.at(s1, t2) * varpi.pooled.at(s2, t1);
                sum += qc * v * v;
            }
            sum
        }
    }
}

/// Scale and degrees of freedom of the two-moment chi-square match.
#[derive(Clone, Copy, Debug)]
pub struct WsParams {
    /// Scale `β̂` of the approximating `β χ²_d` law.
    pub beta: f64,
    /// Degrees of freedom `d̂`, possibly non-integer.
    pub df: f64,
    pub trace: f64,
    pub trace_squared: f64,
}

/// Two-moment match of the integrated statistic to a scaled chi-square.
///
/// `β̂ · d̂ = (b − a)²` holds identically by construction.
pub fn ws_params(traces: &KernelTraces, k: usize) -> Result<WsParams> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 groups, got {k}"
        )));
    }
    if !(traces.trace_squared > 0.0) || !traces.trace_squared.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "squared trace must be positive and finite, got {}",
            traces.trace_squared
        )));
    }
    let km1 = (k - 1) as f64;
    Ok(WsParams {
        beta: traces.trace_squared / (km1 * traces.trace),
        df: km1 * traces.trace * traces.trace / traces.trace_squared,
        trace: traces.trace,
        trace_squared: traces.trace_squared,
    })
}

/// The integrated quasi-F test calibrated by the scaled chi-square
/// approximation (reported as `gpf-nv`).
pub fn gpf_nv(
    dataset: &FunctionalDataset,
    variant: FourthMomentVariant,
    alpha: f64,
) -> Result<TestReport> {
    gpf_nv_with_eps(dataset, variant, alpha, DEFAULT_SSE_FLOOR_EPS)
}

/// Same as [`gpf_nv`] with an explicit SSE floor.
pub fn gpf_nv_with_eps(
    dataset: &FunctionalDataset,
    variant: FourthMomentVariant,
    alpha: f64,
    eps: f64,
) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let f = quasi_f_surface(dataset, eps)?;
    let stats = globalize(&f, dataset.grid());

    let varpi = match variant {
        FourthMomentVariant::Empirical => FourthMomentSurface::empirical(dataset),
        FourthMomentVariant::Gaussian => FourthMomentSurface::gaussian(pooled_cov(dataset)),
    };
    let corr = FourthMomentCorrelation::normalize(varpi)?;
    let tr = traces(&corr, dataset.grid());
    let params = ws_params(&tr, dataset.k())?;

    let p_value = chi2_sf(stats.t_n / params.beta, params.df)?;
    let critical_value = params.beta * chi2_upper_quantile(alpha, params.df)?;
    Ok(TestReport {
        test: "gpf-nv".into(),
        statistic: stats.t_n,
        p_value,
        method: CalibrationMethod::Nv,
        alpha,
        reject: p_value < alpha,
        critical_value,
        beta: Some(params.beta),
        df: Some(params.df),
        permutations: None,
        seed: None,
        floored_replicates: None,
        eps_hits: f.eps_hits(),
        grid: GridSummary::from_grid(dataset.grid()),
        group_sizes: dataset.group_sizes(),
    })
}
