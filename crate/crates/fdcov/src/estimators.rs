//! Group means, subject effects, and group/pooled covariance surfaces.
//!
//! These are the plain moment estimators every test statistic is built from:
//! the pointwise group mean, the centered curves ("subject effects"), the
//! unbiased per-group sample covariance surface with divisor `n_i − 1`, and
//! the pooled covariance `Σ (n_i − 1) γ̂_i / (n − k)`.
//!
//! All operations are pure functions of immutable inputs.

use crate::data::{CovSurface, Curve, EffectMatrix, FunctionalDataset, FunctionalGroup};
use crate::matrix::Mat;

/// Pointwise arithmetic mean of the group's curves.
pub fn group_mean(group: &FunctionalGroup) -> Curve {
    let m = group.curves();
    let n = m.nrows() as f64;
    let mut values = vec![0.0; m.ncols()];
    for r in 0..m.nrows() {
        for (acc, v) in values.iter_mut().zip(m.row(r)) {
            *acc += v;
        }
    }
    for v in &mut values {
        *v /= n;
    }
    Curve { values }
}

/// Curves minus their group mean; columns sum to zero.
pub fn subject_effects(group: &FunctionalGroup) -> EffectMatrix {
    let mean = group_mean(group);
    let m = group.curves();
    let mut centered = m.clone();
    for r in 0..m.nrows() {
        for (v, mu) in centered.row_mut(r).iter_mut().zip(&mean.values) {
            *v -= mu;
        }
    }
    EffectMatrix::from_centered(centered)
}

/// Unbiased sample covariance surface of one group (divisor `n_i − 1`).
pub fn group_cov(group: &FunctionalGroup) -> CovSurface {
    let effects = subject_effects(group);
    cov_from_effects(&effects, group.len())
}

/// Covariance surface from already-centered effects; shared with the
/// estimator above and with reconstruction tests.
pub(crate) fn cov_from_effects(effects: &EffectMatrix, n_i: usize) -> CovSurface {
    let mut gram = effects.values().gram();
    let scale = 1.0 / (n_i - 1) as f64;
    for v in gram.as_mut_slice() {
        *v *= scale;
    }
    CovSurface::new(gram).expect("Gram product is symmetric")
}

/// Pooled sample covariance surface `Σ (n_i − 1) γ̂_i / (n − k)`.
pub fn pooled_cov(dataset: &FunctionalDataset) -> CovSurface {
    let j = dataset.grid().len();
    let denom = (dataset.total_n() - dataset.k()) as f64;
    let mut acc = Mat::zeros(j, j);
    for group in dataset.groups() {
        let cov = group_cov(group);
        let w = (group.len() - 1) as f64 / denom;
        for (a, &c) in acc.as_mut_slice().iter_mut().zip(cov.values().as_slice()) {
            *a += w * c;
        }
    }
    CovSurface::new(acc).expect("sum of symmetric surfaces is symmetric")
}

/// All groups' subject effects stacked into one `n × J` matrix, in group
/// order. This is the pool the permutation engine reshuffles.
pub fn effects_pool(dataset: &FunctionalDataset) -> Mat {
    let j = dataset.grid().len();
    let n = dataset.total_n();
    let mut pool = Mat::zeros(n, j);
    let mut row = 0;
    for group in dataset.groups() {
        let effects = subject_effects(group);
        for r in 0..effects.values().nrows() {
            pool.row_mut(row).copy_from_slice(effects.values().row(r));
            row += 1;
        }
    }
    pool
}
