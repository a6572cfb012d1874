//! Time grids with trapezoidal quadrature weights.
//!
//! All curves and surfaces are discretized on a common grid of `J` ordered
//! time points in `[a, b]`. Double integrals over `[a, b]²` are evaluated as
//! tensor-product quadrature sums with the grid's trapezoid weights; the
//! weights always sum to `b − a` by construction.

use crate::error::{Error, Result};
use crate::matrix::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid of `len` points spanning `[a, b]`.
    pub fn uniform(a: f64, b: f64, len: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidGrid(format!(
                "interval endpoints must be finite with a < b, got [{a}, {b}]"
            )));
        }
        if len < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 grid points, got {len}"
            )));
        }
        let h = (b - a) / (len - 1) as f64;
        let points: Vec<f64> = (0..len).map(|j| a + j as f64 * h).collect();
        let weights = trapezoid_weights(&points);
        Ok(Grid {
            a,
            b,
            points,
            weights,
        })
    }

    /// Grid over explicitly given strictly increasing points; the interval
    /// endpoints are the first and last point.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 grid points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        for w in points.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidGrid(format!(
                    "grid points must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let a = points[0];
        let b = points[points.len() - 1];
        let weights = trapezoid_weights(&points);
        Ok(Grid {
            a,
            b,
            points,
            weights,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Interval length `b − a`.
    pub fn span(&self) -> f64 {
        self.b - self.a
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Tensor-product quadrature of a surface sampled on the grid:
    /// `Σ_{j,l} w_j w_l m[j,l]`.
    pub fn integrate_surface(&self, m: &Mat) -> f64 {
        assert_eq!(m.nrows(), self.len(), "surface does not match grid");
        assert_eq!(m.ncols(), self.len(), "surface does not match grid");
        let w = &self.weights;
        let mut total = 0.0;
        for j in 0..self.len() {
            let row = m.row(j);
            let mut inner = 0.0;
            for (v, wl) in row.iter().zip(w) {
                inner += v * wl;
            }
            total += w[j] * inner;
        }
        total
    }
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let j = points.len();
    let mut w = vec![0.0; j];
    w[0] = (points[1] - points[0]) / 2.0;
    w[j - 1] = (points[j - 1] - points[j - 2]) / 2.0;
    for i in 1..j - 1 {
        w[i] = (points[i + 1] - points[i - 1]) / 2.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_sum_to_span() {
        for len in [2, 3, 17, 80] {
            let g = Grid::uniform(0.0, 1.0, len).unwrap();
            let sum: f64 = g.weights().iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-12,
                "len {len}: weights sum {sum}"
            );
        }
        let g = Grid::uniform(-2.0, 5.0, 41).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 7.0).abs() / 7.0 < 1e-12);
    }

    #[test]
    fn nonuniform_weights_sum_to_span() {
        let g = Grid::from_points(vec![0.0, 0.1, 0.5, 0.6, 2.0]).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 2.0).abs() < 1e-12);
        assert_eq!(g.a(), 0.0);
        assert_eq!(g.b(), 2.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::uniform(1.0, 1.0, 5).is_err());
        assert!(Grid::uniform(0.0, 1.0, 1).is_err());
        assert!(Grid::from_points(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Grid::from_points(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn constant_surface_integrates_to_value_times_area() {
        let g = Grid::uniform(0.0, 1.0, 9).unwrap();
        let mut m = Mat::zeros(9, 9);
        m.as_mut_slice().iter_mut().for_each(|v| *v = 3.0);
        assert!((g.integrate_surface(&m) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_exact_for_bilinear_surfaces() {
        // f(s,t) = s·t integrates to 1/4 on [0,1]²; the trapezoid rule is
        // exact for piecewise-linear interpolants.
        let g = Grid::uniform(0.0, 1.0, 5).unwrap();
        let mut m = Mat::zeros(5, 5);
        for j in 0..5 {
            for l in 0..5 {
                m[(j, l)] = g.points()[j] * g.points()[l];
            }
        }
        assert!((g.integrate_surface(&m) - 0.25).abs() < 1e-14);
    }
}
