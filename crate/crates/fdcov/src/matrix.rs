//! Minimal dense row-major matrix of `f64`.
//!
//! All surfaces and curve collections in this crate are small dense blocks
//! (at most a few hundred grid points per axis), so a flat `Vec<f64>` with
//! row-major indexing is all that is needed. No linear algebra beyond Gram
//! products is performed anywhere.

use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a flat row-major buffer. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Mat { rows, cols, data }
    }

    /// Build from a slice of equal-length rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "no rows");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Symmetric Gram product `selfᵀ · self` (cols × cols).
    pub fn gram(&self) -> Mat {
        let j = self.cols;
        let mut out = Mat::zeros(j, j);
        for r in 0..self.rows {
            let row = self.row(r);
            for a in 0..j {
                let va = row[a];
                if va == 0.0 {
                    continue;
                }
                let dst = &mut out.data[a * j + a..(a + 1) * j];
                for (d, &vb) in dst.iter_mut().zip(&row[a..]) {
                    *d += va * vb;
                }
            }
        }
        // mirror the strictly-upper triangle
        for a in 0..j {
            for b in (a + 1)..j {
                out.data[b * j + a] = out.data[a * j + b];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Largest `|a[j,l] - a[l,j]|` over the square matrix.
    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0_f64;
        for a in 0..self.rows {
            for b in (a + 1)..self.cols {
                worst = worst.max((self[(a, b)] - self[(b, a)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_explicit_product() {
        let m = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]]);
        let g = m.gram();
        for a in 0..3 {
            for b in 0..3 {
                let expect: f64 = (0..2).map(|r| m[(r, a)] * m[(r, b)]).sum();
                assert!((g[(a, b)] - expect).abs() < 1e-14);
            }
        }
        assert_eq!(g.symmetry_defect(), 0.0);
    }

    #[test]
    fn indexing_is_row_major() {
        let m = Mat::from_vec(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m[(0, 2)], 2.0);
        assert_eq!(m[(1, 0)], 3.0);
        assert_eq!(m.row(1), &[3.0, 4.0, 5.0]);
    }
}
