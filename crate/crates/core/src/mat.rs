//! Small dense row-major matrices.
//!
//! Everything in this crate that looks like linear algebra happens on
//! matrices of size at most (2N+1) x (2N+1) with N <= 23, so a plain
//! `Vec<f64>` with explicit indexing beats pulling in a linear algebra
//! stack. Inversion is Gauss-Jordan with partial pivoting, which is
//! accurate enough at these sizes.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, a: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.row_mut(i).copy_from_slice(row);
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.a[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Gauss-Jordan inverse with partial pivoting. Panics on a pivot
    /// below 1e-13; the matrices inverted here (Vandermonde-type, small)
    /// are far from singular.
    pub fn inverse(&self) -> Mat {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut work = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if work[(r, col)].abs() > work[(piv, col)].abs() {
                    piv = r;
                }
            }
            let p = work[(piv, col)];
            assert!(p.abs() > 1e-13, "singular matrix in inverse()");
            if piv != col {
                for j in 0..n {
                    let t = work[(col, j)];
                    work[(col, j)] = work[(piv, j)];
                    work[(piv, j)] = t;
                    let t = inv[(col, j)];
                    inv[(col, j)] = inv[(piv, j)];
                    inv[(piv, j)] = t;
                }
            }
            let inv_p = 1.0 / p;
            for j in 0..n {
                work[(col, j)] *= inv_p;
                inv[(col, j)] *= inv_p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = work[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work[(r, j)] -= f * work[(col, j)];
                    inv[(r, j)] -= f * inv[(col, j)];
                }
            }
        }
        inv
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.a[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat::from_rows(&[
            vec![4.0, 1.0, 0.3],
            vec![-1.0, 3.5, 2.0],
            vec![0.2, -0.7, 5.0],
        ]);
        let id = m.matmul(&m.inverse());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matvec_matches_matmul() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let mut y = vec![0.0; 2];
        m.matvec(&[5.0, 6.0], &mut y);
        assert_eq!(y, vec![17.0, 39.0]);
    }
}
