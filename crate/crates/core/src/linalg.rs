//! Small dense kernels used in the per-element loops.

use nalgebra::DMatrix;

/// Column-major dense matrix. Matrix-vector products are written as sums of
/// scaled columns so the inner loop runs over contiguous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMajor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        // nalgebra storage is column-major already.
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `y += alpha * A x`
    #[inline]
    pub fn gemv_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (col, xj) in self.data.chunks_exact(self.rows).zip(x) {
            let s = alpha * xj;
            for (yi, a) in y.iter_mut().zip(col) {
                *yi += s * a;
            }
        }
    }

    /// `y = A x`
    #[inline]
    pub fn gemv(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.gemv_acc(1.0, x, y);
    }

    /// `C = alpha A B + beta C` with `B` (`cols x n`) and `C` (`rows x n`)
    /// column-major.
    pub fn gemm(&self, alpha: f64, b: &[f64], n: usize, beta: f64, c: &mut [f64]) {
        assert_eq!(b.len(), self.cols * n);
        assert_eq!(c.len(), self.rows * n);
        // SAFETY: the asserts above bound every access of the three
        // column-major operands.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                n,
                alpha,
                self.data.as_ptr(),
                1,
                self.rows as isize,
                b.as_ptr(),
                1,
                self.cols as isize,
                beta,
                c.as_mut_ptr(),
                1,
                self.rows as isize,
            );
        }
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&ColMajor]) -> Self {
        let cols = blocks.first().map_or(0, |b| b.cols);
        assert!(blocks.iter().all(|b| b.cols == cols));
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for b in blocks {
                data.extend_from_slice(b.column(j));
            }
        }
        Self { rows, cols, data }
    }
}
