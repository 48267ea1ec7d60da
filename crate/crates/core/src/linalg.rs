//! Dense row-major kernels used by the solvers.
//!
//! ndarray's generic `dot` walks a transposed view column by column, which is
//! cache hostile for `Aᵀr` on row-major storage. These kernels stream each
//! row exactly once.

use ndarray::ArrayView2;

/// Unrolled dot product. Fixed accumulator layout keeps results bitwise
/// reproducible across runs.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..8 {
            acc[j] += x[j] * y[j];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Borrowed row-major matrix with an optional scalar gain applied on the fly.
#[derive(Clone, Copy, Debug)]
pub struct DenseOp<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    gain: f64,
}

impl<'a> DenseOp<'a> {
    /// Panics if `a` is not in standard (row-major contiguous) layout.
    pub fn new(a: ArrayView2<'a, f64>, gain: f64) -> Self {
        let (rows, cols) = a.dim();
        let data = a.to_slice().expect("row-major contiguous matrix");
        Self {
            data,
            rows,
            cols,
            gain,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(i, j)` of `gain · A`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.gain * self.data[i * self.cols + j]
    }

    /// `out = gain · A x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = self.gain * dot(row, x);
        }
    }

    /// `out = gain · Aᵀ r`
    pub fn apply_t(&self, r: &[f64], out: &mut [f64]) {
        debug_assert_eq!(r.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for (&ri, row) in r.iter().zip(self.data.chunks_exact(self.cols)) {
            if ri != 0.0 {
                axpy(ri, row, out);
            }
        }
        if self.gain != 1.0 {
            for o in out.iter_mut() {
                *o *= self.gain;
            }
        }
    }
}
