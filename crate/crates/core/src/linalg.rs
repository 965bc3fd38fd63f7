//! Dense square complex matrices.
//!
//! Storage is row-major `Complex64`. Products are delegated to `faer`, viewed
//! in place over the row-major buffers so no copies are made per product.
//! The thread count used for products is process-wide and set once, usually
//! from the CLI `--threads` flag.

use std::num::NonZeroUsize;
use std::ops::{Index, IndexMut};
use std::sync::atomic::{AtomicUsize, Ordering};

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;

static THREADS: AtomicUsize = AtomicUsize::new(0);

/// Sets the number of threads used by matrix products. `0` selects the
/// machine parallelism.
pub fn set_thread_count(threads: usize) {
    THREADS.store(threads, Ordering::Relaxed);
}

/// Thread count currently used by matrix products.
pub fn thread_count() -> usize {
    match THREADS.load(Ordering::Relaxed) {
        0 => std::thread::available_parallelism().map_or(1, NonZeroUsize::get),
        n => n,
    }
}

fn parallelism() -> Par {
    match NonZeroUsize::new(thread_count()) {
        Some(n) if n.get() > 1 => Par::Rayon(n),
        _ => Par::Seq,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from a row-major buffer of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Option<Self> {
        (data.len() == dim * dim).then_some(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn view(&self) -> MatRef<'_, Complex64> {
        MatRef::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    /// `alpha * self * rhs`.
    pub fn mul_scaled(&self, rhs: &ComplexMatrix, alpha: f64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim);
        self.mul_scaled_into(rhs, alpha, &mut out);
        out
    }

    /// Writes `alpha * self * rhs` into `out`, which must not alias either operand.
    pub fn mul_scaled_into(&self, rhs: &ComplexMatrix, alpha: f64, out: &mut ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        out.dim = n;
        out.data.resize(n * n, Complex64::new(0.0, 0.0));
        let dst = MatMut::from_row_major_slice_mut(&mut out.data, n, n);
        matmul(
            dst,
            Accum::Replace,
            self.view(),
            rhs.view(),
            Complex64::new(alpha, 0.0),
            parallelism(),
        );
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len(), "vector length mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale_in_place(&mut self, factor: Complex64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexMatrix {
        let mut m = self.clone();
        m.scale_in_place(factor);
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// Row sums, i.e. `self * (1, 1, ..., 1)^T`.
    pub fn row_sums(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry, `max |a_jk - conj(a_kj)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.dim {
            for k in j..self.dim {
                worst = worst.max((self[(j, k)] - self[(k, j)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}
