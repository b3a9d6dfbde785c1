//! Dense complex kernels shared by the propagator and echo code.
//!
//! Everything is column-major, matching `nalgebra` storage. Products go
//! through `matrixmultiply::zgemm`, which picks SIMD kernels at runtime and
//! evaluates every output column independently of how many columns sit
//! beside it, so blocked and one-at-a-time evolution agree bit for bit.

use matrixmultiply::{zgemm, CGemmOption};
use nalgebra::DMatrix;
use num_complex::Complex64;

const ONE: [f64; 2] = [1.0, 0.0];
const ZERO: [f64; 2] = [0.0, 0.0];

/// Whether the left factor enters as `A` or as `A†`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    Plain,
    Adjoint,
}

/// `out = a * b` for a square `dim x dim` matrix `a` and a `dim x cols`
/// block `b`, both given as column-major slices.
pub(crate) fn mul_plain(a: &[Complex64], dim: usize, b: &[Complex64], out: &mut [Complex64]) {
    assert_eq!(a.len(), dim * dim);
    assert_eq!(b.len(), out.len());
    assert_eq!(b.len() % dim.max(1), 0);
    let cols = if dim == 0 { 0 } else { b.len() / dim };
    // SAFETY: Complex64 is #[repr(C)] { re, im }, layout-identical to
    // [f64; 2]; the slice lengths were checked against the strides above.
    unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            dim,
            dim,
            cols,
            ONE,
            a.as_ptr() as *const [f64; 2],
            1,
            dim as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            dim as isize,
            ZERO,
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            dim as isize,
        );
    }
}

/// Column-major `a†` of a square column-major `a`.
pub(crate) fn adjoint_of(a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    for j in 0..dim {
        for i in 0..dim {
            out[i * dim + j] = a[j * dim + i].conj();
        }
    }
    out
}

/// `out = op(a) * b`. The adjoint is materialized, so loops should hoist it.
pub(crate) fn mul_block(a: &[Complex64], side: Side, dim: usize, b: &[Complex64], out: &mut [Complex64]) {
    match side {
        Side::Plain => mul_plain(a, dim, b, out),
        Side::Adjoint => mul_plain(&adjoint_of(a, dim), dim, b, out),
    }
}

pub(crate) fn matmul(a: &DMatrix<Complex64>, side: Side, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = a.nrows();
    let mut out = DMatrix::zeros(dim, b.ncols());
    mul_block(a.as_slice(), side, dim, b.as_slice(), out.as_mut_slice());
    out
}

/// `max |(A†A - I)_ij|`.
pub(crate) fn unitarity_defect(a: &DMatrix<Complex64>) -> f64 {
    let gram = matmul(a, Side::Adjoint, a);
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// `max |(A - A†)_ij|`.
pub(crate) fn hermiticity_defect(a: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..=j.min(a.nrows().saturating_sub(1)) {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Σ conj(a_i) b_i.
pub(crate) fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        let mut s = seed;
        DMatrix::from_fn(dim, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let re = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let im = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            Complex64::new(re, im)
        })
    }

    #[test]
    fn zgemm_matches_nalgebra() {
        let a = sample(7, 7, 1);
        let b = sample(7, 3, 2);
        let ours = matmul(&a, Side::Plain, &b);
        assert!(max_abs_diff(&ours, &(&a * &b)) < 1e-14);
        let ours_adj = matmul(&a, Side::Adjoint, &b);
        assert!(max_abs_diff(&ours_adj, &(a.adjoint() * &b)) < 1e-14);
    }

    #[test]
    fn columns_are_independent_of_block_width() {
        let a = sample(33, 33, 3);
        let b = sample(33, 9, 4);
        let full = matmul(&a, Side::Plain, &b);
        for j in 0..9 {
            let col = DMatrix::from_column_slice(33, 1, b.column(j).as_slice());
            let single = matmul(&a, Side::Plain, &col);
            for i in 0..33 {
                assert_eq!(single[(i, 0)], full[(i, j)]);
            }
        }
    }
}
