//! Small dense helpers for exosystem-sized matrices.

use nalgebra::{DMatrix, Matrix2};

use crate::grid::C64;

/// Both roots of `λ² − tr(M)λ + det(M)` for a real 2×2 matrix.
///
/// Real roots come back in descending order; complex roots as
/// `(re + i|im|, re − i|im|)`.
pub fn eig2(m: &Matrix2<f64>) -> [C64; 2] {
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        // q carries the sign of tr so the smaller root avoids cancellation.
        let q = half + half.signum() * disc.sqrt();
        if q == 0.0 {
            return [C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        }
        let (a, b) = (q, det / q);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        [C64::new(hi, 0.0), C64::new(lo, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [C64::new(half, im), C64::new(half, -im)]
    }
}

/// Eigenvalues of a small real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![C64::new(m[(0, 0)], 0.0)],
        2 => eig2(&Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])).to_vec(),
        _ => m.complex_eigenvalues().iter().copied().collect(),
    }
}

/// Largest real part over the spectrum (the continuous-time stability margin).
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|l| l.norm()).fold(0.0, f64::max)
}

pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 2 {
        // Equivalent to both eigenvalues in the open left half-plane.
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        return m.trace() < 0.0 && det > 0.0;
    }
    spectral_abscissa(m) < 0.0
}
