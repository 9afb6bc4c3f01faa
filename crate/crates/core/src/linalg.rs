//! Dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |M^dag M - I|` over all entries.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    max_abs_diff(&gram, &CMatrix::identity(m.nrows(), m.ncols()))
}

/// Sample with i.i.d. standard complex Gaussian entries (unit variance per entry).
pub fn complex_gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Orthogonalize `v` against every vector in `basis` (assumed orthonormal).
///
/// Two passes of modified Gram-Schmidt keep the result orthogonal to
/// working precision even when `v` is nearly inside the span.
pub fn orthogonalize_against(v: &mut CVector, basis: &[CVector]) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(v);
            v.axpy(-proj, b, ONE);
        }
    }
}

/// Extend an orthonormal set to a full orthonormal basis of `C^dim` using
/// seeded Gaussian candidates.
///
/// The returned vectors are only the new ones, in the order they were found.
pub fn complete_basis<R: Rng + ?Sized>(
    existing: &[CVector],
    dim: usize,
    rng: &mut R,
) -> Vec<CVector> {
    let mut all: Vec<CVector> = existing.to_vec();
    let mut extra = Vec::with_capacity(dim.saturating_sub(existing.len()));
    while all.len() < dim {
        let mut v = complex_gaussian_vector(dim, rng);
        orthogonalize_against(&mut v, &all);
        let n = v.norm();
        // A Gaussian candidate collapses only if the span is already full.
        if n < 1e-6 {
            continue;
        }
        v.unscale_mut(n);
        all.push(v.clone());
        extra.push(v);
    }
    extra
}
