//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Induced infinity norm (maximum absolute row sum).
pub fn norm_inf(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖M*M − I‖_∞`.
pub fn isometry_defect(m: &CMatrix) -> f64 {
    norm_inf(&(m.adjoint() * m - identity(m.ncols())))
}

/// Orthogonal projection onto the span of orthonormal `vectors`.
pub fn projection(n: usize, vectors: &[CVector]) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for v in vectors {
        p += v * v.adjoint();
    }
    p
}

/// Maximum deviation of the Gram matrix of `vectors` from the identity.
pub fn orthonormality_defect(vectors: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((u.dotc(v) - target).norm());
        }
    }
    worst
}

/// Orthonormal basis of the row space of `m` (the range of `m*`),
/// keeping singular directions above `threshold`.
pub fn row_space(m: &CMatrix, threshold: f64) -> Vec<CVector> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect()
}

/// Haar-distributed random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly distributed unit vector in `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `e^{2πi m / count}`.
pub fn root_of_unity(m: usize, count: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            let u = random_unitary(&mut rng, n);
            assert!(isometry_defect(&u) < 1e-13);
        }
    }

    #[test]
    fn row_space_of_rank_one() {
        let v = CVector::from_vec(vec![ONE, Complex64::new(0.0, 1.0)]) / Complex64::new(2f64.sqrt(), 0.0);
        let w = CVector::from_vec(vec![Complex64::new(3.0, 0.0), ONE]);
        let m = &w * v.adjoint();
        let basis = row_space(&m, 1e-9);
        assert_eq!(basis.len(), 1);
        assert!((basis[0].dotc(&v).norm() - 1.0).abs() < 1e-12);
    }
}
