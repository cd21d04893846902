//! Polyphase loops `A: T -> U_N(C)` and their spin-vector factorization.
//!
//! A bank and its loop determine each other by regrouping taps:
//! `A_{j,k}(z) = N^{-1/2} Σ_d a^{(j)}_{Nd+k} z^d`, equivalently
//! `m_j(z) = Σ_k A_{j,k}(z^N) z^k`. The bank is orthogonal exactly when
//! the loop is unitary on the circle.
//!
//! Loops of degree `k` are built as `A(z) = V · Π_i (I − P_i + z P_i)`
//! with `V` a constant unitary and `P_i` orthogonal projections; the
//! converse factorization peels one factor per degree.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::{FilterBank, FilterCoeffs};
use crate::linalg::{
    identity, isometry_defect, norm_inf, orthonormality_defect, projection, random_unit_vector, random_unitary,
    root_of_unity, row_space, CMatrix, CVector, ZERO,
};
use crate::EXACT_TOL;

/// Tolerance on spin-vector orthonormality and on `V*V = I`.
pub const SPIN_TOL: f64 = 1e-12;
/// Singular values above this count toward the range of a top coefficient.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Matrix polynomial `A(z) = Σ_d A_d z^d` with `N×N` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyLoop {
    size: usize,
    coeffs: Vec<CMatrix>,
}

impl PolyLoop {
    /// Trailing exactly-zero coefficients are dropped; a zero loop keeps `A_0`.
    pub fn new(size: usize, mut coeffs: Vec<CMatrix>) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid(format!("loop size N = {size} must be at least 2")));
        }
        if coeffs.is_empty() {
            return Err(Error::invalid("loop has no coefficients"));
        }
        for (d, c) in coeffs.iter().enumerate() {
            if c.nrows() != size || c.ncols() != size {
                return Err(Error::invalid(format!(
                    "coefficient {d} is {}x{}, expected {size}x{size}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::invalid(format!("coefficient {d} is not finite")));
            }
        }
        while coeffs.len() > 1 && coeffs.last().unwrap().iter().all(|z| *z == ZERO) {
            coeffs.pop();
        }
        Ok(PolyLoop { size, coeffs })
    }

    pub fn constant(m: CMatrix) -> Result<Self> {
        PolyLoop::new(m.nrows(), vec![m])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.size, self.size);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// `c · A(z)` for a constant matrix `c`.
    pub fn left_mul(&self, c: &CMatrix) -> Result<PolyLoop> {
        PolyLoop::new(self.size, self.coeffs.iter().map(|a| c * a).collect())
    }

    /// `A(z) · c` for a constant matrix `c`.
    pub fn right_mul(&self, c: &CMatrix) -> Result<PolyLoop> {
        PolyLoop::new(self.size, self.coeffs.iter().map(|a| a * c).collect())
    }
}

/// Regroups the taps of `bank` into its polyphase loop.
pub fn filters_to_loop(bank: &FilterBank) -> PolyLoop {
    let n = bank.scale();
    let g = bank.genus();
    let scale = 1.0 / (n as f64).sqrt();
    let mut coeffs = vec![CMatrix::zeros(n, n); g];
    for (j, f) in bank.filters().iter().enumerate() {
        for (idx, tap) in f.indexed() {
            let idx = idx as usize;
            coeffs[idx / n][(j, idx % n)] += tap * scale;
        }
    }
    PolyLoop::new(n, coeffs).expect("bank shape is valid")
}

/// `A_{j,k}(z) = N^{-1} Σ_{w^N = z} w^{-k} m_j(w)`, evaluated through the
/// symbol at the `N` roots of `z`.
pub fn loop_entry_by_root_sum(bank: &FilterBank, j: usize, k: usize, z: Complex64) -> Complex64 {
    let n = bank.scale();
    let w0 = z.powf(1.0 / n as f64);
    let mut acc = ZERO;
    for r in 0..n {
        let w = w0 * root_of_unity(r, n);
        acc += w.powi(-(k as i32)) * crate::filters::symbol_unchecked(bank.filter(j), n, w);
    }
    acc / n as f64
}

/// Inverse of [`filters_to_loop`]: a bank of genus `degree + 1` with every
/// filter stored densely on `0..N·g`.
pub fn loop_to_filters(lp: &PolyLoop) -> Result<FilterBank> {
    let n = lp.size;
    let g = lp.coeffs.len();
    let root_n = (n as f64).sqrt();
    let filters = (0..n)
        .map(|j| {
            let taps = (0..n * g)
                .map(|idx| lp.coeffs[idx / n][(j, idx % n)] * root_n)
                .collect();
            FilterCoeffs::new(taps, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(n, g, filters)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    pub pass: bool,
    pub max_residual: f64,
    pub num_samples: usize,
    pub tolerance: f64,
}

/// Max over `num_samples` equispaced `z ∈ T` of `‖A(z)A(z)* − I‖_∞`.
///
/// `A(z)A(z)*` is a Laurent polynomial of degree `D`, so `2D + 1`
/// samples certify the identity everywhere.
pub fn unitarity_check(lp: &PolyLoop, num_samples: usize) -> Result<UnitarityReport> {
    unitarity_check_with(lp, num_samples, EXACT_TOL)
}

pub fn unitarity_check_with(lp: &PolyLoop, num_samples: usize, tol: f64) -> Result<UnitarityReport> {
    let min = 2 * lp.degree() + 1;
    if num_samples < min {
        return Err(Error::invalid(format!(
            "{num_samples} samples cannot certify a degree-{} loop (need {min})",
            lp.degree()
        )));
    }
    let id = identity(lp.size);
    let max_residual = (0..num_samples)
        .map(|s| {
            let a = lp.eval(root_of_unity(s, num_samples));
            norm_inf(&(&a * a.adjoint() - &id))
        })
        .fold(0.0, f64::max);
    Ok(UnitarityReport {
        pass: max_residual <= tol,
        max_residual,
        num_samples,
        tolerance: tol,
    })
}

/// One elementary factor `I − P + zP`, `P` the projection onto the span of
/// orthonormal `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinFactor {
    pub vectors: Vec<CVector>,
}

impl SpinFactor {
    pub fn rank_one(v: CVector) -> Self {
        SpinFactor { vectors: vec![v] }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn projection(&self, n: usize) -> CMatrix {
        projection(n, &self.vectors)
    }
}

/// `A(z) = V · Π_i (I − P_i + z P_i)`, factors applied left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinFactorization {
    pub size: usize,
    pub unitary: CMatrix,
    pub factors: Vec<SpinFactor>,
}

impl SpinFactorization {
    pub fn validate(&self) -> Result<()> {
        let n = self.size;
        if self.unitary.nrows() != n || self.unitary.ncols() != n {
            return Err(Error::invalid(format!("V must be {n}x{n}")));
        }
        let defect = isometry_defect(&self.unitary);
        if defect > SPIN_TOL {
            return Err(Error::invalid(format!("V is not unitary (defect {defect:.3e})")));
        }
        for (i, f) in self.factors.iter().enumerate() {
            if f.vectors.is_empty() || f.vectors.len() > n {
                return Err(Error::invalid(format!("factor {i} has rank {}", f.vectors.len())));
            }
            if f.vectors.iter().any(|v| v.len() != n) {
                return Err(Error::invalid(format!("factor {i} has vectors not in C^{n}")));
            }
            let defect = orthonormality_defect(&f.vectors);
            if defect > SPIN_TOL {
                return Err(Error::invalid(format!(
                    "factor {i} vectors are not orthonormal (defect {defect:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Multiplies out the factorization.
pub fn synthesize_from_spins(sf: &SpinFactorization) -> Result<PolyLoop> {
    sf.validate()?;
    let n = sf.size;
    let id = identity(n);
    let mut coeffs = vec![sf.unitary.clone()];
    for f in &sf.factors {
        let p = f.projection(n);
        let keep = &id - &p;
        let mut next = vec![CMatrix::zeros(n, n); coeffs.len() + 1];
        for (d, c) in coeffs.iter().enumerate() {
            next[d] += c * &keep;
            next[d + 1] += c * &p;
        }
        coeffs = next;
    }
    PolyLoop::new(n, coeffs)
}

/// Peels elementary factors off the right until the loop is constant.
///
/// With `P` the projection onto the row space of the top coefficient
/// `A_D`, unitarity forces `A_0 P = 0`, so `A(z)(I − P + z^{-1}P)` is again
/// a polynomial and its degree drops. A nonzero `A_0 P` or a non-unitary
/// remainder means the input was not paraunitary.
pub fn factor_to_spins(lp: &PolyLoop) -> Result<SpinFactorization> {
    let n = lp.size;
    let id = identity(n);
    let mut coeffs = lp.coeffs.clone();
    let mut factors = Vec::new();
    while coeffs.len() > 1 {
        let top = coeffs.last().unwrap();
        let vectors = row_space(top, RANK_THRESHOLD);
        if vectors.is_empty() {
            // numerically zero top coefficient
            coeffs.pop();
            continue;
        }
        let p = projection(n, &vectors);
        let leak = norm_inf(&(&coeffs[0] * &p));
        if leak > RANK_THRESHOLD {
            return Err(Error::NotFactorable { residual: leak });
        }
        let keep = &id - &p;
        let next: Vec<CMatrix> = (0..coeffs.len() - 1)
            .map(|d| &coeffs[d] * &keep + &coeffs[d + 1] * &p)
            .collect();
        coeffs = next;
        factors.push(SpinFactor { vectors });
        while coeffs.len() > 1 && norm_inf(coeffs.last().unwrap()) <= RANK_THRESHOLD {
            coeffs.pop();
        }
    }
    let unitary = coeffs.pop().unwrap();
    let defect = isometry_defect(&unitary);
    if defect > RANK_THRESHOLD {
        return Err(Error::NotFactorable { residual: defect });
    }
    factors.reverse();
    Ok(SpinFactorization {
        size: n,
        unitary,
        factors,
    })
}

/// Random factorization with `k` factors of the given rank.
///
/// With `lowpass_normalized`, `V` has first row `(1, …, 1)/√N`, so the
/// synthesized bank satisfies `Σ a^{(0)}_k = N`.
pub fn random_spins<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    rank: usize,
    lowpass_normalized: bool,
) -> SpinFactorization {
    assert!(rank >= 1 && rank < n, "rank must be in 1..N");
    let unitary = if lowpass_normalized {
        // diag(1, U') · F, F the unitary DFT (first row constant)
        let tail = random_unitary(rng, n - 1);
        let mut block = identity(n);
        block.view_mut((1, 1), (n - 1, n - 1)).copy_from(&tail);
        let dft = DMatrix::from_fn(n, n, |r, c| root_of_unity(r * c % n, n) / (n as f64).sqrt());
        block * dft
    } else {
        random_unitary(rng, n)
    };
    let factors = (0..k)
        .map(|_| {
            // orthonormal set: first `rank` columns of a random unitary
            if rank == 1 {
                SpinFactor::rank_one(random_unit_vector(rng, n))
            } else {
                let u = random_unitary(rng, n);
                SpinFactor {
                    vectors: (0..rank).map(|c| u.column(c).into_owned()).collect(),
                }
            }
        })
        .collect();
    SpinFactorization {
        size: n,
        unitary,
        factors,
    }
}

/// Maximum coefficient-wise entry difference between two loops.
pub fn loop_distance(a: &PolyLoop, b: &PolyLoop) -> f64 {
    let len = a.coeffs.len().max(b.coeffs.len());
    let zero = CMatrix::zeros(a.size, a.size);
    (0..len)
        .map(|d| {
            let x = a.coeffs.get(d).unwrap_or(&zero);
            let y = b.coeffs.get(d).unwrap_or(&zero);
            crate::linalg::max_abs(&(x - y))
        })
        .fold(0.0, f64::max)
}
