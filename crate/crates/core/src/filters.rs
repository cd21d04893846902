//! Finite filter sequences and the quadrature-mirror conditions they obey.
//!
//! A filter is a finitely supported sequence `a_k`; indices outside the
//! stored window are zero. Its symbol is `m(z) = N^{-1/2} Σ a_k z^k`.
//! A bank is `N` such filters `m_0, …, m_{N-1}` (channel 0 is the
//! low-pass) whose taps all live in `0..N·g`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{root_of_unity, ZERO};
use crate::{EXACT_TOL, SAMPLED_TOL};

/// Finitely supported complex sequence `a_offset, …, a_{offset+len-1}`.
///
/// Taps are stored exactly as given; leading or trailing zeros are kept
/// until [`FilterCoeffs::pruned`] is called.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoeffs {
    offset: i64,
    taps: Vec<Complex64>,
}

impl FilterCoeffs {
    pub fn new(taps: Vec<Complex64>, offset: i64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("filter has no taps"));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::invalid("filter taps must be finite"));
        }
        Ok(FilterCoeffs { offset, taps })
    }

    /// Real taps starting at index 0.
    pub fn from_real(taps: &[f64]) -> Result<Self> {
        Self::new(taps.iter().map(|&t| Complex64::new(t, 0.0)).collect(), 0)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// One past the last stored index.
    pub fn end(&self) -> i64 {
        self.offset + self.taps.len() as i64
    }

    /// `a_k`, zero outside the stored window.
    pub fn tap(&self, k: i64) -> Complex64 {
        let i = k - self.offset;
        if i < 0 || i >= self.taps.len() as i64 {
            ZERO
        } else {
            self.taps[i as usize]
        }
    }

    /// `(index, tap)` pairs over the stored window.
    pub fn indexed(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.taps
            .iter()
            .enumerate()
            .map(move |(i, &t)| (self.offset + i as i64, t))
    }

    pub fn sum(&self) -> Complex64 {
        self.taps.iter().sum()
    }

    /// Copy with exact leading/trailing zeros stripped. An all-zero
    /// filter keeps a single zero tap.
    pub fn pruned(&self) -> Self {
        let first = self.taps.iter().position(|t| *t != ZERO);
        match first {
            None => FilterCoeffs {
                offset: self.offset,
                taps: vec![ZERO],
            },
            Some(first) => {
                let last = self.taps.iter().rposition(|t| *t != ZERO).unwrap();
                FilterCoeffs {
                    offset: self.offset + first as i64,
                    taps: self.taps[first..=last].to_vec(),
                }
            }
        }
    }

    /// Copy occupying exactly the window `offset..offset+len`, zero padded.
    /// Taps outside the window are dropped.
    pub fn windowed(&self, offset: i64, len: usize) -> Self {
        FilterCoeffs {
            offset,
            taps: (0..len as i64).map(|i| self.tap(offset + i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationReport {
    pub pass: bool,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityReport {
    pub pass: bool,
    /// Shift `l` at which the worst deviation occurred.
    pub worst_l: i64,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmfReport {
    pub pass: bool,
    pub max_residual: f64,
    pub tolerance: f64,
}

/// `|Σ a_k − N|`, the low-pass normalization `m_0(1) = √N`.
pub fn normalization_check(f: &FilterCoeffs, n: usize) -> NormalizationReport {
    normalization_check_with(f, n, EXACT_TOL)
}

pub fn normalization_check_with(f: &FilterCoeffs, n: usize, tol: f64) -> NormalizationReport {
    let residual = (f.sum() - Complex64::new(n as f64, 0.0)).norm();
    NormalizationReport {
        pass: residual <= tol,
        residual,
        tolerance: tol,
    }
}

/// Correlation `Σ_k a_{k+N l} conj(b_k)`.
pub fn shifted_correlation(a: &FilterCoeffs, b: &FilterCoeffs, n: usize, l: i64) -> Complex64 {
    let shift = n as i64 * l;
    b.indexed().map(|(k, bk)| a.tap(k + shift) * bk.conj()).sum()
}

/// Range of shifts `l` for which `a_{·+N l}` and `b` can overlap.
fn overlap_shifts(a: &FilterCoeffs, b: &FilterCoeffs, n: usize) -> std::ops::RangeInclusive<i64> {
    let n = n as i64;
    // need k + n l in [a.offset, a.end) for some k in [b.offset, b.end)
    let lo = (a.offset - (b.end() - 1)).div_euclid(n);
    let hi = (a.end() - 1 - b.offset).div_euclid(n) + 1;
    lo..=hi
}

/// Checks `Σ_k a_{k+Nl} conj(a_k) = N δ_{0,l}` over every overlapping shift.
pub fn orthogonality_check(f: &FilterCoeffs, n: usize) -> OrthogonalityReport {
    orthogonality_check_with(f, n, EXACT_TOL)
}

pub fn orthogonality_check_with(f: &FilterCoeffs, n: usize, tol: f64) -> OrthogonalityReport {
    let (worst_l, residual) = cross_residual(f, f, n, n as f64);
    OrthogonalityReport {
        pass: residual <= tol,
        worst_l,
        residual,
        tolerance: tol,
    }
}

/// Worst deviation of `Σ a_{k+Nl} conj(b_k)` from `diag·δ_{0,l}`.
fn cross_residual(a: &FilterCoeffs, b: &FilterCoeffs, n: usize, diag: f64) -> (i64, f64) {
    let mut worst = (0, 0.0);
    for l in overlap_shifts(a, b, n) {
        let target = if l == 0 { diag } else { 0.0 };
        let r = (shifted_correlation(a, b, n, l) - Complex64::new(target, 0.0)).norm();
        if r > worst.1 {
            worst = (l, r);
        }
    }
    worst
}

/// `m(z) = N^{-1/2} Σ_k a_k z^k` for `|z| = 1`.
pub fn symbol_eval(f: &FilterCoeffs, n: usize, z: Complex64) -> Result<Complex64> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("|z| = {} is not on the unit circle", z.norm())));
    }
    Ok(symbol_unchecked(f, n, z))
}

pub(crate) fn symbol_unchecked(f: &FilterCoeffs, n: usize, z: Complex64) -> Complex64 {
    let mut acc = ZERO;
    // Horner from the top tap, then multiply by z^offset.
    for &t in f.taps.iter().rev() {
        acc = acc * z + t;
    }
    acc * z.powi(f.offset as i32) / (n as f64).sqrt()
}

/// Samples `Σ_{k<N} |m(z·e^{2πik/N})|² = N` at `num_samples` points of the circle.
pub fn qmf_identity_check(f: &FilterCoeffs, n: usize, num_samples: usize) -> Result<QmfReport> {
    qmf_identity_check_with(f, n, num_samples, SAMPLED_TOL)
}

pub fn qmf_identity_check_with(f: &FilterCoeffs, n: usize, num_samples: usize, tol: f64) -> Result<QmfReport> {
    if num_samples == 0 {
        return Err(Error::invalid("num_samples must be at least 1"));
    }
    let mut max_residual = 0.0f64;
    for s in 0..num_samples {
        let z = root_of_unity(s, num_samples);
        let total: f64 = (0..n)
            .map(|k| symbol_unchecked(f, n, z * root_of_unity(k, n)).norm_sqr())
            .sum();
        max_residual = max_residual.max((total - n as f64).abs());
    }
    Ok(QmfReport {
        pass: max_residual <= tol,
        max_residual,
        tolerance: tol,
    })
}

/// Dyadic high-pass completion `b_k = (−1)^k conj(a_{2g−1−k})`, `k = 0..2g`.
pub fn haar_complement(f: &FilterCoeffs, n: usize, genus: usize) -> Result<FilterCoeffs> {
    if n != 2 {
        return Err(Error::UnsupportedScale(n));
    }
    let len = 2 * genus as i64;
    let pruned = f.pruned();
    if pruned.offset < 0 || pruned.end() > len {
        return Err(Error::invalid(format!(
            "taps occupy {}..{}, outside 0..{}",
            pruned.offset,
            pruned.end(),
            len
        )));
    }
    let taps = (0..len)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            f.tap(len - 1 - k).conj() * sign
        })
        .collect();
    FilterCoeffs::new(taps, 0)
}

/// `N` filters sharing scale `N` and genus `g`, all taps inside `0..N·g`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    scale: usize,
    genus: usize,
    filters: Vec<FilterCoeffs>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankReport {
    pub pass: bool,
    /// Worst deviation over all channel pairs `(i, j)` and shifts `l` of
    /// `Σ a^{(i)}_{k+Nl} conj(a^{(j)}_k) = N δ_{ij} δ_{0,l}`.
    pub orthogonality_residual: f64,
    pub qmf_residual: f64,
    pub normalization_residual: f64,
    pub lowpass_normalized: bool,
    pub tolerance: f64,
}

impl FilterBank {
    pub fn new(scale: usize, genus: usize, filters: Vec<FilterCoeffs>) -> Result<Self> {
        if scale < 2 {
            return Err(Error::invalid(format!("scale N = {scale} must be at least 2")));
        }
        if genus < 1 {
            return Err(Error::invalid("genus g must be at least 1"));
        }
        if filters.len() != scale {
            return Err(Error::invalid(format!(
                "expected {scale} filters, got {}",
                filters.len()
            )));
        }
        let max_len = (scale * genus) as i64;
        for (j, f) in filters.iter().enumerate() {
            if f.offset < 0 || f.end() > max_len {
                return Err(Error::invalid(format!(
                    "filter {j} occupies {}..{}, outside 0..{max_len}",
                    f.offset,
                    f.end()
                )));
            }
        }
        Ok(FilterBank { scale, genus, filters })
    }

    /// The identity bank `m_j(z) = z^j`, genus 1.
    pub fn delta(scale: usize) -> Result<Self> {
        let root_n = (scale as f64).sqrt();
        let filters = (0..scale)
            .map(|j| FilterCoeffs::new(vec![Complex64::new(root_n, 0.0)], j as i64))
            .collect::<Result<Vec<_>>>()?;
        FilterBank::new(scale, 1, filters)
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// `N·g`, the maximal filter length.
    pub fn max_len(&self) -> usize {
        self.scale * self.genus
    }

    pub fn filters(&self) -> &[FilterCoeffs] {
        &self.filters
    }

    pub fn filter(&self, j: usize) -> &FilterCoeffs {
        &self.filters[j]
    }

    pub fn lowpass(&self) -> &FilterCoeffs {
        &self.filters[0]
    }

    /// Whether `Σ a_k = N` holds for the low-pass filter.
    pub fn is_lowpass_normalized(&self) -> bool {
        normalization_check(self.lowpass(), self.scale).pass
    }

    /// Copy of the bank with every filter stored densely on `0..N·g`.
    pub fn dense(&self) -> FilterBank {
        let len = self.max_len();
        FilterBank {
            scale: self.scale,
            genus: self.genus,
            filters: self.filters.iter().map(|f| f.windowed(0, len)).collect(),
        }
    }

    /// Pairwise orthogonality, sampled QMF identity and normalization.
    pub fn verify(&self, tol: f64, num_samples: usize) -> Result<BankReport> {
        let n = self.scale;
        let mut orth = 0.0f64;
        for (i, a) in self.filters.iter().enumerate() {
            for (j, b) in self.filters.iter().enumerate() {
                let diag = if i == j { n as f64 } else { 0.0 };
                orth = orth.max(cross_residual(a, b, n, diag).1);
            }
        }
        let qmf = qmf_identity_check_with(self.lowpass(), n, num_samples, tol)?;
        let norm = normalization_check_with(self.lowpass(), n, tol);
        Ok(BankReport {
            pass: orth <= tol,
            orthogonality_residual: orth,
            qmf_residual: qmf.max_residual,
            normalization_residual: norm.residual,
            lowpass_normalized: norm.pass,
            tolerance: tol,
        })
    }
}

/// Taps of the four-tap Daubechies low-pass filter with one vanishing moment,
/// normalized to `Σ a_k = 2`.
pub fn db4_lowpass() -> FilterCoeffs {
    let s3 = 3f64.sqrt();
    FilterCoeffs::from_real(&[(1.0 + s3) / 4.0, (3.0 + s3) / 4.0, (3.0 - s3) / 4.0, (1.0 - s3) / 4.0])
        .expect("nonempty")
}

/// Named banks: `"haar"`, `"db4"`, `"stretched-haar:k"` (k ≥ 1).
pub fn preset_bank(name: &str) -> Result<FilterBank> {
    match name {
        "haar" => {
            let low = FilterCoeffs::from_real(&[1.0, 1.0])?;
            let high = haar_complement(&low, 2, 1)?;
            FilterBank::new(2, 1, vec![low, high])
        }
        "db4" => {
            let low = db4_lowpass();
            let high = haar_complement(&low, 2, 2)?;
            FilterBank::new(2, 2, vec![low, high])
        }
        _ => {
            let k = name
                .strip_prefix("stretched-haar:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::invalid(format!("unknown preset {name:?}")))?;
            stretched_haar(k)
        }
    }
}

/// `m_0 = (1 + z^{2k+1})/√2`, `m_1 = (1 − z^{2k+1})/√2`.
pub fn stretched_haar(k: usize) -> Result<FilterBank> {
    if k == 0 {
        return Err(Error::invalid("stretched Haar needs k >= 1"));
    }
    let len = 2 * k + 2;
    let mut low = vec![0.0; len];
    let mut high = vec![0.0; len];
    low[0] = 1.0;
    low[2 * k + 1] = 1.0;
    high[0] = 1.0;
    high[2 * k + 1] = -1.0;
    FilterBank::new(
        2,
        k + 1,
        vec![FilterCoeffs::from_real(&low)?, FilterCoeffs::from_real(&high)?],
    )
}
