//! Cuntz-relation operator systems built from a filter bank.
//!
//! On the period-`L` model `C^L`, channel `j` acts as the isometry
//! `(S_j ξ)_k = N^{-1/2} Σ_l a^{(j)}_{(k − Nl) mod L} ξ_l` from `C^{L/N}`.
//! Since the polyphase loop is unitary at every point of the circle, in
//! particular at the `L/N`-th roots of unity, the relations
//! `S_j* S_k = δ_{jk} I` and `Σ_j S_j S_j* = I` hold exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::{FilterBank, FilterCoeffs};
use crate::linalg::{identity, max_abs, CMatrix, CVector, ZERO};
use crate::loops::PolyLoop;

/// Periodized isometries `S_0, …, S_{N−1}`, each `L × L/N`.
#[derive(Debug, Clone)]
pub struct CuntzSystem {
    bank: FilterBank,
    period: usize,
    ops: Vec<CMatrix>,
}

impl CuntzSystem {
    pub fn scale(&self) -> usize {
        self.bank.scale()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }
}

/// Dense periodized operator for one filter; taps that wrap past the
/// period are summed.
fn periodized(f: &FilterCoeffs, n: usize, period: usize) -> CMatrix {
    let cols = period / n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = CMatrix::zeros(period, cols);
    for l in 0..cols {
        for (idx, tap) in f.indexed() {
            let row = (n as i64 * l as i64 + idx).rem_euclid(period as i64) as usize;
            m[(row, l)] += tap * scale;
        }
    }
    m
}

pub fn build_operators(bank: &FilterBank, period: usize) -> Result<CuntzSystem> {
    let n = bank.scale();
    if !period.is_multiple_of(n) || period == 0 {
        return Err(Error::invalid(format!(
            "period {period} is not a positive multiple of N = {n}"
        )));
    }
    if period < bank.max_len() {
        return Err(Error::invalid(format!(
            "period {period} is shorter than the filter length {}",
            bank.max_len()
        )));
    }
    Ok(CuntzSystem {
        bank: bank.clone(),
        period,
        ops: bank.filters().iter().map(|f| periodized(f, n, period)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuntzReport {
    /// `max_{j,k} ‖S_j* S_k − δ_{jk} I‖_max`
    pub max_residual_orthogonality: f64,
    /// `‖Σ_j S_j S_j* − I‖_max`
    pub max_residual_completeness: f64,
}

impl CuntzReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual_orthogonality <= tol && self.max_residual_completeness <= tol
    }
}

/// Nonzero entries of each row, `(column, value)`.
fn sparse_rows(m: &CMatrix) -> Vec<Vec<(usize, Complex64)>> {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .filter_map(|c| {
                    let v = m[(r, c)];
                    (v != ZERO).then_some((c, v))
                })
                .collect()
        })
        .collect()
}

/// Entry-wise worst deviations from both Cuntz identities. The products
/// are accumulated row by row over the nonzero pattern, so the cost stays
/// proportional to `L · (N g)^2`.
pub fn verify_cuntz(sys: &CuntzSystem) -> CuntzReport {
    let n = sys.ops.len();
    let period = sys.period;
    let cols = period / n;
    let rows: Vec<_> = sys.ops.iter().map(sparse_rows).collect();

    let mut orth = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let mut gram = CMatrix::zeros(cols, cols);
            for (rj, rk) in rows[j].iter().zip(&rows[k]) {
                for &(cj, vj) in rj {
                    for &(ck, vk) in rk {
                        gram[(cj, ck)] += vj.conj() * vk;
                    }
                }
            }
            if j == k {
                gram -= identity(cols);
            }
            orth = orth.max(max_abs(&gram));
        }
    }

    // Σ_j S_j S_j*: entry (r, s) = Σ_j Σ_c S_j[r, c] conj(S_j[s, c])
    let mut cols_of: Vec<Vec<Vec<(usize, Complex64)>>> = vec![vec![Vec::new(); cols]; n];
    for j in 0..n {
        for (r, row) in rows[j].iter().enumerate() {
            for &(c, v) in row {
                cols_of[j][c].push((r, v));
            }
        }
    }
    let mut total = CMatrix::zeros(period, period);
    for column_lists in &cols_of {
        for col in column_lists {
            for &(r, vr) in col {
                for &(s, vs) in col {
                    total[(r, s)] += vr * vs.conj();
                }
            }
        }
    }
    total -= identity(period);

    CuntzReport {
        max_residual_orthogonality: orth,
        max_residual_completeness: max_abs(&total),
    }
}

/// Orthogonal projections onto `S_0^{n−1} 𝓛` (`𝓛 = ker S_0*`) for
/// `n = 1..=depth`, and the tail `S_0^d S_0^{*d}`.
#[derive(Debug, Clone)]
pub struct SubbandLadder {
    pub depth: usize,
    pub projections: Vec<CMatrix>,
    pub tail: CMatrix,
    /// Ranks read off the traces, level by level.
    pub ranks: Vec<usize>,
    pub tail_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderResiduals {
    pub idempotence: f64,
    pub self_adjointness: f64,
    pub mutual_orthogonality: f64,
    pub partition_of_identity: f64,
    /// Largest distance of a trace from the nearest integer.
    pub trace_integrality: f64,
}

impl SubbandLadder {
    fn all(&self) -> impl Iterator<Item = &CMatrix> {
        self.projections.iter().chain(std::iter::once(&self.tail))
    }

    pub fn residuals(&self) -> LadderResiduals {
        let all: Vec<&CMatrix> = self.all().collect();
        let mut idem = 0.0f64;
        let mut adj = 0.0f64;
        let mut orth = 0.0f64;
        let mut trace = 0.0f64;
        let size = self.tail.nrows();
        let mut sum = CMatrix::zeros(size, size);
        for (i, p) in all.iter().enumerate() {
            idem = idem.max(max_abs(&(*p * *p - *p)));
            adj = adj.max(max_abs(&(p.adjoint() - *p)));
            let t = p.trace();
            trace = trace.max((t.re - t.re.round()).abs() + t.im.abs());
            for q in &all[i + 1..] {
                orth = orth.max(max_abs(&(*p * *q)));
            }
            sum += *p;
        }
        LadderResiduals {
            idempotence: idem,
            self_adjointness: adj,
            mutual_orthogonality: orth,
            partition_of_identity: max_abs(&(sum - identity(size))),
            trace_integrality: trace,
        }
    }
}

pub fn subband_ladder(sys: &CuntzSystem, depth: usize) -> Result<SubbandLadder> {
    let n = sys.scale();
    let period = sys.period;
    if !n.checked_pow(depth as u32).is_some_and(|d| period.is_multiple_of(d)) {
        return Err(Error::invalid(format!("N^{depth} does not divide L = {period}")));
    }

    // S_0^m as an L × L/N^m matrix, one periodized factor per level
    let mut power = identity(period);
    let mut range_proj = vec![identity(period)];
    let mut len = period;
    for _ in 0..depth {
        let s0 = periodized(sys.bank.lowpass(), n, len);
        power *= s0;
        range_proj.push(&power * power.adjoint());
        len /= n;
    }
    let projections: Vec<CMatrix> = (1..=depth).map(|m| &range_proj[m - 1] - &range_proj[m]).collect();
    let tail = range_proj[depth].clone();
    let rank = |p: &CMatrix| p.trace().re.round().max(0.0) as usize;
    Ok(SubbandLadder {
        depth,
        ranks: projections.iter().map(rank).collect(),
        tail_rank: rank(&tail),
        projections,
        tail,
    })
}

/// Result of the monomial-corner search on a loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerReport {
    pub reducible: bool,
    /// Number of monomial columns found.
    pub size: usize,
    /// Polyphase coordinates `k` whose column is monomial.
    pub columns: Vec<usize>,
    /// Exponent `n_i` with `A(z) e_{k_i} = z^{n_i} w_i`.
    pub exponents: Vec<usize>,
    /// `N × M` isometry with columns `w_i`.
    pub v: CMatrix,
    /// The coordinate vectors `e_{k_i}`.
    pub witnesses: Vec<CVector>,
    /// Verdicts with `M ∈ {0, N}` are decisive; `0 < M < N` is evidence only.
    pub decisive: bool,
    /// Largest off-exponent coefficient norm accepted for a monomial column.
    pub residual: f64,
}

/// Columns whose off-exponent coefficients fall below this are monomial.
pub const CORNER_TOL: f64 = 1e-9;

/// Looks for polyphase coordinates `e_k` on which the loop acts as a
/// monomial, `A(z) e_k = z^{n} w` with `w` constant. Left multiplication
/// of the loop by a constant unitary only changes the `w`'s.
pub fn detect_monomial_corner(lp: &PolyLoop) -> CornerReport {
    let n = lp.size();
    let mut columns = Vec::new();
    let mut exponents = Vec::new();
    let mut images = Vec::new();
    let mut residual = 0.0f64;
    for k in 0..n {
        let norms: Vec<f64> = lp.coeffs().iter().map(|a| a.column(k).norm()).collect();
        let (best, _) = norms.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (d, &v)| if v > acc.1 { (d, v) } else { acc },
        );
        let off = norms
            .iter()
            .enumerate()
            .filter(|(d, _)| *d != best)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max);
        if off <= CORNER_TOL {
            columns.push(k);
            exponents.push(best);
            images.push(lp.coeffs()[best].column(k).into_owned());
            residual = residual.max(off);
        }
    }
    let m = columns.len();
    let v = if m == 0 {
        CMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&images)
    };
    let witnesses = columns
        .iter()
        .map(|&k| {
            let mut e = CVector::zeros(n);
            e[k] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    CornerReport {
        reducible: m >= 1,
        size: m,
        columns,
        exponents,
        v,
        witnesses,
        decisive: m == 0 || m == n,
        residual,
    }
}

/// Which subspace family produced a probe candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeCandidate {
    /// `ℓ²({0, 1, 2, …})` is invariant.
    HalfLine,
    /// The coordinate subspace spanned by the orbit closure of `seed`
    /// misses `missing` interior indices.
    Orbit { seed: i64, missing: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub candidate_found: bool,
    pub candidate: Option<ProbeCandidate>,
    /// Worst norm of the component leaked from the half-line into the
    /// negative indices by any `S_j` or `S_j*`.
    pub residual: f64,
    pub window: i64,
}

/// Leak tolerance for the half-line and the coordinate-orbit closure.
pub const PROBE_TOL: f64 = 1e-12;

/// Truncated operators on the index window `[−K, K]` of `ℓ²(Z)`.
struct Window<'a> {
    bank: &'a FilterBank,
    k: i64,
    scale: f64,
}

impl Window<'_> {
    fn contains(&self, i: i64) -> bool {
        (-self.k..=self.k).contains(&i)
    }

    /// `S_j e_l` restricted to the window.
    fn forward(&self, j: usize, l: i64) -> Vec<(i64, Complex64)> {
        let n = self.bank.scale() as i64;
        self.bank
            .filter(j)
            .indexed()
            .filter(|(_, t)| *t != ZERO)
            .map(|(idx, t)| (n * l + idx, t * self.scale))
            .filter(|(i, _)| self.contains(*i))
            .collect()
    }

    /// `S_j* e_p` restricted to the window.
    fn adjoint(&self, j: usize, p: i64) -> Vec<(i64, Complex64)> {
        let n = self.bank.scale() as i64;
        self.bank
            .filter(j)
            .indexed()
            .filter(|(idx, t)| *t != ZERO && (p - idx).rem_euclid(n) == 0)
            .map(|(idx, t)| ((p - idx) / n, t.conj() * self.scale))
            .filter(|(l, _)| self.contains(*l))
            .collect()
    }
}

/// Tests the half-line subspace, then coordinate-orbit closures, for
/// invariance under all `S_j` and `S_j*` on a truncated window. Indices
/// within `N g` of the window edge are not used as test inputs.
pub fn invariant_subspace_probe(bank: &FilterBank, k: usize) -> Result<ProbeReport> {
    let band = bank.max_len() as i64;
    let k = k as i64;
    if k < band {
        return Err(Error::invalid(format!("window K = {k} is smaller than N g = {band}")));
    }
    let win = Window {
        bank,
        k,
        scale: 1.0 / (bank.scale() as f64).sqrt(),
    };
    let n = bank.scale();

    let mut residual = 0.0f64;
    for l in 0..=(k - band) {
        for j in 0..n {
            for image in [win.forward(j, l), win.adjoint(j, l)] {
                let leak = image
                    .iter()
                    .filter(|(i, _)| *i < 0)
                    .fold(0.0, |acc, (_, v)| acc + v.norm_sqr());
                residual = residual.max(leak.sqrt());
            }
        }
    }
    if residual <= PROBE_TOL {
        return Ok(ProbeReport {
            candidate_found: true,
            candidate: Some(ProbeCandidate::HalfLine),
            residual,
            window: k,
        });
    }

    // Orbit closure of coordinate seeds near the attractor [−(Ng−1)/(N−1), 0].
    let interior = (-k + band)..=(k - band);
    let reach = (band - 1) / (n as i64 - 1) + 1;
    for seed in -reach..=0 {
        let mut seen = std::collections::BTreeSet::from([seed]);
        let mut stack = vec![seed];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                for (t, v) in win.forward(j, i).into_iter().chain(win.adjoint(j, i)) {
                    if v.norm() > PROBE_TOL && seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
        }
        let missing = interior.clone().filter(|i| !seen.contains(i)).count();
        if missing > 0 {
            return Ok(ProbeReport {
                candidate_found: true,
                candidate: Some(ProbeCandidate::Orbit { seed, missing }),
                residual,
                window: k,
            });
        }
    }
    Ok(ProbeReport {
        candidate_found: false,
        candidate: None,
        residual,
        window: k,
    })
}

/// The monomial bank `m_0(z) = 1`, `m_1(z) = z^{2k+1}`: the stretched Haar
/// representation after a constant rotation of its two channels. It is
/// orthogonal but not low-pass normalized.
pub fn stretched_haar_adjusted(k: usize) -> Result<FilterBank> {
    if k == 0 {
        return Err(Error::invalid("stretched Haar needs k >= 1"));
    }
    let root2 = Complex64::new(2f64.sqrt(), 0.0);
    FilterBank::new(
        2,
        k + 1,
        vec![
            FilterCoeffs::new(vec![root2], 0)?,
            FilterCoeffs::new(vec![root2], 2 * k as i64 + 1)?,
        ],
    )
}

/// `S_j ξ` on `ℓ²(Z)` for a finitely supported `ξ` starting at `first`;
/// returns the image and its first index.
pub fn apply_on_line(bank: &FilterBank, j: usize, xi: &[Complex64], first: i64) -> (Vec<Complex64>, i64) {
    let n = bank.scale() as i64;
    let f = bank.filter(j);
    let start = n * first + f.offset();
    let len = if xi.is_empty() {
        0
    } else {
        (n * (xi.len() as i64 - 1) + f.len() as i64) as usize
    };
    let mut out = vec![ZERO; len];
    let scale = 1.0 / (n as f64).sqrt();
    for (l, &x) in xi.iter().enumerate() {
        for (i, &t) in f.taps().iter().enumerate() {
            out[(n * l as i64) as usize + i] += t * x * scale;
        }
    }
    (out, start)
}
