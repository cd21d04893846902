//! Multi-level periodic subband analysis and synthesis.
//!
//! Level `n` channel `j ≥ 1` holds `S_j* S_0^{*(n−1)} x`; the approximation
//! holds `S_0^{*levels} x`. Boundaries are circular, so synthesis is the
//! exact inverse and the coefficient energies add up to `‖x‖²`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::{FilterBank, FilterCoeffs};
use crate::linalg::ZERO;

#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTree {
    pub scale: usize,
    pub levels: usize,
    /// Length `L / N^levels`.
    pub approx: Vec<Complex64>,
    /// `details[n − 1][j − 1]`, length `L / N^n`.
    pub details: Vec<Vec<Vec<Complex64>>>,
}

impl CoeffTree {
    /// Length of the signal the tree came from.
    pub fn signal_len(&self) -> usize {
        self.approx.len() * self.scale.pow(self.levels as u32)
    }

    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.iter().flatten().map(Vec::len).sum::<usize>()
    }

    /// Tree of the right shape with every coefficient zero.
    pub fn zeros(scale: usize, levels: usize, signal_len: usize) -> CoeffTree {
        CoeffTree {
            scale,
            levels,
            approx: vec![ZERO; signal_len / scale.pow(levels as u32)],
            details: (1..=levels)
                .map(|n| vec![vec![ZERO; signal_len / scale.pow(n as u32)]; scale - 1])
                .collect(),
        }
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.scale;
        if n < 2 || self.details.len() != self.levels {
            return Err(Error::invalid("tree level count mismatch"));
        }
        let len = self.signal_len();
        for (lvl, chans) in self.details.iter().enumerate() {
            let want = len / n.pow(lvl as u32 + 1);
            if chans.len() != n - 1 || chans.iter().any(|c| c.len() != want) {
                return Err(Error::invalid(format!(
                    "level {} must hold {} channels of length {want}",
                    lvl + 1,
                    n - 1
                )));
            }
        }
        Ok(())
    }
}

/// `(S* y)_l = N^{-1/2} Σ_k conj(a_k) y_{(Nl + k) mod len}`.
pub fn periodic_adjoint(f: &FilterCoeffs, n: usize, y: &[Complex64]) -> Vec<Complex64> {
    let len = y.len() as i64;
    let scale = 1.0 / (n as f64).sqrt();
    (0..y.len() / n)
        .map(|l| {
            f.indexed()
                .map(|(k, a)| a.conj() * y[(n as i64 * l as i64 + k).rem_euclid(len) as usize])
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Accumulates `S x` into `out` (`out.len() = N · x.len()`).
pub fn periodic_apply_into(f: &FilterCoeffs, n: usize, x: &[Complex64], out: &mut [Complex64]) {
    let len = out.len() as i64;
    let scale = 1.0 / (n as f64).sqrt();
    for (l, &v) in x.iter().enumerate() {
        for (k, a) in f.indexed() {
            out[(n as i64 * l as i64 + k).rem_euclid(len) as usize] += a * v * scale;
        }
    }
}

pub fn analyze(signal: &[Complex64], bank: &FilterBank, levels: usize) -> Result<CoeffTree> {
    let n = bank.scale();
    let len = signal.len();
    let block = n
        .checked_pow(levels as u32)
        .ok_or_else(|| Error::invalid("too many levels"))?;
    if len == 0 || !len.is_multiple_of(block) {
        return Err(Error::invalid(format!(
            "signal length {len} is not a multiple of N^{levels} = {block}"
        )));
    }
    if len < bank.max_len() {
        return Err(Error::invalid(format!(
            "signal length {len} is shorter than the filter length {}",
            bank.max_len()
        )));
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let chans = bank.filters()[1..]
            .iter()
            .map(|f| periodic_adjoint(f, n, &approx))
            .collect();
        approx = periodic_adjoint(bank.lowpass(), n, &approx);
        details.push(chans);
    }
    Ok(CoeffTree {
        scale: n,
        levels,
        approx,
        details,
    })
}

pub fn synthesize(tree: &CoeffTree, bank: &FilterBank) -> Result<Vec<Complex64>> {
    tree.check_shape()?;
    let n = bank.scale();
    if tree.scale != n {
        return Err(Error::invalid(format!("tree has N = {}, bank has N = {n}", tree.scale)));
    }
    let mut approx = tree.approx.clone();
    for chans in tree.details.iter().rev() {
        let mut out = vec![ZERO; approx.len() * n];
        periodic_apply_into(bank.lowpass(), n, &approx, &mut out);
        for (f, c) in bank.filters()[1..].iter().zip(chans) {
            periodic_apply_into(f, n, c, &mut out);
        }
        approx = out;
    }
    Ok(approx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subband {
    Approx,
    Detail { level: usize, channel: usize },
}

/// Squared norm of every subband.
pub fn energy_report(tree: &CoeffTree) -> BTreeMap<Subband, f64> {
    let energy = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut out = BTreeMap::new();
    out.insert(Subband::Approx, energy(&tree.approx));
    for (lvl, chans) in tree.details.iter().enumerate() {
        for (ch, c) in chans.iter().enumerate() {
            out.insert(
                Subband::Detail {
                    level: lvl + 1,
                    channel: ch + 1,
                },
                energy(c),
            );
        }
    }
    out
}
