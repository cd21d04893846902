#![allow(dead_code)]

use loopwave::filters::FilterBank;
use loopwave::loops::{loop_to_filters, random_spins, synthesize_from_spins, PolyLoop, SpinFactorization};
use loopwave::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Case `i` of a sweep over `N ∈ {2, 3, 4}` and `k ∈ 1..=8` rank-one factors.
pub fn sweep_shape(i: usize) -> (usize, usize) {
    (2 + i % 3, 1 + i % 8)
}

pub fn random_loop(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (SpinFactorization, PolyLoop) {
    let sf = random_spins(rng, n, k, 1, true);
    let lp = synthesize_from_spins(&sf).unwrap();
    (sf, lp)
}

pub fn random_bank(rng: &mut ChaCha8Rng, n: usize, k: usize) -> FilterBank {
    loop_to_filters(&random_loop(rng, n, k).1).unwrap()
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng)))
        .collect()
}
