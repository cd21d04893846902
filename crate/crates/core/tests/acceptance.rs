//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use loopwave::cascade::{cascade_iterate, frame_map_apply, refinement_residual, translate_gram, SampledFunction};
use loopwave::cuntz::{
    apply_on_line, build_operators, detect_monomial_corner, invariant_subspace_probe, subband_ladder, verify_cuntz,
    ProbeCandidate,
};
use loopwave::filters::{preset_bank, FilterBank, FilterCoeffs};
use loopwave::linalg::{identity, max_abs, root_of_unity};
use loopwave::loops::{
    factor_to_spins, filters_to_loop, loop_distance, loop_entry_by_root_sum, loop_to_filters, synthesize_from_spins,
    unitarity_check_with,
};
use loopwave::transform::{analyze, energy_report, synthesize};
use loopwave::Complex64;
use rand::Rng;

use common::{random_bank, random_loop, random_signal, rng, sweep_shape};

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

const PRESETS: [&str; 3] = ["haar", "db4", "stretched-haar:1"];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn cuntz_identities() -> Verdict {
    let start = Instant::now();
    let mut banks: Vec<FilterBank> = PRESETS.iter().map(|p| preset_bank(p).unwrap()).collect();
    let mut r = rng(1);
    for i in 0..100 {
        let (n, k) = sweep_shape(i);
        banks.push(random_bank(&mut r, n, k));
    }
    let mut worst = 0.0f64;
    for bank in &banks {
        let base = bank.max_len() * bank.scale();
        for period in [base, base * bank.scale()] {
            let rep = verify_cuntz(&build_operators(bank, period).unwrap());
            worst = worst
                .max(rep.max_residual_orthogonality)
                .max(rep.max_residual_completeness);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-12 && secs < 10.0,
        format!(
            "{} banks, worst residual {worst:.2e} (tol 1e-12), {secs:.2} s (limit 10 s)",
            banks.len()
        ),
    )
}

fn loop_bijection() -> Verdict {
    let mut banks: Vec<FilterBank> = PRESETS.iter().map(|p| preset_bank(p).unwrap()).collect();
    let mut r = rng(2);
    for i in 0..20 {
        let (n, k) = sweep_shape(i);
        banks.push(random_bank(&mut r, n, k));
    }
    // The regrouping itself must be an exact permutation; the fixed 1/√N
    // scale costs at most one rounding each way.
    let mut permutation = true;
    let mut bit_exact = 0;
    let mut roundtrip = 0.0f64;
    let mut worst = 0.0f64;
    for bank in &banks {
        let n = bank.scale();
        let s = 1.0 / (n as f64).sqrt();
        let lp = filters_to_loop(bank);
        let back = loop_to_filters(&lp).unwrap();
        for j in 0..n {
            for idx in 0..bank.max_len() {
                let entry = lp.coeffs()[idx / n][(j, idx % n)];
                let tap = bank.filter(j).tap(idx as i64);
                permutation &= entry == tap * s;
                permutation &= back.filter(j).tap(idx as i64) == entry * (n as f64).sqrt();
                let again = back.filter(j).tap(idx as i64);
                roundtrip = roundtrip.max((again - tap).norm() / (tap.norm() * f64::EPSILON).max(f64::MIN_POSITIVE));
            }
        }
        let relooped = filters_to_loop(&back);
        roundtrip = roundtrip.max(loop_distance(&relooped, &lp) / f64::EPSILON);
        if back == bank.dense() && relooped == lp {
            bit_exact += 1;
        }
        for s in 0..64 {
            // off the roots of unity so the N-th roots do not repeat the grid
            let z = root_of_unity(s, 64) * Complex64::from_polar(1.0, 0.0123);
            let a = lp.eval(z);
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((loop_entry_by_root_sum(bank, j, k, z) - a[(j, k)]).norm());
                }
            }
        }
    }
    (
        permutation && roundtrip <= 2.0 && worst <= 1e-12,
        format!(
            "tap permutation exact: {permutation}; round-trip error at most {roundtrip:.2} eps relative \
             ({bit_exact}/{} banks bit-identical); root-sum gap {worst:.2e} over 64 points (tol 1e-12)",
            banks.len()
        ),
    )
}

fn unitarity() -> Verdict {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    let mut weakest_detection = f64::INFINITY;
    for i in 0..100 {
        let (n, k) = sweep_shape(i);
        let (_, lp) = random_loop(&mut r, n, k);
        let rep = unitarity_check_with(&lp, 2 * lp.degree() + 1, 1e-12).unwrap();
        worst = worst.max(rep.max_residual);

        let bank = loop_to_filters(&lp).unwrap();
        let mut filters = bank.filters().to_vec();
        let j = r.random_range(0..n);
        let t = r.random_range(0..filters[j].len());
        let mut taps = filters[j].taps().to_vec();
        taps[t] += 1e-3;
        filters[j] = FilterCoeffs::new(taps, filters[j].offset()).unwrap();
        let bad = filters_to_loop(&FilterBank::new(n, bank.genus(), filters).unwrap());
        let rep = unitarity_check_with(&bad, 2 * bad.degree() + 1, 1e-12).unwrap();
        weakest_detection = weakest_detection.min(rep.max_residual);
    }
    (
        worst <= 1e-12 && weakest_detection >= 1e-4,
        format!("worst residual {worst:.2e} (tol 1e-12); smallest perturbed residual {weakest_detection:.2e} (need >= 1e-4)"),
    )
}

fn spin_roundtrip() -> Verdict {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (n, k) = sweep_shape(i);
        let (_, lp) = random_loop(&mut r, n, k);
        let again = synthesize_from_spins(&factor_to_spins(&lp).unwrap()).unwrap();
        worst = worst.max(loop_distance(&lp, &again));
    }
    let db4 = factor_to_spins(&filters_to_loop(&preset_bank("db4").unwrap())).unwrap();
    (
        worst <= 1e-10 && db4.factors.len() == 1,
        format!(
            "worst loop distance {worst:.2e} (tol 1e-10); db4 factors: {}",
            db4.factors.len()
        ),
    )
}

fn irreducibility() -> Verdict {
    let corner = |name: &str| detect_monomial_corner(&filters_to_loop(&preset_bank(name).unwrap()));
    let haar = corner("haar");
    let stretched = corner("stretched-haar:1");
    let db4 = corner("db4");
    let named = haar.reducible
        && haar.size == 2
        && haar.exponents == [0, 0]
        && stretched.reducible
        && stretched.exponents == [0, 1]
        && !db4.reducible;

    let mut r = rng(5);
    let irreducible = (0..100)
        .filter(|&i| {
            let (n, k) = sweep_shape(i);
            !detect_monomial_corner(&random_loop(&mut r, n, k).1).reducible
        })
        .count();

    let haar_probe = invariant_subspace_probe(&preset_bank("haar").unwrap(), 32).unwrap();
    let db4_probe = invariant_subspace_probe(&preset_bank("db4").unwrap(), 32).unwrap();
    let probe = haar_probe.candidate == Some(ProbeCandidate::HalfLine)
        && haar_probe.residual <= 1e-14
        && !db4_probe.candidate_found
        && db4_probe.residual >= 0.1;
    (
        named && irreducible >= 95 && probe,
        format!(
            "haar M={} exps {:?}; stretched exps {:?}; db4 reducible={}; random irreducible {irreducible}/100 (need 95); \
             probe haar residual {:.1e} (tol 1e-14), db4 leak {:.3} (need >= 0.1)",
            haar.size, haar.exponents, stretched.exponents, db4.reducible, haar_probe.residual, db4_probe.residual
        ),
    )
}

fn cascade() -> Verdict {
    let start = Instant::now();
    let haar_bank = preset_bank("haar").unwrap();
    let haar = cascade_iterate(&haar_bank, 8, 60).unwrap();
    let haar_res = refinement_residual(&haar.phi, &haar_bank);
    let boxed = SampledFunction::indicator(2, 8, 0, 1, 1.0).unwrap();
    let haar_ok =
        haar.converged && haar.iterations == 1 && haar_res == 0.0 && haar.phi.sup_distance(&boxed).unwrap() == 0.0;

    let db4_bank = preset_bank("db4").unwrap();
    let db4 = cascade_iterate(&db4_bank, 10, 60).unwrap();
    let db4_res = refinement_residual(&db4.phi, &db4_bank);
    let (lo, hi) = db4.phi.support().unwrap();
    let db4_ok = db4.converged && db4.iterations <= 60 && db4_res <= 1e-8 && lo >= 0.0 && hi <= 3.0;

    let ind = SampledFunction::indicator(2, 8, 0, 3, 1.0).unwrap();
    let ind_res = refinement_residual(&ind, &preset_bank("stretched-haar:1").unwrap());
    let secs = start.elapsed().as_secs_f64();
    (
        haar_ok && db4_ok && ind_res == 0.0 && secs < 5.0,
        format!(
            "haar {} iter residual {haar_res:.1e}; db4 {} iters residual {db4_res:.2e} (tol 1e-8) support [{lo}, {hi}]; \
             1_[0,3) residual {ind_res:.1e}; {secs:.2} s (limit 5 s)",
            haar.iterations, db4.iterations
        ),
    )
}

fn intertwining() -> Verdict {
    let bank = preset_bank("db4").unwrap();
    let n = bank.scale();
    let low = bank.lowpass();
    let out = cascade_iterate(&bank, 10, 60).unwrap();
    let res = refinement_residual(&out.phi, &bank);
    let mut r = rng(7);
    let mut discrete = 0.0f64;
    let mut sampled_ok = true;
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let first = r.random_range(-3i64..=3);
        let xi = random_signal(&mut r, 6);
        let (s0xi, s0first) = apply_on_line(&bank, 0, &xi, first);

        // pair both sides with a random test sequence c_p
        let test = random_signal(&mut r, 64);
        let cp = |p: i64| test[(p + 32) as usize];
        let lhs: Complex64 = xi
            .iter()
            .enumerate()
            .flat_map(|(i, &x)| {
                let k = first + i as i64;
                low.indexed().map(move |(l, a)| (k, l, x * a))
            })
            .map(|(k, l, v)| v * cp(n as i64 * k + l))
            .sum();
        let rhs: Complex64 = s0xi
            .iter()
            .enumerate()
            .map(|(i, &v)| v * cp(s0first + i as i64))
            .sum::<Complex64>()
            * (n as f64).sqrt();
        discrete = discrete.max((lhs - rhs).norm());

        let left = frame_map_apply(&out.phi, &xi, first).dilate().unwrap();
        let right = frame_map_apply(&out.phi, &s0xi, s0first)
            .coarsen(out.phi.depth() - 1)
            .unwrap();
        let gap = left.sup_distance(&right).unwrap();
        let l1: f64 = xi.iter().map(|z| z.norm()).sum();
        let bound = 10.0 * res * l1;
        sampled_ok &= gap <= bound;
        worst_ratio = worst_ratio.max(gap / (res * l1));
    }
    (
        discrete <= 1e-12 && sampled_ok,
        format!(
            "regrouping gap {discrete:.2e} (tol 1e-12); sampled gap at most {worst_ratio:.2} x residual x |xi|_1 (limit 10)"
        ),
    )
}

fn frame_bounds() -> Verdict {
    let haar = cascade_iterate(&preset_bank("haar").unwrap(), 6, 60).unwrap();
    let hg = translate_gram(&haar.phi, 2).unwrap();
    let haar_ok = hg.gram == identity(3);

    // box overlaps: ⟨1_[0,3), 1_[l,l+3)⟩ / 3 = (3 − |l|)/3
    let boxed = SampledFunction::indicator(2, 6, 0, 3, 1.0 / 3f64.sqrt()).unwrap();
    let sg = translate_gram(&boxed, 3).unwrap();
    let want = [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
    let box_err =
        sg.h.iter()
            .zip(want)
            .map(|(h, w)| (h - c(w)).norm())
            .fold(0.0, f64::max);
    let (c1, c2) = sg.frame_bounds;

    let db4 = cascade_iterate(&preset_bank("db4").unwrap(), 12, 60).unwrap();
    let dg = translate_gram(&db4.phi, 3).unwrap();
    let db4_err = max_abs(&(&dg.gram - identity(4)));
    (
        haar_ok && box_err <= 1e-12 && c1 < c2 && db4_err <= 1e-2,
        format!(
            "haar gram exact: {haar_ok}; stretched h error {box_err:.1e}, bounds ({c1:.4}, {c2:.4}); \
             db4 gram error {db4_err:.2e} at depth 12 (tol 1e-2)"
        ),
    )
}

fn reconstruction() -> Verdict {
    let mut r = rng(9);
    let mut err = 0.0f64;
    let mut energy = 0.0f64;
    let presets = ["haar", "db4", "stretched-haar:1", "stretched-haar:2"];
    for name in presets {
        let bank = preset_bank(name).unwrap();
        for i in 0..100 {
            let levels = 1 + i % 3;
            let x = random_signal(&mut r, 64);
            let tree = analyze(&x, &bank, levels).unwrap();
            let y = synthesize(&tree, &bank).unwrap();
            err = err.max(x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            let ex: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let ec: f64 = energy_report(&tree).values().sum();
            energy = energy.max((ex - ec).abs() / ex);
        }
    }
    (
        err <= 1e-12 && energy <= 1e-12,
        format!(
            "{} signals, max reconstruction error {err:.2e}, max relative energy gap {energy:.2e} (tol 1e-12)",
            100 * presets.len()
        ),
    )
}

fn subband_ladder_check() -> Verdict {
    let mut r = rng(10);
    let banks = [
        preset_bank("haar").unwrap(),
        preset_bank("db4").unwrap(),
        random_bank(&mut r, 4, 2),
    ];
    let l = 64;
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut ranks = Vec::new();
    for bank in &banks {
        let n = bank.scale();
        let ladder = subband_ladder(&build_operators(bank, l).unwrap(), 3).unwrap();
        let want: Vec<usize> = (1..=3).map(|m| l * (n - 1) / n.pow(m)).collect();
        ok &= ladder.ranks == want;
        ranks.push(ladder.ranks.clone());
        let res = ladder.residuals();
        worst = worst
            .max(res.idempotence)
            .max(res.self_adjointness)
            .max(res.mutual_orthogonality)
            .max(res.partition_of_identity);
    }
    (
        ok && worst <= 1e-10,
        format!("ranks {ranks:?} (N = 2, 2, 4); worst residual {worst:.2e} (tol 1e-10)"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("cuntz identities", cuntz_identities),
        ("loop bijection", loop_bijection),
        ("unitarity", unitarity),
        ("spin round-trip", spin_roundtrip),
        ("irreducibility", irreducibility),
        ("cascade and refinement", cascade),
        ("intertwining", intertwining),
        ("frame bounds", frame_bounds),
        ("reconstruction and parseval", reconstruction),
        ("subband ladder", subband_ladder_check),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = run();
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
