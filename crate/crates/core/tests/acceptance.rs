//! End-to-end checks at their stated tolerances. Each test prints one
//! PASS/FAIL line before asserting.

use ctxent::gleason::{check_measure, gleason_roundtrip, measure_from_state, ProjectionMeasure};
use ctxent::quantum::born_weights;
use ctxent::{
    binary_entropy, coarsen, contextual_entropy, derive_seed, eigencontext, haar_like_unitary,
    invert_binary_entropy, majorizes, oracle_from_state, random_maximal_context, reconstruct,
    reconstruct_qubit, shannon_of, von_neumann, Branch, Context, DensityMatrix,
    ReconstructionConfig, ReconstructionReport,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, ok: bool, detail: String) {
    println!("{name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name} failed: {detail}");
}

fn run(rho: DensityMatrix, seed: u64) -> ReconstructionReport {
    let oracle = oracle_from_state(rho);
    let cfg = ReconstructionConfig {
        seed,
        ..ReconstructionConfig::default()
    };
    reconstruct(&oracle, &cfg).unwrap()
}

fn weights(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn mixed_suite() -> Vec<(DensityMatrix, ReconstructionReport)> {
    let mut out = Vec::new();
    for n in 3..=6 {
        for s in 0..100 {
            let seed = derive_seed(n as u64, s);
            let rho = DensityMatrix::random(n, n, seed).unwrap();
            out.push((rho.clone(), run(rho, seed)));
        }
    }
    out
}

fn pure_suite() -> Vec<(DensityMatrix, ReconstructionReport)> {
    let mut out = Vec::new();
    for n in 3..=5 {
        for s in 0..100 {
            let seed = derive_seed(100 + n as u64, s);
            let rho = DensityMatrix::random_pure(n, seed);
            out.push((rho.clone(), run(rho, seed)));
        }
    }
    out
}

/// Spectra built to land in one selection case each, plus the two
/// eigenvalue orderings of every rank-two state.
fn branch_suite() -> Vec<(Branch, DensityMatrix, ReconstructionReport)> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xb4a2);
    for t in 0..60u64 {
        let n = 3 + (t as usize % 3);
        let basis = haar_like_unitary(n, derive_seed(200, t));

        // all eigenvalues below ½: the top row already sums to one
        let a = weights(n, 1.0, 1.8, &mut rng);
        // one dominant eigenvalue: exactly one column flips
        let mut b1 = weights(n - 1, 1.0, 2.0, &mut rng);
        let top = rng.random_range(0.55..0.9);
        b1.iter_mut().for_each(|x| *x *= 1.0 - top);
        b1.insert(rng.random_range(0..n), top);

        for (branch, spectrum) in [(Branch::MixedA, a), (Branch::MixedB1, b1)] {
            let rho = DensityMatrix::from_spectrum(&spectrum, &basis).unwrap();
            out.push((branch, rho.clone(), run(rho, t)));
        }
    }
    // c·P_j + (1−c)·P_k and the swapped ordering
    let cs = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45];
    for (t, &c) in cs.iter().cycle().take(64).enumerate() {
        let t = t as u64;
        let n = 3 + (t as usize % 3);
        let basis = haar_like_unitary(n, derive_seed(300, t));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut spectrum = vec![0.0; n];
        let (j, k) = if t.is_multiple_of(2) {
            (idx[0], idx[1])
        } else {
            (idx[1], idx[0])
        };
        spectrum[j] = c;
        spectrum[k] = 1.0 - c;
        let rho = DensityMatrix::from_spectrum(&spectrum, &basis).unwrap();
        out.push((Branch::MixedB2, rho.clone(), run(rho, t)));
    }
    out
}

#[test]
fn mixed_state_round_trip() {
    let suite = mixed_suite();
    let worst = suite
        .iter()
        .map(|(_, r)| r.residual.unwrap())
        .fold(0.0, f64::max);
    verdict(
        "mixed_state_round_trip",
        worst <= 1e-6,
        format!("{} states, max trace distance {worst:.3e}", suite.len()),
    );
}

#[test]
fn pure_state_round_trip() {
    let suite = pure_suite();
    let wrong_branch = suite
        .iter()
        .filter(|(_, r)| r.branch != Branch::Pure)
        .count();
    let worst = suite
        .iter()
        .map(|(rho, r)| r.state().matrix().trace_product(rho.matrix()).re)
        .fold(1.0, f64::min);
    verdict(
        "pure_state_round_trip",
        wrong_branch == 0 && worst >= 1.0 - 1e-8,
        format!(
            "{} states, {wrong_branch} off-branch, min fidelity {worst:.12}",
            suite.len()
        ),
    );
}

#[test]
fn branch_coverage() {
    let suite = branch_suite();
    let count = |b: Branch| suite.iter().filter(|(_, _, r)| r.branch == b).count();
    let mismatched = suite.iter().filter(|(b, _, r)| *b != r.branch).count();
    let worst = suite
        .iter()
        .map(|(_, _, r)| r.residual.unwrap())
        .fold(0.0, f64::max);
    let (a, b1, b2) = (
        count(Branch::MixedA),
        count(Branch::MixedB1),
        count(Branch::MixedB2),
    );
    verdict(
        "branch_coverage",
        a >= 50 && b1 >= 50 && b2 >= 50 && mismatched == 0 && worst <= 1e-6,
        format!("mixed_a {a}, mixed_b1 {b1}, mixed_b2 {b2}, {mismatched} mismatched, max trace distance {worst:.3e}"),
    );
}

#[test]
fn minimality_over_maximal_contexts() {
    let mut worst_gap = f64::INFINITY;
    let mut worst_eigen: f64 = 0.0;
    let mut states = 0;
    for n in 3..=5 {
        for s in 0..50 {
            let seed = derive_seed(400 + n as u64, s);
            let rho = DensityMatrix::random(n, 1 + (s as usize % n), seed).unwrap();
            let vn = von_neumann(&rho).unwrap();
            let min = (0..1000)
                .map(|k| {
                    contextual_entropy(&rho, &random_maximal_context(n, derive_seed(seed, k)))
                        .unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            worst_gap = worst_gap.min(min - vn);
            let at_eigen = contextual_entropy(&rho, &eigencontext(&rho).unwrap()).unwrap();
            worst_eigen = worst_eigen.max((at_eigen - vn).abs());
            states += 1;
        }
    }
    verdict(
        "minimality_over_maximal_contexts",
        worst_gap >= -1e-9 && worst_eigen <= 1e-10,
        format!("{states} states, min(sampled − S) {worst_gap:.3e}, eigencontext error {worst_eigen:.3e}"),
    );
}

#[test]
fn monotonicity_and_recursion() {
    let mut worst_increase = f64::NEG_INFINITY;
    let mut worst_recursion: f64 = 0.0;
    for t in 0..500u64 {
        let seed = derive_seed(500, t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let rho = DensityMatrix::random(n, rng.random_range(1..=n), derive_seed(seed, 1)).unwrap();
        // a random context, itself possibly coarse, and a partition of it
        let base = random_maximal_context(n, derive_seed(seed, 2));
        let fine_blocks = partition(n, &mut rng);
        let fine = coarsen(&base, &fine_blocks).unwrap();
        let blocks = partition(fine.len(), &mut rng);
        let coarse = coarsen(&fine, &blocks).unwrap();

        let hf = contextual_entropy(&rho, &fine).unwrap();
        let hc = contextual_entropy(&rho, &coarse).unwrap();
        worst_increase = worst_increase.max(hc - hf);

        let wf = born_weights(&rho, &fine).unwrap();
        let within: f64 = blocks
            .iter()
            .map(|b| {
                let q: f64 = b.iter().map(|&i| wf[i]).sum();
                if q > 0.0 {
                    q * shannon_of(&b.iter().map(|&i| wf[i] / q).collect::<Vec<_>>())
                } else {
                    0.0
                }
            })
            .sum();
        worst_recursion = worst_recursion.max((hf - hc - within).abs());
    }
    verdict(
        "monotonicity_and_recursion",
        worst_increase <= 1e-10 && worst_recursion <= 1e-10,
        format!(
            "500 triples, max increase {worst_increase:.3e}, recursion error {worst_recursion:.3e}"
        ),
    );
}

fn partition(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let blocks = rng.random_range(1..=n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out = vec![Vec::new(); blocks];
    for (pos, &i) in idx.iter().enumerate() {
        let b = if pos < blocks {
            pos
        } else {
            rng.random_range(0..blocks)
        };
        out[b].push(i);
    }
    out
}

#[test]
fn schur_horn_sampled() {
    let mut failures = 0;
    for t in 0..1000u64 {
        let seed = derive_seed(600, t);
        let n = 2 + (t as usize % 5);
        let rho = DensityMatrix::random(n, 1 + (t as usize / 5) % n, seed).unwrap();
        let rotated = rho
            .matrix()
            .conjugate_by(&haar_like_unitary(n, derive_seed(seed, 1)));
        let diag: Vec<f64> = rotated.diagonal().iter().map(|z| z.re).collect();
        if !majorizes(&rho.eigenvalues().unwrap(), &diag).unwrap() {
            failures += 1;
        }
    }
    verdict(
        "schur_horn_sampled",
        failures == 0,
        format!("1000 pairs, {failures} failures"),
    );
}

#[test]
fn binary_entropy_inversion_grid() {
    let worst = (0..1000)
        .map(|k| {
            let c = 0.5 * k as f64 / 999.0;
            (invert_binary_entropy(binary_entropy(c)).unwrap() - c).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        "binary_entropy_inversion_grid",
        worst <= 1e-10,
        format!("1000 points, max error {worst:.3e}"),
    );
}

#[test]
fn gleason_round_trip() {
    let cfg = ReconstructionConfig::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [3, 4] {
        for s in 0..50 {
            let seed = derive_seed(700 + n as u64, s);
            let rho = DensityMatrix::random(n, 1 + (s as usize % n), seed).unwrap();
            let cfg = ReconstructionConfig {
                seed,
                ..cfg.clone()
            };
            let report = gleason_roundtrip(&measure_from_state(rho), &cfg).unwrap();
            worst = worst.max(report.max_deviation);
            count += 1;
        }
    }

    let mut missed = 0;
    let mut defective = 0;
    for n in [3, 4] {
        for s in 0..10u64 {
            let rho = DensityMatrix::random(n, n, derive_seed(800, s)).unwrap();
            let (r1, r2, r3) = (rho.clone(), rho.clone(), rho);
            let measures = [
                // total mass 0.9
                ProjectionMeasure::from_fn(n, move |p| {
                    0.9 * r1.matrix().trace_product(p.matrix()).re
                }),
                // normalized but not additive
                ProjectionMeasure::from_fn(n, move |p| {
                    r2.matrix().trace_product(p.matrix()).re.powi(2)
                }),
                ProjectionMeasure::from_fn(n, move |p| (p.rank() as f64 / n as f64).sqrt()),
                // additive but normalized to 1.1
                ProjectionMeasure::from_fn(n, move |p| {
                    1.1 * r3.matrix().trace_product(p.matrix()).re
                }),
            ];
            for mu in &measures {
                defective += 1;
                if check_measure(mu, 1000, derive_seed(900, s)).passes(1e-6) {
                    missed += 1;
                }
            }
        }
    }
    verdict(
        "gleason_round_trip",
        worst <= 1e-6 && missed == 0,
        format!("{count} measures, max deviation {worst:.3e}; {defective} defective measures, {missed} missed"),
    );
}

#[test]
fn qubit_ambiguity() {
    let cfg = ReconstructionConfig::default();
    let mut wrong_count = 0;
    let mut worst: f64 = 0.0;
    let (mut two, mut one) = (0, 0);
    for s in 0..50u64 {
        let seed = derive_seed(1000, s);
        let rho = match s % 10 {
            0 => DensityMatrix::maximally_mixed(2),
            1 => DensityMatrix::random_pure(2, seed),
            _ => DensityMatrix::random(2, 2, seed).unwrap(),
        };
        let ev = rho.eigenvalues().unwrap();
        let gap = (ev[1] - ev[0]).abs();
        let oracle = oracle_from_state(rho);
        let report = reconstruct_qubit(&oracle, &cfg).unwrap();
        let expected = if gap > 1e-6 { 2 } else { 1 };
        if report.candidates.len() != expected {
            wrong_count += 1;
        }
        if report.candidates.len() == 2 {
            two += 1;
        } else {
            one += 1;
        }
        for p in report.context.projectors() {
            let ctx = Context::two_outcome(p).unwrap();
            let target = oracle.query(&ctx).unwrap();
            for cand in &report.candidates {
                worst = worst.max((contextual_entropy(cand, &ctx).unwrap() - target).abs());
            }
        }
    }
    verdict(
        "qubit_ambiguity",
        wrong_count == 0 && worst <= 1e-9,
        format!("50 qubits ({two} with two candidates, {one} with one), {wrong_count} miscounted, max entropy error {worst:.3e}"),
    );
}

#[test]
fn query_budgets() {
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut check = |r: &ReconstructionReport, n: usize| {
        let expected = match r.branch {
            Branch::MixedB2 => 2 * n,
            _ => n,
        } as u64;
        if r.step1_queries != 1 || r.post_search_queries() != expected {
            violations.push(format!("{:?} n={n}: {}", r.branch, r.post_search_queries()));
        }
        checked += 1;
    };
    for (rho, r) in mixed_suite().iter().chain(&pure_suite()) {
        check(r, rho.dim());
    }
    for (_, rho, r) in &branch_suite() {
        check(r, rho.dim());
    }
    verdict(
        "query_budgets",
        violations.is_empty(),
        format!(
            "{checked} reconstructions, {} over budget {:?}",
            violations.len(),
            violations.first()
        ),
    );
}
