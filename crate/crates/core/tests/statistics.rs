//! Monte-Carlo properties that need many samples.

use xitree::checks::{check_exchangeability, CheckParams};
use xitree::lookdown::{sample_genealogy, sample_genealogy_jump_chain, sample_stationary_ultrametric, Initial, LookdownPath, Visibility};
use xitree::partitions::{apply_partition, enumerate_partitions, paintbox_sample, Partition, Permutation, SimplexPoint};
use xitree::rng::{replicate_rng, SimRng};
use xitree::stats::{chi_square_two_sample, exchangeability_check, ks_two_sample, registry};
use xitree::treespace::{alpha, beta_finite, psi_hat_n, sample_distance_matrix, DistanceMatrix, Tolerances};
use xitree::xi::{Atom, XiSpec};

fn perms(n: usize) -> Vec<Permutation> {
    let mut swap: Vec<usize> = (0..n).collect();
    swap.swap(0, 1);
    vec![Permutation::new((0..n).rev().collect()).unwrap(), Permutation::new(swap).unwrap()]
}

#[test]
fn paintbox_block_profiles_do_not_depend_on_the_element() {
    let x = SimplexPoint::new(vec![0.4, 0.25, 0.1]).unwrap();
    let n = 5;
    let mut rng = replicate_rng(9, 0);
    let mut first = vec![0u64; n + 1];
    let mut last = vec![0u64; n + 1];
    let mut pairs = [0u64; 2];
    let mut other = [0u64; 2];
    for _ in 0..40_000 {
        let pi = paintbox_sample(&x, n, &mut rng).partition;
        first[pi.block_sizes()[pi.block_of(0)]] += 1;
        pairs[pi.same_block(0, 1) as usize] += 1;
        let pi = paintbox_sample(&x, n, &mut rng).partition;
        last[pi.block_sizes()[pi.block_of(n - 1)]] += 1;
        other[pi.same_block(2, 4) as usize] += 1;
    }
    let p = chi_square_two_sample(&first[1..], &last[1..]).unwrap().p_value;
    assert!(p > 1e-3, "{first:?} vs {last:?}: p = {p}");
    let p = chi_square_two_sample(&pairs, &other).unwrap().p_value;
    assert!(p > 1e-3, "{pairs:?} vs {other:?}: p = {p}");
}

#[test]
fn coalescing_an_exchangeable_matrix_keeps_it_exchangeable() {
    let n = 4;
    let xi = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
    let x = SimplexPoint::new(vec![0.5, 0.3]).unwrap();
    let mut rng = replicate_rng(31, 0);
    let samples: Vec<DistanceMatrix<f64>> = (0..600)
        .map(|_| {
            let rho = sample_stationary_ultrametric(&xi, n, &mut rng).unwrap();
            let pi = paintbox_sample(&x, n, &mut rng).partition;
            apply_partition(&pi, &rho).unwrap()
        })
        .collect();
    let report = exchangeability_check(&samples, &perms(n), &registry(n, false), 0.01, 200, &mut rng).unwrap();
    assert!(report.passed, "{:?}", report.tests);

    // a fixed, non-exchangeable partition is detected
    let fixed = Partition::from_index_labels(&[0, 0, 1, 2]);
    let broken: Vec<DistanceMatrix<f64>> = (0..600)
        .map(|_| apply_partition(&fixed, &sample_stationary_ultrametric(&xi, n, &mut rng).unwrap()).unwrap())
        .collect();
    let report = exchangeability_check(&broken, &perms(n), &registry(n, false), 0.01, 200, &mut rng).unwrap();
    assert!(!report.passed);
}

#[test]
fn kingman_lookdown_stays_exchangeable() {
    let xi = XiSpec::kingman(1.0).unwrap();
    let report = check_exchangeability(&xi, &CheckParams::default(), 41).unwrap();
    assert!(report.passed, "{}", report.summary());
}

/// Fraction of levels `i < n` at time `t` with `v_t(i) = ½ min_{j < big, j != i} ρ_t(i, j)`
/// when `big` levels are simulated from `β_big` of a stationary start.
fn mark_equality_frequency(big: usize, n: usize, t: f64, reps: usize, rng: &mut SimRng) -> f64 {
    let xi = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
    let tol = Tolerances::default();
    let mut hits = 0;
    for _ in 0..reps {
        let rho0 = sample_stationary_ultrametric(&xi, big, rng).unwrap();
        let rv0 = beta_finite(&rho0, true, &tol).unwrap();
        let path = LookdownPath::simulate(&xi, Initial::Rv(rv0), Visibility::Rv, t, rng).unwrap();
        let rv = path.evolve_rv(t).unwrap();
        let rho = alpha(&rv);
        for i in 0..n {
            let m = (0..big).filter(|&j| j != i).map(|j| *rho.get(i, j)).fold(f64::INFINITY, f64::min);
            assert!(rv.v[i] <= 0.5 * m + 1e-12);
            if (rv.v[i] - 0.5 * m).abs() <= 1e-9 {
                hits += 1;
            }
        }
    }
    hits as f64 / (reps * n) as f64
}

#[test]
fn marks_are_attained_more_often_with_more_levels() {
    let mut rng = replicate_rng(51, 0);
    let freqs: Vec<f64> = [3, 8, 24]
        .iter()
        .map(|&big| mark_equality_frequency(big, 3, 1.0, 400, &mut rng))
        .collect();
    assert!(freqs.windows(2).all(|w| w[0] <= w[1]), "{freqs:?}");
    assert!(freqs[2] > freqs[0], "{freqs:?}");
}

/// Fraction of resampled marked matrices of order `k` with `β_k(α(r, v)) = (r, v)`.
fn decomposition_recovery_frequency(k: usize, reps: usize, rng: &mut SimRng) -> f64 {
    let xi = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
    let tol = Tolerances::default();
    let leaves: Vec<usize> = (0..40).collect();
    let mut hits = 0;
    for _ in 0..reps {
        let g = sample_genealogy(&xi, 40, rng).unwrap();
        let space = psi_hat_n(&g.sampled_decomposition(&leaves));
        let (rv, _) = sample_distance_matrix(&space, k, rng).unwrap();
        let again = beta_finite(&alpha(&rv), false, &tol).unwrap();
        if again.v.iter().zip(&rv.v).all(|(a, b)| (a - b).abs() <= 1e-9) {
            hits += 1;
        }
    }
    hits as f64 / reps as f64
}

#[test]
fn resampled_decompositions_are_recovered_more_often_for_larger_samples() {
    let mut rng = replicate_rng(21, 0);
    let freqs: Vec<f64> = [3, 10, 40]
        .iter()
        .map(|&k| decomposition_recovery_frequency(k, 300, &mut rng))
        .collect();
    assert!(freqs.windows(2).all(|w| w[0] <= w[1]), "{freqs:?}");
    assert!(freqs[2] > freqs[0], "{freqs:?}");
}

#[test]
fn thinned_and_jump_chain_genealogies_agree() {
    let xi = XiSpec::new(0.5, vec![Atom { weight: 1.0, point: SimplexPoint::new(vec![0.5, 0.2]).unwrap() }]).unwrap();
    let n = 4;
    let classes = enumerate_partitions(n).unwrap();
    let mut rng = replicate_rng(61, 0);
    let mut counts = [vec![0u64; classes.len()], vec![0u64; classes.len()]];
    let mut tmrca = [Vec::new(), Vec::new()];
    for _ in 0..20_000 {
        let gs = [
            sample_genealogy(&xi, n, &mut rng).unwrap(),
            sample_genealogy_jump_chain(&xi, n, &mut rng).unwrap(),
        ];
        for (k, g) in gs.iter().enumerate() {
            let pi = g.partition_at(0.3);
            counts[k][classes.iter().position(|c| *c == pi).unwrap()] += 1;
            tmrca[k].push(g.tmrca());
        }
    }
    let p = chi_square_two_sample(&counts[0], &counts[1]).unwrap().p_value;
    assert!(p > 1e-3, "{counts:?}: p = {p}");
    let d = ks_two_sample(&tmrca[0], &tmrca[1]);
    assert!(d < 0.03, "KS {d}");
}
