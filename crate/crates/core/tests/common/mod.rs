//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_traits::{One, Zero};
use rand::Rng;
use xitree::partitions::{Partition, SemiPartition, SimplexPoint};
use xitree::scalar::ratio;
use xitree::treespace::DistanceMatrix;
use xitree::xi::{Atom, XiSpec};
use xitree::Exact;

/// Kingman, `δ_(1/2)` and a mixture `½ δ_0 + δ_(1/2) + ½ δ_(1/3, 1/4)`.
pub fn three_specs() -> Vec<(&'static str, XiSpec<Exact>)> {
    let atom = |w: Exact, x: Vec<Exact>| Atom {
        weight: w,
        point: SimplexPoint::new(x).unwrap(),
    };
    vec![
        ("kingman", XiSpec::kingman(Exact::one()).unwrap()),
        ("lambda-half", XiSpec::point_mass(Exact::one(), vec![ratio(1, 2)]).unwrap()),
        (
            "mixture",
            XiSpec::new(
                ratio(1, 2),
                vec![
                    atom(Exact::one(), vec![ratio(1, 2)]),
                    atom(ratio(1, 2), vec![ratio(1, 3), ratio(1, 4)]),
                ],
            )
            .unwrap(),
        ),
    ]
}

/// Every assignment of `[n]` to the intervals `0..m` of an atom (`m` = dust)
/// with its probability.
fn assignments(x: &[Exact], n: usize) -> Vec<(Vec<usize>, Exact)> {
    let m = x.len();
    let dust = Exact::one() - x.iter().fold(Exact::zero(), |a, b| a + b);
    let prob = |k: usize| if k == m { dust.clone() } else { x[k].clone() };
    let mut out = vec![(Vec::new(), Exact::one())];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|(a, p)| {
                (0..=m).map(move |k| {
                    let mut a2 = a.clone();
                    a2.push(k);
                    (a2, p.clone())
                })
            })
            .map(|(a, p)| {
                let last = *a.last().unwrap();
                let q = p * prob(last);
                (a, q)
            })
            .collect();
    }
    out
}

fn l2(x: &[Exact]) -> Exact {
    x.iter().fold(Exact::zero(), |a, b| a + b * b)
}

/// `λ_π` from the paintbox by exhaustive enumeration of where each element
/// lands, plus the Kingman pair rate.
pub fn paintbox_partition_rate(xi: &XiSpec<Exact>, pi: &Partition) -> Exact {
    let n = pi.n();
    let mut total = Exact::zero();
    for atom in xi.atoms() {
        let x = atom.point.coords();
        let m = x.len();
        let scale = atom.weight.clone() / l2(x);
        for (a, p) in assignments(x, n) {
            let labels: Vec<usize> = a.iter().enumerate().map(|(i, &k)| if k == m { m + 1 + i } else { k }).collect();
            if Partition::from_index_labels(&labels) == *pi {
                total = total + scale.clone() * p;
            }
        }
    }
    if pi.num_blocks() == n - 1 {
        total = total + xi.kingman_mass().clone();
    }
    total
}

/// `λ_{n,σ}` from the paintbox: elements in a common non-dust interval form a
/// block, dust elements are uncovered. `None` for the infinite rate of a
/// lone singleton block under a Kingman component.
pub fn paintbox_semipartition_rate(xi: &XiSpec<Exact>, sigma: &SemiPartition) -> Option<Exact> {
    let n = sigma.n();
    let blocks = sigma.blocks();
    if *xi.kingman_mass() > Exact::zero() && blocks.len() == 1 && blocks[0].len() == 1 {
        return None;
    }
    let mut total = Exact::zero();
    for atom in xi.atoms() {
        let x = atom.point.coords();
        let m = x.len();
        let scale = atom.weight.clone() / l2(x);
        for (a, p) in assignments(x, n) {
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
            for (i, &k) in a.iter().enumerate() {
                if k < m {
                    groups[k].push(i);
                }
            }
            groups.retain(|g| !g.is_empty());
            if groups.is_empty() {
                continue;
            }
            if SemiPartition::new(n, groups).unwrap() == *sigma {
                total = total + scale.clone() * p;
            }
        }
    }
    if blocks.len() == 1 && blocks[0].len() == 2 {
        total = total + xi.kingman_mass().clone();
    }
    Some(total)
}

/// `E T_MRCA = Σ_{k=2}^n 2 / (k (k - 1))` for Kingman at pair rate 1.
pub fn kingman_tmrca_mean(n: usize) -> f64 {
    (2..=n).map(|k| 2.0 / (k * (k - 1)) as f64).sum()
}

/// A random ultrametric from agglomerative merging with random heights.
pub fn random_ultrametric<R: Rng>(n: usize, rng: &mut R) -> DistanceMatrix<f64> {
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut rho = DistanceMatrix::zeros(n);
    let mut h = 0.0;
    while clusters.len() > 1 {
        h += rng.random::<f64>() * 2.0 + 1e-3;
        let i = rng.random_range(0..clusters.len());
        let a = clusters.swap_remove(i);
        let j = rng.random_range(0..clusters.len());
        for &p in &a {
            for &q in &clusters[j] {
                rho.set(p, q, h);
            }
        }
        clusters[j].extend(a);
    }
    rho
}

fn subsets(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << m)).map(move |mask| (0..m).filter(|&i| mask >> i & 1 == 1).collect())
}

/// `inf{ε > 0 : μ(F) <= μ'(F^ε) + ε for all closed F}` with the open
/// neighbourhood `F^ε = {z : d(z, F) < ε}`, by exhaustive evaluation over
/// all subsets of the support.
pub fn prohorov_closed_sets(d: &DistanceMatrix<f64>, mu: &[f64], nu: &[f64]) -> f64 {
    let m = d.n();
    let sets: Vec<Vec<usize>> = subsets(m).filter(|f| !f.is_empty()).collect();
    let feasible = |eps: f64| {
        sets.iter().all(|f| {
            let mass: f64 = f.iter().map(|&i| mu[i]).sum();
            let near: f64 = (0..m)
                .filter(|&z| f.iter().any(|&x| *d.get(x, z) < eps))
                .map(|z| nu[z])
                .sum();
            mass <= near + eps + 1e-13
        })
    };
    // the infimum is a distance or a value μ(F) - μ'(N) attained on an
    // interval between consecutive distances
    let mut cands = vec![0.0];
    cands.extend(d.upper_triangle());
    let dists = cands.clone();
    for f in &sets {
        let mass: f64 = f.iter().map(|&i| mu[i]).sum();
        for &r in &dists {
            let near: f64 = (0..m)
                .filter(|&z| f.iter().any(|&x| *d.get(x, z) <= r))
                .map(|z| nu[z])
                .sum();
            cands.push((mass - near).max(0.0));
        }
    }
    cands.sort_by(|a, b| a.total_cmp(b));
    cands.dedup();
    // feasibility just above a candidate is monotone in the candidate
    let nudge = 1e-11;
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid] + nudge) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// A random instance on at most six points: planar points (optionally on an
/// integer grid, to produce ties) and two probability vectors with zeros.
pub fn random_prohorov_instance<R: Rng>(rng: &mut R) -> (DistanceMatrix<f64>, Vec<f64>, Vec<f64>) {
    let m = rng.random_range(1..=6);
    let grid = rng.random_bool(0.5);
    let scale = if rng.random_bool(0.5) { 0.3 } else { 2.0 };
    let pts: Vec<(f64, f64)> = (0..m)
        .map(|_| {
            if grid {
                (rng.random_range(0..3) as f64 * 0.25, rng.random_range(0..3) as f64 * 0.25)
            } else {
                (rng.random::<f64>() * scale, rng.random::<f64>() * scale)
            }
        })
        .collect();
    let d = DistanceMatrix::from_upper(m, |i, j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1));
    let mut weights = || {
        let mut w: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() })
            .collect();
        if w.iter().sum::<f64>() == 0.0 {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let mu = weights();
    let nu = weights();
    (d, mu, nu)
}
