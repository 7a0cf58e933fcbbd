use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::partitions::{enumerate_partitions, paintbox_sample, Partition};
use crate::treespace::{validate_matrix, DistanceMatrix, MarkedMatrix, MetricKind, Tolerances};
use crate::xi::{rate_partition, XiSpec};

const NONE: usize = usize::MAX;

/// A rooted coalescent tree on leaves `0..n` with node heights; leaves sit
/// at height 0 and every merger creates one node per merging group.
#[derive(Debug, Clone, PartialEq)]
pub struct Genealogy {
    n: usize,
    parent: Vec<usize>,
    height: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl Genealogy {
    fn leaves(n: usize) -> Self {
        Genealogy {
            n,
            parent: vec![NONE; n],
            height: vec![0.0; n],
            children: vec![Vec::new(); n],
        }
    }

    fn merge(&mut self, nodes: &[usize], h: f64) -> usize {
        let id = self.parent.len();
        for &c in nodes {
            self.parent[c] = id;
        }
        self.parent.push(NONE);
        self.height.push(h);
        self.children.push(nodes.to_vec());
        id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn height(&self, node: usize) -> f64 {
        self.height[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (self.parent[node] != NONE).then_some(self.parent[node])
    }

    pub fn root(&self) -> usize {
        self.parent.len() - 1
    }

    /// Time to the most recent common ancestor.
    pub fn tmrca(&self) -> f64 {
        self.height[self.root()]
    }

    /// Height of the parent of leaf `i`, i.e. `½ min_{j != i} ρ(i, j)`.
    pub fn external_branch(&self, i: usize) -> f64 {
        self.parent(i).map_or(0.0, |p| self.height[p])
    }

    pub fn external_branches(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.external_branch(i)).collect()
    }

    /// Height of the last common ancestor of leaves `a` and `b`.
    pub fn lca_height(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let mut up = Vec::new();
        let mut x = a;
        while x != NONE {
            up.push(x);
            x = self.parent[x];
        }
        let mut y = b;
        while y != NONE {
            if up.contains(&y) {
                return self.height[y];
            }
            y = self.parent[y];
        }
        unreachable!("leaves of one tree share the root")
    }

    /// `ρ(i, j) = 2 · (coalescence time of i and j)`.
    pub fn ultrametric(&self) -> DistanceMatrix<f64> {
        let mut rho = DistanceMatrix::zeros(self.n);
        let mut leaves: Vec<Vec<usize>> = (0..self.n).map(|i| vec![i]).collect();
        for node in self.n..self.num_nodes() {
            let kids = &self.children[node];
            let h2 = 2.0 * self.height[node];
            for (x, &c1) in kids.iter().enumerate() {
                for &c2 in &kids[x + 1..] {
                    for &i in &leaves[c1] {
                        for &j in &leaves[c2] {
                            rho.set(i, j, h2);
                        }
                    }
                }
            }
            let merged = kids.iter().flat_map(|&c| leaves[c].clone()).collect();
            leaves.push(merged);
        }
        rho
    }

    /// Distances among the selected leaves; a repeated leaf is at distance 0
    /// from itself.
    pub fn sampled_ultrametric(&self, idx: &[usize]) -> DistanceMatrix<f64> {
        DistanceMatrix::from_upper(idx.len(), |a, b| 2.0 * self.lca_height(idx[a], idx[b]))
    }

    /// The rows `idx` of `β(ρ)` where `ρ` is the full ultrametric on `[n]`:
    /// `v(i)` is the external branch of leaf `i` and
    /// `r(i, j) = ρ(i, j) - v(i) - v(j)` for distinct leaves.
    pub fn sampled_decomposition(&self, idx: &[usize]) -> MarkedMatrix<f64> {
        let v: Vec<f64> = idx.iter().map(|&i| self.external_branch(i)).collect();
        let r = DistanceMatrix::from_upper(idx.len(), |a, b| {
            if idx[a] == idx[b] {
                0.0
            } else {
                (2.0 * self.lca_height(idx[a], idx[b]) - v[a] - v[b]).max(0.0)
            }
        });
        MarkedMatrix { r, v }
    }

    /// The coalescent state at time `s`: leaves whose ancestries merged by `s`.
    pub fn partition_at(&self, s: f64) -> Partition {
        let labels: Vec<usize> = (0..self.n)
            .map(|i| {
                let mut x = i;
                while self.parent[x] != NONE && self.height[self.parent[x]] <= s {
                    x = self.parent[x];
                }
                x
            })
            .collect();
        Partition::from_index_labels(&labels)
    }

    pub fn block_count_at(&self, s: f64) -> usize {
        self.partition_at(s).num_blocks()
    }
}

fn check_mass(xi: &XiSpec<f64>) -> Result<()> {
    if !(xi.total_mass() > 0.0) {
        return Err(Error::Precondition("a measure of total mass 0 never coalesces".into()));
    }
    Ok(())
}

/// The Ξ-coalescent tree of `[n]` run to its root.
///
/// Candidate events come at constant rate `Σ w |x|_2^{-2}` (one paintbox
/// over the current blocks each) plus `c b(b-1)/2` Kingman pair mergers;
/// candidates that merge nothing are discarded. This is the restriction of
/// the Poisson construction of the coalescent, so it is exact in law.
pub fn sample_genealogy<R: Rng + ?Sized>(xi: &XiSpec<f64>, n: usize, rng: &mut R) -> Result<Genealogy> {
    check_mass(xi)?;
    if n == 0 {
        return Err(Error::arg("need at least one leaf"));
    }
    let atom_rates: Vec<f64> = xi
        .atoms()
        .iter()
        .scan(0.0, |acc, a| {
            *acc += XiSpec::candidate_rate(a);
            Some(*acc)
        })
        .collect();
    let atom_total = atom_rates.last().copied().unwrap_or(0.0);
    let c = *xi.kingman_mass();
    let mut g = Genealogy::leaves(n);
    let mut active: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    while active.len() > 1 {
        let b = active.len();
        let total = atom_total + c * (b * (b - 1) / 2) as f64;
        t += Exp::new(total).expect("positive rate").sample(rng);
        let u = rng.random::<f64>() * total;
        if u < atom_total {
            let k = atom_rates.partition_point(|&r| r <= u).min(atom_rates.len() - 1);
            let draw = paintbox_sample(&xi.atoms()[k].point, b, rng);
            if draw.partition.num_blocks() == b {
                continue;
            }
            let mut next = Vec::with_capacity(draw.partition.num_blocks());
            for block in draw.partition.blocks() {
                if block.len() == 1 {
                    next.push(active[block[0]]);
                } else {
                    let nodes: Vec<usize> = block.iter().map(|&x| active[x]).collect();
                    next.push(g.merge(&nodes, t));
                }
            }
            active = next;
        } else {
            let i = rng.random_range(0..b);
            let mut j = rng.random_range(0..b - 1);
            if j >= i {
                j += 1;
            }
            let node = g.merge(&[active[i], active[j]], t);
            let (lo, hi) = (i.min(j), i.max(j));
            active.swap_remove(hi);
            active[lo] = node;
        }
    }
    Ok(g)
}

/// The same tree law from the Markov jump chain on block counts: with `b`
/// blocks, merger pattern `π ∈ P_b` fires at rate `λ_π` (its partition
/// rate on `[b]`). Exhaustive over patterns, so limited to small `n`.
pub fn sample_genealogy_jump_chain<R: Rng + ?Sized>(
    xi: &XiSpec<f64>,
    n: usize,
    rng: &mut R,
) -> Result<Genealogy> {
    const MAX_N: usize = 8;
    check_mass(xi)?;
    if n == 0 || n > MAX_N {
        return Err(Error::Resource(format!("jump chain supports 1 <= n <= {MAX_N}, got {n}")));
    }
    let mut tables: Vec<Vec<(Partition, f64)>> = vec![Vec::new(); n + 1];
    for (b, table) in tables.iter_mut().enumerate().skip(2) {
        let mut acc = 0.0;
        for p in enumerate_partitions(b)?.into_iter().filter(|p| !p.is_singletons()) {
            let r = rate_partition(xi, &p)?;
            if r > 0.0 {
                acc += r;
                table.push((p, acc));
            }
        }
    }
    let mut g = Genealogy::leaves(n);
    let mut active: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    while active.len() > 1 {
        let table = &tables[active.len()];
        let total = table.last().map(|x| x.1).ok_or_else(|| {
            Error::Precondition(format!("no merger has positive rate on {} blocks", active.len()))
        })?;
        t += Exp::new(total).expect("positive rate").sample(rng);
        let u = rng.random::<f64>() * total;
        let k = table.partition_point(|x| x.1 <= u).min(table.len() - 1);
        let pattern = &table[k].0;
        let mut next = Vec::with_capacity(pattern.num_blocks());
        for block in pattern.blocks() {
            if block.len() == 1 {
                next.push(active[block[0]]);
            } else {
                let nodes: Vec<usize> = block.iter().map(|&x| active[x]).collect();
                next.push(g.merge(&nodes, t));
            }
        }
        active = next;
    }
    Ok(g)
}

/// `ρ̄` restricted to `[n]`: twice the pairwise coalescence times of a
/// Ξ-coalescent tree.
pub fn sample_stationary_ultrametric<R: Rng + ?Sized>(
    xi: &XiSpec<f64>,
    n: usize,
    rng: &mut R,
) -> Result<DistanceMatrix<f64>> {
    Ok(sample_genealogy(xi, n, rng)?.ultrametric())
}

/// `Π_s`: `i ~ j` iff `ρ(i, j) <= 2s`, for each `s` of the grid.
pub fn extract_coalescent(rho: &DistanceMatrix<f64>, grid: &[f64]) -> Result<Vec<Partition>> {
    let report = validate_matrix(rho, MetricKind::Ultrametric, &Tolerances::default());
    if !report.passed {
        return Err(Error::Validation(report.to_string()));
    }
    let n = rho.n();
    Ok(grid
        .iter()
        .map(|&s| {
            let labels: Vec<usize> = (0..n)
                .map(|i| (0..i).find(|&j| *rho.get(i, j) <= 2.0 * s).unwrap_or(i))
                .collect();
            // first-match labels are consistent because the relation is an equivalence
            Partition::from_index_labels(&labels)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn extract_examples() {
        let rho = DistanceMatrix::from_upper(4, |_, _| 2.0);
        let ps = extract_coalescent(&rho, &[0.9, 1.0]).unwrap();
        assert!(ps[0].is_singletons());
        assert_eq!(ps[1], Partition::single_block(4));
        let rho = DistanceMatrix::from_rows(vec![
            vec![0.0, 2.0, 6.0],
            vec![2.0, 0.0, 6.0],
            vec![6.0, 6.0, 0.0],
        ])
        .unwrap();
        let ps = extract_coalescent(&rho, &[1.0, 3.0]).unwrap();
        assert_eq!(ps[0].to_string(), "{{1,2},{3}}");
        assert_eq!(ps[1], Partition::single_block(3));
        let bad = DistanceMatrix::from_rows(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(matches!(extract_coalescent(&bad, &[1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn star_tree_is_one_total_merger() {
        let xi = XiSpec::<f64>::star();
        let mut rng = replicate_rng(2, 0);
        let rho = sample_stationary_ultrametric(&xi, 5, &mut rng).unwrap();
        let x = *rho.get(0, 1);
        assert!(rho.upper_triangle().iter().all(|&y| y == x));
    }

    #[test]
    fn single_leaf_and_zero_mass() {
        let mut rng = replicate_rng(2, 0);
        let xi = XiSpec::kingman(1.0).unwrap();
        assert_eq!(sample_stationary_ultrametric(&xi, 1, &mut rng).unwrap(), DistanceMatrix::zeros(1));
        let zero = XiSpec::kingman(0.0).unwrap();
        assert!(matches!(
            sample_stationary_ultrametric(&zero, 3, &mut rng),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn genealogy_views_agree() {
        let xi = XiSpec::point_mass(1.0, vec![0.5, 0.2]).unwrap();
        for r in 0..20 {
            let mut rng = replicate_rng(9, r);
            let g = sample_genealogy(&xi, 7, &mut rng).unwrap();
            let rho = g.ultrametric();
            assert!(validate_matrix(&rho, MetricKind::Ultrametric, &Tolerances::default()).passed);
            let idx: Vec<usize> = (0..7).collect();
            assert_eq!(g.sampled_ultrametric(&idx), rho);
            let beta = crate::treespace::beta_finite(&rho, true, &Tolerances::default()).unwrap();
            let dec = g.sampled_decomposition(&idx);
            assert!(beta.r.max_abs_diff(&dec.r) < 1e-12);
            assert_eq!(beta.v, dec.v);
            for s in [0.1, 0.5, 2.0] {
                assert_eq!(g.partition_at(s), extract_coalescent(&rho, &[s]).unwrap()[0]);
            }
            assert!((rho.max_entry() - 2.0 * g.tmrca()).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_chain_pair_time_matches_total_mass() {
        // ρ(1,2)/2 ~ Exp(Ξ(Δ)) for both samplers
        let xi = XiSpec::point_mass(2.0, vec![0.6]).unwrap();
        let reps = 4000;
        let mut a = 0.0;
        let mut b = 0.0;
        for r in 0..reps {
            let mut rng = replicate_rng(4, r);
            a += sample_genealogy(&xi, 3, &mut rng).unwrap().lca_height(0, 1);
            b += sample_genealogy_jump_chain(&xi, 3, &mut rng).unwrap().lca_height(0, 1);
        }
        let (a, b) = (a / reps as f64, b / reps as f64);
        let se = 0.5 / (reps as f64).sqrt();
        assert!((a - 0.5).abs() < 4.0 * se, "{a}");
        assert!((b - 0.5).abs() < 4.0 * se, "{b}");
    }
}
