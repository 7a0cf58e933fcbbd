//! Partitions and semi-partitions of `[n]`, paintbox sampling, and the
//! transformations they induce on distance matrices and marked matrices.
//!
//! Elements and blocks are 0-based internally; block `k` is the block with
//! the `k`-th smallest minimum, which is also the level its parent particle
//! occupies before a reproduction event. `Display` prints 1-based elements
//! in the usual `{{1,2},{3}}` notation.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::treespace::{DistanceMatrix, MarkedMatrix};

/// Largest ground set accepted by the exhaustive enumerators (Bell(12) = 4213597).
pub const MAX_ENUMERATION_N: usize = 12;

/// A partition of `[n]` stored as its canonical block-index array.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    block_of: Vec<u32>,
}

impl Partition {
    /// `0_n`, all singletons.
    pub fn singletons(n: usize) -> Self {
        Partition {
            block_of: (0..n as u32).collect(),
        }
    }

    pub fn single_block(n: usize) -> Self {
        Partition {
            block_of: vec![0; n],
        }
    }

    /// The partition with block `{i, j}` and singletons otherwise.
    pub fn pair(n: usize, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= n || j >= n {
            return Err(Error::arg(format!("invalid pair ({},{}) on [{n}]", i + 1, j + 1)));
        }
        let mut labels: Vec<usize> = (0..n).collect();
        labels[i.max(j)] = i.min(j);
        Ok(Self::from_labels(&labels))
    }

    /// Canonicalises arbitrary labels: equal labels share a block, and blocks
    /// are numbered by first appearance (= by minimal element).
    pub fn from_labels<L: Eq + Clone>(labels: &[L]) -> Self {
        let mut seen: Vec<L> = Vec::new();
        let block_of = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(k) => k as u32,
                None => {
                    seen.push(l.clone());
                    (seen.len() - 1) as u32
                }
            })
            .collect();
        Partition { block_of }
    }

    /// Canonicalises labels that are already small integers, in `O(n)`.
    pub fn from_index_labels(labels: &[usize]) -> Self {
        let size = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut map = vec![u32::MAX; size];
        let mut next = 0u32;
        let block_of = labels
            .iter()
            .map(|&l| {
                if map[l] == u32::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Partition { block_of }
    }

    /// Builds a partition from 0-based blocks that must cover `[n]` disjointly.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut label = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::arg("empty block"));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::arg(format!("element {} outside [{n}]", i + 1)));
                }
                if label[i] != usize::MAX {
                    return Err(Error::arg(format!("element {} in two blocks", i + 1)));
                }
                label[i] = b;
            }
        }
        if let Some(i) = label.iter().position(|&l| l == usize::MAX) {
            return Err(Error::arg(format!("element {} not covered", i + 1)));
        }
        Ok(Self::from_index_labels(&label))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    /// `pi(i)`: index of the block containing `i`.
    #[inline]
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i] as usize
    }

    pub fn num_blocks(&self) -> usize {
        self.block_of.iter().map(|&b| b as usize + 1).max().unwrap_or(0)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &b) in self.block_of.iter().enumerate() {
            out[b as usize].push(i);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_blocks()];
        for &b in &self.block_of {
            out[b as usize] += 1;
        }
        out
    }

    pub fn is_singletons(&self) -> bool {
        self.block_of.iter().enumerate().all(|(i, &b)| b as usize == i)
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of[i] == self.block_of[j]
    }

    /// `gamma_n`: traces of the blocks on `[n]`, reindexed by minima.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::arg(format!("cannot restrict [{}] to [{n}]", self.n())));
        }
        // the first n labels are already in first-appearance order
        Ok(Partition {
            block_of: self.block_of[..n].to_vec(),
        })
    }

    /// Whether every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        let n = self.n();
        n == other.n()
            && (0..n).all(|i| (0..n).all(|j| !self.same_block(i, j) || other.same_block(i, j)))
    }
}

fn fmt_blocks(f: &mut fmt::Formatter<'_>, blocks: &[Vec<usize>]) -> fmt::Result {
    write!(f, "{{")?;
    for (k, b) in blocks.iter().enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        let elems: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", elems.join(","))?;
    }
    write!(f, "}}")
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_blocks(f, &self.blocks())
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition{self}")
    }
}

/// A system of nonempty disjoint subsets of `[n]`, possibly not covering it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemiPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SemiPartition {
    pub fn empty(n: usize) -> Self {
        SemiPartition { n, blocks: Vec::new() }
    }

    /// Checked constructor; blocks are canonicalised (sorted, ordered by minima).
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::arg("semi-partition blocks must be nonempty"));
            }
            for &i in b {
                if i >= n {
                    return Err(Error::arg(format!("element {} outside [{n}]", i + 1)));
                }
                if seen[i] {
                    return Err(Error::arg(format!("element {} in two blocks", i + 1)));
                }
                seen[i] = true;
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(SemiPartition { n, blocks })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Membership mask of `∪σ`.
    pub fn covered(&self) -> Vec<bool> {
        let mut c = vec![false; self.n];
        for b in &self.blocks {
            for &i in b {
                c[i] = true;
            }
        }
        c
    }

    /// Inserts a singleton for every missing element.
    pub fn associated_partition(&self) -> Partition {
        let mut label: Vec<usize> = (0..self.n).collect();
        for b in &self.blocks {
            for &i in b {
                label[i] = b[0];
            }
        }
        Partition::from_index_labels(&label)
    }

    /// Non-singleton blocks, the part shared with every compatible partition.
    pub fn non_singleton_blocks(&self) -> Vec<&Vec<usize>> {
        self.blocks.iter().filter(|b| b.len() >= 2).collect()
    }
}

impl fmt::Display for SemiPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_blocks(f, &self.blocks)
    }
}

impl fmt::Debug for SemiPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SemiPartition[{}]{self}", self.n)
    }
}

/// A point of the simplex with finitely many positive coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint<T = f64> {
    x: Vec<T>,
}

impl<T: Scalar> SimplexPoint<T> {
    /// Checks `x_1 >= x_2 >= ... > 0` and `|x|_1 <= 1` (floats get `1e-12` slack).
    pub fn new(x: Vec<T>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::arg("simplex point needs a positive coordinate"));
        }
        if let Some(k) = x.iter().position(|c| c <= &T::zero() || !c.is_finite_value()) {
            return Err(Error::arg(format!("coordinate {} is not positive", k + 1)));
        }
        if let Some(k) = x.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::arg(format!("coordinates not nonincreasing at {}", k + 2)));
        }
        let sum = x.iter().cloned().fold(T::zero(), |a, b| a + b);
        if sum > T::one() + T::from_f64_lossy(1e-12) {
            return Err(Error::arg(format!("coordinates sum to {sum} > 1")));
        }
        Ok(SimplexPoint { x })
    }

    pub fn coords(&self) -> &[T] {
        &self.x
    }

    /// `|x|_1`.
    pub fn l1(&self) -> T {
        self.x.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// `|x|_2^2`.
    pub fn l2_sq(&self) -> T {
        self.x.iter().fold(T::zero(), |a, b| a + b.clone() * b.clone())
    }

    /// Length of the dust interval, `1 - |x|_1` clamped at zero.
    pub fn dust(&self) -> T {
        T::max_of(T::one() - self.l1(), T::zero())
    }

    pub fn convert<U: Scalar>(&self) -> SimplexPoint<U> {
        SimplexPoint {
            x: self.x.iter().map(|c| U::from_f64_lossy(c.to_f64_lossy())).collect(),
        }
    }
}

/// Outcome of a paintbox draw restricted to `[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaintboxDraw {
    pub partition: Partition,
    /// Per block of `partition`: whether it lies in a non-dust interval
    /// (and is therefore a.s. infinite in the unrestricted partition).
    pub nonsingleton: Vec<bool>,
    /// Per element: whether its uniform fell into the dust interval.
    pub dust: Vec<bool>,
}

impl PaintboxDraw {
    pub fn semipartition(&self) -> SemiPartition {
        strip_restrict(&self.partition, &self.nonsingleton, self.partition.n())
            .expect("flags come from the same draw")
    }
}

/// Drops `n` iid uniforms into the intervals of lengths `x_1, x_2, ...`;
/// elements sharing a non-dust interval share a block.
pub fn paintbox_sample<R: Rng + ?Sized>(x: &SimplexPoint<f64>, n: usize, rng: &mut R) -> PaintboxDraw {
    let mut cum = Vec::with_capacity(x.coords().len());
    let mut acc = 0.0;
    for &c in x.coords() {
        acc += c;
        cum.push(acc);
    }
    let m = cum.len();
    let mut labels = Vec::with_capacity(n);
    let mut dust = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.random();
        let k = cum.partition_point(|&c| c <= u);
        if k < m {
            labels.push(k);
            dust.push(false);
        } else {
            labels.push(m + i);
            dust.push(true);
        }
    }
    let partition = Partition::from_index_labels(&labels);
    let mut nonsingleton = vec![false; partition.num_blocks()];
    for i in 0..n {
        if !dust[i] {
            nonsingleton[partition.block_of(i)] = true;
        }
    }
    PaintboxDraw {
        partition,
        nonsingleton,
        dust,
    }
}

/// `varsigma_n`: keeps the traces on `[n]` of the blocks flagged as
/// non-singleton in the unrestricted partition.
///
/// `nonsingleton[k]` refers to block `k` of `pi`; blocks with two or more
/// elements must be flagged.
pub fn strip_restrict(pi: &Partition, nonsingleton: &[bool], n: usize) -> Result<SemiPartition> {
    if nonsingleton.len() != pi.num_blocks() {
        return Err(Error::arg(format!(
            "{} singleton flags for {} blocks",
            nonsingleton.len(),
            pi.num_blocks()
        )));
    }
    if n == 0 || n > pi.n() {
        return Err(Error::arg(format!("cannot restrict [{}] to [{n}]", pi.n())));
    }
    let sizes = pi.block_sizes();
    if let Some(k) = (0..sizes.len()).find(|&k| sizes[k] >= 2 && !nonsingleton[k]) {
        return Err(Error::arg(format!("block {} has {} elements but is flagged singleton", k + 1, sizes[k])));
    }
    let blocks = pi
        .blocks()
        .into_iter()
        .enumerate()
        .filter(|(k, _)| nonsingleton[*k])
        .map(|(_, b)| b.into_iter().filter(|&i| i < n).collect::<Vec<_>>())
        .filter(|b| !b.is_empty())
        .collect();
    SemiPartition::new(n, blocks)
}

/// `pi(rho) = (rho(pi(i), pi(j)))_{i,j}`.
pub fn apply_partition<T: Scalar>(pi: &Partition, rho: &DistanceMatrix<T>) -> Result<DistanceMatrix<T>> {
    if pi.n() != rho.n() {
        return Err(Error::arg(format!("partition of [{}] applied to order {}", pi.n(), rho.n())));
    }
    Ok(DistanceMatrix::from_upper(rho.n(), |i, j| {
        rho.get(pi.block_of(i), pi.block_of(j)).clone()
    }))
}

/// The transformation of a marked matrix induced by a semi-partition:
/// covered elements get mark 0 and absorb their parent's mark into `r`,
/// uncovered elements inherit the parent's mark. Pairs in a common block get
/// `r' = 0`, which keeps `alpha(sigma(r, v)) = pi_sigma(alpha(r, v))`.
pub fn apply_semipartition<T: Scalar>(sigma: &SemiPartition, rv: &MarkedMatrix<T>) -> Result<MarkedMatrix<T>> {
    let n = rv.n();
    if sigma.n() != n {
        return Err(Error::arg(format!("semi-partition of [{}] applied to order {n}", sigma.n())));
    }
    let pi = sigma.associated_partition();
    let covered = sigma.covered();
    let v: Vec<T> = (0..n)
        .map(|i| {
            if covered[i] {
                T::zero()
            } else {
                rv.v[pi.block_of(i)].clone()
            }
        })
        .collect();
    let r = DistanceMatrix::from_upper(n, |i, j| {
        let (a, b) = (pi.block_of(i), pi.block_of(j));
        if a == b {
            return T::zero();
        }
        let mut x = rv.r.get(a, b).clone();
        if covered[i] {
            x = x + rv.v[a].clone();
        }
        if covered[j] {
            x = x + rv.v[b].clone();
        }
        x
    });
    Ok(MarkedMatrix { r, v })
}

fn guard(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::arg("enumeration needs n >= 1"));
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::Resource(format!(
            "enumeration limited to n <= {MAX_ENUMERATION_N}, got {n}"
        )));
    }
    Ok(())
}

fn restricted_growth_strings(n: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(s: &mut Vec<usize>, n: usize, max: usize, visit: &mut dyn FnMut(&[usize])) {
        if s.len() == n {
            visit(s);
            return;
        }
        for b in 0..=max + 1 {
            s.push(b);
            rec(s, n, max.max(b), visit);
            s.pop();
        }
    }
    let mut s = vec![0];
    rec(&mut s, n, 0, &mut visit);
}

/// All partitions of `[n]`, `n <= 12`.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    guard(n)?;
    let mut out = Vec::new();
    restricted_growth_strings(n, |s| {
        out.push(Partition {
            block_of: s.iter().map(|&b| b as u32).collect(),
        })
    });
    Ok(out)
}

/// All semi-partitions of `[n]` including the empty one, via partitions of
/// `[n + 1]` whose block containing `n + 1` collects the missing elements.
pub fn enumerate_semipartitions(n: usize) -> Result<Vec<SemiPartition>> {
    guard(n)?;
    if n == MAX_ENUMERATION_N {
        return Err(Error::Resource(format!(
            "semi-partition enumeration limited to n < {MAX_ENUMERATION_N}"
        )));
    }
    let mut out = Vec::new();
    restricted_growth_strings(n + 1, |s| {
        let missing = s[n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; n + 1];
        for (i, &b) in s[..n].iter().enumerate() {
            if b == missing {
                continue;
            }
            if index[b] == usize::MAX {
                index[b] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[index[b]].push(i);
        }
        out.push(SemiPartition { n, blocks });
    });
    Ok(out)
}

/// A bijection of `[n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &p in &images {
            if p >= n || seen[p] {
                return Err(Error::arg("not a bijection"));
            }
            seen[p] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        Permutation(p)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    /// `p(rho) = (rho(p(i), p(j)))_{i,j}`.
    pub fn apply_matrix<T: Scalar>(&self, rho: &DistanceMatrix<T>) -> DistanceMatrix<T> {
        assert_eq!(self.n(), rho.n(), "permutation and matrix orders differ");
        DistanceMatrix::from_upper(rho.n(), |i, j| rho.get(self.0[i], self.0[j]).clone())
    }

    pub fn apply_vec<T: Clone>(&self, v: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| v[i].clone()).collect()
    }

    pub fn apply_marked<T: Scalar>(&self, rv: &MarkedMatrix<T>) -> MarkedMatrix<T> {
        MarkedMatrix {
            r: self.apply_matrix(&rv.r),
            v: self.apply_vec(&rv.v),
        }
    }
}
