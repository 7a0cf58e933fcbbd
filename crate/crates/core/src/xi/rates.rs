use std::collections::BTreeMap;
use std::fmt;

use super::XiSpec;
use crate::error::{Error, Result};
use crate::partitions::{enumerate_partitions, enumerate_semipartitions, Partition, SemiPartition};
use crate::scalar::{powi, Scalar};

/// Extended nonnegative rate. `Infinite` only arises for the dust rate of a
/// measure with a Kingman atom and is never folded into arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum Rate<T = f64> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Rate<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Rate::Finite(_))
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            Rate::Finite(x) => Some(x),
            Rate::Infinite => None,
        }
    }

    /// The finite value, or a precondition error for `+∞`.
    pub fn value(&self) -> Result<T> {
        self.finite()
            .cloned()
            .ok_or_else(|| Error::Precondition("infinite rate in arithmetic".into()))
    }
}

impl<T: Scalar> fmt::Display for Rate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Finite(x) => write!(f, "{x}"),
            Rate::Infinite => f.write_str("inf"),
        }
    }
}

/// `Σ_{distinct i_1..i_l} Π_a x_{i_a}^{k_a}` over the support of `x`.
fn distinct_index_sum<T: Scalar>(x: &[T], ks: &[usize], used: &mut Vec<bool>) -> T {
    let Some((&k, rest)) = ks.split_first() else {
        return T::one();
    };
    let mut total = T::zero();
    for i in 0..x.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        total = total + powi(&x[i], k) * distinct_index_sum(x, rest, used);
        used[i] = false;
    }
    total
}

/// `λ_{n,σ}`: the rate of reproduction events whose stripped restriction to
/// `[n]` equals `σ`.
pub fn rate_semipartition<T: Scalar>(xi: &XiSpec<T>, sigma: &SemiPartition) -> Result<Rate<T>> {
    if sigma.is_empty() {
        return Err(Error::arg("the empty semi-partition has no finite event rate"));
    }
    let n = sigma.n();
    let ks = sigma.block_sizes();
    let covered: usize = ks.iter().sum();
    if ks.len() == 1 && ks[0] == 1 && *xi.kingman_mass() > T::zero() {
        return Ok(Rate::Infinite);
    }
    let mut total = T::zero();
    for atom in xi.atoms() {
        let x = atom.point.coords();
        if ks.len() > x.len() {
            continue;
        }
        let mut dust = atom.point.dust();
        if dust < T::zero() {
            dust = T::zero();
        }
        let mut used = vec![false; x.len()];
        let paint = distinct_index_sum(x, &ks, &mut used);
        total = total + XiSpec::candidate_rate(atom) * paint * powi(&dust, n - covered);
    }
    if ks.len() == 1 && ks[0] == 2 {
        total = total + xi.kingman_mass().clone();
    }
    Ok(Rate::Finite(total))
}

/// `λ_π`: the sum of `λ_{n,σ}` over the `2^s` semi-partitions sharing the
/// non-singleton blocks of `π`, where `s` counts its singleton blocks.
pub fn rate_partition<T: Scalar>(xi: &XiSpec<T>, pi: &Partition) -> Result<T> {
    if pi.is_singletons() {
        return Err(Error::arg("the partition into singletons carries no event rate"));
    }
    let n = pi.n();
    let blocks = pi.blocks();
    let (big, singles): (Vec<_>, Vec<_>) = blocks.into_iter().partition(|b| b.len() >= 2);
    if singles.len() >= usize::BITS as usize {
        return Err(Error::Resource(format!("{} singleton blocks", singles.len())));
    }
    let mut total = T::zero();
    for mask in 0u64..(1u64 << singles.len()) {
        let mut sigma_blocks = big.clone();
        for (b, s) in singles.iter().enumerate() {
            if mask >> b & 1 == 1 {
                sigma_blocks.push(s.clone());
            }
        }
        let sigma = SemiPartition::new(n, sigma_blocks)?;
        // at least one block has size >= 2, so the rate is finite
        total = total + rate_semipartition(xi, &sigma)?.value()?;
    }
    Ok(total)
}

/// All partition and semi-partition rates on `[n]`.
#[derive(Debug, Clone)]
pub struct RateTable<T = f64> {
    n: usize,
    partitions: Vec<(Partition, T)>,
    semipartitions: Vec<(SemiPartition, Rate<T>)>,
}

impl<T: Scalar> RateTable<T> {
    pub fn build(xi: &XiSpec<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("rate table needs n >= 1"));
        }
        let partitions = enumerate_partitions(n)?
            .into_iter()
            .filter(|p| !p.is_singletons())
            .map(|p| rate_partition(xi, &p).map(|r| (p, r)))
            .collect::<Result<Vec<_>>>()?;
        let semipartitions = enumerate_semipartitions(n)?
            .into_iter()
            .filter(|s| !s.is_empty())
            .map(|s| rate_semipartition(xi, &s).map(|r| (s, r)))
            .collect::<Result<Vec<_>>>()?;
        if n == 2 {
            let total = xi.total_mass();
            let pair = &partitions[0].1;
            let tol = T::from_f64_lossy(1e-12) * (T::one() + total.clone());
            if !T::approx_eq(pair, &total, &tol) {
                return Err(Error::Validation(format!(
                    "pair rate {pair} differs from total mass {total}"
                )));
            }
        }
        Ok(RateTable {
            n,
            partitions,
            semipartitions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn partition_rates(&self) -> &[(Partition, T)] {
        &self.partitions
    }

    pub fn semipartition_rates(&self) -> &[(SemiPartition, Rate<T>)] {
        &self.semipartitions
    }

    /// Sum of all partition rates: the total rate of `γ_n`-visible events.
    pub fn visible_rate(&self) -> T {
        self.partitions
            .iter()
            .fold(T::zero(), |acc, (_, r)| acc + r.clone())
    }

    pub fn rate_of(&self, pi: &Partition) -> Option<&T> {
        self.partitions.iter().find(|(p, _)| p == pi).map(|(_, r)| r)
    }

    /// Partition rates keyed by canonical block notation.
    pub fn to_map(&self) -> BTreeMap<String, T> {
        self.partitions
            .iter()
            .map(|(p, r)| (p.to_string(), r.clone()))
            .collect()
    }
}
