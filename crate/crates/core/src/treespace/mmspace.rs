use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::matrix::{alpha, beta_finite, DistanceMatrix, MarkedMatrix, Tolerances};
use super::prohorov::prohorov_exact;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite marked metric measure space: `m` support points with a metric,
/// probability weights and nonnegative marks.
///
/// Points at distance zero carrying equal marks are merged at construction,
/// so the support is the quotient on `X x R_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMMSpace<T = f64> {
    dist: DistanceMatrix<T>,
    weights: Vec<T>,
    marks: Vec<T>,
    marked: bool,
}

impl<T: Scalar> FiniteMMSpace<T> {
    /// `marks = None` builds an unmarked space (all marks zero).
    pub fn new(
        dist: DistanceMatrix<T>,
        weights: Vec<T>,
        marks: Option<Vec<T>>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let m = dist.n();
        if weights.len() != m {
            return Err(Error::arg(format!("{} weights for {m} points", weights.len())));
        }
        let marked = marks.is_some();
        let marks = marks.unwrap_or_else(|| vec![T::zero(); m]);
        if marks.len() != m {
            return Err(Error::arg(format!("{} marks for {m} points", marks.len())));
        }
        if let Some(i) = weights.iter().position(|w| w < &T::zero()) {
            return Err(Error::arg(format!("weight {} is negative", i + 1)));
        }
        if let Some(i) = marks.iter().position(|x| x < &T::zero()) {
            return Err(Error::arg(format!("mark {} is negative", i + 1)));
        }
        let total = weights.iter().cloned().fold(T::zero(), |a, b| a + b);
        if !T::approx_eq(&total, &T::one(), &T::from_f64_lossy(tol.probability)) {
            return Err(Error::arg(format!("weights sum to {total}, not 1")));
        }

        // quotient: representative = first point with distance 0 and equal mark
        let mut reps: Vec<usize> = Vec::new();
        let mut class = vec![0usize; m];
        for i in 0..m {
            match reps
                .iter()
                .position(|&r| dist.get(r, i).is_zero() && marks[r] == marks[i])
            {
                Some(c) => class[i] = c,
                None => {
                    class[i] = reps.len();
                    reps.push(i);
                }
            }
        }
        let mut w = vec![T::zero(); reps.len()];
        for i in 0..m {
            w[class[i]] = w[class[i]].clone() + weights[i].clone();
        }
        Ok(FiniteMMSpace {
            dist: dist.select(&reps),
            weights: w,
            marks: reps.iter().map(|&r| marks[r].clone()).collect(),
            marked,
        })
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn dist(&self) -> &DistanceMatrix<T> {
        &self.dist
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn marks(&self) -> &[T] {
        &self.marks
    }

    pub fn is_marked(&self) -> bool {
        self.marked
    }

    /// Draws `k` iid support indices according to the weights.
    pub fn sample_indices<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        let w: Vec<f64> = self.weights.iter().map(Scalar::to_f64_lossy).collect();
        let dist = WeightedIndex::new(&w).expect("weights are a probability vector");
        (0..k).map(|_| dist.sample(rng)).collect()
    }

    /// The marked matrix `(dist(x_a, x_b), mark(x_a))` of a sequence of support points.
    pub fn marked_matrix_of(&self, idx: &[usize]) -> MarkedMatrix<T> {
        MarkedMatrix {
            r: self.dist.select(idx),
            v: idx.iter().map(|&i| self.marks[i].clone()).collect(),
        }
    }
}

/// `psi-hat_n`: the empirical marked measure `n^{-1} sum_i delta_(i, v(i))` on
/// `([n], r)`, with zero-distance equal-mark points merged.
pub fn psi_hat_n<T: Scalar>(rv: &MarkedMatrix<T>) -> FiniteMMSpace<T> {
    let n = rv.n();
    let w = T::one() / T::from_count(n);
    FiniteMMSpace::new(
        rv.r.clone(),
        vec![w; n],
        Some(rv.v.clone()),
        &Tolerances {
            probability: 1e-9,
            ..Tolerances::default()
        },
    )
    .expect("decomposed matrices give valid spaces")
}

/// Samples `k` points iid from the space; returns the marked distance matrix
/// and `rho' = alpha(r', v')`.
pub fn sample_distance_matrix<T: Scalar, R: Rng + ?Sized>(
    space: &FiniteMMSpace<T>,
    k: usize,
    rng: &mut R,
) -> Result<(MarkedMatrix<T>, DistanceMatrix<T>)> {
    if k == 0 {
        return Err(Error::arg("sample size must be at least 1"));
    }
    let idx = space.sample_indices(k, rng);
    let rv = space.marked_matrix_of(&idx);
    let rho = alpha(&rv);
    Ok((rv, rho))
}

/// Prohorov distance between the reconstructions from the first `n` and the
/// first `2n` indices of `rho`, both embedded into the tree spanned by `rho`
/// (point `(i, s)` at height `s` above leaf `i`), with marks compared in the
/// max-product metric. Shrinks as `n` grows when the reconstruction
/// converges.
pub fn reconstruction_gap(rho: &DistanceMatrix<f64>, n: usize, tol: &Tolerances) -> Result<f64> {
    if n < 2 || 2 * n > rho.n() {
        return Err(Error::arg(format!("need 2 <= n and 2n <= {}", rho.n())));
    }
    let small = beta_finite(&rho.restrict(n)?, false, tol)?;
    let large = beta_finite(&rho.restrict(2 * n)?, false, tol)?;
    let atoms: Vec<(usize, f64)> = (0..n)
        .map(|i| (i, small.v[i]))
        .chain((0..2 * n).map(|i| (i, large.v[i])))
        .collect();
    let ground = DistanceMatrix::from_upper(atoms.len(), |a, b| {
        let (i, s) = atoms[a];
        let (j, t) = atoms[b];
        let tree = if i == j {
            (s - t).abs()
        } else {
            (rho.get(i, j) - s - t).max((s - t).abs())
        };
        tree.max((s - t).abs())
    });
    let mut w1 = vec![0.0; 3 * n];
    let mut w2 = vec![0.0; 3 * n];
    w1[..n].fill(1.0 / n as f64);
    w2[n..].fill(1.0 / (2 * n) as f64);
    prohorov_exact(&ground, &w1, &w2)
}
