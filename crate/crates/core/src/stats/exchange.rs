use rand::Rng;
use serde::Serialize;

use super::testfn::TestFunction;
use super::twosample::energy_two_sample;
use crate::error::{Error, Result};
use crate::partitions::Permutation;
use crate::treespace::{DistanceMatrix, MarkedMatrix};

/// A random genealogy on `[n]` that permutations act on.
pub trait Observable: Clone {
    fn order(&self) -> usize;
    fn permuted(&self, p: &Permutation) -> Self;
    fn evaluate(&self, phi: &TestFunction) -> f64;
}

impl Observable for DistanceMatrix<f64> {
    fn order(&self) -> usize {
        self.n()
    }

    fn permuted(&self, p: &Permutation) -> Self {
        p.apply_matrix(self)
    }

    fn evaluate(&self, phi: &TestFunction) -> f64 {
        phi.eval_rho(self)
    }
}

impl Observable for MarkedMatrix<f64> {
    fn order(&self) -> usize {
        self.n()
    }

    fn permuted(&self, p: &Permutation) -> Self {
        p.apply_marked(self)
    }

    fn evaluate(&self, phi: &TestFunction) -> f64 {
        phi.eval_rv(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub permutation: Vec<usize>,
    pub functional: String,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeabilityReport {
    pub tests: Vec<PairTest>,
    pub alpha: f64,
    /// Bonferroni level `alpha / #tests`.
    pub threshold: f64,
    pub passed: bool,
}

/// Two-sample comparison of `f(X)` against `f(p(X'))` for every permutation
/// and functional, with `X` and `X'` drawn from disjoint halves of
/// `samples` so the compared groups are independent. `n_perm` is raised to
/// at least `2 #tests / alpha`.
pub fn exchangeability_check<O: Observable, R: Rng + ?Sized>(
    samples: &[O],
    perms: &[Permutation],
    functionals: &[TestFunction],
    alpha: f64,
    n_perm: usize,
    rng: &mut R,
) -> Result<ExchangeabilityReport> {
    let n = samples.first().map_or(0, Observable::order);
    if samples.iter().any(|s| s.order() != n) {
        return Err(Error::arg("samples of different orders"));
    }
    if perms.iter().any(|p| p.n() != n) {
        return Err(Error::arg("permutation of the wrong order"));
    }
    let usable: Vec<&TestFunction> = functionals.iter().filter(|f| f.arity() <= n).collect();
    let planned = perms.len() * usable.len();
    // the permutation p-value floor must sit below the Bonferroni level
    let n_perm = n_perm.max((2.0 * planned as f64 / alpha).ceil() as usize);
    let mut tests = Vec::new();
    if n >= 2 {
        let (first, second) = samples.split_at(samples.len() / 2);
        for p in perms {
            for phi in &usable {
                let a: Vec<Vec<f64>> = first.iter().map(|s| vec![s.evaluate(phi)]).collect();
                let b: Vec<Vec<f64>> = second.iter().map(|s| vec![s.permuted(p).evaluate(phi)]).collect();
                let out = energy_two_sample(&a, &b, n_perm, rng)?;
                tests.push(PairTest {
                    permutation: (0..n).map(|i| p.image(i) + 1).collect(),
                    functional: phi.name.clone(),
                    p_value: out.p_value,
                });
            }
        }
    }
    let threshold = alpha / tests.len().max(1) as f64;
    let passed = tests.iter().all(|t| t.p_value >= threshold);
    Ok(ExchangeabilityReport {
        tests,
        alpha,
        threshold,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::stats::testfn::registry;
    use crate::treespace::beta_finite;
    use crate::xi::XiSpec;

    fn stationary_rv(reps: usize, seed: u64) -> Vec<MarkedMatrix<f64>> {
        let xi = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
        (0..reps)
            .map(|r| {
                let mut rng = replicate_rng(seed, r as u64);
                let rho = crate::lookdown::sample_stationary_ultrametric(&xi, 4, &mut rng).unwrap();
                beta_finite(&rho, true, &Default::default()).unwrap()
            })
            .collect()
    }

    #[test]
    fn sorted_marks_are_detected() {
        let mut broken = stationary_rv(400, 3);
        for rv in &mut broken {
            rv.v.sort_by(|a, b| a.total_cmp(b));
        }
        let perms = [Permutation::new(vec![3, 2, 1, 0]).unwrap()];
        let mut rng = replicate_rng(0, 0);
        let rep = exchangeability_check(&broken, &perms, &registry(4, true), 0.01, 200, &mut rng).unwrap();
        assert!(!rep.passed, "{rep:?}");
    }

    #[test]
    fn single_level_passes_trivially() {
        let one = vec![DistanceMatrix::<f64>::zeros(1); 40];
        let mut rng = replicate_rng(0, 0);
        let rep = exchangeability_check(&one, &[Permutation::identity(1)], &registry(2, false), 0.01, 200, &mut rng)
            .unwrap();
        assert!(rep.passed && rep.tests.is_empty());
    }
}
