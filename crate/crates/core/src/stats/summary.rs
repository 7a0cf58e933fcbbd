use rand::Rng;
use serde::Serialize;

use super::report::{mean_se, median};
use super::testfn::TestFunction;
use crate::error::{Error, Result};
use crate::lookdown::{LookdownPath, Visibility};
use crate::rng::{derive_seed, run_replicates};
use crate::treespace::{beta_finite, external_branches, sample_distance_matrix, DistanceMatrix, FiniteMMSpace, Tolerances};
use crate::lookdown::{extract_coalescent, sample_stationary_ultrametric, Initial};
use crate::xi::XiSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Tmrca,
    ExternalBranchLengths,
    /// Number of blocks of the coalescent read off at the given time.
    BlockCounts,
    MinExternalBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub quantity: Quantity,
    pub mean: f64,
    pub se: f64,
    pub median: f64,
    pub count: usize,
    pub values: Vec<f64>,
}

/// Per-quantity statistics over genealogies `ρ` (all of one order).
/// `s` is the time at which block counts are read.
pub fn summarize(mats: &[DistanceMatrix<f64>], quantity: Quantity, s: f64) -> Result<Summary> {
    if let Some(m) = mats.first() {
        if mats.iter().any(|x| x.n() != m.n()) {
            return Err(Error::arg("genealogies of different orders"));
        }
    }
    let mut values = Vec::new();
    for m in mats {
        match quantity {
            Quantity::Tmrca => values.push(0.5 * m.max_entry()),
            Quantity::ExternalBranchLengths => values.extend(external_branches(m)?),
            Quantity::MinExternalBranch => {
                values.push(external_branches(m)?.into_iter().fold(f64::INFINITY, f64::min))
            }
            Quantity::BlockCounts => {
                values.push(extract_coalescent(m, &[s])?[0].num_blocks() as f64)
            }
        }
    }
    let (mean, se) = mean_se(&values);
    Ok(Summary {
        quantity,
        mean,
        se,
        median: median(&values),
        count: values.len(),
        values,
    })
}

/// `Φ(χ) = ν^χ φ` by exhaustive weighted enumeration of all `k`-tuples of
/// support points.
pub fn polynomial_exact(space: &FiniteMMSpace<f64>, phi: &TestFunction) -> Result<f64> {
    let m = space.support_size();
    let k = phi.arity();
    let tuples = (m as f64).powi(k as i32);
    if tuples > 1e7 {
        return Err(Error::Resource(format!("{m}^{k} tuples exceed the enumeration budget")));
    }
    let w = space.weights();
    let mut idx = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let weight: f64 = idx.iter().map(|&i| w[i]).product();
        if weight > 0.0 {
            total += weight * phi.eval_rv(&space.marked_matrix_of(&idx));
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(total);
            }
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Monte-Carlo estimate of `ν^χ φ` from `reps` sampled marked matrices.
pub fn polynomial_mc<R: Rng + ?Sized>(
    space: &FiniteMMSpace<f64>,
    phi: &TestFunction,
    reps: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (rv, _) = sample_distance_matrix(space, phi.arity(), rng)?;
        values.push(phi.eval_rv(&rv));
    }
    Ok(mean_se(&values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    pub functional: String,
    pub forward_mean: f64,
    pub stationary_mean: f64,
    pub gap: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumGap {
    pub t: f64,
    pub replicates: usize,
    pub gaps: Vec<GapEstimate>,
    /// Empirical `P(max ρ̄_0 >= 2t)` under the stationary law.
    pub tail: f64,
    pub tail_se: f64,
}

impl EquilibriumGap {
    /// Empirical right-hand side `2 sup|φ| P(max ρ̄_0 >= 2t)` with `sup|φ| = 1`.
    pub fn bound(&self) -> f64 {
        2.0 * self.tail
    }
}

/// `|E φ(β(ρ_t)) - E φ(β(ρ̄_0))|` for each functional, from a forward
/// lookdown started in `rho0` and an independent stationary replicate set.
pub fn equilibrium_gap(
    xi: &XiSpec<f64>,
    rho0: &DistanceMatrix<f64>,
    t: f64,
    functionals: &[TestFunction],
    reps: usize,
    seed: u64,
) -> Result<EquilibriumGap> {
    let n = rho0.n();
    if n < 2 {
        return Err(Error::arg("decomposition needs n >= 2"));
    }
    if !(xi.total_mass() > 0.0) {
        return Err(Error::Precondition("stationary law needs positive total mass".into()));
    }
    let tol = Tolerances::default();
    let forward = run_replicates(derive_seed(seed, "forward"), reps, |_, rng| -> Result<_> {
        let path = LookdownPath::simulate(xi, Initial::Rho(rho0.clone()), Visibility::Rho, t, rng)?;
        beta_finite(&path.evolve_rho(t)?, false, &tol)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let stationary = run_replicates(derive_seed(seed, "stationary"), reps, |_, rng| -> Result<_> {
        let rho = sample_stationary_ultrametric(xi, n, rng)?;
        let deep = rho.max_entry() >= 2.0 * t;
        Ok((beta_finite(&rho, false, &tol)?, deep))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let deep: Vec<f64> = stationary.iter().map(|(_, d)| f64::from(*d as u8)).collect();
    let (tail, tail_se) = mean_se(&deep);
    let gaps = functionals
        .iter()
        .map(|phi| {
            let f: Vec<f64> = forward.iter().map(|rv| phi.eval_rv(rv)).collect();
            let s: Vec<f64> = stationary.iter().map(|(rv, _)| phi.eval_rv(rv)).collect();
            let (mf, sf) = mean_se(&f);
            let (ms, ss) = mean_se(&s);
            GapEstimate {
                functional: phi.name.clone(),
                forward_mean: mf,
                stationary_mean: ms,
                gap: (mf - ms).abs(),
                se: (sf * sf + ss * ss).sqrt(),
            }
        })
        .collect();
    Ok(EquilibriumGap {
        t,
        replicates: reps,
        gaps,
        tail,
        tail_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn summaries_of_fixed_trees() {
        let rho = DistanceMatrix::from_rows(vec![
            vec![0.0, 2.0, 6.0],
            vec![2.0, 0.0, 6.0],
            vec![6.0, 6.0, 0.0],
        ])
        .unwrap();
        let mats = vec![rho.clone(), rho];
        assert_eq!(summarize(&mats, Quantity::Tmrca, 0.0).unwrap().mean, 3.0);
        assert_eq!(summarize(&mats, Quantity::MinExternalBranch, 0.0).unwrap().mean, 1.0);
        assert_eq!(summarize(&mats, Quantity::ExternalBranchLengths, 0.0).unwrap().count, 6);
        assert_eq!(summarize(&mats, Quantity::BlockCounts, 1.0).unwrap().mean, 2.0);
        let two = vec![DistanceMatrix::from_upper(2, |_, _| 1.0)];
        assert_eq!(summarize(&two, Quantity::BlockCounts, 0.0).unwrap().mean, 2.0);
    }

    #[test]
    fn exhaustive_polynomial_matches_monte_carlo() {
        let rho = DistanceMatrix::from_rows(vec![
            vec![0.0, 2.0, 6.0, 6.0],
            vec![2.0, 0.0, 6.0, 6.0],
            vec![6.0, 6.0, 0.0, 4.0],
            vec![6.0, 6.0, 4.0, 0.0],
        ])
        .unwrap();
        let rv = beta_finite(&rho, true, &Tolerances::default()).unwrap();
        let space = crate::treespace::psi_hat_n(&rv);
        let mut rng = replicate_rng(12, 0);
        for phi in super::super::testfn::registry(3, true)
            .into_iter()
            .chain(super::super::testfn::registry(3, false))
        {
            let exact = polynomial_exact(&space, &phi).unwrap();
            let (mc, se) = polynomial_mc(&space, &phi, 20_000, &mut rng).unwrap();
            assert!((exact - mc).abs() <= 3.0 * se + 1e-12, "{}: {exact} vs {mc} ± {se}", phi.name);
        }
    }
}
