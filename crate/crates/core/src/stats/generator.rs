use serde::Serialize;

use super::report::mean_se;
use super::testfn::TestFunction;
use crate::error::{Error, Result};
use crate::lookdown::{Initial, LookdownPath, Visibility};
use crate::partitions::{apply_partition, apply_semipartition, enumerate_partitions, enumerate_semipartitions};
use crate::rng::run_replicates;
use crate::treespace::{DistanceMatrix, MarkedMatrix};
use crate::xi::{rate_partition, rate_semipartition, Rate, XiSpec};

/// `Aφ(ρ) = ⟨∇φ, 2⟩ + Σ_{π ≠ 0_n} λ_π (φ(π(ρ)) - φ(ρ))` on `[n]`, `n = ρ.n()`.
pub fn generator_rho(xi: &XiSpec<f64>, phi: &TestFunction, rho: &DistanceMatrix<f64>) -> Result<f64> {
    let base = phi.eval_rho(rho);
    let mut jump = 0.0;
    for pi in enumerate_partitions(rho.n())?.iter().filter(|p| !p.is_singletons()) {
        let rate = rate_partition(xi, pi)?;
        if rate != 0.0 {
            jump += rate * (phi.eval_rho(&apply_partition(pi, rho)?) - base);
        }
    }
    Ok(phi.growth_rho(rho) + jump)
}

/// `Âφ(r, v) = ⟨∇_v φ, 1⟩ + Σ_{σ ≠ ∅} λ_{n,σ} (φ(σ(r, v)) - φ(r, v))`.
pub fn generator_rv(xi: &XiSpec<f64>, phi: &TestFunction, rv: &MarkedMatrix<f64>) -> Result<f64> {
    if xi.is_dust_free() {
        return Err(Error::Precondition(
            "the marked generator needs a measure that is not dust-free".into(),
        ));
    }
    let base = phi.eval_rv(rv);
    let mut jump = 0.0;
    for sigma in enumerate_semipartitions(rv.n())?.iter().filter(|s| !s.is_empty()) {
        let rate = match rate_semipartition(xi, sigma)? {
            Rate::Finite(r) => r,
            Rate::Infinite => return Err(Error::Precondition("infinite event rate".into())),
        };
        if rate != 0.0 {
            jump += rate * (phi.eval_rv(&apply_semipartition(sigma, rv)?) - base);
        }
    }
    Ok(phi.growth_rv(rv) + jump)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorCheck {
    pub analytic: f64,
    pub estimate: f64,
    pub se: f64,
    pub h: f64,
    pub bias_constant: f64,
    pub replicates: usize,
    pub passed: bool,
}

impl GeneratorCheck {
    /// `C h + 3 SE`.
    pub fn allowance(&self) -> f64 {
        self.bias_constant * self.h + 3.0 * self.se
    }
}

/// Compares the analytic generator with `(E φ(X_h) - φ(X_0)) / h` over
/// `reps` lookdown paths started in `state`; passes iff the difference is at
/// most `C h + 3 SE`.
#[allow(clippy::too_many_arguments)]
pub fn generator_check(
    xi: &XiSpec<f64>,
    mode: Visibility,
    phi: &TestFunction,
    state: &Initial,
    h: f64,
    reps: usize,
    bias_constant: f64,
    seed: u64,
) -> Result<GeneratorCheck> {
    if !(h > 0.0) || reps < 2 {
        return Err(Error::arg("need h > 0 and at least two replicates"));
    }
    if phi.arity() > 6 || phi.arity() > state.n() {
        return Err(Error::arg("test function arity must be at most min(6, n)"));
    }
    let (analytic, base) = match (mode, state) {
        (Visibility::Rho, s) => {
            let rho = s.rho();
            (generator_rho(xi, phi, &rho)?, phi.eval_rho(&rho))
        }
        (Visibility::Rv, Initial::Rv(rv)) => (generator_rv(xi, phi, rv)?, phi.eval_rv(rv)),
        (Visibility::Rv, Initial::Rho(_)) => {
            return Err(Error::arg("marked generator needs a decomposed state"))
        }
    };
    let values = run_replicates(seed, reps, |_, rng| -> Result<f64> {
        let path = LookdownPath::simulate(xi, state.clone(), mode, h, rng)?;
        Ok(match mode {
            Visibility::Rho => phi.eval_rho(&path.evolve_rho(h)?),
            Visibility::Rv => phi.eval_rv(&path.evolve_rv(h)?),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = values.iter().map(|v| (v - base) / h).collect();
    let (estimate, se) = mean_se(&diffs);
    let mut out = GeneratorCheck {
        analytic,
        estimate,
        se,
        h,
        bias_constant,
        replicates: reps,
        passed: false,
    };
    out.passed = (estimate - analytic).abs() <= out.allowance();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(x: f64) -> DistanceMatrix<f64> {
        DistanceMatrix::from_rows(vec![vec![0.0, x], vec![x, 0.0]]).unwrap()
    }

    #[test]
    fn kingman_pair_generator() {
        let xi = XiSpec::kingman(1.0).unwrap();
        let phi = TestFunction::unmarked("e", 2, vec![1.0]).unwrap();
        assert!((generator_rho(&xi, &phi, &pair(0.0)).unwrap() + 2.0).abs() < 1e-15);
        let x: f64 = 0.7;
        let expected = -2.0 * (-x).exp() + (1.0 - (-x).exp());
        assert!((generator_rho(&xi, &phi, &pair(x)).unwrap() - expected).abs() < 1e-15);
        let one = TestFunction::constant(2);
        assert_eq!(generator_rho(&xi, &one, &pair(x)).unwrap(), 0.0);
    }

    #[test]
    fn marked_generator_needs_dust() {
        let phi = TestFunction::marked("e", 2, vec![1.0], vec![1.0, 1.0]).unwrap();
        let rv = MarkedMatrix::new(pair(0.5), vec![0.2, 0.3]).unwrap();
        assert!(matches!(
            generator_rv(&XiSpec::kingman(1.0).unwrap(), &phi, &rv),
            Err(Error::Precondition(_))
        ));
        // δ_(1/2) on [2]: {{1}} and {{2}} at rate 4·½·½ = 1 each, {{1,2}} at
        // rate 4·¼ = 1; {{1},{2}} needs two intervals and has rate 0
        let xi = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
        let (r, v1, v2) = (0.5, 0.2, 0.3);
        let phi_of = |r: f64, a: f64, b: f64| (-r - a - b).exp();
        let growth = -2.0 * phi_of(r, v1, v2);
        let jumps = (phi_of(v1 + r, 0.0, v2) - phi_of(r, v1, v2))
            + (phi_of(r + v2, v1, 0.0) - phi_of(r, v1, v2))
            + (phi_of(0.0, 0.0, 0.0) - phi_of(r, v1, v2));
        let got = generator_rv(&xi, &phi, &rv).unwrap();
        assert!((got - (growth + jumps)).abs() < 1e-14, "{got}");
    }

    #[test]
    fn rv_and_rho_generators_agree_on_unmarked_functions() {
        // for φ depending on α(r, v) only, both generators describe ρ
        let xi = XiSpec::point_mass(1.5, vec![0.4, 0.3]).unwrap();
        let phi = TestFunction::unmarked("ramp", 3, vec![0.2, 0.5, 0.8]).unwrap();
        let rho = DistanceMatrix::from_rows(vec![
            vec![0.0, 2.0, 6.0],
            vec![2.0, 0.0, 6.0],
            vec![6.0, 6.0, 0.0],
        ])
        .unwrap();
        let rv = crate::treespace::beta_finite(&rho, true, &Default::default()).unwrap();
        let a = generator_rho(&xi, &phi, &rho).unwrap();
        let b = generator_rv(&xi, &phi, &rv).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
