//! Named experiments, each producing an [`ExperimentReport`] with its
//! thresholds and replicate counts written out.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde_json::{json, Value};

use crate::bridges::{coalescent_from_flow, sample_flow};
use crate::error::{Error, Result};
use crate::lookdown::{
    extract_coalescent, sample_genealogy, sample_stationary_ultrametric, Initial, LookdownPath, RhoState, Visibility,
};
use crate::partitions::{enumerate_partitions, Partition, Permutation};
use crate::rng::{derive_seed, replicate_rng, run_replicates};
use crate::scalar::Exact;
use crate::stats::{
    chi_square_two_sample, energy_two_sample, equilibrium_gap, exchangeability_check, flatten_marked, generator_check,
    mean_se, median, registry, ExperimentReport, TestFunction,
};
use crate::treespace::{beta_finite, DistanceMatrix, MarkedMatrix, Tolerances};
use crate::xi::{rate_partition, EventSampler, XiSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckName {
    Rates,
    Representation,
    Generator,
    Equilibrium,
    Bridges,
    Exchangeability,
    Dust,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Rates,
        CheckName::Representation,
        CheckName::Generator,
        CheckName::Equilibrium,
        CheckName::Bridges,
        CheckName::Exchangeability,
        CheckName::Dust,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::Rates => "rates",
            CheckName::Representation => "representation",
            CheckName::Generator => "generator",
            CheckName::Equilibrium => "equilibrium",
            CheckName::Bridges => "bridges",
            CheckName::Exchangeability => "exchangeability",
            CheckName::Dust => "dust",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown check {s:?}")))
    }
}

/// Overrides for a check; unset fields take the check's documented default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckParams {
    /// Number of levels / leaves.
    pub n: Option<usize>,
    /// Horizon or evaluation time; for `equilibrium` and `bridges` the
    /// largest of the defaults is replaced by a single time.
    pub t: Option<f64>,
    /// Replicates per sample.
    pub reps: Option<usize>,
    /// Harness repetitions of a statistical test.
    pub repetitions: Option<usize>,
    pub alpha: Option<f64>,
    pub n_perm: Option<usize>,
    /// Finite-difference step of the generator check.
    pub h: Option<f64>,
    /// Bias constant `C` of the generator check.
    pub bias_constant: Option<f64>,
    /// Sample size of the genealogy that is reconstructed.
    pub sample_size: Option<usize>,
    /// Arity of resampled matrices.
    pub k: Option<usize>,
    pub mode: Option<Visibility>,
}

/// Fraction of harness repetitions that must pass.
pub const REPETITION_PASS_FRACTION: f64 = 0.95;

pub fn run_check(name: CheckName, xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    match name {
        CheckName::Rates => check_rates(xi, params, seed),
        CheckName::Representation => check_representation(xi, params, seed),
        CheckName::Generator => check_generator(xi, params, seed),
        CheckName::Equilibrium => check_equilibrium(xi, params, seed),
        CheckName::Bridges => check_bridges(xi, params, seed),
        CheckName::Exchangeability => check_exchangeability(xi, params, seed),
        CheckName::Dust => check_dust(xi, params, seed),
    }
}

fn base_params(xi: &XiSpec<f64>) -> BTreeMap<String, Value> {
    let mut p = BTreeMap::new();
    p.insert("xi".into(), xi_config(xi));
    p
}

/// A measure as a configuration value, for headers and reports.
pub fn xi_config(xi: &XiSpec<f64>) -> Value {
    let atoms: Vec<Value> = xi
        .atoms()
        .iter()
        .map(|a| json!({"weight": a.weight, "x": a.point.coords()}))
        .collect();
    json!({"kingman_mass": xi.kingman_mass(), "atoms": atoms})
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::arg(format!("{name} must be a positive real, got {x}")))
    }
}

fn fraction_rule(passes: usize, total: usize) -> (bool, String) {
    let need = (REPETITION_PASS_FRACTION * total as f64).ceil() as usize;
    (passes >= need, format!("{passes}/{total} repetitions pass, need >= {need}"))
}

/// Empirical event rates of a lookdown path against `λ_π`:
/// `|N_π / T - λ_π| <= 3 sqrt(λ_π / T)`, and no events where `λ_π = 0`.
pub fn check_rates(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let n = params.n.unwrap_or(3);
    let horizon = positive("t", params.t.unwrap_or(2000.0))?;
    if n < 2 {
        return Err(Error::arg("rates need n >= 2"));
    }
    let mut p = base_params(xi);
    p.insert("n".into(), json!(n));
    p.insert("t".into(), json!(horizon));
    let mut report = ExperimentReport::new("rates", p, seed);
    let events = EventSampler::new(xi, n, Visibility::Rho, horizon, replicate_rng(seed, 0))?;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for e in events {
        *counts.entry(e.partition.to_string()).or_default() += 1;
    }
    for pi in enumerate_partitions(n)?.iter().filter(|p| !p.is_singletons()) {
        let key = pi.to_string();
        let lambda = rate_partition(xi, pi)?;
        let count = counts.get(&key).copied().unwrap_or(0);
        let empirical = count as f64 / horizon;
        let se = (lambda / horizon).sqrt();
        report.estimate(format!("rate {key}"), empirical, se, 1);
        report.estimate(format!("expected {key}"), lambda, 0.0, 0);
        if lambda == 0.0 {
            report.condition(format!("no {key} events"), count == 0, format!("count {count} == 0"));
        } else {
            let diff = (empirical - lambda).abs();
            report.condition(
                format!("rate {key}"),
                diff <= 3.0 * se,
                format!("|{empirical:.6} - {lambda:.6}| = {diff:.6} <= 3 sqrt(λ/T) = {:.6}", 3.0 * se),
            );
        }
    }
    Ok(report)
}

/// Marked matrices of `k` points resampled from the reconstruction of an
/// `N`-leaf coalescent tree against the first `k` leaves of fresh trees,
/// compared by an energy test in every harness repetition.
///
/// Each resampled matrix uses its own tree: the representation identifies
/// the law of `β(ρ)` with the mean of the random distance matrix
/// distribution, which a single tree does not reproduce.
pub fn check_representation(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let big_n = params.sample_size.unwrap_or(2000);
    let k = params.k.unwrap_or(4);
    let reps = params.reps.unwrap_or(500);
    let repetitions = params.repetitions.unwrap_or(40);
    let n_perm = params.n_perm.unwrap_or(500);
    let alpha = params.alpha.unwrap_or(0.01);
    if k < 2 || k > big_n {
        return Err(Error::arg("need 2 <= k <= sample size"));
    }
    let mut p = base_params(xi);
    for (key, v) in [
        ("sample_size", json!(big_n)),
        ("k", json!(k)),
        ("reps", json!(reps)),
        ("repetitions", json!(repetitions)),
        ("n_perm", json!(n_perm)),
        ("alpha", json!(alpha)),
    ] {
        p.insert(key.into(), v);
    }
    let mut report = ExperimentReport::new("representation", p, seed);
    let first: Vec<usize> = (0..k).collect();
    let mut passes = 0;
    let mut ps = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let rs = derive_seed(seed, &format!("repetition-{rep}"));
        let resampled = run_replicates(derive_seed(rs, "resampled"), reps, |_, rng| -> Result<Vec<f64>> {
            let g = sample_genealogy(xi, big_n, rng)?;
            let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..big_n)).collect();
            Ok(flatten_marked(&g.sampled_decomposition(&idx)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let fresh = run_replicates(derive_seed(rs, "fresh"), reps, |_, rng| -> Result<Vec<f64>> {
            let g = sample_genealogy(xi, big_n, rng)?;
            Ok(flatten_marked(&g.sampled_decomposition(&first)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut rng = replicate_rng(derive_seed(rs, "test"), 0);
        let out = energy_two_sample(&resampled, &fresh, n_perm, &mut rng)?;
        if out.p_value >= alpha {
            passes += 1;
        }
        ps.push(out.p_value);
    }
    let (m, se) = mean_se(&ps);
    report.estimate("mean p-value", m, se, repetitions);
    let (ok, rule) = fraction_rule(passes, repetitions);
    report.condition(format!("energy test p >= {alpha}"), ok, rule);
    Ok(report)
}

/// Analytic generator against `(E φ(X_h) - φ(X_0)) / h`, in `ρ` mode and,
/// for measures with dust, in `(r, v)` mode.
pub fn check_generator(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let n = params.n.unwrap_or(2);
    let h = positive("h", params.h.unwrap_or(0.01))?;
    let reps = params.reps.unwrap_or(100_000);
    let c = params.bias_constant.unwrap_or(10.0);
    if !(2..=6).contains(&n) {
        return Err(Error::arg("generator check needs 2 <= n <= 6"));
    }
    let modes: Vec<Visibility> = match params.mode {
        Some(m) => vec![m],
        None if xi.is_dust_free() => vec![Visibility::Rho],
        None => vec![Visibility::Rho, Visibility::Rv],
    };
    let mut p = base_params(xi);
    for (key, v) in [
        ("n", json!(n)),
        ("h", json!(h)),
        ("reps", json!(reps)),
        ("bias_constant", json!(c)),
        ("modes", json!(modes)),
    ] {
        p.insert(key.into(), v);
    }
    let mut report = ExperimentReport::new("generator", p, seed);
    let pairs = n * (n - 1) / 2;
    for mode in modes {
        let (phi, state) = match mode {
            Visibility::Rho => (
                TestFunction::unmarked("exp-sum", n, vec![1.0; pairs])?,
                Initial::Rho(DistanceMatrix::zeros(n)),
            ),
            Visibility::Rv => {
                let r = DistanceMatrix::from_upper(n, |_, _| 0.5);
                let v = (0..n).map(|i| 0.2 + 0.1 * i as f64).collect();
                (
                    TestFunction::marked("exp-sum", n, vec![1.0; pairs], vec![1.0; n])?,
                    Initial::Rv(MarkedMatrix::new(r, v)?),
                )
            }
        };
        let label = match mode {
            Visibility::Rho => "rho",
            Visibility::Rv => "rv",
        };
        let out = generator_check(xi, mode, &phi, &state, h, reps, c, derive_seed(seed, label))?;
        report.estimate(format!("{label} analytic"), out.analytic, 0.0, 0);
        report.estimate(format!("{label} finite difference"), out.estimate, out.se, reps);
        report.condition(
            format!("{label} generator"),
            out.passed,
            format!(
                "|{:.5} - {:.5}| = {:.5} <= C h + 3 SE = {:.5}",
                out.estimate,
                out.analytic,
                (out.estimate - out.analytic).abs(),
                out.allowance()
            ),
        );
    }
    Ok(report)
}

/// `|E φ(β(ρ_t)) - E φ(β(ρ̄_0))| <= 2 P(max ρ̄_0 >= 2t) + 3 SE` for every
/// registry function at each `t`, from `ρ_0 = 0`. For `n = 2` the tail is
/// `exp(-Ξ(Δ) t)` exactly; otherwise it is estimated.
pub fn check_equilibrium(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let n = params.n.unwrap_or(2);
    let reps = params.reps.unwrap_or(20_000);
    let times = match params.t {
        Some(t) => vec![t],
        None => vec![1.0, 2.0, 3.0],
    };
    if n < 2 {
        return Err(Error::arg("equilibrium check needs n >= 2"));
    }
    let mut p = base_params(xi);
    p.insert("n".into(), json!(n));
    p.insert("reps".into(), json!(reps));
    p.insert("t".into(), json!(times));
    let mut report = ExperimentReport::new("equilibrium", p, seed);
    let phis = registry(n.min(4), true);
    let rho0 = DistanceMatrix::zeros(n);
    for &t in &times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::arg(format!("time {t} is not a nonnegative real")));
        }
        let gap = equilibrium_gap(xi, &rho0, t, &phis, reps, derive_seed(seed, &format!("t={t}")))?;
        let (bound, bound_se) = if n == 2 {
            (2.0 * (-xi.total_mass() * t).exp(), 0.0)
        } else {
            (gap.bound(), 2.0 * gap.tail_se)
        };
        report.estimate(format!("t={t} bound"), bound, bound_se, if n == 2 { 0 } else { reps });
        for g in &gap.gaps {
            let se = (g.se * g.se + bound_se * bound_se).sqrt();
            report.estimate(format!("t={t} gap {}", g.functional), g.gap, g.se, reps);
            report.condition(
                format!("t={t} {}", g.functional),
                g.gap <= bound + 3.0 * se,
                format!("{:.5} <= {:.5} + 3 SE ({:.5})", g.gap, bound, 3.0 * se),
            );
        }
    }
    Ok(report)
}

/// Partition frequencies of the dual-flow coalescent against the lookdown
/// coalescent (chi-squared per time, Bonferroni over times, per harness
/// repetition), the pair coalescence curve, and the exact cocycle identity.
pub fn check_bridges(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let n = params.n.unwrap_or(3);
    let reps = params.reps.unwrap_or(2000);
    let repetitions = params.repetitions.unwrap_or(40);
    let alpha = params.alpha.unwrap_or(0.01);
    let grid = match params.t {
        Some(t) => vec![positive("t", t)?],
        None => vec![0.5, 1.0, 2.0],
    };
    if !(2..=8).contains(&n) {
        return Err(Error::arg("bridge check needs 2 <= n <= 8"));
    }
    let horizon = grid.iter().copied().fold(0.0, f64::max);
    let mut p = base_params(xi);
    for (key, v) in [
        ("n", json!(n)),
        ("reps", json!(reps)),
        ("repetitions", json!(repetitions)),
        ("alpha", json!(alpha)),
        ("s", json!(grid)),
    ] {
        p.insert(key.into(), v);
    }
    let mut report = ExperimentReport::new("bridges", p, seed);
    let classes = enumerate_partitions(n)?;
    let class_of = |pi: &Partition| classes.iter().position(|c| c == pi).expect("partition of [n]");
    let level = alpha / grid.len() as f64;
    let mut passes = 0;
    let mut pair_hits = vec![0u64; grid.len()];
    let mut total = 0u64;
    let mut cocycle_ok = true;
    let mut triples = 0usize;
    for rep in 0..repetitions {
        let rs = derive_seed(seed, &format!("repetition-{rep}"));
        let flows = run_replicates(derive_seed(rs, "flow"), reps, |i, rng| -> Result<(Vec<Partition>, bool)> {
            let flow = sample_flow(xi, horizon, rng)?;
            let v: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let parts = coalescent_from_flow(&flow, &v, horizon, &grid)?;
            let mut ok = true;
            if i < 5 {
                let mut cuts: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * horizon).collect();
                cuts.sort_by(|a, b| a.total_cmp(b));
                let (s, t, u) = (cuts[0], cuts[1], cuts[2]);
                let outer = flow.bridge::<Exact>(t, u)?;
                let inner = flow.bridge::<Exact>(s, t)?;
                ok = outer.compose(&inner) == flow.bridge::<Exact>(s, u)?;
            }
            Ok((parts, ok))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let looks = run_replicates(derive_seed(rs, "lookdown"), reps, |_, rng| -> Result<Vec<Partition>> {
            extract_coalescent(&sample_stationary_ultrametric(xi, n, rng)?, &grid)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        triples += reps.min(5);
        cocycle_ok &= flows.iter().all(|(_, ok)| *ok);
        let mut min_p = f64::INFINITY;
        for (g, _) in grid.iter().enumerate() {
            let mut a = vec![0u64; classes.len()];
            let mut b = vec![0u64; classes.len()];
            for (parts, _) in &flows {
                a[class_of(&parts[g])] += 1;
                if parts[g].same_block(0, 1) {
                    pair_hits[g] += 1;
                }
            }
            for parts in &looks {
                b[class_of(&parts[g])] += 1;
            }
            min_p = min_p.min(chi_square_two_sample(&a, &b)?.p_value);
        }
        total += reps as u64;
        if min_p >= level {
            passes += 1;
        }
    }
    let (ok, rule) = fraction_rule(passes, repetitions);
    report.condition(format!("chi-squared min p >= {alpha}/{}", grid.len()), ok, rule);
    let mass = xi.total_mass();
    for (g, &s) in grid.iter().enumerate() {
        let q = 1.0 - (-mass * s).exp();
        let emp = pair_hits[g] as f64 / total as f64;
        let se = (q * (1.0 - q) / total as f64).sqrt();
        report.estimate(format!("P(1~2 by {s})"), emp, se, total as usize);
        report.condition(
            format!("pair curve at s={s}"),
            (emp - q).abs() <= 3.0 * se,
            format!("|{emp:.5} - {q:.5}| <= 3 SE = {:.5}", 3.0 * se),
        );
    }
    report.condition("cocycle identity", cocycle_ok, format!("exact on {triples} sampled triples"));
    Ok(report)
}

/// Functionals of `ρ_t` (and `(r_t, v_t)` for measures with dust) against
/// their permuted counterparts, from an exchangeable start.
pub fn check_exchangeability(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let n = params.n.unwrap_or(4);
    let t = positive("t", params.t.unwrap_or(1.0))?;
    let reps = params.reps.unwrap_or(300);
    let repetitions = params.repetitions.unwrap_or(20);
    let alpha = params.alpha.unwrap_or(0.01);
    let n_perm = params.n_perm.unwrap_or(200);
    let mut p = base_params(xi);
    for (key, v) in [
        ("n", json!(n)),
        ("t", json!(t)),
        ("reps", json!(reps)),
        ("repetitions", json!(repetitions)),
        ("alpha", json!(alpha)),
        ("n_perm", json!(n_perm)),
    ] {
        p.insert(key.into(), v);
    }
    let mut report = ExperimentReport::new("exchangeability", p, seed);
    let mut perms = vec![Permutation::new((0..n).rev().collect())?];
    if n >= 2 {
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(0, 1);
        perms.push(Permutation::new(swap)?);
    }
    let k = n.min(4);
    let tol = Tolerances::default();
    let mut passes = [0usize; 2];
    let marked = !xi.is_dust_free() && n >= 2;
    for rep in 0..repetitions {
        let rs = derive_seed(seed, &format!("repetition-{rep}"));
        let paths = run_replicates(rs, reps, |_, rng| -> Result<(DistanceMatrix<f64>, Option<MarkedMatrix<f64>>)> {
            let start = if n >= 2 {
                sample_stationary_ultrametric(xi, n, rng)?
            } else {
                DistanceMatrix::zeros(n)
            };
            let rho = LookdownPath::simulate(xi, Initial::Rho(start.clone()), Visibility::Rho, t, rng)?.evolve_rho(t)?;
            let rv = if marked {
                let init = Initial::Rv(beta_finite(&start, true, &tol)?);
                Some(LookdownPath::simulate(xi, init, Visibility::Rv, t, rng)?.evolve_rv(t)?)
            } else {
                None
            };
            Ok((rho, rv))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut rng = replicate_rng(derive_seed(rs, "test"), 0);
        let rhos: Vec<DistanceMatrix<f64>> = paths.iter().map(|x| x.0.clone()).collect();
        if exchangeability_check(&rhos, &perms, &registry(k, false), alpha, n_perm, &mut rng)?.passed {
            passes[0] += 1;
        }
        if marked {
            let rvs: Vec<MarkedMatrix<f64>> = paths.iter().filter_map(|x| x.1.clone()).collect();
            if exchangeability_check(&rvs, &perms, &registry(k, true), alpha, n_perm, &mut rng)?.passed {
                passes[1] += 1;
            }
        }
    }
    let (ok, rule) = fraction_rule(passes[0], repetitions);
    report.condition("rho_t exchangeable", ok, rule);
    if marked {
        let (ok, rule) = fraction_rule(passes[1], repetitions);
        report.condition("(r_t, v_t) exchangeable", ok, rule);
    }
    Ok(report)
}

fn lookdown_branches<R: Rng>(xi: &XiSpec<f64>, n: usize, t: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut state = RhoState::new(&DistanceMatrix::zeros(n));
    for e in EventSampler::new(xi, n, Visibility::Rho, t, rng)? {
        state.apply(&e)?;
    }
    Ok(state.external_branches(t))
}

/// The dust criterion seen on `ρ_t`: for dust-free measures the smallest
/// external branch shrinks as `n` grows (strictly decreasing medians); with
/// dust the external branch of a fixed level stays bounded away from 0 (its
/// mean at the largest `n` is at least half that at the smallest). For the
/// star measure the branch length is also checked against its `Exp(1)` law.
pub fn check_dust(xi: &XiSpec<f64>, params: &CheckParams, seed: u64) -> Result<ExperimentReport> {
    let t = positive("t", params.t.unwrap_or(2.0))?;
    let reps = params.reps.unwrap_or(40);
    let sizes: Vec<usize> = match params.n {
        Some(n) => vec![10.min(n), n],
        None => vec![10, 50, 250],
    };
    if sizes.iter().any(|&n| n < 2) {
        return Err(Error::arg("dust check needs n >= 2"));
    }
    let dust_free = xi.is_dust_free();
    let mut p = base_params(xi);
    p.insert("t".into(), json!(t));
    p.insert("reps".into(), json!(reps));
    p.insert("n".into(), json!(sizes));
    p.insert("dust_free".into(), json!(dust_free));
    let mut report = ExperimentReport::new("dust", p, seed);
    report.note(format!("dust-free={dust_free}"));
    let mut medians = Vec::new();
    let mut level_one = Vec::new();
    for &n in &sizes {
        let runs = run_replicates(derive_seed(seed, &format!("n={n}")), reps, |_, rng| lookdown_branches(xi, n, t, rng))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mins: Vec<f64> = runs.iter().map(|b| b.iter().copied().fold(f64::INFINITY, f64::min)).collect();
        let firsts: Vec<f64> = runs.iter().map(|b| b[0]).collect();
        let (mm, ms) = mean_se(&mins);
        let (fm, fs) = mean_se(&firsts);
        medians.push(median(&mins));
        level_one.push(fm);
        report.estimate(format!("n={n} min external branch"), mm, ms, reps);
        report.estimate(format!("n={n} median min external branch"), median(&mins), f64::NAN, reps);
        report.estimate(format!("n={n} level-1 external branch"), fm, fs, reps);
    }
    if dust_free {
        let ok = medians.windows(2).all(|w| w[1] < w[0]);
        report.condition(
            "min external branch decreasing in n",
            ok,
            format!("medians {medians:?} strictly decreasing"),
        );
    } else {
        let (first, last) = (level_one[0], *level_one.last().expect("sizes"));
        report.condition(
            "external branch bounded away from 0",
            last >= 0.5 * first && last > 0.0,
            format!("level-1 mean {last:.5} at n={} >= ½ · {first:.5} at n={}", sizes[sizes.len() - 1], sizes[0]),
        );
    }
    if xi.is_lambda_type() && *xi.kingman_mass() == 0.0 && xi.atoms().iter().all(|a| a.point.coords()[0] >= 1.0) {
        let star_t = 20.0;
        let star_reps = reps.max(2000);
        let firsts = run_replicates(derive_seed(seed, "star"), star_reps, |_, rng| {
            lookdown_branches(xi, 10, star_t, rng).map(|b| b[0])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (m, se) = mean_se(&firsts);
        let expected = 1.0 / xi.total_mass();
        report.estimate("star external branch at t=20", m, se, star_reps);
        report.condition(
            "star external branch ~ Exp(Λ({1}))",
            (m - expected).abs() <= 3.0 * se,
            format!("|{m:.5} - {expected:.5}| <= 3 SE = {:.5}", 3.0 * se),
        );
    }
    Ok(report)
}
