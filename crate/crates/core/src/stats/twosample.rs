use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub const MIN_SAMPLE: usize = 20;
pub const MIN_PERMUTATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Energy distance between the groups of a labelling, as a V-statistic:
/// `2 E|X - Y| - E|X - X'| - E|Y - Y'|`.
fn energy_from(d: &[f64], total: usize, in_a: &[bool], na: usize, row_sum: &[f64], grand: f64) -> f64 {
    let nb = total - na;
    let mut saa = 0.0;
    let mut sum_rows_a = 0.0;
    let members: Vec<usize> = (0..total).filter(|&i| in_a[i]).collect();
    for (x, &i) in members.iter().enumerate() {
        sum_rows_a += row_sum[i];
        let row = &d[i * total..(i + 1) * total];
        for &j in &members[x + 1..] {
            saa += row[j];
        }
    }
    saa *= 2.0;
    let sab = sum_rows_a - saa;
    let sbb = grand - saa - 2.0 * sab;
    let (na, nb) = (na as f64, nb as f64);
    2.0 * sab / (na * nb) - saa / (na * na) - sbb / (nb * nb)
}

/// Permutation test of equal laws based on the energy distance.
///
/// The p-value is `(1 + #{T_perm >= T_obs}) / (1 + n_perm)` (ties count
/// against rejection), so identical samples give `p = 1`.
pub fn energy_two_sample<R: Rng + ?Sized>(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    n_perm: usize,
    rng: &mut R,
) -> Result<TestOutcome> {
    if a.len() < MIN_SAMPLE || b.len() < MIN_SAMPLE {
        return Err(Error::arg(format!(
            "energy test needs at least {MIN_SAMPLE} points per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::arg(format!("need at least {MIN_PERMUTATIONS} permutations")));
    }
    let dim = a[0].len();
    if dim == 0 || a.iter().chain(b).any(|x| x.len() != dim || x.iter().any(|c| !c.is_finite())) {
        return Err(Error::arg("samples must be finite vectors of one common nonzero length"));
    }
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let total = pooled.len();
    let mut d = vec![0.0; total * total];
    for i in 0..total {
        for j in i + 1..total {
            let x = euclid(pooled[i], pooled[j]);
            d[i * total + j] = x;
            d[j * total + i] = x;
        }
    }
    let row_sum: Vec<f64> = (0..total).map(|i| d[i * total..(i + 1) * total].iter().sum()).collect();
    let grand: f64 = row_sum.iter().sum();
    let mut in_a: Vec<bool> = (0..total).map(|i| i < a.len()).collect();
    let observed = energy_from(&d, total, &in_a, a.len(), &row_sum, grand);
    let tol = 1e-12 * (1.0 + observed.abs());
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        in_a.shuffle(rng);
        if energy_from(&d, total, &in_a, a.len(), &row_sum, grand) >= observed - tol {
            exceed += 1;
        }
    }
    Ok(TestOutcome {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + n_perm) as f64,
    })
}

/// `sup_x |F_n(x) - F(x)|` of a sample against a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `sup_x |F_a(x) - F_b(x)|` between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Pearson chi-squared test of homogeneity for two count vectors over the
/// same categories; categories empty in both samples are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<TestOutcome> {
    if a.len() != b.len() {
        return Err(Error::arg("count vectors over different categories"));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::arg("empty sample"));
    }
    let mut stat = 0.0;
    let mut cats = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        cats += 1;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    if cats < 2 {
        return Ok(TestOutcome {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let chi = ChiSquared::new((cats - 1) as f64).map_err(|e| Error::arg(e.to_string()))?;
    Ok(TestOutcome {
        statistic: stat,
        p_value: chi.sf(stat),
    })
}
