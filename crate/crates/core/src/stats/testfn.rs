use serde::Serialize;

use crate::error::{Error, Result};
use crate::treespace::{DistanceMatrix, MarkedMatrix};

/// Product-exponential test function of arity `k`:
/// `φ(ρ) = exp(-Σ_{i<j} λ_ij ρ(i,j))`, or in the marked variant
/// `φ(r, v) = exp(-Σ_{i<j} λ_ij r(i,j) - Σ_i μ_i v(i))`.
///
/// Coefficients are indexed by the upper triangle in row-major order
/// `(0,1), (0,2), ..., (1,2), ...`. Only the first `k` coordinates are read.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub name: String,
    k: usize,
    lambda: Vec<f64>,
    mu: Option<Vec<f64>>,
}

/// Row-major index of the pair `i < j` among the `k(k-1)/2` upper-triangle entries.
pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// Upper-triangle flattening of a matrix, the vector form used by the
/// two-sample tests.
pub fn flatten_upper(m: &DistanceMatrix<f64>) -> Vec<f64> {
    m.upper_triangle()
}

/// Marks followed by the upper triangle of `r`.
pub fn flatten_marked(rv: &MarkedMatrix<f64>) -> Vec<f64> {
    let mut x = rv.v.clone();
    x.extend(rv.r.upper_triangle());
    x
}

impl TestFunction {
    pub fn unmarked(name: &str, k: usize, lambda: Vec<f64>) -> Result<Self> {
        Self::build(name, k, lambda, None)
    }

    pub fn marked(name: &str, k: usize, lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        Self::build(name, k, lambda, Some(mu))
    }

    fn build(name: &str, k: usize, lambda: Vec<f64>, mu: Option<Vec<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("test function arity must be positive"));
        }
        if lambda.len() != k * (k - 1) / 2 {
            return Err(Error::arg(format!(
                "arity {k} needs {} pair coefficients, got {}",
                k * (k - 1) / 2,
                lambda.len()
            )));
        }
        if let Some(m) = &mu {
            if m.len() != k {
                return Err(Error::arg(format!("arity {k} needs {k} mark coefficients")));
            }
        }
        let all = lambda.iter().chain(mu.iter().flatten());
        if all.clone().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::arg("coefficients must be finite and nonnegative"));
        }
        Ok(TestFunction {
            name: name.to_string(),
            k,
            lambda,
            mu,
        })
    }

    /// The constant function 1 of arity `k`.
    pub fn constant(k: usize) -> Self {
        Self::build("one", k, vec![0.0; k * (k - 1) / 2], None).expect("valid")
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn is_marked(&self) -> bool {
        self.mu.is_some()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> Option<&[f64]> {
        self.mu.as_deref()
    }

    /// `sup |φ| = 1` for every product-exponential.
    pub fn sup_abs(&self) -> f64 {
        1.0
    }

    fn pair_exponent(&self, m: &DistanceMatrix<f64>) -> f64 {
        assert!(m.n() >= self.k, "test function of arity {} on order {}", self.k, m.n());
        let mut s = 0.0;
        for i in 0..self.k {
            for j in i + 1..self.k {
                s += self.lambda[pair_index(self.k, i, j)] * m.get(i, j);
            }
        }
        s
    }

    fn mark_exponent(&self, v: &[f64]) -> f64 {
        self.mu
            .as_ref()
            .map_or(0.0, |mu| mu.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// `φ(ρ)`; a marked function reads `ρ` with zero marks.
    pub fn eval_rho(&self, rho: &DistanceMatrix<f64>) -> f64 {
        (-self.pair_exponent(rho)).exp()
    }

    /// `φ(r, v)`; an unmarked function is applied to `α(r, v)`.
    pub fn eval_rv(&self, rv: &MarkedMatrix<f64>) -> f64 {
        if self.mu.is_none() {
            return self.eval_rho(&crate::treespace::alpha(rv));
        }
        (-self.pair_exponent(&rv.r) - self.mark_exponent(&rv.v)).exp()
    }

    /// `∂φ/∂ρ(i,j)` on the upper-triangle coordinates of `γ_k`.
    pub fn gradient_rho(&self, rho: &DistanceMatrix<f64>) -> Vec<f64> {
        let phi = self.eval_rho(rho);
        self.lambda.iter().map(|l| -l * phi).collect()
    }

    /// `(∂φ/∂r(i,j), ∂φ/∂v(i))` for the marked variant.
    pub fn gradient_rv(&self, rv: &MarkedMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let phi = self.eval_rv(rv);
        let dr = self.lambda.iter().map(|l| -l * phi).collect();
        let dv = match &self.mu {
            Some(mu) => mu.iter().map(|m| -m * phi).collect(),
            None => vec![0.0; self.k],
        };
        (dr, dv)
    }

    /// Directional derivative along `ρ ↦ ρ + 2s` off the diagonal.
    ///
    /// The ordered-pair convention `⟨∇φ, 2⟩ = Σ_{i≠j} 2 ∂φ/∂ρ(i,j)` with the
    /// symmetric split of each coordinate gives the same number.
    pub fn growth_rho(&self, rho: &DistanceMatrix<f64>) -> f64 {
        2.0 * self.gradient_rho(rho).iter().sum::<f64>()
    }

    /// Directional derivative along `v ↦ v + s` with `r` fixed.
    pub fn growth_rv(&self, rv: &MarkedMatrix<f64>) -> f64 {
        if self.mu.is_none() {
            // α(r, v + s) = α(r, v) + 2s off the diagonal
            return self.growth_rho(&crate::treespace::alpha(rv));
        }
        self.gradient_rv(rv).1.iter().sum()
    }
}

/// A fixed family of test functions of arity `k`, deliberately asymmetric in
/// the coordinates so that they detect non-exchangeable laws.
pub fn registry(k: usize, marked: bool) -> Vec<TestFunction> {
    let pairs = k * (k - 1) / 2;
    let ramp: Vec<f64> = (0..pairs).map(|p| 0.2 + 0.3 * p as f64).collect();
    let first: Vec<f64> = (0..pairs).map(|p| if p == 0 { 1.0 } else { 0.0 }).collect();
    let flat = vec![0.5; pairs];
    let mut out = Vec::new();
    if marked {
        let ramp_mu: Vec<f64> = (0..k).map(|i| 0.3 + 0.4 * i as f64).collect();
        let first_mu: Vec<f64> = (0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        out.push(TestFunction::marked("marks-ramp", k, vec![0.0; pairs], ramp_mu.clone()).expect("valid"));
        out.push(TestFunction::marked("first-leaf", k, vec![0.0; pairs], first_mu).expect("valid"));
        out.push(TestFunction::marked("ramp", k, ramp, ramp_mu).expect("valid"));
        out.push(TestFunction::marked("flat", k, flat, vec![0.5; k]).expect("valid"));
    } else {
        out.push(TestFunction::unmarked("ramp", k, ramp).expect("valid"));
        out.push(TestFunction::unmarked("first-pair", k, first).expect("valid"));
        out.push(TestFunction::unmarked("flat", k, flat).expect("valid"));
    }
    out
}
