//! Distance matrices, marked (decomposed) matrices and the maps between them.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerances used by validations. Defaults: metric checks `1e-9`,
/// probability normalisation `1e-12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub metric: f64,
    pub probability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            metric: 1e-9,
            probability: 1e-12,
        }
    }
}

/// Symmetric nonnegative `n x n` matrix with zero diagonal, stored densely.
///
/// Construction checks the shape invariants; metric properties (triangle,
/// ultrametric, four-point) are checked by [`validate`] on demand, since the
/// lookdown dynamics are defined on all of `R^{n x n}`.
#[derive(Clone, PartialEq)]
pub struct DistanceMatrix<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DistanceMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    /// Builds the matrix from `f(i, j)` evaluated for `i < j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let x = f(i, j);
                m.data[i * n + j] = x.clone();
                m.data[j * n + i] = x;
            }
        }
        m
    }

    /// Checked constructor from rows.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::arg(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend(row);
        }
        let m = DistanceMatrix { n, data };
        m.check_shape()?;
        Ok(m)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if !self.get(i, i).is_zero() {
                return Err(Error::arg(format!("nonzero diagonal entry at ({0},{0})", i + 1)));
            }
            for j in 0..n {
                let x = self.get(i, j);
                if x < &T::zero() || !x.is_finite_value() {
                    return Err(Error::arg(format!(
                        "entry ({},{}) = {x} is not a nonnegative real",
                        i + 1,
                        j + 1
                    )));
                }
                if x != self.get(j, i) {
                    return Err(Error::arg(format!("not symmetric at ({},{})", i + 1, j + 1)));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. Setting a diagonal entry is ignored.
    pub fn set(&mut self, i: usize, j: usize, x: T) {
        if i == j {
            return;
        }
        self.data[i * self.n + j] = x.clone();
        self.data[j * self.n + i] = x;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Entries `(i, j)` with `i < j` in row-major order.
    pub fn upper_triangle(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.get(i, j).clone());
            }
        }
        out
    }

    pub fn max_entry(&self) -> T {
        self.data
            .iter()
            .cloned()
            .fold(T::zero(), |a, b| T::max_of(a, b))
    }

    /// Restriction to the first `n` indices.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        if n > self.n {
            return Err(Error::arg(format!("cannot restrict order {} to {n}", self.n)));
        }
        Ok(Self::from_upper(n, |i, j| self.get(i, j).clone()))
    }

    /// `(rho(idx[a], idx[b]))_{a,b}`; repeated indices give zero entries.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self::from_upper(idx.len(), |a, b| self.get(idx[a], idx[b]).clone())
    }

    /// Adds `delta` to every off-diagonal entry.
    pub fn grow(&mut self, delta: &T) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let x = self.data[i * n + j].clone() + delta.clone();
                    self.data[i * n + j] = x;
                }
            }
        }
    }

    pub fn convert<U: Scalar>(&self) -> DistanceMatrix<U> {
        DistanceMatrix {
            n: self.n,
            data: self.data.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n, "matrix orders differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).abs())
            .fold(T::zero(), |a, b| T::max_of(a, b))
    }
}

impl<T: fmt::Debug> fmt::Debug for DistanceMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = (0..self.n).map(|i| &self.data[i * self.n..(i + 1) * self.n]).collect();
        f.debug_struct("DistanceMatrix").field("rows", &rows).finish()
    }
}

/// A decomposed matrix `(r, v)`: tree-like part `r` and external branch
/// lengths (marks) `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedMatrix<T = f64> {
    pub r: DistanceMatrix<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> MarkedMatrix<T> {
    pub fn new(r: DistanceMatrix<T>, v: Vec<T>) -> Result<Self> {
        if v.len() != r.n() {
            return Err(Error::arg(format!(
                "mark vector has length {}, matrix has order {}",
                v.len(),
                r.n()
            )));
        }
        if let Some(i) = v.iter().position(|x| x < &T::zero() || !x.is_finite_value()) {
            return Err(Error::arg(format!("mark {} = {} is negative", i + 1, v[i])));
        }
        Ok(MarkedMatrix { r, v })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn restrict(&self, n: usize) -> Result<Self> {
        Ok(MarkedMatrix {
            r: self.r.restrict(n)?,
            v: self.v[..n].to_vec(),
        })
    }

    pub fn convert<U: Scalar>(&self) -> MarkedMatrix<U> {
        MarkedMatrix {
            r: self.r.convert(),
            v: self.v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }
}

/// `alpha(r, v)(i, j) = (v(i) + r(i, j) + v(j)) 1{i != j}`.
pub fn alpha<T: Scalar>(rv: &MarkedMatrix<T>) -> DistanceMatrix<T> {
    DistanceMatrix::from_upper(rv.n(), |i, j| {
        rv.v[i].clone() + rv.r.get(i, j).clone() + rv.v[j].clone()
    })
}

/// External branch lengths `v(i) = min_{j != i} rho(i, j) / 2`, truncated to
/// the indices present in the matrix.
pub fn external_branches<T: Scalar>(rho: &DistanceMatrix<T>) -> Result<Vec<T>> {
    let n = rho.n();
    if n < 2 {
        return Err(Error::arg("external branch lengths need at least two leaves"));
    }
    Ok((0..n)
        .map(|i| {
            let row = rho.row(i);
            let m = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, x)| x.clone())
                .reduce(T::min_of)
                .expect("n >= 2");
            m.half()
        })
        .collect())
}

/// Finite decomposition `beta_n`: marks are half the nearest-neighbour
/// distance within the `n` indices (an upper bound for the value on the
/// infinite index set), and `r(i, j) = rho(i, j) - v(i) - v(j)`.
///
/// The truncation level of the marks is the matrix order `rho.n()`.
pub fn beta_finite<T: Scalar>(
    rho: &DistanceMatrix<T>,
    require_ultrametric: bool,
    tol: &Tolerances,
) -> Result<MarkedMatrix<T>> {
    if require_ultrametric {
        let report = validate_matrix(rho, MetricKind::Ultrametric, tol);
        if !report.passed {
            return Err(Error::Validation(report.to_string()));
        }
    }
    let v = external_branches(rho)?;
    let r = DistanceMatrix::from_upper(rho.n(), |i, j| {
        let x = rho.get(i, j).clone() - v[i].clone() - v[j].clone();
        T::max_of(x, T::zero())
    });
    Ok(MarkedMatrix { r, v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Triangle inequality.
    Metric,
    /// Strong triangle inequality `max(rho(i,k), rho(k,j)) >= rho(i,j)`.
    Ultrametric,
    /// Triangle plus four-point condition (0-hyperbolic).
    Treelike,
}

/// A violated inequality: indices (0-based) and by how much it fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation<T> {
    pub indices: Vec<usize>,
    pub slack: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    pub kind: String,
    pub passed: bool,
    pub violation: Option<Violation<T>>,
}

impl<T: Scalar> fmt::Display for ValidationReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(f, "{}: pass", self.kind),
            Some(v) => {
                let idx: Vec<String> = v.indices.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "{}: fail at ({}) by {}", self.kind, idx.join(","), v.slack)
            }
        }
    }
}

fn report<T>(kind: &str, violation: Option<Violation<T>>) -> ValidationReport<T> {
    ValidationReport {
        kind: kind.to_string(),
        passed: violation.is_none(),
        violation,
    }
}

fn triangle_violation<T: Scalar>(rho: &DistanceMatrix<T>, tol: &T) -> Option<Violation<T>> {
    let n = rho.n();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let bound = rho.get(i, k).clone() + rho.get(k, j).clone();
                let excess = rho.get(i, j).clone() - bound;
                if excess > *tol {
                    return Some(Violation {
                        indices: vec![i, k, j],
                        slack: excess,
                    });
                }
            }
        }
    }
    None
}

fn ultrametric_violation<T: Scalar>(rho: &DistanceMatrix<T>, tol: &T) -> Option<Violation<T>> {
    let n = rho.n();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let bound = T::max_of(rho.get(i, k).clone(), rho.get(k, j).clone());
                let excess = rho.get(i, j).clone() - bound;
                if excess > *tol {
                    return Some(Violation {
                        indices: vec![i, k, j],
                        slack: excess,
                    });
                }
            }
        }
    }
    None
}

fn four_point_violation<T: Scalar>(r: &DistanceMatrix<T>, tol: &T) -> Option<Violation<T>> {
    let n = r.n();
    let d = |a: usize, b: usize| r.get(a, b).clone();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                for l in (k + 1)..n {
                    let lhs = d(i, j) + d(k, l);
                    let rhs = T::max_of(d(i, k) + d(j, l), d(i, l) + d(j, k));
                    let excess = lhs - rhs;
                    if excess > *tol {
                        return Some(Violation {
                            indices: vec![i, j, k, l],
                            slack: excess,
                        });
                    }
                }
            }
        }
    }
    None
}

pub fn validate_matrix<T: Scalar>(
    rho: &DistanceMatrix<T>,
    kind: MetricKind,
    tol: &Tolerances,
) -> ValidationReport<T> {
    let t = T::from_f64_lossy(tol.metric);
    match kind {
        MetricKind::Metric => report("metric", triangle_violation(rho, &t)),
        MetricKind::Ultrametric => report("ultrametric", ultrametric_violation(rho, &t)),
        MetricKind::Treelike => {
            let v = triangle_violation(rho, &t).or_else(|| four_point_violation(rho, &t));
            report("treelike", v)
        }
    }
}

/// Checks a marked matrix: nonnegative marks, `r` tree-like, and
/// `alpha(r, v)` ultrametric.
pub fn validate_marked<T: Scalar>(rv: &MarkedMatrix<T>, tol: &Tolerances) -> ValidationReport<T> {
    if let Some(i) = rv.v.iter().position(|x| x < &T::zero()) {
        return report(
            "marked",
            Some(Violation {
                indices: vec![i],
                slack: -rv.v[i].clone(),
            }),
        );
    }
    let tree = validate_matrix(&rv.r, MetricKind::Treelike, tol);
    if !tree.passed {
        return report("marked", tree.violation);
    }
    let um = validate_matrix(&alpha(rv), MetricKind::Ultrametric, tol);
    report("marked", um.violation)
}
