//! Exact Prohorov distance between two probability vectors on a common
//! finite metric support.
//!
//! For a threshold `d`, let `D(d) = max_F (mu(F) - mu'(F^d))` with `F^d` the
//! closed `d`-neighbourhood. By the defect form of the transport duality,
//! `D(d) = 1 - (max flow from mu to mu' along pairs at distance <= d)`.
//! `D` is a nonincreasing step function of `d` that only changes at the
//! pairwise distances `d_0 = 0 < d_1 < ...`, so the distance is
//! `min_k max(d_k, D(d_k))`; the minimum sits where `D(d_k) <= d_k` first
//! holds, which is located by binary search.

use super::matrix::DistanceMatrix;
use super::mmspace::FiniteMMSpace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_PROHOROV_SUPPORT: usize = 200;

const FLOW_EPS: f64 = 1e-15;
const DEFECT_TOL: f64 = 1e-12;

/// Ground metric `max(dist(x, y), |u - u'|)` on the support of a marked space.
pub fn marked_ground_metric<T: Scalar>(space: &FiniteMMSpace<T>) -> DistanceMatrix<f64> {
    let d = space.dist();
    let marks = space.marks();
    DistanceMatrix::from_upper(space.support_size(), |i, j| {
        let m = (marks[i].to_f64_lossy() - marks[j].to_f64_lossy()).abs();
        d.get(i, j).to_f64_lossy().max(m)
    })
}

pub fn prohorov_exact(ground: &DistanceMatrix<f64>, w: &[f64], w2: &[f64]) -> Result<f64> {
    let m = ground.n();
    if m > MAX_PROHOROV_SUPPORT {
        return Err(Error::Resource(format!(
            "support of {m} points exceeds {MAX_PROHOROV_SUPPORT}"
        )));
    }
    for (name, p) in [("first", w), ("second", w2)] {
        if p.len() != m {
            return Err(Error::arg(format!("{name} weight vector has length {}, support {m}", p.len())));
        }
        if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("{name} weight vector is not a probability vector")));
        }
    }
    let mut levels = ground.upper_triangle();
    levels.push(0.0);
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    levels.dedup();

    let defect = |d: f64| (1.0 - max_transport(ground, w, w2, d)).clamp(0.0, 1.0);

    // smallest k with defect(d_k) <= d_k; the last level always qualifies
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let dm = defect(levels[mid]);
        if dm <= levels[mid] + DEFECT_TOL {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if lo == 0 {
        return Ok(0.0);
    }
    Ok(levels[lo].min(defect(levels[lo - 1])))
}

/// Maximum mass transportable from `w` to `w2` using only pairs at ground
/// distance `<= threshold`.
fn max_transport(ground: &DistanceMatrix<f64>, w: &[f64], w2: &[f64], threshold: f64) -> f64 {
    let m = ground.n();
    let source = 2 * m;
    let sink = 2 * m + 1;
    let mut g = FlowGraph::new(2 * m + 2);
    for i in 0..m {
        if w[i] > 0.0 {
            g.add_edge(source, i, w[i]);
        }
        if w2[i] > 0.0 {
            g.add_edge(m + i, sink, w2[i]);
        }
    }
    for i in 0..m {
        if w[i] <= 0.0 {
            continue;
        }
        for j in 0..m {
            if w2[j] > 0.0 && *ground.get(i, j) <= threshold {
                g.add_edge(i, m + j, f64::INFINITY);
            }
        }
    }
    g.max_flow(source, sink)
}

/// Dinic's algorithm on a graph with real capacities.
struct FlowGraph {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    next: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        FlowGraph {
            head: vec![NIL; nodes],
            to: Vec::new(),
            cap: Vec::new(),
            next: Vec::new(),
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        for (a, b, cap) in [(u, v, c), (v, u, 0.0)] {
            self.to.push(b);
            self.cap.push(cap);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn bfs(&self, s: usize, t: usize, level: &mut [usize]) -> bool {
        level.fill(NIL);
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && level[v] == NIL {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
                e = self.next[e];
            }
        }
        level[t] != NIL
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64, level: &[usize], iter: &mut [usize]) -> f64 {
        if u == t {
            return pushed;
        }
        while iter[u] != NIL {
            let e = iter[u];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && level[v] == level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[e]), level, iter);
                if got > FLOW_EPS {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            iter[u] = self.next[e];
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.head.len();
        let mut level = vec![NIL; n];
        let mut total = 0.0;
        while self.bfs(s, t, &mut level) {
            let mut iter = self.head.clone();
            loop {
                let f = self.dfs(s, t, f64::INFINITY, &level, &mut iter);
                if f <= FLOW_EPS {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DistanceMatrix<f64> {
        DistanceMatrix::from_upper(points.len(), |i, j| (points[i] - points[j]).abs())
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let g = line(&[0.0, 1.0, 3.0]);
        let w = [0.2, 0.3, 0.5];
        assert_eq!(prohorov_exact(&g, &w, &w).unwrap(), 0.0);
    }

    #[test]
    fn two_diracs() {
        let g = line(&[0.0, 0.3]);
        assert!((prohorov_exact(&g, &[1.0, 0.0], &[0.0, 1.0]).unwrap() - 0.3).abs() < 1e-15);
        // distances beyond 1 saturate at 1
        let g = line(&[0.0, 5.0]);
        assert_eq!(prohorov_exact(&g, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn half_mass_far_away() {
        let g = line(&[0.0, 2.0]);
        let d = prohorov_exact(&g, &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_in_its_arguments() {
        let g = line(&[0.0, 0.1, 0.25, 0.7]);
        let a = [0.1, 0.4, 0.3, 0.2];
        let b = [0.5, 0.0, 0.1, 0.4];
        let d1 = prohorov_exact(&g, &a, &b).unwrap();
        let d2 = prohorov_exact(&g, &b, &a).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn size_and_shape_errors() {
        let g = DistanceMatrix::<f64>::zeros(201);
        let w = vec![1.0 / 201.0; 201];
        assert!(matches!(prohorov_exact(&g, &w, &w), Err(Error::Resource(_))));
        let g = line(&[0.0, 1.0]);
        assert!(prohorov_exact(&g, &[1.0], &[0.5, 0.5]).is_err());
        assert!(prohorov_exact(&g, &[0.7, 0.7], &[0.5, 0.5]).is_err());
    }
}
