use crate::error::{Error, Result};
use crate::treespace::DistanceMatrix;
use crate::xi::EventRecord;

/// Incremental `ρ_t` for large level horizons.
///
/// Entries are stored as `ρ(i, j) - 2 t` in a slot matrix with a level-to-slot
/// map, so linear growth is free and an event costs `O(n)` per level that
/// changes parent, instead of rebuilding the whole matrix.
#[derive(Debug, Clone)]
pub struct RhoState {
    n: usize,
    time: f64,
    slot_of: Vec<usize>,
    w: Vec<f64>,
}

impl RhoState {
    pub fn new(rho0: &DistanceMatrix<f64>) -> Self {
        let n = rho0.n();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = *rho0.get(i, j);
            }
        }
        RhoState {
            n,
            time: 0.0,
            slot_of: (0..n).collect(),
            w,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Applies an event; events must arrive in strictly increasing time.
    pub fn apply(&mut self, e: &EventRecord) -> Result<()> {
        if !(e.time > self.time) {
            return Err(Error::arg(format!("event at {} after time {}", e.time, self.time)));
        }
        let n = self.n;
        if e.partition.n() != n {
            return Err(Error::arg("event on a different level set"));
        }
        let pi = &e.partition;
        let b = pi.num_blocks();
        let reset = -2.0 * e.time;
        // new level -> slot: the first member of block k keeps parent k's slot,
        // later members take the slots of the discarded levels b..n
        let mut free: Vec<usize> = self.slot_of[b..].to_vec();
        let mut new_slot = vec![usize::MAX; n];
        let mut first_of = vec![usize::MAX; b];
        let mut copies = Vec::new();
        for level in 0..n {
            let k = pi.block_of(level);
            if first_of[k] == usize::MAX {
                first_of[k] = level;
                new_slot[level] = self.slot_of[k];
            } else {
                let s = free.pop().expect("one free slot per extra block member");
                new_slot[level] = s;
                copies.push((s, self.slot_of[k]));
            }
        }
        for &(dst, src) in &copies {
            for q in 0..n {
                let x = self.w[src * n + q];
                self.w[dst * n + q] = x;
                self.w[q * n + dst] = x;
            }
        }
        for &(dst, _) in &copies {
            self.w[dst * n + dst] = 0.0;
        }
        // members of one block are at distance 0 right after the event
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); b];
        for level in 0..n {
            members[pi.block_of(level)].push(new_slot[level]);
        }
        for block in members.iter().filter(|m| m.len() > 1) {
            for (x, &s1) in block.iter().enumerate() {
                for &s2 in &block[x + 1..] {
                    self.w[s1 * n + s2] = reset;
                    self.w[s2 * n + s1] = reset;
                }
            }
        }
        self.slot_of = new_slot;
        self.time = e.time;
        Ok(())
    }

    /// `ρ_t(i, j)` for `t` at or after the last applied event.
    pub fn get(&self, i: usize, j: usize, t: f64) -> f64 {
        if i == j {
            return 0.0;
        }
        self.w[self.slot_of[i] * self.n + self.slot_of[j]] + 2.0 * t
    }

    pub fn matrix_at(&self, t: f64) -> Result<DistanceMatrix<f64>> {
        if t < self.time {
            return Err(Error::arg(format!("query time {t} before state time {}", self.time)));
        }
        Ok(DistanceMatrix::from_upper(self.n, |i, j| self.get(i, j, t).max(0.0)))
    }

    /// `½ min_{j != i} ρ_t(i, j)` for every level.
    pub fn external_branches(&self, t: f64) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let row = &self.w[self.slot_of[i] * self.n..(self.slot_of[i] + 1) * self.n];
                let own = self.slot_of[i];
                let m = row
                    .iter()
                    .enumerate()
                    .filter(|&(q, _)| q != own)
                    .map(|(_, &x)| x)
                    .fold(f64::INFINITY, f64::min);
                0.5 * (m + 2.0 * t)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookdown::{Initial, LookdownPath, Visibility};
    use crate::rng::replicate_rng;
    use crate::xi::XiSpec;

    #[test]
    fn agrees_with_dense_evolution() {
        let xis = [
            XiSpec::kingman(1.0).unwrap(),
            XiSpec::point_mass(1.0, vec![0.4, 0.3]).unwrap(),
            XiSpec::<f64>::star(),
        ];
        for (k, xi) in xis.iter().enumerate() {
            let mut rng = replicate_rng(5, k as u64);
            let rho0 = DistanceMatrix::from_upper(6, |i, j| 1.0 + (i + j) as f64);
            let path =
                LookdownPath::simulate(xi, Initial::Rho(rho0.clone()), Visibility::Rho, 3.0, &mut rng).unwrap();
            let mut state = RhoState::new(&rho0);
            for e in path.events() {
                state.apply(e).unwrap();
            }
            let dense = path.evolve_rho(3.0).unwrap();
            let inc = state.matrix_at(3.0).unwrap();
            assert!(dense.max_abs_diff(&inc) < 1e-12, "{dense:?} vs {inc:?}");
            let ext = state.external_branches(3.0);
            let direct = crate::treespace::external_branches(&dense).unwrap();
            for (a, b) in ext.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
