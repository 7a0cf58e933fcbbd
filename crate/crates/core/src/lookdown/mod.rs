//! The lookdown particle system driven by a stream of visible reproduction
//! events: genealogical distances `ρ_t`, their decomposition `(r_t, v_t)`,
//! ancestral levels, and stationary coalescent trees.
//!
//! Between events distances grow with slope 2 and external branch lengths
//! with slope 1; evolution is evaluated in closed form at any query time.
//! At an event with restricted partition `π`, the particle on level `i`
//! afterwards descends from level `π(i)` (the index of its block) before.

mod dump;
mod genealogy;
mod state;

pub use dump::{write_events_csv, write_snapshots_csv};
pub use genealogy::{
    extract_coalescent, sample_genealogy, sample_genealogy_jump_chain, sample_stationary_ultrametric,
    Genealogy,
};
pub use state::RhoState;

pub use crate::xi::{EventRecord, Visibility};

use rand::Rng;

use crate::error::{Error, Result};
use crate::partitions::{apply_partition, apply_semipartition, SemiPartition};
use crate::treespace::{alpha, DistanceMatrix, MarkedMatrix};
use crate::xi::{sample_event_stream, XiSpec};

/// Initial genealogy on `[n]`: a distance matrix, or a decomposed pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Rho(DistanceMatrix<f64>),
    Rv(MarkedMatrix<f64>),
}

impl Initial {
    pub fn n(&self) -> usize {
        match self {
            Initial::Rho(m) => m.n(),
            Initial::Rv(rv) => rv.n(),
        }
    }

    /// The initial distances, `α(r_0, v_0)` for a decomposed pair.
    pub fn rho(&self) -> DistanceMatrix<f64> {
        match self {
            Initial::Rho(m) => m.clone(),
            Initial::Rv(rv) => alpha(rv),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookdownPath {
    n: usize,
    horizon: f64,
    mode: Visibility,
    initial: Initial,
    events: Vec<EventRecord>,
}

fn check_order(events: &[EventRecord], horizon: f64) -> Result<()> {
    let mut last = 0.0;
    for (k, e) in events.iter().enumerate() {
        if !(e.time > last) {
            return Err(Error::arg(format!(
                "event {} at time {} does not follow time {last}",
                k + 1,
                e.time
            )));
        }
        last = e.time;
    }
    if last > horizon {
        return Err(Error::arg(format!("event at {last} beyond horizon {horizon}")));
    }
    Ok(())
}

impl LookdownPath {
    pub fn new(initial: Initial, mode: Visibility, events: Vec<EventRecord>, horizon: f64) -> Result<Self> {
        let n = initial.n();
        if n == 0 {
            return Err(Error::arg("empty initial genealogy"));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::arg(format!("horizon {horizon} is not a nonnegative real")));
        }
        if let Some(e) = events
            .iter()
            .find(|e| e.partition.n() != n || e.semipartition.n() != n)
        {
            return Err(Error::arg(format!("event at {} is not on [{n}]", e.time)));
        }
        check_order(&events, horizon)?;
        Ok(LookdownPath {
            n,
            horizon,
            mode,
            initial,
            events,
        })
    }

    /// Samples the visible events of `xi` on `[n]` up to `horizon`.
    pub fn simulate<R: Rng>(
        xi: &XiSpec<f64>,
        initial: Initial,
        mode: Visibility,
        horizon: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let events = sample_event_stream(xi, initial.n(), mode, horizon, rng)?;
        Self::new(initial, mode, events, horizon)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mode(&self) -> Visibility {
        self.mode
    }

    pub fn initial(&self) -> &Initial {
        &self.initial
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::arg(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    fn check_times(&self, times: &[f64]) -> Result<()> {
        for &t in times {
            self.check_time(t)?;
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::arg("query times must be nondecreasing"));
        }
        Ok(())
    }

    /// `ρ_t`; an event at exactly `t` is included.
    pub fn evolve_rho(&self, t: f64) -> Result<DistanceMatrix<f64>> {
        Ok(self.rho_at_times(&[t])?.pop().expect("one query"))
    }

    /// `ρ` at each of the nondecreasing `times`, in one pass over the events.
    pub fn rho_at_times(&self, times: &[f64]) -> Result<Vec<DistanceMatrix<f64>>> {
        self.check_times(times)?;
        let mut rho = self.initial.rho();
        let mut now = 0.0;
        let mut next = 0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            while next < self.events.len() && self.events[next].time <= t {
                let e = &self.events[next];
                rho.grow(&(2.0 * (e.time - now)));
                rho = apply_partition(&e.partition, &rho)?;
                now = e.time;
                next += 1;
            }
            let mut snap = rho.clone();
            snap.grow(&(2.0 * (t - now)));
            out.push(snap);
        }
        Ok(out)
    }

    /// `(r_t, v_t)`; requires a decomposed initial state and a stream of
    /// events visible to the marked dynamics.
    pub fn evolve_rv(&self, t: f64) -> Result<MarkedMatrix<f64>> {
        Ok(self.rv_at_times(&[t])?.pop().expect("one query"))
    }

    pub fn rv_at_times(&self, times: &[f64]) -> Result<Vec<MarkedMatrix<f64>>> {
        let Initial::Rv(rv0) = &self.initial else {
            return Err(Error::arg("marked evolution needs a decomposed initial state"));
        };
        if self.mode != Visibility::Rv {
            return Err(Error::arg("marked evolution needs an rv-mode event stream"));
        }
        self.check_times(times)?;
        let mut rv = rv0.clone();
        let mut now = 0.0;
        let mut next = 0;
        let mut out = Vec::with_capacity(times.len());
        let grow = |rv: &mut MarkedMatrix<f64>, dt: f64| rv.v.iter_mut().for_each(|x| *x += dt);
        for &t in times {
            while next < self.events.len() && self.events[next].time <= t {
                let e = &self.events[next];
                grow(&mut rv, e.time - now);
                rv = apply_semipartition(&e.semipartition, &rv)?;
                now = e.time;
                next += 1;
            }
            let mut snap = rv.clone();
            grow(&mut snap, t - now);
            out.push(snap);
        }
        Ok(out)
    }

    /// `A_s(t, i)`: the level at time `s` of the ancestor of the particle on
    /// level `i` at time `t` (0-based). Levels only move down when traced
    /// backwards, so the ancestor never leaves `[n]`.
    pub fn ancestor_level(&self, s: f64, t: f64, i: usize) -> Result<usize> {
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(Error::arg(format!("ancestor time {s} after {t}")));
        }
        if i >= self.n {
            return Err(Error::arg(format!("level {} outside [{}]", i + 1, self.n)));
        }
        let mut level = i;
        for e in self.events.iter().rev() {
            if e.time <= s {
                break;
            }
            if e.time <= t {
                level = e.partition.block_of(level);
            }
        }
        Ok(level)
    }

    /// `ρ_t` rebuilt from ancestral lineages: two levels at distance
    /// `2 (t - s)` where `s` is the time their ancestries merge, or
    /// `ρ_0(A_0(t, i), A_0(t, j)) + 2t` if they are still distinct at time 0.
    pub fn rho_from_ancestry(&self, t: f64) -> Result<DistanceMatrix<f64>> {
        self.check_time(t)?;
        let n = self.n;
        let mut levels: Vec<usize> = (0..n).collect();
        let mut merged: Vec<Option<f64>> = vec![None; n * n];
        for e in self.events.iter().rev().filter(|e| e.time <= t) {
            for l in levels.iter_mut() {
                *l = e.partition.block_of(*l);
            }
            for i in 0..n {
                for j in i + 1..n {
                    if merged[i * n + j].is_none() && levels[i] == levels[j] {
                        merged[i * n + j] = Some(e.time);
                    }
                }
            }
        }
        let rho0 = self.initial.rho();
        Ok(DistanceMatrix::from_upper(n, |i, j| match merged[i * n + j] {
            Some(s) => 2.0 * (t - s),
            None => rho0.get(levels[i], levels[j]) + 2.0 * t,
        }))
    }

    /// The path seen on levels `[m]`: events restricted and the ones that
    /// become invisible dropped.
    pub fn restrict(&self, m: usize) -> Result<LookdownPath> {
        if m == 0 || m > self.n {
            return Err(Error::arg(format!("cannot restrict [{}] to [{m}]", self.n)));
        }
        let initial = match &self.initial {
            Initial::Rho(rho) => Initial::Rho(rho.restrict(m)?),
            Initial::Rv(rv) => Initial::Rv(rv.restrict(m)?),
        };
        let mut events = Vec::new();
        for e in &self.events {
            let partition = e.partition.restrict(m)?;
            let blocks = e
                .semipartition
                .blocks()
                .iter()
                .map(|b| b.iter().copied().filter(|&i| i < m).collect::<Vec<_>>())
                .filter(|b| !b.is_empty())
                .collect();
            let semipartition = SemiPartition::new(m, blocks)?;
            let visible = match self.mode {
                Visibility::Rho => !partition.is_singletons(),
                Visibility::Rv => !semipartition.is_empty(),
            };
            if visible {
                events.push(EventRecord {
                    time: e.time,
                    partition,
                    semipartition,
                });
            }
        }
        LookdownPath::new(initial, self.mode, events, self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::Partition;

    fn ev(time: f64, n: usize, blocks: &[Vec<usize>]) -> EventRecord {
        let partition = Partition::from_blocks(n, blocks).unwrap();
        let semipartition =
            SemiPartition::new(n, blocks.iter().filter(|b| b.len() > 1).cloned().collect()).unwrap();
        EventRecord {
            time,
            partition,
            semipartition,
        }
    }

    fn pair_rho(x: f64) -> Initial {
        Initial::Rho(DistanceMatrix::from_rows(vec![vec![0.0, x], vec![x, 0.0]]).unwrap())
    }

    #[test]
    fn linear_growth_without_events() {
        let p = LookdownPath::new(pair_rho(4.0), Visibility::Rho, vec![], 1.0).unwrap();
        assert_eq!(*p.evolve_rho(1.0).unwrap().get(0, 1), 6.0);
        assert!(p.evolve_rho(1.5).is_err());
    }

    #[test]
    fn pair_event_resets_distance() {
        let p = LookdownPath::new(pair_rho(4.0), Visibility::Rho, vec![ev(0.5, 2, &[vec![0, 1]])], 1.0).unwrap();
        assert_eq!(*p.evolve_rho(1.0).unwrap().get(0, 1), 1.0);
        // cadlag: the event at exactly 0.5 is included
        assert_eq!(*p.evolve_rho(0.5).unwrap().get(0, 1), 0.0);
        assert_eq!(*p.rho_from_ancestry(1.0).unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn three_level_event() {
        let rho0 = DistanceMatrix::from_rows(vec![
            vec![0.0, 2.0, 6.0],
            vec![2.0, 0.0, 6.0],
            vec![6.0, 6.0, 0.0],
        ])
        .unwrap();
        let p = LookdownPath::new(
            Initial::Rho(rho0),
            Visibility::Rho,
            vec![ev(0.5, 3, &[vec![0, 2], vec![1]])],
            1.0,
        )
        .unwrap();
        let rho = p.evolve_rho(0.5).unwrap();
        assert_eq!(*rho.get(0, 2), 0.0);
        assert_eq!(*rho.get(1, 2), 2.0 + 2.0 * 0.5);
        assert_eq!(p.ancestor_level(0.2, 1.0, 2).unwrap(), 0);
        assert_eq!(p.ancestor_level(0.2, 1.0, 1).unwrap(), 1);
        assert_eq!(p.ancestor_level(0.5, 1.0, 2).unwrap(), 2);
        assert_eq!(p.rho_from_ancestry(1.0).unwrap(), p.evolve_rho(1.0).unwrap());
    }

    #[test]
    fn ancestor_of_block_sibling() {
        let p = LookdownPath::new(
            Initial::Rho(DistanceMatrix::zeros(3)),
            Visibility::Rho,
            vec![ev(0.5, 3, &[vec![0, 1], vec![2]])],
            1.0,
        )
        .unwrap();
        assert_eq!(p.ancestor_level(0.1, 1.0, 1).unwrap(), 0);
        assert_eq!(p.ancestor_level(0.1, 1.0, 2).unwrap(), 1);
        assert_eq!(p.ancestor_level(1.0, 1.0, 2).unwrap(), 2);
    }

    #[test]
    fn marked_growth_and_events() {
        let rv0 = MarkedMatrix::new(DistanceMatrix::zeros(2), vec![2.0, 2.0]).unwrap();
        let p = LookdownPath::new(Initial::Rv(rv0.clone()), Visibility::Rv, vec![], 1.0).unwrap();
        assert_eq!(p.evolve_rv(1.0).unwrap().v, vec![3.0, 3.0]);

        let rv1 = MarkedMatrix::new(DistanceMatrix::zeros(2), vec![2.5, 2.5]).unwrap();
        let p = LookdownPath::new(
            Initial::Rv(rv1),
            Visibility::Rv,
            vec![ev(0.5, 2, &[vec![0, 1]])],
            1.0,
        )
        .unwrap();
        // v grows to 3 by 0.5, the event zeroes it, then half a unit of growth
        let rv = p.evolve_rv(1.0).unwrap();
        assert_eq!(rv.v, vec![0.5, 0.5]);
        assert_eq!(*rv.r.get(0, 1), 0.0);
        assert_eq!(*alpha(&rv).get(0, 1), 1.0);
    }

    #[test]
    fn rejects_unordered_events() {
        let evs = vec![ev(0.5, 2, &[vec![0, 1]]), ev(0.5, 2, &[vec![0, 1]])];
        assert!(LookdownPath::new(pair_rho(1.0), Visibility::Rho, evs, 1.0).is_err());
        let evs = vec![ev(1.5, 2, &[vec![0, 1]])];
        assert!(LookdownPath::new(pair_rho(1.0), Visibility::Rho, evs, 1.0).is_err());
    }
}
