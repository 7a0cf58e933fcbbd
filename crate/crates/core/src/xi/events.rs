use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::XiSpec;
use crate::error::{Error, Result};
use crate::partitions::{paintbox_sample, Partition, SemiPartition};

/// Which restriction of a reproduction event counts as visible on `[n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    /// `γ_n(π) != 0_n`: the event changes `ρ` on `[n]`.
    Rho,
    /// `ς_n(π) != ∅`: the event changes `(r, v)` on `[n]`.
    Rv,
}

/// A visible reproduction event restricted to `[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub partition: Partition,
    pub semipartition: SemiPartition,
}

enum Source {
    Atom(usize),
    Kingman,
}

/// Poisson stream of candidate reproduction events thinned to the visible
/// ones, in increasing time order up to `horizon`.
pub struct EventSampler<'a, R: Rng> {
    xi: &'a XiSpec<f64>,
    n: usize,
    mode: Visibility,
    horizon: f64,
    rng: R,
    time: f64,
    clock: Option<Exp<f64>>,
    cumulative: Vec<(f64, Source)>,
}

impl<'a, R: Rng> EventSampler<'a, R> {
    pub fn new(xi: &'a XiSpec<f64>, n: usize, mode: Visibility, horizon: f64, rng: R) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("level horizon must be at least 1"));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::arg(format!("horizon {horizon} is not a nonnegative real")));
        }
        if mode == Visibility::Rv && xi.is_dust_free() {
            return Err(Error::Precondition(
                "marked evolution requires a measure that is not dust-free".into(),
            ));
        }
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (k, atom) in xi.atoms().iter().enumerate() {
            acc += XiSpec::candidate_rate(atom);
            cumulative.push((acc, Source::Atom(k)));
        }
        if n >= 2 && *xi.kingman_mass() > 0.0 {
            acc += xi.kingman_mass() * (n * (n - 1) / 2) as f64;
            cumulative.push((acc, Source::Kingman));
        }
        let clock = if acc > 0.0 {
            Some(Exp::new(acc).map_err(|e| Error::arg(e.to_string()))?)
        } else {
            None
        };
        Ok(EventSampler {
            xi,
            n,
            mode,
            horizon,
            rng,
            time: 0.0,
            clock,
            cumulative,
        })
    }

    /// Total candidate rate (visible or not).
    pub fn candidate_rate(&self) -> f64 {
        self.cumulative.last().map_or(0.0, |c| c.0)
    }

    fn candidate(&mut self) -> Option<(Partition, SemiPartition)> {
        let u = self.rng.random::<f64>() * self.candidate_rate();
        let k = self
            .cumulative
            .partition_point(|c| c.0 <= u)
            .min(self.cumulative.len() - 1);
        match self.cumulative[k].1 {
            Source::Atom(a) => {
                let draw = paintbox_sample(&self.xi.atoms()[a].point, self.n, &mut self.rng);
                let sigma = draw.semipartition();
                let visible = match self.mode {
                    Visibility::Rho => !draw.partition.is_singletons(),
                    Visibility::Rv => !sigma.is_empty(),
                };
                visible.then_some((draw.partition, sigma))
            }
            Source::Kingman => {
                let i = self.rng.random_range(0..self.n);
                let mut j = self.rng.random_range(0..self.n - 1);
                if j >= i {
                    j += 1;
                }
                let pi = Partition::pair(self.n, i, j).expect("distinct levels");
                let sigma = SemiPartition::new(self.n, vec![vec![i, j]]).expect("valid pair");
                Some((pi, sigma))
            }
        }
    }
}

impl<R: Rng> Iterator for EventSampler<'_, R> {
    type Item = EventRecord;

    fn next(&mut self) -> Option<EventRecord> {
        let clock = self.clock?;
        loop {
            let dt = clock.sample(&mut self.rng);
            let t = self.time + dt;
            if t > self.horizon {
                self.time = f64::INFINITY;
                return None;
            }
            assert!(t > self.time, "coincident event times at {t}");
            self.time = t;
            if let Some((partition, semipartition)) = self.candidate() {
                return Some(EventRecord {
                    time: t,
                    partition,
                    semipartition,
                });
            }
        }
    }
}

/// All visible events in `(0, horizon]`.
pub fn sample_event_stream<R: Rng>(
    xi: &XiSpec<f64>,
    n: usize,
    mode: Visibility,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<EventRecord>> {
    Ok(EventSampler::new(xi, n, mode, horizon, rng)?.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn star_events_are_total_mergers() {
        let xi = XiSpec::<f64>::star();
        let mut total = 0usize;
        for r in 0..200 {
            let mut rng = replicate_rng(3, r);
            let evs = sample_event_stream(&xi, 3, Visibility::Rho, 10.0, &mut rng).unwrap();
            assert!(evs.iter().all(|e| e.partition == Partition::single_block(3)));
            assert!(evs.windows(2).all(|w| w[0].time < w[1].time));
            total += evs.len();
        }
        let mean = total as f64 / 200.0;
        // Poisson(10): SE of the mean is sqrt(10/200)
        assert!((mean - 10.0).abs() < 4.0 * (10.0f64 / 200.0).sqrt(), "mean {mean}");
    }

    #[test]
    fn zero_horizon_is_empty() {
        let xi = XiSpec::kingman(1.0).unwrap();
        let mut rng = replicate_rng(0, 0);
        assert!(sample_event_stream(&xi, 4, Visibility::Rho, 0.0, &mut rng)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn rv_mode_rejects_dust_free() {
        let xi = XiSpec::kingman(1.0).unwrap();
        let mut rng = replicate_rng(0, 0);
        assert!(matches!(
            sample_event_stream(&xi, 2, Visibility::Rv, 1.0, &mut rng),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rv_events_include_dust_hits() {
        let xi = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
        let mut rng = replicate_rng(1, 0);
        let evs = sample_event_stream(&xi, 2, Visibility::Rv, 200.0, &mut rng).unwrap();
        assert!(evs.iter().any(|e| e.partition.is_singletons()));
        assert!(evs.iter().all(|e| !e.semipartition.is_empty()));
    }
}
