//! Flows of bridges for finite-activity Λ-measures.
//!
//! A bridge is stored exactly as a list of linear pieces on `[0, 1)`, each
//! with its start, its value at the start and its slope, plus `F(1) = 1`.
//! Jumps sit at piece starts, so evaluation is right-continuous and
//! composition stays in closed form.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::partitions::Partition;
use crate::scalar::Scalar;
use crate::xi::XiSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece<T> {
    pub start: T,
    pub value: T,
    pub slope: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bridge<T = f64> {
    pieces: Vec<Piece<T>>,
}

impl<T: Scalar> Bridge<T> {
    /// Checked constructor from pieces; adjacent pieces that continue each
    /// other are merged, so equal functions have equal representations.
    pub fn new(pieces: Vec<Piece<T>>) -> Result<Self> {
        if pieces.is_empty() || pieces[0].start != T::zero() {
            return Err(Error::arg("first piece must start at 0"));
        }
        for (k, p) in pieces.iter().enumerate() {
            if p.slope < T::zero() || p.value < T::zero() || p.start >= T::one() {
                return Err(Error::arg(format!("piece {} is not part of a bridge", k + 1)));
            }
        }
        for (k, w) in pieces.windows(2).enumerate() {
            let left = w[0].value.clone() + w[0].slope.clone() * (w[1].start.clone() - w[0].start.clone());
            if w[1].start <= w[0].start || w[1].value < left {
                return Err(Error::arg(format!("pieces {} and {} are not increasing", k + 1, k + 2)));
            }
        }
        let bridge = Bridge {
            pieces: merge_pieces(pieces),
        };
        if bridge.left_limit_at_one() > T::one() {
            return Err(Error::arg("bridge exceeds 1 before 1"));
        }
        Ok(bridge)
    }

    pub fn identity() -> Self {
        Bridge {
            pieces: vec![Piece {
                start: T::zero(),
                value: T::zero(),
                slope: T::one(),
            }],
        }
    }

    /// `F(u) = (1 - p) u + p 1{u >= U}`: a fraction `p` of the population
    /// descends from the individual at `U`.
    pub fn simple(p: T, u: T) -> Result<Self> {
        if p <= T::zero() || p > T::one() {
            return Err(Error::arg(format!("jump size {p} outside (0, 1]")));
        }
        if u < T::zero() || u > T::one() {
            return Err(Error::arg(format!("jump location {u} outside [0, 1]")));
        }
        let slope = T::one() - p.clone();
        let mut pieces = Vec::new();
        if u > T::zero() {
            pieces.push(Piece {
                start: T::zero(),
                value: T::zero(),
                slope: slope.clone(),
            });
        }
        if u < T::one() {
            pieces.push(Piece {
                start: u.clone(),
                value: slope.clone() * u + p,
                slope,
            });
        }
        Ok(Bridge { pieces })
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    fn end_of(&self, k: usize) -> T {
        self.pieces.get(k + 1).map_or_else(T::one, |p| p.start.clone())
    }

    fn left_limit_at_one(&self) -> T {
        let last = self.pieces.last().expect("nonempty");
        last.value.clone() + last.slope.clone() * (T::one() - last.start.clone())
    }

    fn piece_index(&self, u: &T) -> usize {
        self.pieces.partition_point(|p| p.start <= *u).saturating_sub(1)
    }

    pub fn eval(&self, u: &T) -> T {
        if *u >= T::one() {
            return T::one();
        }
        let p = &self.pieces[self.piece_index(u)];
        p.value.clone() + p.slope.clone() * (u.clone() - p.start.clone())
    }

    /// `self ∘ inner`, i.e. `u ↦ self(inner(u))`.
    pub fn compose(&self, inner: &Bridge<T>) -> Bridge<T> {
        let mut out: Vec<Piece<T>> = Vec::new();
        for (k, g) in inner.pieces.iter().enumerate() {
            let end = inner.end_of(k);
            if g.slope == T::zero() {
                out.push(Piece {
                    start: g.start.clone(),
                    value: self.eval(&g.value),
                    slope: T::zero(),
                });
                continue;
            }
            // split where inner crosses a start of an outer piece
            let hi = g.value.clone() + g.slope.clone() * (end.clone() - g.start.clone());
            let mut starts = vec![g.start.clone()];
            for f in &self.pieces {
                if f.start > g.value && f.start < hi {
                    let u = g.start.clone() + (f.start.clone() - g.value.clone()) / g.slope.clone();
                    if u > g.start && u < end {
                        starts.push(u);
                    }
                }
            }
            for u in starts {
                let y = g.value.clone() + g.slope.clone() * (u.clone() - g.start.clone());
                let f = &self.pieces[self.piece_index(&y)];
                out.push(Piece {
                    start: u,
                    value: self.eval(&y),
                    slope: f.slope.clone() * g.slope.clone(),
                });
            }
        }
        Bridge {
            pieces: merge_pieces(out),
        }
    }

    /// `F^{-1}(t) = inf{s ∈ [0, 1] : F(s) > t or s = 1}`.
    pub fn inverse_at(&self, t: &T) -> T {
        for (k, p) in self.pieces.iter().enumerate() {
            if p.value > *t {
                return p.start.clone();
            }
            if p.slope > T::zero() {
                let end = self.end_of(k);
                let top = p.value.clone() + p.slope.clone() * (end - p.start.clone());
                if top > *t {
                    return p.start.clone() + (t.clone() - p.value.clone()) / p.slope.clone();
                }
            }
        }
        T::one()
    }

    /// `(u, F(u))` on `resolution + 1` equally spaced points of `[0, 1]`.
    pub fn sample_points(&self, resolution: usize) -> Vec<(f64, f64)> {
        let m = resolution.max(1);
        (0..=m)
            .map(|k| {
                let u = T::from_count(k) / T::from_count(m);
                (u.to_f64_lossy(), self.eval(&u).to_f64_lossy())
            })
            .collect()
    }
}

fn merge_pieces<T: Scalar>(pieces: Vec<Piece<T>>) -> Vec<Piece<T>> {
    let mut out: Vec<Piece<T>> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last() {
            let cont = last.value.clone() + last.slope.clone() * (p.start.clone() - last.start.clone());
            if p.slope == last.slope && p.value == cont {
                continue;
            }
        }
        out.push(p);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEvent {
    pub time: f64,
    pub p: f64,
    pub u: f64,
}

/// The reproduction events of a flow of bridges on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    horizon: f64,
    events: Vec<FlowEvent>,
}

/// Samples the flow of a finite-activity Λ-measure: events at rate
/// `Σ w p^{-2}`, jump size `p` with probability proportional to `w p^{-2}`,
/// location uniform.
pub fn sample_flow<R: Rng + ?Sized>(lambda: &XiSpec<f64>, horizon: f64, rng: &mut R) -> Result<Flow> {
    if *lambda.kingman_mass() > 0.0 {
        return Err(Error::Unsupported("the Kingman part has no event-wise bridge".into()));
    }
    if !lambda.is_lambda_type() {
        return Err(Error::Unsupported("bridges need single-coordinate atoms".into()));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::arg(format!("horizon {horizon} is not a nonnegative real")));
    }
    let cum: Vec<f64> = lambda
        .atoms()
        .iter()
        .scan(0.0, |acc, a| {
            *acc += XiSpec::candidate_rate(a);
            Some(*acc)
        })
        .collect();
    let total = cum.last().copied().unwrap_or(0.0);
    let mut events = Vec::new();
    if total > 0.0 {
        let clock = Exp::new(total).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += clock.sample(rng);
            if t > horizon {
                break;
            }
            let x = rng.random::<f64>() * total;
            let k = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
            let p = lambda.atoms()[k].point.coords()[0];
            events.push(FlowEvent {
                time: t,
                p,
                u: rng.random(),
            });
        }
    }
    Ok(Flow { horizon, events })
}

impl Flow {
    pub fn new(horizon: f64, events: Vec<FlowEvent>) -> Result<Self> {
        let mut last = 0.0;
        for e in &events {
            if !(e.time > last) || e.time > horizon || !(e.p > 0.0 && e.p <= 1.0) || !(0.0..=1.0).contains(&e.u) {
                return Err(Error::arg(format!("invalid flow event at time {}", e.time)));
            }
            last = e.time;
        }
        Ok(Flow { horizon, events })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[FlowEvent] {
        &self.events
    }

    /// Total event rate of a Λ-measure's flow.
    pub fn event_rate(lambda: &XiSpec<f64>) -> f64 {
        lambda.atoms().iter().map(XiSpec::candidate_rate).sum()
    }

    /// `F_{s,t}`: the events in `(s, t]` composed with later events outside.
    pub fn bridge<T: Scalar>(&self, s: f64, t: f64) -> Result<Bridge<T>> {
        if !(0.0 <= s && s <= t && t <= self.horizon) {
            return Err(Error::arg(format!("bridge interval ({s}, {t}] outside [0, {}]", self.horizon)));
        }
        let mut f = Bridge::identity();
        for e in self.events.iter().filter(|e| e.time > s && e.time <= t) {
            let step = Bridge::simple(T::from_f64_lossy(e.p), T::from_f64_lossy(e.u))?;
            f = step.compose(&f);
        }
        Ok(f)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["time", "p", "U"]).map_err(io)?;
        for e in &self.events {
            w.write_record([format!("{:?}", e.time), format!("{:?}", e.p), format!("{:?}", e.u)])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `π̃_s^{(t)}` for each `s` of the grid: `i ~ j` iff the ancestors of
/// `V_i` and `V_j` at time `t - s` coincide, `F_{t-s,t}^{-1}(V_i) = F_{t-s,t}^{-1}(V_j)`.
pub fn coalescent_from_flow(flow: &Flow, v: &[f64], t: f64, grid: &[f64]) -> Result<Vec<Partition>> {
    if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::arg("sample points must lie in [0, 1]"));
    }
    grid.iter()
        .map(|&s| {
            if !(0.0..=t).contains(&s) {
                return Err(Error::arg(format!("coalescent time {s} outside [0, {t}]")));
            }
            let f = flow.bridge::<f64>(t - s, t)?;
            let anc: Vec<u64> = v.iter().map(|x| f.inverse_at(x).to_bits()).collect();
            Ok(Partition::from_labels(&anc))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::scalar::{ratio, Exact};

    #[test]
    fn simple_bridge_values() {
        let f = Bridge::simple(0.5, 0.5).unwrap();
        assert_eq!(f.eval(&0.4), 0.2);
        assert_eq!(f.eval(&0.5), 0.75);
        assert_eq!(f.eval(&1.0), 1.0);
        assert!(Bridge::simple(0.0, 0.5).is_err());
        assert!(Bridge::simple(1.5, 0.5).is_err());
        let step = Bridge::simple(1.0, 0.3).unwrap();
        assert_eq!(step.eval(&0.29), 0.0);
        assert_eq!(step.eval(&0.3), 1.0);
    }

    #[test]
    fn inverse_examples() {
        let id = Bridge::<f64>::identity();
        assert_eq!(id.inverse_at(&0.25), 0.25);
        assert_eq!(id.inverse_at(&1.0), 1.0);
        let step = Bridge::simple(1.0, 0.3).unwrap();
        for t in [0.0, 0.5, 0.99] {
            assert_eq!(step.inverse_at(&t), 0.3);
        }
        let f = Bridge::simple(0.5, 0.5).unwrap();
        assert!((f.inverse_at(&0.2) - 0.4f64).abs() < 1e-15);
        assert_eq!(f.inverse_at(&0.3), 0.5);
    }

    #[test]
    fn identity_is_neutral() {
        let g = Bridge::simple(ratio(1, 3), ratio(2, 5)).unwrap();
        let id = Bridge::<Exact>::identity();
        assert_eq!(id.compose(&g), g);
        assert_eq!(g.compose(&id), g);
    }

    #[test]
    fn two_disjoint_jumps() {
        // G jumps at 1/2, then F jumps at 1/8 (below G's jump image)
        let g = Bridge::simple(ratio(1, 2), ratio(1, 2)).unwrap();
        let f = Bridge::simple(ratio(1, 2), ratio(1, 8)).unwrap();
        let h = f.compose(&g);
        assert_eq!(h.pieces().len(), 3);
        assert!(h.pieces().iter().all(|p| p.slope == ratio(1, 4)));
        for k in 0..=16 {
            let u = ratio(k, 16);
            assert_eq!(h.eval(&u), f.eval(&g.eval(&u)));
        }
    }

    #[test]
    fn composition_matches_pointwise_and_is_associative() {
        let mut rng = replicate_rng(1, 0);
        for _ in 0..50 {
            let mut draw = || {
                let p = ratio(rng.random_range(1..=8), 8);
                let u = ratio(rng.random_range(0..=16), 16);
                Bridge::simple(p, u).unwrap()
            };
            let (a, b, c) = (draw(), draw(), draw());
            let ab = a.compose(&b);
            assert_eq!(ab.compose(&c), a.compose(&b.compose(&c)));
            for k in 0..=64 {
                let u = ratio(k, 64);
                assert_eq!(ab.eval(&u), a.eval(&b.eval(&u)));
            }
        }
    }

    #[test]
    fn flow_rates_and_errors() {
        let half = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
        assert_eq!(Flow::event_rate(&half), 4.0);
        assert_eq!(Flow::event_rate(&XiSpec::star()), 1.0);
        let mut rng = replicate_rng(1, 0);
        assert!(matches!(
            sample_flow(&XiSpec::kingman(1.0).unwrap(), 1.0, &mut rng),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            sample_flow(&XiSpec::point_mass(1.0, vec![0.5, 0.2]).unwrap(), 1.0, &mut rng),
            Err(Error::Unsupported(_))
        ));
        let empty = sample_flow(&half, 0.0, &mut rng).unwrap();
        assert!(empty.events().is_empty());
        assert_eq!(empty.bridge::<f64>(0.0, 0.0).unwrap(), Bridge::identity());
    }

    #[test]
    fn exact_cocycle() {
        let half = XiSpec::point_mass(1.0, vec![0.5]).unwrap();
        let mut rng = replicate_rng(8, 0);
        let flow = sample_flow(&half, 3.0, &mut rng).unwrap();
        let grid = [0.0, 0.4, 1.1, 1.7, 2.5, 3.0];
        for (a, &s) in grid.iter().enumerate() {
            for (b, &t) in grid.iter().enumerate().skip(a) {
                for &u in &grid[b..] {
                    let st = flow.bridge::<Exact>(s, t).unwrap();
                    let tu = flow.bridge::<Exact>(t, u).unwrap();
                    assert_eq!(tu.compose(&st), flow.bridge::<Exact>(s, u).unwrap());
                }
            }
        }
    }

    #[test]
    fn flow_coalescent_examples() {
        let star = Flow::new(2.0, vec![FlowEvent { time: 1.5, p: 1.0, u: 0.3 }]).unwrap();
        let v = [0.1, 0.5, 0.9];
        let ps = coalescent_from_flow(&star, &v, 2.0, &[0.2, 1.0]).unwrap();
        assert!(ps[0].is_singletons());
        assert_eq!(ps[1], Partition::single_block(3));
        let none = Flow::new(2.0, vec![]).unwrap();
        assert!(coalescent_from_flow(&none, &v, 2.0, &[2.0]).unwrap()[0].is_singletons());
    }
}
