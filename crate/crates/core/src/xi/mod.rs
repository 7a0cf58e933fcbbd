//! The finite measure Ξ on the simplex, reproduction-event rates, the
//! dust-free criterion and the Poisson sampler for visible events.
//!
//! Ξ is represented as a Kingman atom `Ξ{0}` plus finitely many atoms of
//! finite-support simplex points, so every per-atom candidate rate
//! `w |x|_2^{-2}` is finite and paintbox draws are exact.

mod events;
mod file;
mod rates;

pub use events::{sample_event_stream, EventRecord, EventSampler, Visibility};
pub use file::{load_xi, parse_xi, write_xi};
pub use rates::{rate_partition, rate_semipartition, Rate, RateTable};

use statrs::distribution::{Beta, Continuous};

use crate::error::{Error, Result};
use crate::partitions::SimplexPoint;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T = f64> {
    pub weight: T,
    pub point: SimplexPoint<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XiSpec<T = f64> {
    kingman_mass: T,
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> XiSpec<T> {
    pub fn new(kingman_mass: T, atoms: Vec<Atom<T>>) -> Result<Self> {
        if kingman_mass < T::zero() || !kingman_mass.is_finite_value() {
            return Err(Error::arg(format!("kingman mass {kingman_mass} is not a nonnegative real")));
        }
        if let Some(k) = atoms
            .iter()
            .position(|a| a.weight <= T::zero() || !a.weight.is_finite_value())
        {
            return Err(Error::arg(format!("atom {} has nonpositive weight", k + 1)));
        }
        Ok(XiSpec { kingman_mass, atoms })
    }

    /// `c δ_0`, the Kingman coalescent run at pair rate `c`.
    pub fn kingman(c: T) -> Result<Self> {
        Self::new(c, Vec::new())
    }

    /// A single atom of weight `w` at `x`.
    pub fn point_mass(w: T, x: Vec<T>) -> Result<Self> {
        Self::new(
            T::zero(),
            vec![Atom {
                weight: w,
                point: SimplexPoint::new(x)?,
            }],
        )
    }

    /// `δ_(1, 0, ...)`: the star-shaped coalescent.
    pub fn star() -> Self {
        Self::point_mass(T::one(), vec![T::one()]).expect("valid point")
    }

    pub fn kingman_mass(&self) -> &T {
        &self.kingman_mass
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    /// `Ξ(Δ)`.
    pub fn total_mass(&self) -> T {
        self.atoms
            .iter()
            .fold(self.kingman_mass.clone(), |acc, a| acc + a.weight.clone())
    }

    /// `w |x|_2^{-2}`: the rate of paintbox candidate events from one atom.
    pub fn candidate_rate(atom: &Atom<T>) -> T {
        atom.weight.clone() / atom.point.l2_sq()
    }

    /// Dust-freeness: `Ξ{0} > 0` or `∫ |x|_1 |x|_2^{-2} Ξ_0(dx) = ∞`.
    /// The integral is a finite sum for finitely many atoms, so only the
    /// Kingman atom can make the measure dust-free.
    pub fn is_dust_free(&self) -> bool {
        self.kingman_mass > T::zero()
    }

    /// Λ-type measure: every atom has a single positive coordinate.
    pub fn is_lambda_type(&self) -> bool {
        self.atoms.iter().all(|a| a.point.coords().len() == 1)
    }

    pub fn convert<U: Scalar>(&self) -> XiSpec<U> {
        XiSpec {
            kingman_mass: U::from_f64_lossy(self.kingman_mass.to_f64_lossy()),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    weight: U::from_f64_lossy(a.weight.to_f64_lossy()),
                    point: a.point.convert(),
                })
                .collect(),
        }
    }
}

impl XiSpec<f64> {
    /// Discretises a Λ-measure with density `f` on `(0, 1]` by the midpoint
    /// rule with `nodes` cells on `[eps, 1]`. Mass below `eps` is dropped,
    /// so this is an approximation of the continuous measure.
    pub fn from_lambda_density(f: impl Fn(f64) -> f64, eps: f64, nodes: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::arg(format!("eps = {eps} outside (0, 1)")));
        }
        if nodes == 0 {
            return Err(Error::arg("need at least one quadrature node"));
        }
        let h = (1.0 - eps) / nodes as f64;
        let atoms = (0..nodes)
            .filter_map(|k| {
                let x = eps + (k as f64 + 0.5) * h;
                let w = f(x) * h;
                (w > 0.0).then(|| Atom {
                    weight: w,
                    point: SimplexPoint::new(vec![x]).expect("x in (0, 1)"),
                })
            })
            .collect();
        XiSpec::new(0.0, atoms)
    }

    /// Discretised Beta(a, b) Λ-measure (total mass 1 before truncation).
    pub fn beta_lambda(a: f64, b: f64, eps: f64, nodes: usize) -> Result<Self> {
        let beta = Beta::new(a, b).map_err(|e| Error::arg(e.to_string()))?;
        Self::from_lambda_density(|x| beta.pdf(x), eps, nodes)
    }
}
