use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{domain_err, Result};
use crate::geometry::Point;
use crate::scalar::{lit, Scalar};

/// Finitely supported probability measure on the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AtomicMeasure<S> {
    pub atoms: Vec<(Point<S>, S)>,
}

impl<S: Scalar> AtomicMeasure<S> {
    /// Checks positivity and unit mass (within `1e-12`).
    pub fn new(atoms: Vec<(Point<S>, S)>) -> Result<Self> {
        let m = Self { atoms };
        m.check()?;
        Ok(m)
    }

    pub fn dirac(p: Point<S>) -> Self {
        Self { atoms: vec![(p, S::one())] }
    }

    /// Equal weights on `points`.
    pub fn uniform(points: &[Point<S>]) -> Result<Self> {
        if points.is_empty() {
            return Err(domain_err!("measure needs at least one atom"));
        }
        let w = S::one() / S::from_usize(points.len()).unwrap();
        Self::new(points.iter().map(|&p| (p, w)).collect())
    }

    pub fn check(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(domain_err!("measure has no atoms"));
        }
        for (p, w) in &self.atoms {
            if !p.is_finite() || !(*w > S::zero()) || !w.is_finite() {
                return Err(domain_err!("invalid atom ({}, {}) with weight {w}", p.x1, p.x2));
            }
        }
        let mass = self.mass();
        if (mass - S::one()).abs() > lit(1e-12) {
            return Err(domain_err!("measure has mass {mass}, expected 1"));
        }
        Ok(())
    }

    pub fn mass(&self) -> S {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> Point<S> {
        let m = self.mass();
        let (a, b) = self
            .atoms
            .iter()
            .fold((S::zero(), S::zero()), |(a, b), (p, w)| (a + p.x1 * *w, b + p.x2 * *w));
        Point::new(a / m, b / m)
    }

    /// Sums the weights of atoms within `tol` of an earlier atom in
    /// lexicographic order; the result is sorted.
    pub fn merged(&self, tol: S) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| {
            a.0.x1
                .partial_cmp(&b.0.x1)
                .unwrap()
                .then(a.0.x2.partial_cmp(&b.0.x2).unwrap())
        });
        let mut out: Vec<(Point<S>, S)> = Vec::with_capacity(atoms.len());
        'next: for (p, w) in atoms {
            for q in out.iter_mut().rev() {
                if p.x1 - q.0.x1 > tol {
                    break;
                }
                if q.0.dist(p) <= tol {
                    q.1 = q.1 + w;
                    continue 'next;
                }
            }
            out.push((p, w));
        }
        Self { atoms: out }
    }
}

/// One weighted trajectory of a [`TrajectoryMeasure`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TrajectoryAtom<S> {
    pub traj: Trajectory<S>,
    pub weight: S,
    /// Index of the initial atom the trajectory starts from.
    pub origin: usize,
    /// Iteration that inserted the trajectory.
    pub born: usize,
}

/// Finitely supported probability measure on trajectories over `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TrajectoryMeasure<S> {
    pub atoms: Vec<TrajectoryAtom<S>>,
    pub horizon: S,
    /// `‖y‖∞ ≤ c_bound` and `‖α‖₂ ≤ c_bound` for every atom.
    pub c_bound: S,
}

impl<S: Scalar> TrajectoryMeasure<S> {
    pub fn mass(&self) -> S {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Largest `‖α‖₂` over the atoms.
    pub fn max_control_l2(&self) -> S {
        self.atoms.iter().map(|a| a.traj.control.l2()).fold(S::zero(), S::max)
    }

    /// Largest `|y(t)|` over the atoms and grid times.
    pub fn max_state_norm(&self) -> S {
        self.atoms
            .iter()
            .flat_map(|a| a.traj.states.iter().map(|p| p.norm()))
            .fold(S::zero(), S::max)
    }

    /// Weight carried by each origin index.
    pub fn origin_weights(&self, n_origins: usize) -> Vec<S> {
        let mut w = vec![S::zero(); n_origins];
        for a in &self.atoms {
            w[a.origin] = w[a.origin] + a.weight;
        }
        w
    }
}

/// `e_t ♯ μ`: atoms `(y(t), weight)` with coincident points merged at
/// resolution `tol`.
pub fn pushforward_at<S: Scalar>(mu: &TrajectoryMeasure<S>, t: S, tol: S) -> Result<AtomicMeasure<S>> {
    let slack = lit::<S>(1e-12) * S::one().max(mu.horizon);
    if !(t >= -slack && t <= mu.horizon + slack) {
        return Err(domain_err!("time {t} outside [0, {}]", mu.horizon));
    }
    if mu.atoms.is_empty() {
        return Err(domain_err!("trajectory measure has no atoms"));
    }
    let raw = AtomicMeasure { atoms: mu.atoms.iter().map(|a| (a.traj.state_at(t), a.weight)).collect() };
    Ok(raw.merged(tol))
}
