use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{domain_err, Result};
use crate::geometry::Point;
use crate::scalar::{lit, Scalar};

/// Running cost `ℓ(x, t)`, terminal cost `g(x)` and a sup-norm bound `K`
/// for both on the working set.
pub trait CostModel<S>: Send + Sync {
    fn running(&self, x: Point<S>, t: S) -> S;
    fn terminal(&self, x: Point<S>) -> S;
    fn bound(&self) -> S;
}

impl<S, C: CostModel<S> + ?Sized> CostModel<S> for &C {
    fn running(&self, x: Point<S>, t: S) -> S {
        (**self).running(x, t)
    }
    fn terminal(&self, x: Point<S>) -> S {
        (**self).terminal(x)
    }
    fn bound(&self) -> S {
        (**self).bound()
    }
}

type RunningFn<S> = Arc<dyn Fn(Point<S>, S) -> S + Send + Sync>;
type TerminalFn<S> = Arc<dyn Fn(Point<S>) -> S + Send + Sync>;

/// Cost given by closures.
#[derive(Clone)]
pub struct CostSpec<S> {
    pub ell: RunningFn<S>,
    pub g: TerminalFn<S>,
    pub bound_k: S,
}

impl<S: Scalar> CostSpec<S> {
    pub fn new(
        ell: impl Fn(Point<S>, S) -> S + Send + Sync + 'static,
        g: impl Fn(Point<S>) -> S + Send + Sync + 'static,
        bound_k: S,
    ) -> Self {
        Self { ell: Arc::new(ell), g: Arc::new(g), bound_k }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| S::zero(), |_| S::zero(), S::zero())
    }
}

impl<S: fmt::Debug> fmt::Debug for CostSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostSpec").field("bound_k", &self.bound_k).finish_non_exhaustive()
    }
}

impl<S: Scalar> CostModel<S> for CostSpec<S> {
    fn running(&self, x: Point<S>, t: S) -> S {
        (self.ell)(x, t)
    }
    fn terminal(&self, x: Point<S>) -> S {
        (self.g)(x)
    }
    fn bound(&self) -> S {
        self.bound_k
    }
}

/// Time-independent scalar field on the plane, loadable from config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields, bound = "S: Scalar")]
pub enum Field<S> {
    Zero,
    Constant { value: S },
    /// `offset + c1·x1 + c2·x2`
    Affine {
        #[serde(default)]
        offset: S,
        #[serde(default)]
        c1: S,
        #[serde(default)]
        c2: S,
    },
    /// `offset + weight·|x − center|²`
    Quadratic {
        center: Point<S>,
        weight: S,
        #[serde(default)]
        offset: S,
    },
    /// `−min(x1, cap)`
    NegClippedX1 { cap: S },
}

impl<S: Scalar> Field<S> {
    pub fn eval(&self, x: Point<S>) -> S {
        match self {
            Field::Zero => S::zero(),
            Field::Constant { value } => *value,
            Field::Affine { offset, c1, c2 } => *offset + *c1 * x.x1 + *c2 * x.x2,
            Field::Quadratic { center, weight, offset } => {
                let d = x.sub(*center);
                *offset + *weight * (d.x1 * d.x1 + d.x2 * d.x2)
            }
            Field::NegClippedX1 { cap } => -x.x1.min(*cap),
        }
    }
}

/// Serializable cost built from two [`Field`]s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "S: Scalar")]
pub struct CostConfig<S> {
    pub running: Field<S>,
    pub terminal: Field<S>,
    pub bound_k: S,
}

impl<S: Scalar> CostModel<S> for CostConfig<S> {
    fn running(&self, x: Point<S>, _t: S) -> S {
        self.running.eval(x)
    }
    fn terminal(&self, x: Point<S>) -> S {
        self.terminal.eval(x)
    }
    fn bound(&self) -> S {
        self.bound_k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<S> {
    pub control_energy: S,
    pub running: S,
    pub terminal: S,
    pub total: S,
}

/// `∫_{t_start}^{T} (|α|²/2 + ℓ(y, τ)) dτ + g(y(T))`. The energy is exact;
/// the running term uses the trapezoid rule on the state grid.
pub fn cost<S: Scalar>(
    traj: &Trajectory<S>,
    model: &(impl CostModel<S> + ?Sized),
    t_start: S,
    horizon: S,
) -> Result<CostBreakdown<S>> {
    let tol = lit::<S>(1e-9) * S::one().max(horizon.abs());
    if (traj.t0() - t_start).abs() > tol {
        return Err(domain_err!("trajectory starts at {} instead of {t_start}", traj.t0()));
    }
    if (traj.t1() - horizon).abs() > tol {
        return Err(domain_err!("trajectory ends at {} instead of T = {horizon}", traj.t1()));
    }
    let control_energy = traj.control.l2_squared() * lit(0.5);
    let half = lit::<S>(0.5);
    let running = traj
        .times
        .windows(2)
        .zip(traj.states.windows(2))
        .map(|(t, y)| (model.running(y[0], t[0]) + model.running(y[1], t[1])) * half * (t[1] - t[0]))
        .sum::<S>();
    let terminal = model.terminal(traj.end());
    Ok(CostBreakdown { control_energy, running, terminal, total: control_energy + running + terminal })
}

impl<S: Scalar> Trajectory<S> {
    /// Evaluates [`cost`] and stores the breakdown on the trajectory.
    pub fn evaluate_cost(
        &mut self,
        model: &(impl CostModel<S> + ?Sized),
        t_start: S,
        horizon: S,
    ) -> Result<S> {
        let b = cost(self, model, t_start, horizon)?;
        self.cost_breakdown = Some(b);
        Ok(b.total)
    }
}
