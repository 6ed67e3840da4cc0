//! The single-agent state-constrained control problem: a direct
//! multistart solver over piecewise-constant controls, a backward
//! semi-Lagrangian value sweep, and probes of the closed-graph and
//! continuity properties.

mod direct;
mod grid;
mod probe;

pub use direct::{solve_trajectory, solve_trajectory_with, DirectConfig, OcpSolution};
pub use grid::{value_grid_backward, GridConfig, ValueGrid, ValueGridMeta};
pub use probe::{closed_graph_probe, lsc_continuity_probe, ClosedGraphReport, ContinuityReport, ProbeConfig};

use crate::dynamics::CostModel;
use crate::error::{config_err, Result};
use crate::geometry::ConstraintSet;
use crate::scalar::Scalar;

/// Constraint set, exponent, horizon and cost of one control problem.
#[derive(Clone, Copy)]
pub struct OcpProblem<'a, S: Scalar> {
    pub set: &'a ConstraintSet<S>,
    pub nu: S,
    pub horizon: S,
    pub cost: &'a dyn CostModel<S>,
}

impl<'a, S: Scalar> OcpProblem<'a, S> {
    pub fn new(
        set: &'a ConstraintSet<S>,
        nu: S,
        horizon: S,
        cost: &'a dyn CostModel<S>,
    ) -> Result<Self> {
        if !(nu > S::zero() && nu.is_finite()) {
            return Err(config_err!("nu must be positive, got {nu}"));
        }
        if !(horizon > S::zero() && horizon.is_finite()) {
            return Err(config_err!("horizon must be positive, got {horizon}"));
        }
        set.validate()?;
        Ok(Self { set, nu, horizon, cost })
    }

    /// A-priori energy bound from comparing with the zero control:
    /// `‖α‖₂² ≤ 4K(1 + T)` when `|ℓ|, |g| ≤ K`.
    pub fn energy_bound(&self) -> S {
        let four = S::from_f64(4.0).unwrap();
        four * self.cost.bound() * (S::one() + self.horizon)
    }
}
