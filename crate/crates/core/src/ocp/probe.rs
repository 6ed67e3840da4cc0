use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_trajectory, DirectConfig, OcpProblem, OcpSolution};
use crate::dynamics::Trajectory;
use crate::error::{config_err, Result};
use crate::geometry::Point;
use crate::scalar::{lit, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Gap below which the limit counts as optimal.
    pub tol: f64,
    /// Largest sup-distance between the last two source trajectories for
    /// the sequence to count as uniformly convergent.
    pub conv_tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { tol: 1e-2, conv_tol: 5e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClosedGraphReport<S> {
    /// Optimal trajectory from the source closest to the target.
    pub limit_traj: Trajectory<S>,
    pub limit_cost: S,
    pub target_value: S,
    /// `limit_cost − target_value`.
    pub gap: S,
    pub limit_is_optimal: bool,
    pub source_values: Vec<S>,
    /// Sup distance between consecutive source trajectories.
    pub sup_distances: Vec<S>,
    /// Set when the last two source trajectories are farther apart than
    /// `conv_tol`.
    pub inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport<S> {
    pub target_value: S,
    pub source_values: Vec<S>,
    pub liminf_ok: bool,
    pub continuity_ok: bool,
}

fn solve_all<S: Scalar>(
    pb: &OcpProblem<S>,
    target: Point<S>,
    sources: &[Point<S>],
    cfg: &DirectConfig,
) -> Result<(OcpSolution<S>, Vec<OcpSolution<S>>)> {
    if sources.is_empty() {
        return Err(config_err!("probe needs at least one source"));
    }
    let at_target = solve_trajectory(pb, target, S::zero(), cfg)?;
    let sols = sources
        .par_iter()
        .map(|&s| solve_trajectory(pb, s, S::zero(), cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok((at_target, sols))
}

fn sup_distance<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>) -> S {
    a.times
        .iter()
        .map(|&t| a.state_at(t).dist(b.state_at(t)))
        .chain(b.times.iter().map(|&t| a.state_at(t).dist(b.state_at(t))))
        .fold(S::zero(), S::max)
}

/// Solves from every source and from the target, and compares the cost of
/// the optimal trajectory from the last source (the limit candidate) with
/// the value at the target. Sources should be ordered toward the target.
pub fn closed_graph_probe<S: Scalar>(
    pb: &OcpProblem<S>,
    target: Point<S>,
    sources: &[Point<S>],
    cfg: &DirectConfig,
    probe: &ProbeConfig,
) -> Result<ClosedGraphReport<S>> {
    let (at_target, sols) = solve_all(pb, target, sources, cfg)?;
    let sup_distances: Vec<S> = sols.windows(2).map(|w| sup_distance(&w[0].traj, &w[1].traj)).collect();
    let settled = sup_distances.last().map_or(true, |&d| d <= lit(probe.conv_tol));
    let last = sols.last().expect("nonempty sources");
    let gap = last.value - at_target.value;
    Ok(ClosedGraphReport {
        limit_traj: last.traj.clone(),
        limit_cost: last.value,
        target_value: at_target.value,
        gap,
        limit_is_optimal: gap <= lit(probe.tol),
        source_values: sols.iter().map(|s| s.value).collect(),
        sup_distances,
        inconclusive: !settled,
    })
}

/// Compares `u(source_k, 0)` with `u(target, 0)`: the lower limit, read
/// off as the smaller of the last two values, must not drop below the
/// target value, and the last source must match it, both within
/// `probe.tol`.
pub fn lsc_continuity_probe<S: Scalar>(
    pb: &OcpProblem<S>,
    target: Point<S>,
    sources: &[Point<S>],
    cfg: &DirectConfig,
    probe: &ProbeConfig,
) -> Result<ContinuityReport<S>> {
    let (at_target, sols) = solve_all(pb, target, sources, cfg)?;
    let values: Vec<S> = sols.iter().map(|s| s.value).collect();
    let tol = lit::<S>(probe.tol);
    let tail = &values[values.len().saturating_sub(2)..];
    let lower = tail.iter().fold(S::infinity(), |m, &v| m.min(v));
    let last = *values.last().expect("nonempty sources");
    Ok(ContinuityReport {
        target_value: at_target.value,
        liminf_ok: lower >= at_target.value - tol,
        continuity_ok: (last - at_target.value).abs() <= tol,
        source_values: values,
    })
}
