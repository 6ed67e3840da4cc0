use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pushforward_at, wasserstein1, AtomicMeasure, CouplingSpec, FrozenCost, TrajectoryAtom, TrajectoryMeasure};
use crate::dynamics::{cost, integrate, ControlSignal, Trajectory};
use crate::error::{config_err, domain_err, Error, Result};
use crate::geometry::{BBox, ConstraintSet};
use crate::ocp::{solve_trajectory_with, value_grid_backward, DirectConfig, GridConfig, OcpProblem, ValueGrid};
use crate::scalar::{lit, usize_s, Scalar};

/// Data of the mean field game.
#[derive(Clone, Copy)]
pub struct MfgProblem<'a, S: Scalar> {
    pub set: &'a ConstraintSet<S>,
    pub nu: S,
    pub horizon: S,
    pub spec: &'a CouplingSpec<S>,
    pub m0: &'a AtomicMeasure<S>,
}

impl<'a, S: Scalar> MfgProblem<'a, S> {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.m0.check()?;
        if !(self.nu > S::zero()) || !(self.horizon > S::zero()) {
            return Err(config_err!("nu and T must be positive"));
        }
        for (p, _) in &self.m0.atoms {
            if !self.set.contains(*p) {
                return Err(domain_err!("initial atom ({}, {}) is not in the constraint set", p.x1, p.x2));
            }
        }
        Ok(())
    }

    /// `C̃² = 4K(1 + T)`: no optimal control has more energy.
    pub fn energy_bound(&self) -> S {
        lit::<S>(4.0) * self.spec.bound_k * (S::one() + self.horizon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpConfig {
    pub n_iters: usize,
    pub solver: DirectConfig,
    /// Atoms lighter than this fraction of their origin's mass are dropped.
    pub prune_tol: f64,
    /// Same-origin trajectories closer than this in sup norm are merged.
    pub merge_tol: f64,
    /// Beyond this count the two closest same-origin atoms are merged.
    pub max_atoms_per_origin: usize,
    /// Nodes per axis of the table holding the frozen kernel sums.
    pub table_n: usize,
    /// Box of that table; the set's sampling box if absent.
    pub bbox: Option<[f64; 4]>,
}

impl Default for FpConfig {
    fn default() -> Self {
        Self {
            n_iters: 200,
            solver: DirectConfig { n_steps: 16, n_restarts: 2, max_iters: 60, substeps: 1, ..Default::default() },
            prune_tol: 1e-10,
            merge_tol: 1e-9,
            max_atoms_per_origin: 16,
            table_n: 65,
            bbox: None,
        }
    }
}

impl FpConfig {
    fn table_box<S: Scalar>(&self, set: &ConstraintSet<S>) -> BBox<S> {
        match self.bbox {
            Some([a, b, c, d]) => BBox::new(lit(a), lit(b), lit(c), lit(d)),
            None => set.sampling_box(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDiagnostics<S> {
    /// Exploitability of `μᵏ` for `k = 0..=n_iters`.
    pub exploitability: Vec<S>,
    /// `sup_t W₁(m^{k+1}(t), m^k(t))` per iteration.
    pub w1_successive: Vec<S>,
    /// Largest distance between `e₀♯μᵏ` and `m₀` (weights), per iterate.
    pub initial_marginal_error: Vec<S>,
    pub atom_counts: Vec<usize>,
    /// `max_atom [J^μ(atom) − u^μ(origin)]` for the final measure.
    pub support_gap: S,
    /// Message of the solver failure that stopped the iteration, if any.
    pub aborted: Option<String>,
}

/// Grid times shared by every atom trajectory.
fn time_grid<S: Scalar>(horizon: S, cfg: &DirectConfig) -> Vec<S> {
    let n = cfg.n_steps * cfg.substeps;
    (0..=n)
        .map(|i| if i == n { horizon } else { horizon * usize_s(i) / usize_s(n) })
        .collect()
}

/// `m^μ(t)` at the given times.
pub fn measure_path<S: Scalar>(mu: &TrajectoryMeasure<S>, times: &[S], tol: S) -> Result<Vec<(S, AtomicMeasure<S>)>> {
    times.iter().map(|&t| Ok((t, pushforward_at(mu, t, tol)?))).collect()
}

/// Freezes the costs induced by `μ` on the trajectory time grid.
pub fn freeze<S: Scalar>(pb: &MfgProblem<S>, mu: &TrajectoryMeasure<S>, cfg: &FpConfig) -> Result<FrozenCost<S>> {
    let times = mu.atoms.first().ok_or_else(|| domain_err!("empty trajectory measure"))?.traj.times.clone();
    let path = measure_path(mu, &times, pb.set.tol_member)?;
    FrozenCost::new(pb.spec, &path, cfg.table_box(pb.set), cfg.table_n)
}

struct BestResponses<S> {
    trajs: Vec<Trajectory<S>>,
    values: Vec<S>,
    atom_costs: Vec<S>,
}

impl<S: Scalar> BestResponses<S> {
    fn exploitability(&self, mu: &TrajectoryMeasure<S>) -> S {
        mu.atoms
            .iter()
            .zip(&self.atom_costs)
            .map(|(a, &j)| a.weight * (j - self.values[a.origin]))
            .sum()
    }

    fn support_gap(&self, mu: &TrajectoryMeasure<S>) -> S {
        mu.atoms
            .iter()
            .zip(&self.atom_costs)
            .map(|(a, &j)| j - self.values[a.origin])
            .fold(S::zero(), S::max)
    }
}

/// Best response from every initial atom against the frozen costs. The
/// solver is warm-started from `warm[i]`; an existing atom of the same
/// origin that does better than the solver is taken instead, so every
/// atom cost is at least the reported value.
fn best_responses<S: Scalar>(
    pb: &MfgProblem<S>,
    mu: &TrajectoryMeasure<S>,
    frozen: &FrozenCost<S>,
    cfg: &FpConfig,
    warm: &[Option<ControlSignal<S>>],
) -> Result<BestResponses<S>> {
    let ocp = OcpProblem::new(pb.set, pb.nu, pb.horizon, frozen)?;
    let atom_costs = mu
        .atoms
        .iter()
        .map(|a| Ok(cost(&a.traj, frozen, S::zero(), pb.horizon)?.total))
        .collect::<Result<Vec<S>>>()?;
    let solved = pb
        .m0
        .atoms
        .par_iter()
        .enumerate()
        .map(|(i, (x, _))| {
            let w: Vec<ControlSignal<S>> = warm.get(i).cloned().flatten().into_iter().collect();
            solve_trajectory_with(&ocp, *x, S::zero(), &cfg.solver, &w)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trajs = Vec::with_capacity(solved.len());
    let mut values = Vec::with_capacity(solved.len());
    for (i, sol) in solved.into_iter().enumerate() {
        let mut best = (sol.value, sol.traj);
        for (a, &j) in mu.atoms.iter().zip(&atom_costs) {
            if a.origin == i && j < best.0 {
                best = (j, a.traj.clone());
            }
        }
        values.push(best.0);
        trajs.push(best.1);
    }
    Ok(BestResponses { trajs, values, atom_costs })
}

/// `Σ_atoms w · [J^μ(x; y) − u^μ(x, 0)]` with `u^μ` from fresh best
/// responses.
pub fn exploitability<S: Scalar>(pb: &MfgProblem<S>, mu: &TrajectoryMeasure<S>, cfg: &FpConfig) -> Result<S> {
    pb.validate()?;
    let frozen = freeze(pb, mu, cfg)?;
    let warm: Vec<Option<ControlSignal<S>>> = vec![None; pb.m0.len()];
    Ok(best_responses(pb, mu, &frozen, cfg, &warm)?.exploitability(mu))
}

/// `μ⁰`: every initial atom stays put.
pub fn stay_put_measure<S: Scalar>(pb: &MfgProblem<S>, cfg: &DirectConfig) -> Result<TrajectoryMeasure<S>> {
    let zero = ControlSignal::uniform(S::zero(), pb.horizon, vec![[S::zero(); 2]; cfg.n_steps])?;
    let atoms = pb
        .m0
        .atoms
        .iter()
        .enumerate()
        .map(|(i, (x, w))| {
            Ok(TrajectoryAtom { traj: integrate(*x, &zero, pb.nu, cfg.substeps)?, weight: *w, origin: i, born: 0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let c = atoms.iter().flat_map(|a| a.traj.states.iter().map(|p| p.norm())).fold(S::zero(), S::max);
    Ok(TrajectoryMeasure { atoms, horizon: pb.horizon, c_bound: c })
}

fn sup_distance<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>) -> S {
    a.states.iter().zip(&b.states).map(|(p, q)| p.dist(*q)).fold(S::zero(), S::max)
}

/// Drops negligible atoms, merges near-duplicate trajectories of the same
/// origin (the younger trajectory carries the summed weight) and restores
/// each origin's mass exactly.
fn compress<S: Scalar>(mu: &mut TrajectoryMeasure<S>, m0: &AtomicMeasure<S>, cfg: &FpConfig) {
    let n0 = m0.len();
    let prune = lit::<S>(cfg.prune_tol);
    mu.atoms.retain(|a| a.weight >= prune * m0.atoms[a.origin].1);
    let merge_tol = lit::<S>(cfg.merge_tol);
    let mut out: Vec<TrajectoryAtom<S>> = Vec::with_capacity(mu.atoms.len());
    for i in 0..n0 {
        let mut group: Vec<TrajectoryAtom<S>> = mu.atoms.iter().filter(|a| a.origin == i).cloned().collect();
        loop {
            let mut closest: Option<(S, usize, usize)> = None;
            for a in 0..group.len() {
                for b in a + 1..group.len() {
                    let d = sup_distance(&group[a].traj, &group[b].traj);
                    if closest.map_or(true, |c| d < c.0) {
                        closest = Some((d, a, b));
                    }
                }
            }
            let Some((d, a, b)) = closest else { break };
            if d > merge_tol && group.len() <= cfg.max_atoms_per_origin.max(1) {
                break;
            }
            let (keep, drop) = if group[a].born >= group[b].born { (a, b) } else { (b, a) };
            group[keep].weight = group[keep].weight + group[drop].weight;
            group.remove(drop);
        }
        let mass: S = group.iter().map(|a| a.weight).sum();
        let target = m0.atoms[i].1;
        for a in group.iter_mut() {
            a.weight = a.weight * target / mass;
        }
        out.extend(group);
    }
    mu.atoms = out;
}

fn marginal_error<S: Scalar>(mu: &TrajectoryMeasure<S>, m0: &AtomicMeasure<S>) -> S {
    let w = mu.origin_weights(m0.len());
    let mut err = S::zero();
    for (i, (x, target)) in m0.atoms.iter().enumerate() {
        err = err.max((w[i] - *target).abs());
        for a in mu.atoms.iter().filter(|a| a.origin == i) {
            err = err.max(a.traj.start().dist(*x));
        }
    }
    err
}

/// Fictitious play `μ^{k+1} = (k μᵏ + βᵏ)/(k + 1)` from the stay-put
/// measure, where `βᵏ` puts the mass of each initial atom on its best
/// response against the costs frozen at `μᵏ`. After the last update the
/// final measure is evaluated once more, so `exploitability` has
/// `n_iters + 1` entries. A solver failure stops the iteration and is
/// reported in `aborted`.
pub fn fictitious_play<S: Scalar>(
    pb: &MfgProblem<S>,
    cfg: &FpConfig,
) -> Result<(TrajectoryMeasure<S>, EquilibriumDiagnostics<S>)> {
    pb.validate()?;
    let mut mu = stay_put_measure(pb, &cfg.solver)?;
    let times = time_grid(pb.horizon, &cfg.solver);
    let tol = pb.set.tol_member;
    let bound = pb.energy_bound();
    let mut diag = EquilibriumDiagnostics { support_gap: S::zero(), ..Default::default() };
    let mut warm: Vec<Option<ControlSignal<S>>> = vec![None; pb.m0.len()];
    for k in 0..=cfg.n_iters {
        diag.initial_marginal_error.push(marginal_error(&mu, pb.m0));
        diag.atom_counts.push(mu.atoms.len());
        let frozen = freeze(pb, &mu, cfg)?;
        let br = match best_responses(pb, &mu, &frozen, cfg, &warm) {
            Ok(br) => br,
            Err(e @ (Error::Config(_) | Error::Io(_) | Error::Json(_))) => return Err(e),
            Err(e) => {
                diag.aborted = Some(e.to_string());
                break;
            }
        };
        diag.exploitability.push(br.exploitability(&mu).max(S::zero()));
        diag.support_gap = br.support_gap(&mu);
        if k == cfg.n_iters {
            break;
        }
        for t in &br.trajs {
            if t.control.l2_squared() > bound * (S::one() + lit(1e-9)) {
                return Err(Error::Internal(format!(
                    "best response energy {} exceeds the a-priori bound {bound}",
                    t.control.l2_squared()
                )));
            }
        }
        let lambda = S::one() / usize_s(k + 1);
        let beta = TrajectoryMeasure {
            atoms: br
                .trajs
                .iter()
                .enumerate()
                .map(|(i, t)| TrajectoryAtom { traj: t.clone(), weight: pb.m0.atoms[i].1, origin: i, born: k + 1 })
                .collect(),
            horizon: pb.horizon,
            c_bound: S::zero(),
        };
        // W₁(λb + (1−λ)m, m) = λ W₁(b, m) by Kantorovich–Rubinstein duality
        let mut w1 = S::zero();
        for &t in &times {
            let b = pushforward_at(&beta, t, tol)?;
            let m = pushforward_at(&mu, t, tol)?;
            w1 = w1.max(lambda * wasserstein1(&b, &m)?);
        }
        diag.w1_successive.push(w1);
        for a in mu.atoms.iter_mut() {
            a.weight = a.weight * (S::one() - lambda);
        }
        mu.atoms.extend(beta.atoms.into_iter().map(|mut a| {
            a.weight = a.weight * lambda;
            a
        }));
        compress(&mut mu, pb.m0, cfg);
        warm = br.trajs.iter().map(|t| Some(t.control.clone())).collect();
    }
    mu.c_bound = mu.max_state_norm().max(mu.max_control_l2());
    Ok((mu, diag))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport<S> {
    /// `C·(1 + max(1, ‖y‖∞)^ν)` with `C` the largest atom `‖α‖₂`.
    pub c_h: S,
    /// Largest `W₁(m(s), m(t)) / √|t − s|` over the pairs.
    pub max_ratio: S,
    pub pairs: usize,
    pub holds: bool,
}

/// Checks `W₁(m(s), m(t)) ≤ C_H √|t − s|` for all pairs of `times`.
pub fn holder_check<S: Scalar>(mu: &TrajectoryMeasure<S>, nu: S, times: &[S], tol: S) -> Result<HolderReport<S>> {
    let c = mu.max_control_l2();
    let y = mu.max_state_norm();
    let c_h = c * (S::one() + y.max(S::one()).powf(nu));
    let path = measure_path(mu, times, tol)?;
    let pairs: Vec<(usize, usize)> = (0..path.len()).flat_map(|i| (i + 1..path.len()).map(move |j| (i, j))).collect();
    let ratios = pairs
        .par_iter()
        .map(|&(i, j)| {
            let w = wasserstein1(&path[i].1, &path[j].1)?;
            Ok(w / (path[j].0 - path[i].0).abs().sqrt())
        })
        .collect::<Result<Vec<S>>>()?;
    let max_ratio = ratios.into_iter().fold(S::zero(), S::max);
    Ok(HolderReport { c_h, max_ratio, pairs: pairs.len(), holds: max_ratio <= c_h * (S::one() + lit(1e-9)) })
}

/// Value function under the costs frozen at `μ`, together with the
/// measure path at the grid's time steps.
pub fn mild_solution_extract<S: Scalar>(
    pb: &MfgProblem<S>,
    mu: &TrajectoryMeasure<S>,
    fp: &FpConfig,
    grid: &GridConfig,
) -> Result<(ValueGrid<S>, Vec<(S, AtomicMeasure<S>)>)> {
    let frozen = freeze(pb, mu, fp)?;
    let ocp = OcpProblem::new(pb.set, pb.nu, pb.horizon, &frozen)?;
    let u = value_grid_backward(&ocp, grid)?;
    let times: Vec<S> = (0..=u.meta.nt).map(|k| u.time(k)).collect();
    let path = measure_path(mu, &times, pb.set.tol_member)?;
    Ok((u, path))
}
