//! Piecewise-constant controls, exact integration of the degenerate
//! dynamics, costs, admissibility and the rescaled concatenation of a
//! short prefix with a full-horizon tail.

mod control;
mod cost;
mod io;

pub use control::ControlSignal;
pub use cost::{cost, CostBreakdown, CostConfig, CostModel, CostSpec, Field};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Result};
use crate::geometry::{ConstraintSet, Point};
use crate::scalar::{lit, usize_s, Scalar};

/// `∫_0^ds |a + (b − a) s / ds|^nu ds`, exact for the linear profile.
pub fn abs_pow_integral<S: Scalar>(a: S, b: S, ds: S, nu: S) -> S {
    let zero = S::zero();
    if ds <= zero {
        return zero;
    }
    let one = S::one();
    let np1 = nu + one;
    let d = b - a;
    if a * b < zero {
        return ds * (a.abs().powf(np1) + b.abs().powf(np1)) / (np1 * d.abs());
    }
    let m = (a + b) * lit(0.5);
    if d.abs() <= lit::<S>(1e-3) * m.abs() {
        if m == zero {
            return zero;
        }
        let r = d / m;
        let r2 = r * r;
        let c2 = nu * (nu - one) / lit(24.0);
        let c4 = nu * (nu - one) * (nu - lit(2.0)) * (nu - lit(3.0)) / lit(1920.0);
        return ds * m.abs().powf(nu) * (one + c2 * r2 + c4 * r2 * r2);
    }
    let f = |z: S| z.sign0() * z.abs().powf(np1) / np1;
    ds * (f(b) - f(a)) / d
}

/// Advances `x` for time `dt` under the constant control `a`.
#[inline]
pub fn step<S: Scalar>(x: Point<S>, a: [S; 2], dt: S, nu: S) -> Point<S> {
    let y1 = x.x1 + a[0] * dt;
    let y2 = if a[1] == S::zero() {
        x.x2
    } else {
        x.x2 + a[1] * abs_pow_integral(x.x1, y1, dt, nu)
    };
    Point::new(y1, y2)
}

/// A state path on a time grid together with the control that drives it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Trajectory<S> {
    pub times: Vec<S>,
    pub states: Vec<Point<S>>,
    pub control: ControlSignal<S>,
    pub nu: S,
    #[serde(default)]
    pub cost_breakdown: Option<CostBreakdown<S>>,
}

fn check_nu<S: Scalar>(nu: S) -> Result<()> {
    if !(nu > S::zero() && nu.is_finite()) {
        return Err(config_err!("nu must be positive, got {nu}"));
    }
    Ok(())
}

/// Integrates the dynamics from `x` under `control`. Each control piece is
/// split into `substeps` panels on the state grid; every panel is advanced
/// in closed form, so the zero crossings of `y1` need no special care.
pub fn integrate<S: Scalar>(
    x: Point<S>,
    control: &ControlSignal<S>,
    nu: S,
    substeps: usize,
) -> Result<Trajectory<S>> {
    check_nu(nu)?;
    if substeps == 0 {
        return Err(config_err!("substeps must be at least 1"));
    }
    let cap = control.len() * substeps + 1;
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    times.push(control.t0());
    states.push(x);
    let mut y = x;
    for (ta, tb, a) in control.pieces() {
        let h = (tb - ta) / usize_s(substeps);
        let mut t = ta;
        for k in 1..=substeps {
            let tk = if k == substeps { tb } else { ta + h * usize_s(k) };
            y = step(y, a, tk - t, nu);
            t = tk;
            times.push(tk);
            states.push(y);
        }
    }
    Ok(Trajectory { times, states, control: control.clone(), nu, cost_breakdown: None })
}

/// Final state only; avoids building the trajectory.
pub fn endpoint<S: Scalar>(x: Point<S>, control: &ControlSignal<S>, nu: S) -> Point<S> {
    control.pieces().fold(x, |y, (ta, tb, a)| step(y, a, tb - ta, nu))
}

const SCAN_MAX_DEPTH: usize = 16;

struct Scan<'a, S: Scalar> {
    set: &'a ConstraintSet<S>,
    nu: S,
    max_violation: S,
    first_exit_time: Option<S>,
}

impl<S: Scalar> Scan<'_, S> {
    /// Records `p` and returns its signed distance.
    fn visit(&mut self, t: S, p: Point<S>) -> S {
        let v = self.set.violation(p);
        if v > self.max_violation {
            self.max_violation = v;
        }
        if self.first_exit_time.is_none() && v > self.set.tol_member {
            self.first_exit_time = Some(t);
        }
        if v > S::zero() {
            v
        } else {
            self.set.signed_distance(p)
        }
    }

    /// Visits interior samples of `(ta, tb)` in time order. Ends are
    /// `(time, state, signed distance)` and have been visited already.
    fn refine(&mut self, a: [S; 2], (ta, pa, sa): (S, Point<S>, S), (tb, pb, sb): (S, Point<S>, S), depth: usize) {
        // y1 is affine in time, so |y1| is bounded by its values at the ends
        let speed = a[0].abs() + pa.x1.abs().max(pb.x1.abs()).powf(self.nu) * a[1].abs();
        let travel = speed * (tb - ta);
        let inside = (-sa).max(S::zero()) + (-sb).max(S::zero());
        let scale = S::one().min(pa.norm().max(pb.norm()));
        let resolution = lit::<S>(1e-3) * scale;
        if depth > 0 && (inside >= travel || travel <= resolution || depth >= SCAN_MAX_DEPTH) {
            return;
        }
        let tm = (ta + tb) * lit(0.5);
        let pm = step(pa, a, tm - ta, self.nu);
        let sm = self.visit(tm, pm);
        self.refine(a, (ta, pa, sa), (tm, pm, sm), depth + 1);
        self.refine(a, (tm, pm, sm), (tb, pb, sb), depth + 1);
    }
}

/// Result of scanning a trajectory for set membership.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport<S> {
    pub max_violation: S,
    pub first_exit_time: Option<S>,
}

impl<S: Scalar> AdmissibilityReport<S> {
    pub fn is_admissible(&self, tol: S) -> bool {
        self.max_violation <= tol
    }
}

impl<S: Scalar> Trajectory<S> {
    /// Zero-duration trajectory sitting at `x`.
    pub fn stationary(x: Point<S>, t0: S, nu: S) -> Self {
        Self {
            times: vec![t0],
            states: vec![x],
            control: ControlSignal::empty(t0),
            nu,
            cost_breakdown: None,
        }
    }

    pub fn t0(&self) -> S {
        self.times[0]
    }

    pub fn t1(&self) -> S {
        *self.times.last().unwrap()
    }

    pub fn duration(&self) -> S {
        self.t1() - self.t0()
    }

    pub fn start(&self) -> Point<S> {
        self.states[0]
    }

    pub fn end(&self) -> Point<S> {
        *self.states.last().unwrap()
    }

    /// Exact state at time `t`, clamped to the trajectory interval.
    pub fn state_at(&self, t: S) -> Point<S> {
        if t <= self.t0() {
            return self.start();
        }
        if t >= self.t1() {
            return self.end();
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let a = self.control.value_at(self.times[i]);
        step(self.states[i], a, t - self.times[i], self.nu)
    }

    /// Scans the trajectory for membership in `set`. Each step is bisected
    /// until the depth at the ends of a sub-step covers the largest possible
    /// travel inside it, or that travel is below a resolution of 1e-3 times
    /// the local scale; a fast jump across a thin gap of the set is
    /// therefore not missed between grid states.
    pub fn admissibility_check(&self, set: &ConstraintSet<S>) -> AdmissibilityReport<S> {
        let mut scan = Scan { set, nu: self.nu, max_violation: S::zero(), first_exit_time: None };
        let mut sd_a = scan.visit(self.times[0], self.states[0]);
        for i in 1..self.times.len() {
            let (ta, tb) = (self.times[i - 1], self.times[i]);
            let a = self.control.value_at(ta);
            let pb = self.states[i];
            scan.refine(a, (ta, self.states[i - 1], sd_a), (tb, pb, set.signed_distance(pb)), 0);
            sd_a = scan.visit(tb, pb);
        }
        AdmissibilityReport { max_violation: scan.max_violation, first_exit_time: scan.first_exit_time }
    }

    /// Appends `next`, shifted in time to start at `self.t1()`. The junction
    /// states must agree within `tol`.
    pub fn concat(mut self, next: &Trajectory<S>, tol: S) -> Result<Self> {
        if self.nu != next.nu {
            return Err(config_err!("cannot concatenate trajectories with different nu"));
        }
        let gap = self.end().dist(next.start());
        if !(gap <= tol) {
            return Err(domain_err!("junction mismatch {gap} exceeds {tol}"));
        }
        let shift = self.t1() - next.t0();
        self.times.extend(next.times[1..].iter().map(|&t| t + shift));
        self.states.extend_from_slice(&next.states[1..]);
        self.control = self.control.append(&next.control.shifted(shift))?;
        self.cost_breakdown = None;
        Ok(self)
    }

    /// Largest observed ratio `|y(s) − y(s')| / sqrt|s − s'|` over grid pairs.
    pub fn holder_half_ratio(&self) -> S {
        let n = self.times.len();
        let mut best = S::zero();
        for i in 0..n {
            for j in i + 1..n {
                let dt = self.times[j] - self.times[i];
                if dt > S::zero() {
                    best = best.max(self.states[i].dist(self.states[j]) / dt.sqrt());
                }
            }
        }
        best
    }
}

/// Concatenates `prefix` on `[0, δ]` with `tail` on `[0, T]` compressed
/// onto `[δ, T]`: the tail control is multiplied by `T / (T − δ)` so the
/// tail states are visited unchanged and the final state is preserved.
pub fn rescale_concat<S: Scalar>(
    prefix: &Trajectory<S>,
    tail: &Trajectory<S>,
    tol: S,
) -> Result<Trajectory<S>> {
    let delta = prefix.t1() - prefix.t0();
    let t_end = tail.t1() - tail.t0();
    if !(delta < t_end) {
        return Err(domain_err!("prefix duration {delta} must be below the horizon {t_end}"));
    }
    if prefix.nu != tail.nu {
        return Err(config_err!("cannot concatenate trajectories with different nu"));
    }
    let gap = prefix.end().dist(tail.start());
    if !(gap <= tol) {
        return Err(domain_err!("prefix ends {gap} away from the tail start"));
    }
    if delta == S::zero() {
        return Ok(tail.clone());
    }
    let factor = (t_end - delta) / t_end;
    let t0 = prefix.t0();
    let mut times = prefix.times.clone();
    let mut states = prefix.states.clone();
    for (t, y) in tail.times.iter().zip(&tail.states).skip(1) {
        times.push(t0 + delta + (*t - tail.t0()) * factor);
        states.push(*y);
    }
    let squeezed = tail.control.time_rescaled(t0 + delta, factor);
    let control = prefix.control.append(&squeezed)?;
    Ok(Trajectory { times, states, control, nu: tail.nu, cost_breakdown: None })
}
