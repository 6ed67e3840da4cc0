//! Explicit short connecting trajectories into boundary and interior
//! points, reachability probes on point sequences, and certificates of
//! unreachability for the cone apex.

mod cone;
mod probe;

pub use cone::{cone_gronwall_bound, truncated_cone_connector, truncated_cone_cost, UnreachCertificate};
pub use probe::{
    uniform_modulus_probe, verify_reachability_sequence, ModulusReport, PairProbe, PowerFit, SequenceReport,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{abs_pow_integral, integrate, step, ControlSignal, Trajectory};
use crate::error::{config_err, domain_err, Error, Result};
use crate::geometry::{ConstraintSet, CurveFamily, Direction, Point, Side, Witness};
use crate::scalar::{lit, Scalar};

/// Which construction produced a connector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    OffAxisVertical,
    OffAxisSlope,
    OnAxisPower,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ConnectResult<S> {
    pub traj: Trajectory<S>,
    pub delta: S,
    pub control_l2: S,
    pub case_tag: CaseTag,
}

type Pieces<S> = Vec<(S, [S; 2])>;

/// Coordinate reflections `x1 → −x1` and/or `x2 → −x2`. Both map the
/// dynamics to themselves with the matching control component negated.
#[derive(Clone, Copy, Debug, Default)]
struct Frame {
    flip1: bool,
    flip2: bool,
}

impl Frame {
    fn point<S: Scalar>(self, p: Point<S>) -> Point<S> {
        Point::new(
            if self.flip1 { -p.x1 } else { p.x1 },
            if self.flip2 { -p.x2 } else { p.x2 },
        )
    }

    fn control<S: Scalar>(self, a: [S; 2]) -> [S; 2] {
        [if self.flip1 { -a[0] } else { a[0] }, if self.flip2 { -a[1] } else { a[1] }]
    }
}

const MAX_GRAPH_PIECES: usize = 1 << 17;

fn horizontal_leg<S: Scalar>(from: S, to: S) -> Option<(S, [S; 2])> {
    let d = to - from;
    (d != S::zero()).then(|| (d.abs(), [d.sign0(), S::zero()]))
}

/// `n` equal pieces following the graph `x2 = phi(x1)` from `x1 = a` to
/// `x1 = b` at unit `x1`-speed. Each piece carries the constant `α2` that
/// matches the graph exactly at both ends of the piece. Also returns the
/// largest mid-piece deviation from the graph.
fn uniform_graph_pieces<S: Scalar>(
    a: S,
    b: S,
    phi: &impl Fn(S) -> S,
    nu: S,
    n: usize,
) -> (Pieces<S>, S) {
    let len = (b - a).abs();
    let dir = (b - a).sign0();
    let h = len / S::from_usize(n).unwrap();
    let mut pieces = Vec::with_capacity(n);
    let mut worst = S::zero();
    for i in 0..n {
        let xa = a + dir * h * S::from_usize(i).unwrap();
        let xb = if i + 1 == n { b } else { a + dir * h * S::from_usize(i + 1).unwrap() };
        let area = abs_pow_integral(xa, xb, h, nu);
        let a2 = if area > S::zero() { (phi(xb) - phi(xa)) / area } else { S::zero() };
        let mid = step(Point::new(xa, phi(xa)), [dir, a2], h * lit(0.5), nu);
        worst = worst.max((mid.x2 - phi(mid.x1)).abs());
        pieces.push((h, [dir, a2]));
    }
    (pieces, worst)
}

/// As [`uniform_graph_pieces`], doubling the piece count until the
/// deviation is below `dev_tol`.
fn follow_graph<S: Scalar>(a: S, b: S, phi: impl Fn(S) -> S, nu: S, dev_tol: S) -> Pieces<S> {
    if a == b {
        return Vec::new();
    }
    let mut n = 16usize;
    loop {
        let (pieces, worst) = uniform_graph_pieces(a, b, &phi, nu, n);
        if worst <= dev_tol || n >= MAX_GRAPH_PIECES || !worst.is_finite() {
            return pieces;
        }
        n *= 2;
    }
}

/// Horizontal leg to the vertical line `x1 = x01`, then straight up or down.
fn vertical_pieces<S: Scalar>(t: Point<S>, s: Point<S>, nu: S) -> Option<Pieces<S>> {
    if t.x1 == S::zero() {
        return None;
    }
    let mut out: Pieces<S> = horizontal_leg(s.x1, t.x1).into_iter().collect();
    let d2 = t.x2 - s.x2;
    if d2 != S::zero() {
        out.push((d2.abs(), [S::zero(), d2.sign0() / t.x1.abs().powf(nu)]));
    }
    Some(out)
}

/// Canonical frame: graph `x2 − x02 = C (x1 − x01)^rho` for `x1 > x01`,
/// source at or above the target level.
fn graph_pieces<S: Scalar>(
    t: Point<S>,
    s: Point<S>,
    nu: S,
    c: S,
    rho: S,
    dev_tol: S,
) -> Option<Pieces<S>> {
    let rise = s.x2 - t.x2;
    if rise < S::zero() {
        return None;
    }
    let u = (rise / c).powf(S::one() / rho);
    if !u.is_finite() {
        return None;
    }
    let xs = t.x1 + u;
    let mut out: Pieces<S> = horizontal_leg(s.x1, xs).into_iter().collect();
    if u > S::zero() {
        if t.x1 == S::zero() && rho == nu + S::one() {
            out.push((u, [-S::one(), -c * rho]));
        } else {
            let (x01, x02) = (t.x1, t.x2);
            out.extend(follow_graph(xs, x01, |x| x02 + c * (x - x01).abs().powf(rho), nu, dev_tol));
        }
    }
    Some(out)
}

/// Canonical frame: `x01 ≥ 0`, source at or above the target level; the
/// curve `x2 − x02 = C (x1^(ν+1) − x01^(ν+1))` is followed with the
/// constant control `(−1, −C(ν+1))`.
fn interior_curve_pieces<S: Scalar>(t: Point<S>, s: Point<S>, nu: S, c: S) -> Option<Pieces<S>> {
    let rise = s.x2 - t.x2;
    if t.x1 < S::zero() || rise < S::zero() {
        return None;
    }
    let np1 = nu + S::one();
    let xs = (rise / c + t.x1.powf(np1)).powf(S::one() / np1);
    if !xs.is_finite() {
        return None;
    }
    let mut out: Pieces<S> = horizontal_leg(s.x1, xs).into_iter().collect();
    let run = xs - t.x1;
    if run > S::zero() {
        out.push((run, [-S::one(), -c * np1]));
    }
    Some(out)
}

/// Inner branch of the same family with the coefficient negated: the curve
/// `x2 − x02 = −C (x1^(ν+1) − x01^(ν+1))` reached at `xs ∈ [0, x01)` and
/// followed with `(1, −C(ν+1))`. Needed when the outer branch would leave
/// the set, e.g. a target next to a lower boundary that rises with `x1`.
fn interior_inner_pieces<S: Scalar>(t: Point<S>, s: Point<S>, nu: S, c: S) -> Option<Pieces<S>> {
    let rise = s.x2 - t.x2;
    if !(t.x1 > S::zero()) || rise < S::zero() {
        return None;
    }
    let np1 = nu + S::one();
    let inner = t.x1.powf(np1) - rise / c;
    if inner < S::zero() {
        return None;
    }
    let xs = inner.powf(S::one() / np1);
    let mut out: Pieces<S> = horizontal_leg(s.x1, xs).into_iter().collect();
    let run = t.x1 - xs;
    if run > S::zero() {
        out.push((run, [S::one(), -c * np1]));
    }
    Some(out)
}

struct Candidate<S> {
    traj: Trajectory<S>,
    tag: CaseTag,
}

struct Connector<'a, S: Scalar> {
    set: &'a ConstraintSet<S>,
    nu: S,
    source: Point<S>,
    target: Point<S>,
}

impl<S: Scalar> Connector<'_, S> {
    fn end_tol(&self) -> S {
        self.set.tol_member.max(lit(1e-12)) * (S::one() + self.target.norm())
    }

    /// Realizes canonical-frame pieces from the true source and keeps the
    /// result only if it ends at the target and stays in the set.
    fn realize(&self, frame: Frame, pieces: Option<Pieces<S>>, tag: CaseTag) -> Option<Candidate<S>> {
        let pieces = pieces?;
        let mapped: Pieces<S> = pieces.into_iter().map(|(d, a)| (d, frame.control(a))).collect();
        let control = ControlSignal::from_durations(S::zero(), &mapped).ok()?;
        let substeps = if control.len() > 64 { 1 } else { 8 };
        let traj = integrate(self.source, &control, self.nu, substeps).ok()?;
        if traj.end().dist(self.target) > self.end_tol() {
            return None;
        }
        traj.admissibility_check(self.set)
            .is_admissible(self.set.tol_member)
            .then_some(Candidate { traj, tag })
    }

    fn from_witness(&self, w: &Witness<S>) -> Option<Candidate<S>> {
        let flip1 = matches!(
            w.family,
            CurveFamily::SegmentSlopeNeg
                | CurveFamily::PowerCurveNeg
                | CurveFamily::PowerExponent { side: Side::Negative, .. }
        );
        let frame = Frame { flip1, flip2: w.direction == Direction::Down };
        let t = frame.point(self.target);
        let s = frame.point(self.source);
        let on_axis = self.set.is_on_axis(self.target);
        let dev_tol = self.set.tol_member * lit(0.1);
        let np1 = self.nu + S::one();
        let (pieces, tag) = match w.family {
            CurveFamily::SegmentVertical => {
                if on_axis {
                    return None;
                }
                (vertical_pieces(t, s, self.nu), CaseTag::OffAxisVertical)
            }
            CurveFamily::SegmentSlopePos | CurveFamily::SegmentSlopeNeg => (
                graph_pieces(t, s, self.nu, w.c, S::one(), dev_tol),
                CaseTag::OffAxisSlope,
            ),
            CurveFamily::PowerCurvePos | CurveFamily::PowerCurveNeg => {
                (graph_pieces(t, s, self.nu, w.c, np1, dev_tol), CaseTag::OnAxisPower)
            }
            CurveFamily::PowerExponent { rho, .. } => {
                let tag = if on_axis { CaseTag::OnAxisPower } else { CaseTag::OffAxisSlope };
                (graph_pieces(t, s, self.nu, w.c, rho, dev_tol), tag)
            }
        };
        self.realize(frame, pieces, tag)
    }

    fn interior_curve(&self, frame: Frame, c: S, inner: bool) -> Option<Candidate<S>> {
        let t = frame.point(self.target);
        let s = frame.point(self.source);
        let pieces = if inner {
            interior_inner_pieces(t, s, self.nu, c)
        } else {
            interior_curve_pieces(t, s, self.nu, c)
        };
        self.realize(frame, pieces, CaseTag::Interior)
    }

    /// Per reflection frame and curve branch, the smallest coefficient
    /// `C ≥ 1` (doubling, then bisection) whose interior-curve connector is
    /// admissible; the vertical route is added as one more candidate.
    fn interior_candidates(&self) -> Vec<Candidate<S>> {
        let mut out = Vec::new();
        for (flip1, flip2, inner) in (0..8).map(|k| (k & 1 == 1, k & 2 == 2, k & 4 == 4)) {
            let frame = Frame { flip1, flip2 };
            let t = frame.point(self.target);
            let s = frame.point(self.source);
            if t.x1 < S::zero() || s.x2 < t.x2 {
                continue;
            }
            let mut c = S::one();
            let mut found = None;
            for _ in 0..40 {
                if let Some(cand) = self.interior_curve(frame, c, inner) {
                    found = Some(cand);
                    break;
                }
                c = c + c;
            }
            let Some(mut best) = found else { continue };
            if c > S::one() {
                let (mut lo, mut hi) = (c * lit(0.5), c);
                for _ in 0..30 {
                    let mid = (lo + hi) * lit(0.5);
                    match self.interior_curve(frame, mid, inner) {
                        Some(cand) => {
                            best = cand;
                            hi = mid;
                        }
                        None => lo = mid,
                    }
                }
            }
            out.push(best);
        }
        if let Some(v) = self.realize(
            Frame::default(),
            vertical_pieces(self.target, self.source, self.nu),
            CaseTag::Interior,
        ) {
            out.push(v);
        }
        out
    }
}

/// Builds a short admissible trajectory from `source` to `target`: a
/// horizontal leg onto a curve that ends at the target, then travel along
/// that curve. Boundary targets use the witness curves declared on the set;
/// interior targets use locally constructed curves. Among the admissible
/// constructions the one of least duration is returned; if there is none
/// the call fails rather than approximating.
pub fn connect<S: Scalar>(
    set: &ConstraintSet<S>,
    nu: S,
    source: Point<S>,
    target: Point<S>,
) -> Result<ConnectResult<S>> {
    if !(nu > S::zero() && nu.is_finite()) {
        return Err(config_err!("nu must be positive, got {nu}"));
    }
    for (name, p) in [("source", source), ("target", target)] {
        if !set.contains(p) {
            return Err(domain_err!("{name} ({}, {}) is not in the set", p.x1, p.x2));
        }
    }
    let interior = set.interior_radius(target, S::one(), lit(1e-6)).is_some();
    if source == target {
        let tag = if interior { CaseTag::Interior } else { stationary_tag(set, target) };
        return Ok(ConnectResult {
            traj: Trajectory::stationary(source, S::zero(), nu),
            delta: S::zero(),
            control_l2: S::zero(),
            case_tag: tag,
        });
    }
    let conn = Connector { set, nu, source, target };
    let mut candidates: Vec<Candidate<S>> =
        set.witnesses_at(target).filter_map(|(_, w)| conn.from_witness(w)).collect();
    if interior {
        candidates.extend(conn.interior_candidates());
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.traj.duration().partial_cmp(&b.traj.duration()).unwrap())
        .ok_or_else(|| {
            Error::Unsupported(format!(
                "no admissible connector into ({}, {}) from ({}, {})",
                target.x1, target.x2, source.x1, source.x2
            ))
        })?;
    Ok(ConnectResult {
        delta: best.traj.duration(),
        control_l2: best.traj.control.l2(),
        traj: best.traj,
        case_tag: best.tag,
    })
}

fn stationary_tag<S: Scalar>(set: &ConstraintSet<S>, target: Point<S>) -> CaseTag {
    if set.is_on_axis(target) {
        CaseTag::OnAxisPower
    } else {
        CaseTag::OffAxisVertical
    }
}
