//! Constraint sets in the plane: parametric variants, membership with an
//! absolute tolerance, and the witness data used by the reachability
//! constructions.

mod analysis;

pub use analysis::{
    BoundaryClass, BoundaryKind, ConvexityReport, ConvexityViolation, HypothesisReport,
    WitnessCheck,
};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::scalar::{lit, Scalar};

/// A point `(x1, x2)` of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<S> {
    pub x1: S,
    pub x2: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x1: S, x2: S) -> Self {
        Self { x1, x2 }
    }

    pub fn origin() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn dist(self, other: Self) -> S {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    pub fn norm(self) -> S {
        self.x1.hypot(self.x2)
    }

    pub fn sub(self, other: Self) -> Self {
        Self::new(self.x1 - other.x1, self.x2 - other.x2)
    }

    pub fn add(self, other: Self) -> Self {
        Self::new(self.x1 + other.x1, self.x2 + other.x2)
    }

    pub fn scale(self, k: S) -> Self {
        Self::new(self.x1 * k, self.x2 * k)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

/// Axis-aligned box; bounds may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox<S> {
    pub x1_min: S,
    pub x1_max: S,
    pub x2_min: S,
    pub x2_max: S,
}

impl<S: Scalar> BBox<S> {
    pub fn new(x1_min: S, x1_max: S, x2_min: S, x2_max: S) -> Self {
        Self { x1_min, x1_max, x2_min, x2_max }
    }

    pub fn hull(self, o: Self) -> Self {
        Self::new(
            self.x1_min.min(o.x1_min),
            self.x1_max.max(o.x1_max),
            self.x2_min.min(o.x2_min),
            self.x2_max.max(o.x2_max),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x1_min.is_finite()
            && self.x1_max.is_finite()
            && self.x2_min.is_finite()
            && self.x2_max.is_finite()
    }

    pub fn contains(&self, p: Point<S>) -> bool {
        p.x1 >= self.x1_min && p.x1 <= self.x1_max && p.x2 >= self.x2_min && p.x2 <= self.x2_max
    }

    /// Replaces infinite sides by finite ones `extent` away from the
    /// opposite side (or `[-extent, extent]` when both are infinite).
    pub fn clipped(self, extent: S) -> Self {
        fn side<S: Scalar>(lo: S, hi: S, extent: S) -> (S, S) {
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (lo, hi),
                (true, false) => (lo, lo + extent),
                (false, true) => (hi - extent, hi),
                (false, false) => (-extent, extent),
            }
        }
        let (a1, b1) = side(self.x1_min, self.x1_max, extent);
        let (a2, b2) = side(self.x2_min, self.x2_max, extent);
        Self::new(a1, b1, a2, b2)
    }
}

/// Scalar profile `x1 ↦ φ(x1)` used for curved boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile<S> {
    Constant { value: S },
    /// `coeff · |x1|^exponent`
    Power { coeff: S, exponent: S },
    /// `coeff · sign(x1) · |x1|^exponent`
    SignedPower { coeff: S, exponent: S },
    /// `Σ coeffs[k] · x1^k`
    Polynomial { coeffs: Vec<S> },
}

impl<S: Scalar> Profile<S> {
    pub fn eval(&self, x1: S) -> S {
        match self {
            Profile::Constant { value } => *value,
            Profile::Power { coeff, exponent } => *coeff * x1.abs().powf(*exponent),
            Profile::SignedPower { coeff, exponent } => {
                *coeff * x1.sign0() * x1.abs().powf(*exponent)
            }
            Profile::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(S::zero(), |acc, &c| acc * x1 + c)
            }
        }
    }

    /// Centered finite difference with step `h`.
    pub fn slope(&self, x1: S, h: S) -> S {
        (self.eval(x1 + h) - self.eval(x1 - h)) / (h + h)
    }
}

/// Geometric variant of the constraint set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape<S> {
    /// `[a1, b1] × [a2, b2]`; bounds may be infinite (half-planes).
    Rectangle { a1: S, b1: S, a2: S, b2: S },
    /// `f(x1) ≤ x2` for `x1 ∈ [x1_min, x1_max]`.
    Sublevel { f: Profile<S>, x1_min: S, x1_max: S },
    /// `lower(x1) ≤ x2 ≤ upper(x1)` for `x1 ∈ [x1_min, x1_max]`.
    Band { lower: Profile<S>, upper: Profile<S>, x1_min: S, x1_max: S },
    /// `m1·(x1 − a1) ≤ x2 − a2 ≤ m2·(x1 − a1)` with apex `a`.
    Cone {
        m1: S,
        m2: S,
        #[serde(default)]
        apex: Point<S>,
    },
    /// Graph `x2 = gamma(x1)` for `x1 ∈ [x1_min, x1_max]`.
    Curve {
        gamma: Profile<S>,
        #[serde(default)]
        x1_min: S,
        x1_max: S,
    },
    Union { parts: Vec<Shape<S>> },
}

const SLOPE_STEP: f64 = 1e-6;

fn interval_excess<S: Scalar>(x: S, lo: S, hi: S) -> S {
    (lo - x).max(x - hi).max(S::zero())
}

fn graph_gap<S: Scalar>(profile: &Profile<S>, x1: S, gap: S) -> S {
    let h = lit::<S>(SLOPE_STEP) * x1.abs().max(S::one());
    let k = profile.slope(x1, h);
    let k = if k.is_finite() { k } else { S::zero() };
    gap / (S::one() + k * k).sqrt()
}

impl<S: Scalar> Shape<S> {
    fn validate(&self) -> Result<()> {
        match self {
            Shape::Rectangle { a1, b1, a2, b2 } => {
                if !(a1 <= b1 && a2 <= b2) {
                    return Err(config_err!("rectangle requires a1 <= b1 and a2 <= b2"));
                }
            }
            Shape::Sublevel { x1_min, x1_max, .. }
            | Shape::Band { x1_min, x1_max, .. }
            | Shape::Curve { x1_min, x1_max, .. } => {
                if !(x1_min <= x1_max) {
                    return Err(config_err!("x1 interval is empty"));
                }
            }
            Shape::Cone { m1, m2, .. } => {
                if !(*m1 > S::zero() && m1 < m2) {
                    return Err(config_err!("cone requires 0 < m1 < m2, got m1={m1}, m2={m2}"));
                }
            }
            Shape::Union { parts } => {
                if parts.is_empty() {
                    return Err(config_err!("union needs at least one part"));
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Nonnegative distance surrogate: zero inside, first-order distance to
    /// the set outside.
    pub fn violation(&self, p: Point<S>) -> S {
        let zero = S::zero();
        match self {
            Shape::Rectangle { a1, b1, a2, b2 } => {
                interval_excess(p.x1, *a1, *b1).hypot(interval_excess(p.x2, *a2, *b2))
            }
            Shape::Sublevel { f, x1_min, x1_max } => {
                let dx = interval_excess(p.x1, *x1_min, *x1_max);
                let xc = p.x1.max(*x1_min).min(*x1_max);
                let dy = graph_gap(f, xc, (f.eval(xc) - p.x2).max(zero));
                dx.hypot(dy)
            }
            Shape::Band { lower, upper, x1_min, x1_max } => {
                let dx = interval_excess(p.x1, *x1_min, *x1_max);
                let xc = p.x1.max(*x1_min).min(*x1_max);
                let lo = graph_gap(lower, xc, (lower.eval(xc) - p.x2).max(zero));
                let hi = graph_gap(upper, xc, (p.x2 - upper.eval(xc)).max(zero));
                dx.hypot(lo.max(hi))
            }
            Shape::Cone { m1, m2, apex } => {
                let q = p.sub(*apex);
                if *m1 * q.x1 <= q.x2 && q.x2 <= *m2 * q.x1 {
                    return zero;
                }
                let ray = |m: S| {
                    let n = (S::one() + m * m).sqrt();
                    let (r1, r2) = (S::one() / n, m / n);
                    let t = (q.x1 * r1 + q.x2 * r2).max(zero);
                    (q.x1 - t * r1).hypot(q.x2 - t * r2)
                };
                ray(*m1).min(ray(*m2))
            }
            Shape::Curve { gamma, x1_min, x1_max } => {
                let dx = interval_excess(p.x1, *x1_min, *x1_max);
                let xc = p.x1.max(*x1_min).min(*x1_max);
                let dy = graph_gap(gamma, xc, (p.x2 - gamma.eval(xc)).abs());
                dx.hypot(dy)
            }
            Shape::Union { parts } => parts
                .iter()
                .map(|s| s.violation(p))
                .fold(S::infinity(), |a, b| a.min(b)),
        }
    }

    /// Signed distance surrogate: `violation` outside, minus the distance
    /// to the boundary inside. Sets without interior report zero depth.
    pub fn signed_distance(&self, p: Point<S>) -> S {
        let v = self.violation(p);
        if v > S::zero() {
            return v;
        }
        -self.depth(p)
    }

    fn depth(&self, p: Point<S>) -> S {
        let zero = S::zero();
        match self {
            Shape::Rectangle { a1, b1, a2, b2 } => (p.x1 - *a1)
                .min(*b1 - p.x1)
                .min(p.x2 - *a2)
                .min(*b2 - p.x2)
                .max(zero),
            Shape::Sublevel { f, x1_min, x1_max } => {
                let side = (p.x1 - *x1_min).min(*x1_max - p.x1);
                side.min(graph_gap(f, p.x1, p.x2 - f.eval(p.x1))).max(zero)
            }
            Shape::Band { lower, upper, x1_min, x1_max } => {
                let side = (p.x1 - *x1_min).min(*x1_max - p.x1);
                let lo = graph_gap(lower, p.x1, p.x2 - lower.eval(p.x1));
                let hi = graph_gap(upper, p.x1, upper.eval(p.x1) - p.x2);
                side.min(lo).min(hi).max(zero)
            }
            Shape::Cone { m1, m2, apex } => {
                let q = p.sub(*apex);
                let line = |m: S| (q.x2 - m * q.x1).abs() / (S::one() + m * m).sqrt();
                line(*m1).min(line(*m2))
            }
            Shape::Curve { .. } => zero,
            Shape::Union { parts } => parts.iter().map(|s| s.depth(p)).fold(zero, |a, b| a.max(b)),
        }
    }

    /// Tight bounding box; infinite where the set is unbounded.
    pub fn bounding_box(&self) -> BBox<S> {
        let inf = S::infinity();
        let sample = |prof: &Profile<S>, lo: S, hi: S| -> (S, S) {
            let n = 256usize;
            (0..=n)
                .map(|i| {
                    let x = lo + (hi - lo) * S::from_usize(i).unwrap() / S::from_usize(n).unwrap();
                    prof.eval(x)
                })
                .fold((inf, -inf), |(a, b), v| (a.min(v), b.max(v)))
        };
        match self {
            Shape::Rectangle { a1, b1, a2, b2 } => BBox::new(*a1, *b1, *a2, *b2),
            Shape::Sublevel { f, x1_min, x1_max } => {
                let (lo, _) = sample(f, *x1_min, *x1_max);
                BBox::new(*x1_min, *x1_max, lo, inf)
            }
            Shape::Band { lower, upper, x1_min, x1_max } => {
                let (lo, _) = sample(lower, *x1_min, *x1_max);
                let (_, hi) = sample(upper, *x1_min, *x1_max);
                BBox::new(*x1_min, *x1_max, lo, hi)
            }
            Shape::Cone { apex, .. } => BBox::new(apex.x1, inf, apex.x2, inf),
            Shape::Curve { gamma, x1_min, x1_max } => {
                let (lo, hi) = sample(gamma, *x1_min, *x1_max);
                BBox::new(*x1_min, *x1_max, lo, hi)
            }
            Shape::Union { parts } => parts
                .iter()
                .map(|s| s.bounding_box())
                .reduce(|a, b| a.hull(b))
                .expect("validated union is nonempty"),
        }
    }

    /// Finite window used by the sampling-based checks.
    pub fn sampling_box(&self) -> BBox<S> {
        match self {
            Shape::Cone { m2, apex, .. } => {
                let two = lit::<S>(2.0);
                BBox::new(apex.x1, apex.x1 + two, apex.x2, apex.x2 + two * *m2)
            }
            Shape::Union { parts } => parts
                .iter()
                .map(|s| s.sampling_box())
                .reduce(|a, b| a.hull(b))
                .expect("validated union is nonempty"),
            _ => self.bounding_box().clipped(lit(2.0)),
        }
    }

    /// Boundary slope of a horizontal-graph boundary piece through `p`
    /// (used for the characteristic-point test); `None` where the boundary
    /// is not locally such a graph.
    pub(crate) fn boundary_slope(&self, p: Point<S>, tol: S, step: S) -> Option<S> {
        let on = |prof: &Profile<S>| (prof.eval(p.x1) - p.x2).abs() <= tol;
        match self {
            Shape::Rectangle { a1, b1, a2, b2 } => {
                let on_edge = (p.x2 - *a2).abs() <= tol || (p.x2 - *b2).abs() <= tol;
                (on_edge && p.x1 > *a1 + tol && p.x1 < *b1 - tol).then(S::zero)
            }
            Shape::Sublevel { f, .. } => on(f).then(|| f.slope(p.x1, step)),
            Shape::Band { lower, upper, .. } => {
                if on(lower) {
                    Some(lower.slope(p.x1, step))
                } else if on(upper) {
                    Some(upper.slope(p.x1, step))
                } else {
                    None
                }
            }
            Shape::Curve { gamma, .. } => on(gamma).then(|| gamma.slope(p.x1, step)),
            Shape::Cone { .. } => None,
            Shape::Union { parts } => parts
                .iter()
                .filter(|s| s.violation(p) <= tol)
                .find_map(|s| s.boundary_slope(p, tol, step)),
        }
    }
}

/// Direction of a witness curve relative to its base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Curve enters `{x2 > x02}`.
    #[default]
    Up,
    /// Mirror image: curve enters `{x2 < x02}`.
    Down,
}

/// Side of the `x2` axis used by power curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Positive,
    Negative,
}

/// Family of curves a witness asserts to lie in the set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveFamily<S> {
    /// `x1 = x01`, `x2 ∈ (x02, x02 + R]`.
    SegmentVertical,
    /// `x2 − x02 = C(x1 − x01)`, `x1 ∈ (x01, x01 + R]`.
    SegmentSlopePos,
    /// `x2 − x02 = C(x01 − x1)`, `x1 ∈ [x01 − R, x01)`.
    SegmentSlopeNeg,
    /// `x2 − x02 = C·x1^(ν+1)`, `x1 ∈ (0, R]`.
    PowerCurvePos,
    /// `x2 − x02 = C·(−x1)^(ν+1)`, `x1 ∈ [−R, 0)`.
    PowerCurveNeg,
    /// `x2 − x02 = C·|x1|^ρ` on the given side.
    PowerExponent {
        rho: S,
        #[serde(default)]
        side: Side,
    },
}

/// Explicit data for a local reachability hypothesis at a boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness<S> {
    pub point: Point<S>,
    pub c: S,
    pub radius: S,
    #[serde(flatten)]
    pub family: CurveFamily<S>,
    #[serde(default)]
    pub direction: Direction,
}

impl<S: Scalar> Witness<S> {
    pub fn new(point: Point<S>, c: S, radius: S, family: CurveFamily<S>) -> Self {
        Self { point, c, radius, family, direction: Direction::Up }
    }

    pub fn downward(mut self) -> Self {
        self.direction = Direction::Down;
        self
    }

    /// Points along the witness curve, excluding the base point, with
    /// parameter spacing at most `step`.
    pub fn sample_curve(&self, nu: S, step: S) -> Vec<Point<S>> {
        let n = (self.radius / step).ceil().to_usize().unwrap_or(1).max(1);
        let x0 = self.point;
        let sgn = match self.direction {
            Direction::Up => S::one(),
            Direction::Down => -S::one(),
        };
        (1..=n)
            .map(|i| {
                let s = self.radius * S::from_usize(i).unwrap() / S::from_usize(n).unwrap();
                let (x1, dx2) = match self.family {
                    CurveFamily::SegmentVertical => (x0.x1, s),
                    CurveFamily::SegmentSlopePos => (x0.x1 + s, self.c * s),
                    CurveFamily::SegmentSlopeNeg => (x0.x1 - s, self.c * s),
                    CurveFamily::PowerCurvePos => (x0.x1 + s, self.c * s.powf(nu + S::one())),
                    CurveFamily::PowerCurveNeg => (x0.x1 - s, self.c * s.powf(nu + S::one())),
                    CurveFamily::PowerExponent { rho, side } => match side {
                        Side::Positive => (x0.x1 + s, self.c * s.powf(rho)),
                        Side::Negative => (x0.x1 - s, self.c * s.powf(rho)),
                    },
                };
                Point::new(x1, x0.x2 + sgn * dx2)
            })
            .collect()
    }
}

pub const DEFAULT_TOL_MEMBER: f64 = 1e-9;

fn default_tol<S: Scalar>() -> S {
    lit(DEFAULT_TOL_MEMBER)
}

/// Closed constraint set Σ with membership tolerance and witness data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "S: Scalar")]
pub struct ConstraintSet<S> {
    pub shape: Shape<S>,
    #[serde(default = "default_tol")]
    pub tol_member: S,
    #[serde(default)]
    pub witnesses: Vec<Witness<S>>,
}

impl<S: Scalar> ConstraintSet<S> {
    pub fn new(shape: Shape<S>) -> Result<Self> {
        let set = Self { shape, tol_member: default_tol(), witnesses: Vec::new() };
        set.validate()?;
        Ok(set)
    }

    pub fn with_witness(mut self, w: Witness<S>) -> Result<Self> {
        self.witnesses.push(w);
        self.validate()?;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: S) -> Result<Self> {
        self.tol_member = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn rectangle(a1: S, b1: S, a2: S, b2: S) -> Result<Self> {
        Self::new(Shape::Rectangle { a1, b1, a2, b2 })
    }

    pub fn cone(m1: S, m2: S) -> Result<Self> {
        Self::new(Shape::Cone { m1, m2, apex: Point::origin() })
    }

    /// `{0 ≤ x1 ≤ 1, x1^(ν+1) ≤ x2 ≤ 1}`.
    pub fn parabola_band(nu: S) -> Result<Self> {
        Self::new(Shape::Band {
            lower: Profile::Power { coeff: S::one(), exponent: nu + S::one() },
            upper: Profile::Constant { value: S::one() },
            x1_min: S::zero(),
            x1_max: S::one(),
        })
    }

    pub fn union(parts: Vec<Shape<S>>) -> Result<Self> {
        Self::new(Shape::Union { parts })
    }

    /// Checks the structural invariants (cone slopes, witness constants).
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.tol_member >= S::zero()) {
            return Err(config_err!("tol_member must be nonnegative"));
        }
        for (i, w) in self.witnesses.iter().enumerate() {
            if !(w.c > S::zero() && w.radius > S::zero()) {
                return Err(config_err!("witness {i}: requires C > 0 and R > 0"));
            }
            if let CurveFamily::PowerExponent { rho, .. } = w.family {
                if rho == S::zero() || !rho.is_finite() {
                    return Err(config_err!("witness {i}: exponent must be finite and nonzero"));
                }
            }
        }
        Ok(())
    }

    pub fn violation(&self, p: Point<S>) -> S {
        self.shape.violation(p)
    }

    pub fn signed_distance(&self, p: Point<S>) -> S {
        self.shape.signed_distance(p)
    }

    /// Membership up to `tol_member`.
    pub fn contains(&self, p: Point<S>) -> bool {
        self.shape.violation(p) <= self.tol_member
    }

    pub fn bounding_box(&self) -> BBox<S> {
        self.shape.bounding_box()
    }

    pub fn sampling_box(&self) -> BBox<S> {
        self.shape.sampling_box()
    }

    pub fn is_on_axis(&self, p: Point<S>) -> bool {
        p.x1.abs() <= self.tol_member
    }

    /// Witnesses based at `p` (within tolerance).
    pub fn witnesses_at(&self, p: Point<S>) -> impl Iterator<Item = (usize, &Witness<S>)> {
        let tol = self.tol_member.max(lit(1e-12));
        self.witnesses.iter().enumerate().filter(move |(_, w)| w.point.dist(p) <= tol)
    }

    /// Largest radius `r ≤ cap` (halving from `cap`) for which a sampled
    /// disc around `p` lies in the set; `None` below `min_radius`.
    pub fn interior_radius(&self, p: Point<S>, cap: S, min_radius: S) -> Option<S> {
        let mut r = cap;
        while r >= min_radius {
            if self.disc_inside(p, r) {
                return Some(r);
            }
            r = r * lit(0.5);
        }
        None
    }

    pub(crate) fn disc_inside(&self, p: Point<S>, r: S) -> bool {
        if !self.contains(p) {
            return false;
        }
        let n_ang = 32usize;
        [S::one(), lit(0.75), lit(0.5), lit(0.25)].iter().all(|&frac| {
            (0..n_ang).all(|j| {
                let th = S::TAU() * S::from_usize(j).unwrap() / S::from_usize(n_ang).unwrap();
                let q = Point::new(p.x1 + r * frac * th.cos(), p.x2 + r * frac * th.sin());
                self.shape.violation(q) <= S::zero()
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> Point<f64> {
        Point::new(a, b)
    }

    #[test]
    fn rectangle_membership() {
        let r = ConstraintSet::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(r.contains(p(0.5, 0.5)));
        assert!(r.contains(p(1.0, 1.0)));
        assert!(r.contains(p(1.0 + 5e-10, 0.5)));
        assert!(!r.contains(p(1.0 + 1e-8, 0.5)));
        assert!((r.violation(p(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cone_membership_and_validation() {
        let c = ConstraintSet::cone(1.0, 2.0).unwrap();
        assert!(!c.contains(p(1.0, 3.0)));
        assert!(c.contains(p(1.0, 1.5)));
        assert!(c.contains(p(0.0, 0.0)));
        // distance from (1,3) to the ray x2 = 2 x1 is |3 - 2| / sqrt(5)
        assert!((c.violation(p(1.0, 3.0)) - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        // below the apex the nearest point is the apex itself
        assert!((c.violation(p(-1.0, -1.0)) - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(ConstraintSet::cone(2.0, 1.0), Err(crate::Error::Config(_))));
        assert!(ConstraintSet::cone(0.0, 1.0).is_err());
    }

    #[test]
    fn band_lower_curve_is_member() {
        let b = ConstraintSet::parabola_band(1.0).unwrap();
        assert!(b.contains(p(0.5, 0.25)));
        assert!(b.contains(p(0.0, 0.0)));
        assert!(!b.contains(p(0.5, 0.2)));
        assert!(!b.contains(p(1.1, 1.0)));
    }

    #[test]
    fn tolerance_is_first_order_distance() {
        // A point at exact distance 5e-10 below the steep part of the
        // parabola must still be a member.
        let b = ConstraintSet::parabola_band(1.0).unwrap();
        let x = 0.9f64;
        let slope = 2.0 * x;
        let n = (1.0 + slope * slope).sqrt();
        let q = p(x + slope / n * 5e-10, x * x - 1.0 / n * 5e-10);
        assert!(b.contains(q));
    }

    #[test]
    fn union_takes_minimum() {
        let s = ConstraintSet::union(vec![
            Shape::Cone { m1: 1.0, m2: 2.0, apex: Point::origin() },
            Shape::Rectangle { a1: f64::NEG_INFINITY, b1: f64::INFINITY, a2: f64::NEG_INFINITY, b2: 0.0 },
        ])
        .unwrap();
        assert!(s.contains(p(3.0, -1.0)));
        assert!(s.contains(p(1.0, 1.5)));
        assert!(!s.contains(p(1.0, 0.5)));
    }

    #[test]
    fn signed_distance_inside_is_negative() {
        let r = ConstraintSet::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!((r.signed_distance(p(0.25, 0.5)) + 0.25).abs() < 1e-15);
        assert!(r.signed_distance(p(1.5, 0.5)) > 0.0);
        let c = ConstraintSet::cone(1.0, 2.0).unwrap();
        assert!(c.signed_distance(p(1.0, 1.5)) < 0.0);
    }

    #[test]
    fn witness_curves_are_sampled_from_the_base_point() {
        let w = Witness::new(p(0.0, 0.0), 1.0, 1.0, CurveFamily::PowerCurvePos);
        let pts = w.sample_curve(1.0, 0.25);
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[3], p(1.0, 1.0));
        let down = Witness::new(p(0.5, 1.0), 1.0, 0.5, CurveFamily::SegmentVertical).downward();
        assert_eq!(*down.sample_curve(1.0, 0.5).last().unwrap(), p(0.5, 0.5));
    }

    #[test]
    fn sampling_box_covers_translated_cones() {
        let s: ConstraintSet<f64> = ConstraintSet::union(vec![
            Shape::Cone { m1: 1.0, m2: 2.0, apex: Point::origin() },
            Shape::Cone { m1: 1.0, m2: 2.0, apex: p(3.0, 0.0) },
        ])
        .unwrap();
        let b = s.sampling_box();
        assert!(b.x1_max >= 5.0 && b.x1_min <= 0.0);
    }

    #[test]
    fn config_roundtrip_through_json() {
        let s = ConstraintSet::parabola_band(1.0)
            .unwrap()
            .with_witness(Witness::new(p(0.0, 0.0), 1.0, 1.0, CurveFamily::PowerCurvePos))
            .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: ConstraintSet<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
