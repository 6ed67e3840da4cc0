//! Sampling-based checks on constraint sets: x1-convexity, boundary
//! classification and witness verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BBox, ConstraintSet, CurveFamily, Point};
use crate::error::{config_err, domain_err, Result};
use crate::scalar::{lit, usize_s, Scalar};

const SCAN_POINTS: usize = 1024;

/// A horizontal pair of members with a non-member between them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityViolation<S> {
    pub left: Point<S>,
    pub right: Point<S>,
    pub outside: Point<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport<S> {
    pub violations: Vec<ConvexityViolation<S>>,
}

impl<S> ConvexityReport<S> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Interior,
    BoundaryOffAxis,
    BoundaryOnAxis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub kind: BoundaryKind,
    pub is_characteristic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck<S> {
    pub witness_index: usize,
    pub pass: bool,
    pub max_violation: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport<S> {
    pub per_witness: Vec<WitnessCheck<S>>,
}

impl<S> HypothesisReport<S> {
    pub fn all_pass(&self) -> bool {
        self.per_witness.iter().all(|w| w.pass)
    }
}

/// Scans the horizontal line at height `x2` over `[lo, hi]` and returns the
/// first gap between members, if any.
fn scan_level<S: Scalar>(
    member: &impl Fn(Point<S>) -> bool,
    x2: S,
    lo: S,
    hi: S,
) -> Option<ConvexityViolation<S>> {
    let n = SCAN_POINTS;
    let at = |i: usize| Point::new(lo + (hi - lo) * usize_s::<S>(i) / usize_s::<S>(n - 1), x2);
    let mut last_in: Option<Point<S>> = None;
    let mut gap: Option<Point<S>> = None;
    for i in 0..n {
        let q = at(i);
        if member(q) {
            if let (Some(left), Some(outside)) = (last_in, gap) {
                return Some(ConvexityViolation { left, right: q, outside });
            }
            last_in = Some(q);
            gap = None;
        } else if last_in.is_some() && gap.is_none() {
            gap = Some(q);
        }
    }
    None
}

impl<S: Scalar> ConstraintSet<S> {
    /// Falsifies x1-convexity by scanning `n_samples` random horizontal
    /// levels of the sampling box. An empty report means no counterexample
    /// was found at this resolution.
    pub fn check_x1_convex(&self, n_samples: usize, seed: u64) -> Result<ConvexityReport<S>> {
        if n_samples == 0 {
            return Err(config_err!("n_samples must be at least 1"));
        }
        self.validate()?;
        let b = self.sampling_box();
        Ok(self.convexity_in(b, n_samples, seed, |q| self.contains(q)))
    }

    fn convexity_in(
        &self,
        b: BBox<S>,
        n_levels: usize,
        seed: u64,
        member: impl Fn(Point<S>) -> bool,
    ) -> ConvexityReport<S> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut violations = Vec::new();
        for _ in 0..n_levels {
            let u: f64 = rng.gen();
            let x2 = b.x2_min + (b.x2_max - b.x2_min) * lit(u);
            if let Some(v) = scan_level(&member, x2, b.x1_min, b.x1_max) {
                violations.push(v);
            }
        }
        ConvexityReport { violations }
    }

    /// Classifies a member point as interior or boundary (on/off the
    /// degeneracy axis), flagging characteristic boundary points where the
    /// boundary is a horizontal graph with vanishing slope.
    pub fn classify_point(&self, p: Point<S>, probe_radius: S) -> Result<BoundaryClass> {
        if !(probe_radius > S::zero()) {
            return Err(config_err!("probe_radius must be positive"));
        }
        if !self.contains(p) {
            return Err(domain_err!("point ({}, {}) is not in the set", p.x1, p.x2));
        }
        if self.disc_inside(p, probe_radius) {
            return Ok(BoundaryClass { kind: BoundaryKind::Interior, is_characteristic: false });
        }
        if !self.is_on_axis(p) {
            return Ok(BoundaryClass {
                kind: BoundaryKind::BoundaryOffAxis,
                is_characteristic: false,
            });
        }
        let tol = self.tol_member.max(lit(1e-12));
        let is_characteristic = self
            .shape
            .boundary_slope(p, tol, probe_radius)
            .is_some_and(|k| k.abs() <= probe_radius);
        Ok(BoundaryClass { kind: BoundaryKind::BoundaryOnAxis, is_characteristic })
    }

    /// Samples each witness curve at resolution `grid_step`, reports its
    /// largest violation, and re-checks x1-convexity of the set inside the
    /// witness ball.
    pub fn verify_hypotheses(&self, nu: S, grid_step: S) -> Result<HypothesisReport<S>> {
        if !(nu > S::zero()) {
            return Err(config_err!("nu must be positive"));
        }
        if !(grid_step > S::zero()) {
            return Err(config_err!("grid_step must be positive"));
        }
        if self.witnesses.is_empty() {
            return Err(config_err!("set carries no witness entries"));
        }
        self.validate()?;
        let half = lit::<S>(0.5);
        let mut per_witness = Vec::with_capacity(self.witnesses.len());
        for (i, w) in self.witnesses.iter().enumerate() {
            let on_axis = self.is_on_axis(w.point);
            match w.family {
                CurveFamily::PowerCurvePos | CurveFamily::PowerCurveNeg if !on_axis => {
                    return Err(config_err!(
                        "witness {i}: power curve declared at off-axis point; use power_exponent"
                    ));
                }
                CurveFamily::PowerExponent { rho, .. } if on_axis && rho <= nu + half => {
                    return Err(config_err!(
                        "witness {i}: exponent {rho} must exceed nu + 1/2 at on-axis points"
                    ));
                }
                _ => {}
            }
            let max_violation = w
                .sample_curve(nu, grid_step)
                .into_iter()
                .chain(std::iter::once(w.point))
                .map(|q| self.violation(q))
                .fold(S::zero(), |a, b| a.max(b));
            let ball = BBox::new(
                w.point.x1 - w.radius,
                w.point.x1 + w.radius,
                w.point.x2 - w.radius,
                w.point.x2 + w.radius,
            );
            let local = self.convexity_in(ball, 64, i as u64, |q| {
                q.dist(w.point) <= w.radius && self.contains(q)
            });
            per_witness.push(WitnessCheck {
                witness_index: i,
                pass: max_violation <= self.tol_member && local.is_clean(),
                max_violation,
            });
        }
        Ok(HypothesisReport { per_witness })
    }
}
