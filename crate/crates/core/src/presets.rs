//! Named example configurations: constraint set, exponent, horizon, costs,
//! an interaction, an initial distribution and a probe target with a
//! sequence of sources approaching it.

use serde::{Deserialize, Serialize};

use crate::dynamics::{CostConfig, Field};
use crate::error::{config_err, Result};
use crate::geometry::{ConstraintSet, CurveFamily, Point, Profile, Shape, Witness};
use crate::mfg::{AtomicMeasure, CouplingSpec};
use crate::scalar::{lit, Scalar};

pub const PRESET_NAMES: [&str; 6] = [
    "rectangle",
    "parabola-ex52",
    "band-ex53",
    "cone-ex54",
    "curve-ex55",
    "cone-halfplane-ex56",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Preset<S> {
    pub name: String,
    pub description: String,
    pub set: ConstraintSet<S>,
    pub nu: S,
    pub horizon: S,
    pub cost: CostConfig<S>,
    pub coupling: CouplingSpec<S>,
    pub m0: AtomicMeasure<S>,
    /// Box `[x1_min, x1_max, x2_min, x2_max]` for value grids.
    pub grid_box: [f64; 4],
    /// Probe point; `sources[k − 1]` is at distance of order `2^−k` from it.
    pub target: Point<S>,
    pub sources: Vec<Point<S>>,
}

fn pt<S: Scalar>(a: f64, b: f64) -> Point<S> {
    Point::new(lit(a), lit(b))
}

fn quadratic<S: Scalar>(c1: f64, c2: f64) -> Field<S> {
    Field::Quadratic { center: pt(c1, c2), weight: S::one(), offset: S::zero() }
}

fn uniform<S: Scalar>(points: &[(f64, f64)]) -> Result<AtomicMeasure<S>> {
    AtomicMeasure::uniform(&points.iter().map(|&(a, b)| pt(a, b)).collect::<Vec<_>>())
}

fn sequence<S: Scalar>(f: impl Fn(f64) -> (f64, f64)) -> Vec<Point<S>> {
    (1..=10).map(|k| f(0.5f64.powi(k))).map(|(a, b)| pt(a, b)).collect()
}

/// Congestion kernel with bandwidth 0.2 layered on the preset's costs.
fn congestion<S: Scalar>(cost: &CostConfig<S>) -> Result<CouplingSpec<S>> {
    CouplingSpec::kernel(
        cost.running.clone(),
        cost.terminal.clone(),
        lit(0.2),
        lit(0.5),
        lit(0.1),
        cost.bound_k,
    )
}

/// Looks up a preset by name.
pub fn preset<S: Scalar>(name: &str) -> Result<Preset<S>> {
    let one = S::one();
    let (description, set, horizon, cost, m0, grid_box, target, sources) = match name {
        "rectangle" => (
            "unit square with a vertical witness at (0.5, 0); interior probe target",
            ConstraintSet::rectangle(S::zero(), one, S::zero(), one)?.with_witness(Witness::new(
                pt(0.5, 0.0),
                one,
                lit(0.5),
                CurveFamily::SegmentVertical,
            ))?,
            one,
            CostConfig { running: Field::Zero, terminal: quadratic(0.7, 0.3), bound_k: one },
            uniform(&[(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)])?,
            [0.0, 1.0, 0.0, 1.0],
            pt(0.5, 0.5),
            sequence(|h| (0.5 + h / 2.0, 0.5 + h / 2.0)),
        ),
        "parabola-ex52" => (
            "epigraph of x1^4 over [-1, 1] with the power curve x2 = x1^2 as witness at the origin",
            ConstraintSet::new(Shape::Sublevel {
                f: Profile::Power { coeff: one, exponent: lit(4.0) },
                x1_min: -one,
                x1_max: one,
            })?
            .with_witness(Witness::new(Point::origin(), one, one, CurveFamily::PowerCurvePos))?
            .with_witness(Witness::new(Point::origin(), one, one, CurveFamily::PowerCurveNeg))?,
            one,
            CostConfig { running: Field::Affine { offset: S::zero(), c1: lit(0.5), c2: S::zero() }, terminal: quadratic(0.6, 0.7), bound_k: lit(2.0) },
            uniform(&[(-0.5, 0.5), (0.5, 0.5), (0.0, 0.9), (0.0, 0.2)])?,
            [-1.0, 1.0, 0.0, 1.0],
            Point::origin(),
            sequence(|h| (h, h * h)),
        ),
        "band-ex53" => (
            "band {0 <= x1 <= 1, x1^2 <= x2 <= 1} with the lower boundary as witness at the origin",
            ConstraintSet::parabola_band(one)?.with_witness(Witness::new(
                Point::origin(),
                one,
                one,
                CurveFamily::PowerCurvePos,
            ))?,
            one,
            CostConfig { running: Field::Affine { offset: S::zero(), c1: lit(0.5), c2: S::zero() }, terminal: quadratic(0.6, 0.7), bound_k: one },
            uniform(&[
                (0.1, 0.5),
                (0.2, 0.3),
                (0.3, 0.8),
                (0.4, 0.4),
                (0.5, 0.6),
                (0.6, 0.9),
                (0.7, 0.7),
                (0.8, 0.85),
            ])?,
            [0.0, 1.0, 0.0, 1.0],
            Point::origin(),
            sequence(|h| (h, h * h)),
        ),
        "cone-ex54" => (
            "cone {x1 >= 0, x1 <= x2 <= 2 x1}; the apex is unreachable",
            ConstraintSet::cone(one, lit(2.0))?,
            one,
            CostConfig { running: Field::Affine { offset: S::zero(), c1: lit(0.5), c2: S::zero() }, terminal: quadratic(0.6, 0.7), bound_k: lit(2.5) },
            uniform(&[(0.5, 0.75), (1.0, 1.5), (0.8, 1.0), (0.6, 1.1)])?,
            [0.0, 1.0, 0.0, 2.0],
            Point::origin(),
            sequence(|h| (h, 1.5 * h)),
        ),
        "curve-ex55" => (
            "curve x2 = x1^2 for x1 in [0, 1]; the set is its own witness at the origin",
            ConstraintSet::new(Shape::Curve {
                gamma: Profile::Power { coeff: one, exponent: lit(2.0) },
                x1_min: S::zero(),
                x1_max: one,
            })?
            .with_witness(Witness::new(Point::origin(), one, one, CurveFamily::PowerCurvePos))?,
            one,
            CostConfig { running: Field::Affine { offset: S::zero(), c1: lit(0.5), c2: S::zero() }, terminal: quadratic(0.6, 0.7), bound_k: lit(2.0) },
            uniform(&[(0.25, 0.0625), (0.5, 0.25), (0.75, 0.5625), (1.0, 1.0)])?,
            [0.0, 1.0, 0.0, 1.0],
            Point::origin(),
            sequence(|h| (h, h * h)),
        ),
        "cone-halfplane-ex56" => (
            "cone {x1 >= 0, x1 <= x2 <= 2 x1} joined with the half-plane x2 <= 0; running cost -min(x1, 10), T = 5",
            ConstraintSet::union(vec![
                Shape::Cone { m1: one, m2: lit(2.0), apex: Point::origin() },
                Shape::Rectangle {
                    a1: S::neg_infinity(),
                    b1: S::infinity(),
                    a2: S::neg_infinity(),
                    b2: S::zero(),
                },
            ])?,
            lit(5.0),
            CostConfig { running: Field::NegClippedX1 { cap: lit(10.0) }, terminal: Field::Zero, bound_k: lit(10.0) },
            uniform(&[(0.5, 0.75), (1.0, 1.5), (0.5, -0.5), (1.0, -1.0)])?,
            [-1.0, 4.0, -2.0, 3.0],
            Point::origin(),
            sequence(|h| (h, 1.5 * h)),
        ),
        _ => {
            return Err(config_err!(
                "unknown preset '{name}', expected one of: {}",
                PRESET_NAMES.join(", ")
            ))
        }
    };
    let coupling = congestion(&cost)?;
    Ok(Preset {
        name: name.to_string(),
        description: description.to_string(),
        set,
        nu: one,
        horizon,
        cost,
        coupling,
        m0,
        grid_box,
        target,
        sources,
    })
}
