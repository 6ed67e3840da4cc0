use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, ControlSignal, Trajectory};
use crate::error::{domain_err, Error, Result};
use crate::geometry::{ConstraintSet, Point, Shape};
use crate::scalar::{lit, usize_s, Scalar};

/// Lower bound `y2(s) ≥ x02 · exp(−(1/m1) ∫_0^s |α2|)` evaluated along a
/// trajectory inside the cone `m1·x1 ≤ x2 ≤ m2·x1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnreachCertificate<S> {
    pub m1: S,
    pub x02: S,
    pub times: Vec<S>,
    pub lower_bound: Vec<S>,
    pub alpha2_l1: S,
    pub observed_min_ratio: S,
}

impl<S: Scalar> UnreachCertificate<S> {
    /// `∫|α2|` needed before the bound allows `y2` to fall to `level`.
    pub fn required_alpha2_l1(&self, level: S) -> S {
        self.m1 * (self.x02 / level).ln()
    }
}

/// Checks the Gronwall bound along `traj`. Only the standard exponent
/// `ν = 1` and apex at the origin are supported: there `|y1| ≤ y2 / m1`
/// turns the `x2` equation into a linear differential inequality.
pub fn cone_gronwall_bound<S: Scalar>(
    cone: &ConstraintSet<S>,
    traj: &Trajectory<S>,
) -> Result<UnreachCertificate<S>> {
    let m1 = match &cone.shape {
        Shape::Cone { m1, apex, .. } if apex.x1 == S::zero() && apex.x2 == S::zero() => *m1,
        _ => return Err(Error::Unsupported("expected a cone with apex at the origin".into())),
    };
    if traj.nu != S::one() {
        return Err(Error::Unsupported(format!("bound holds for nu = 1, got {}", traj.nu)));
    }
    let rep = traj.admissibility_check(cone);
    if !rep.is_admissible(cone.tol_member) {
        return Err(domain_err!(
            "trajectory leaves the cone (violation {})",
            rep.max_violation
        ));
    }
    let x02 = traj.start().x2;
    if !(x02 > S::zero()) {
        return Err(domain_err!("start must satisfy x2 > 0, got {x02}"));
    }
    let mut l1 = S::zero();
    let mut lower_bound = Vec::with_capacity(traj.times.len());
    let mut ratio = S::infinity();
    for i in 0..traj.times.len() {
        if i > 0 {
            let (ta, tb) = (traj.times[i - 1], traj.times[i]);
            l1 = l1 + traj.control.value_at(ta)[1].abs() * (tb - ta);
        }
        let b = x02 * (-l1 / m1).exp();
        ratio = ratio.min(traj.states[i].x2 / b);
        lower_bound.push(b);
    }
    Ok(UnreachCertificate {
        m1,
        x02,
        times: traj.times.clone(),
        lower_bound,
        alpha2_l1: l1,
        observed_min_ratio: ratio,
    })
}

fn check_truncation<S: Scalar>(x0: Point<S>, eps: S) -> Result<()> {
    if !(x0.x1 > S::zero()) {
        return Err(domain_err!("x01 must be positive"));
    }
    if !(eps > S::zero() && eps < x0.x1) {
        return Err(domain_err!("eps must lie in (0, x01), got {eps}"));
    }
    Ok(())
}

/// Energy `∫|α|²/2` of the control `α(s) = (−1, −x02 / (x01 (x01 − s)))`
/// on `[0, x01 − eps]`, which drives `x0` straight toward the apex. The
/// integral is evaluated by Gauss–Legendre quadrature on a geometric mesh
/// in the distance to the apex.
pub fn truncated_cone_cost<S: Scalar>(x0: Point<S>, eps: S) -> Result<S> {
    check_truncation(x0, eps)?;
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let (x01, x02) = (x0.x1, x0.x2);
    let k = x02 / x01;
    let integrand = |w: S| (S::one() + k * k / (w * w)) * lit(0.5);
    let panels = 128usize;
    let ratio = (x01 / eps).ln();
    let mut total = S::zero();
    for i in 0..panels {
        let wa = eps * (ratio * usize_s::<S>(i) / usize_s::<S>(panels)).exp();
        let wb = if i + 1 == panels {
            x01
        } else {
            eps * (ratio * usize_s::<S>(i + 1) / usize_s::<S>(panels)).exp()
        };
        let (c, r) = ((wa + wb) * lit(0.5), (wb - wa) * lit(0.5));
        total = total
            + NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(&x, w)| integrand(c + r * lit(x)) * lit(w) * r)
                .sum::<S>();
    }
    Ok(total)
}

/// Piecewise-constant version of the straight-to-apex control on
/// `[0, x01 − eps]` with `n_pieces` geometric pieces (`ν = 1`); the state is on the
/// segment `x2 = (x02/x01)·x1` at every break.
pub fn truncated_cone_connector<S: Scalar>(
    x0: Point<S>,
    eps: S,
    n_pieces: usize,
) -> Result<Trajectory<S>> {
    check_truncation(x0, eps)?;
    let k = x0.x2 / x0.x1;
    // Geometric nodes keep the relative deviation from the ray the same on
    // every piece, so the path stays inside the cone however small eps is.
    let n = n_pieces.max(1);
    let r = (eps / x0.x1).powf(S::one() / usize_s::<S>(n));
    let mut pieces = Vec::with_capacity(n);
    let mut xa = x0.x1;
    for i in 0..n {
        let xb = if i + 1 == n { eps } else { xa * r };
        // ∫|y1| over the piece with y1 falling linearly from xa to xb
        let area = (xa * xa - xb * xb) * lit(0.5);
        pieces.push((xa - xb, [-S::one(), k * (xb - xa) / area]));
        xa = xb;
    }
    let control = ControlSignal::from_durations(S::zero(), &pieces)?;
    integrate(x0, &control, S::one(), 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(a: f64, b: f64) -> Point<f64> {
        Point::new(a, b)
    }

    fn closed_form(x0: Point<f64>, eps: f64) -> f64 {
        (x0.x1 - eps) / 2.0 + x0.x2 * x0.x2 / (2.0 * x0.x1 * x0.x1) * (1.0 / eps - 1.0 / x0.x1)
    }

    #[test]
    fn truncated_cost_matches_antiderivative() {
        let c = truncated_cone_cost(p(1.0, 1.0), 0.1).unwrap();
        assert!((c - 4.95).abs() < 1e-9 * 4.95);
        let c = truncated_cone_cost(p(1.0, 1.0), 0.5).unwrap();
        assert!((c - 0.75).abs() < 1e-9);
        for k in 1..=6 {
            let eps = 10f64.powi(-k);
            let c = truncated_cone_cost(p(1.0, 1.5), eps).unwrap();
            let e = closed_form(p(1.0, 1.5), eps);
            assert!((c - e).abs() < 1e-9 * e);
        }
        assert!(truncated_cone_cost(p(1.0, 1.0), 1.0).is_err());
        assert!(truncated_cone_cost(p(1.0, 1.0), 0.0).is_err());
        assert!(truncated_cone_cost(p(1.0, 1.0), 1.0 - 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn resting_trajectory_keeps_ratio_one() {
        let cone = ConstraintSet::cone(1.0, 2.0).unwrap();
        let c = ControlSignal::constant(0.0, 1.0, [0.0, 0.0]).unwrap();
        let tr = integrate(p(1.0, 1.5), &c, 1.0, 4).unwrap();
        let cert = cone_gronwall_bound(&cone, &tr).unwrap();
        assert_eq!(cert.observed_min_ratio, 1.0);
        assert!(cert.lower_bound.iter().all(|&b| b == 1.5));
    }

    #[test]
    fn connector_stays_on_the_segment_and_respects_the_bound() {
        let cone = ConstraintSet::cone(1.0, 2.0).unwrap();
        let tr = truncated_cone_connector(p(1.0, 1.5), 1e-2, 2000).unwrap();
        assert!(tr.end().dist(p(1e-2, 1.5e-2)) < 1e-12);
        let cert = cone_gronwall_bound(&cone, &tr).unwrap();
        assert!(cert.observed_min_ratio >= 1.0 - 1e-6);
        // reaching x2 = 0 needs ∫|α2| → ∞
        assert!(cert.required_alpha2_l1(1e-2) > 4.6);
    }

    #[test]
    fn exit_is_a_domain_error_and_other_exponents_are_unsupported() {
        let cone = ConstraintSet::cone(1.0, 2.0).unwrap();
        let c = ControlSignal::constant(0.0, 1.0, [1.0, 0.0]).unwrap();
        let tr = integrate(p(1.0, 1.5), &c, 1.0, 4).unwrap();
        assert!(matches!(cone_gronwall_bound(&cone, &tr), Err(Error::Domain(_))));
        let tr = integrate(p(1.0, 1.5), &ControlSignal::constant(0.0, 0.1, [0.0, 0.0]).unwrap(), 2.0, 1).unwrap();
        assert!(matches!(cone_gronwall_bound(&cone, &tr), Err(Error::Unsupported(_))));
    }

    proptest! {
        #[test]
        fn gronwall_ratio_on_random_cone_paths(
            vals in prop::collection::vec((-1.0f64..1.0, -3.0f64..3.0), 4..24),
            y0 in 1.1f64..1.9,
        ) {
            // drive with random controls and stop before leaving the cone
            let cone = ConstraintSet::cone(1.0, 2.0).unwrap();
            let vals: Vec<[f64; 2]> = vals.into_iter().map(|(a, b)| [a, b]).collect();
            let c = ControlSignal::uniform(0.0, 0.5, vals).unwrap();
            let full = integrate(p(1.0, y0), &c, 1.0, 4).unwrap();
            let mut keep = 1;
            while keep < full.times.len() {
                let sub = ControlSignal::new(full.times[..=keep].to_vec(), (0..keep).map(|i| full.control.value_at(full.times[i])).collect()).unwrap();
                let tr = integrate(p(1.0, y0), &sub, 1.0, 1).unwrap();
                if !tr.admissibility_check(&cone).is_admissible(cone.tol_member) { break; }
                keep += 1;
            }
            keep -= 1;
            prop_assume!(keep >= 1);
            let sub = ControlSignal::new(full.times[..=keep].to_vec(), (0..keep).map(|i| full.control.value_at(full.times[i])).collect()).unwrap();
            let tr = integrate(p(1.0, y0), &sub, 1.0, 1).unwrap();
            let cert = cone_gronwall_bound(&cone, &tr).unwrap();
            prop_assert!(cert.observed_min_ratio >= 1.0 - 1e-6);
        }
    }
}
