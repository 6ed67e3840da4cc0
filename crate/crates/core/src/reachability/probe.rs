use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{connect, CaseTag};
use crate::error::{Error, Result};
use crate::geometry::{ConstraintSet, Point};
use crate::scalar::{lit, usize_s, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport<S> {
    /// False when some source could not be connected.
    pub established: bool,
    pub failure: Option<String>,
    pub deltas: Vec<S>,
    pub l2norms: Vec<S>,
    pub case_tags: Vec<CaseTag>,
    /// Both sequences are nonincreasing and end below the thresholds.
    pub monotone_to_zero: bool,
}

fn nonincreasing<S: Scalar>(v: &[S]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (S::one() + lit(1e-9)) + lit(1e-15))
}

/// Connects every source to `target` and reports the durations and
/// control norms. A source without an admissible connector marks the
/// sequence as not established instead of failing the call.
pub fn verify_reachability_sequence<S: Scalar>(
    set: &ConstraintSet<S>,
    nu: S,
    target: Point<S>,
    sources: &[Point<S>],
    delta_tol: S,
    norm_tol: S,
) -> Result<SequenceReport<S>> {
    let results: Vec<_> = sources.par_iter().map(|&s| connect(set, nu, s, target)).collect();
    let mut report = SequenceReport {
        established: true,
        failure: None,
        deltas: Vec::new(),
        l2norms: Vec::new(),
        case_tags: Vec::new(),
        monotone_to_zero: false,
    };
    for r in results {
        match r {
            Ok(c) => {
                report.deltas.push(c.delta);
                report.l2norms.push(c.control_l2);
                report.case_tags.push(c.case_tag);
            }
            Err(Error::Unsupported(msg)) => {
                report.established = false;
                report.failure = Some(msg);
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
    }
    report.monotone_to_zero = match (report.deltas.last(), report.l2norms.last()) {
        (Some(&d), Some(&n)) => {
            d <= delta_tol
                && n <= norm_tol
                && nonincreasing(&report.deltas)
                && nonincreasing(&report.l2norms)
        }
        _ => false,
    };
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairProbe<S> {
    pub source: Point<S>,
    pub target: Point<S>,
    pub distance: S,
    pub delta: S,
    pub control_l2: S,
}

/// Least-squares fit `log v = log coeff + exponent · log d`, with the
/// smallest coefficient for which `coeff · d^exponent` bounds every sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit<S> {
    pub exponent: S,
    pub coeff: S,
    pub envelope: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport<S> {
    pub per_pair: Vec<PairProbe<S>>,
    pub delta_fit: Option<PowerFit<S>>,
    pub l2_fit: Option<PowerFit<S>>,
    /// A single power modulus vanishing at zero bounds both quantities.
    pub dominated: bool,
}

fn power_fit<S: Scalar>(samples: &[(S, S)]) -> Option<PowerFit<S>> {
    let pts: Vec<(S, S)> = samples
        .iter()
        .filter(|(d, v)| *d > S::zero() && *v > S::zero())
        .map(|&(d, v)| (d.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = usize_s::<S>(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<S>() / n;
    let my = pts.iter().map(|p| p.1).sum::<S>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<S>();
    if sxx <= S::zero() {
        return None;
    }
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<S>();
    let exponent = sxy / sxx;
    let coeff = (my - exponent * mx).exp();
    let envelope = samples
        .iter()
        .filter(|(d, _)| *d > S::zero())
        .map(|&(d, v)| v / d.powf(exponent))
        .fold(S::zero(), S::max);
    Some(PowerFit { exponent, coeff, envelope })
}

/// Connects each ordered pair and fits power-law moduli for the duration
/// and the control norm against the pair distance.
pub fn uniform_modulus_probe<S: Scalar>(
    set: &ConstraintSet<S>,
    nu: S,
    pairs: &[(Point<S>, Point<S>)],
) -> Result<ModulusReport<S>> {
    let per_pair = pairs
        .par_iter()
        .map(|&(source, target)| {
            let c = connect(set, nu, source, target)?;
            Ok(PairProbe {
                source,
                target,
                distance: source.dist(target),
                delta: c.delta,
                control_l2: c.control_l2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let delta_fit = power_fit(&per_pair.iter().map(|p| (p.distance, p.delta)).collect::<Vec<_>>());
    let l2_fit = power_fit(&per_pair.iter().map(|p| (p.distance, p.control_l2)).collect::<Vec<_>>());
    let vanishing = |f: &Option<PowerFit<S>>| f.is_some_and(|f| f.exponent > S::zero() && f.envelope.is_finite());
    let dominated = vanishing(&delta_fit) && vanishing(&l2_fit);
    Ok(ModulusReport { per_pair, delta_fit, l2_fit, dominated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveFamily, Witness};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(a: f64, b: f64) -> Point<f64> {
        Point::new(a, b)
    }

    fn band() -> ConstraintSet<f64> {
        ConstraintSet::parabola_band(1.0)
            .unwrap()
            .with_witness(Witness::new(p(0.0, 0.0), 1.0, 1.0, CurveFamily::PowerCurvePos))
            .unwrap()
    }

    #[test]
    fn band_sequence_vanishes() {
        let sources: Vec<_> = (1..=10).map(|k| p(0.5f64.powi(k), 0.25f64.powi(k))).collect();
        let rep = verify_reachability_sequence(&band(), 1.0, p(0.0, 0.0), &sources, 1e-2, 1e-1).unwrap();
        assert!(rep.established);
        assert!(rep.monotone_to_zero, "{rep:?}");
        // along the lower curve the connector is the single curved leg
        for (k, d) in rep.deltas.iter().enumerate() {
            assert!((d - 0.5f64.powi(k as i32 + 1)).abs() < 1e-14);
        }
    }

    #[test]
    fn cone_apex_sequence_is_not_established() {
        let cone = ConstraintSet::cone(1.0, 2.0).unwrap();
        let sources: Vec<_> = (1..=4).map(|k| p(0.5f64.powi(k), 1.5 * 0.5f64.powi(k))).collect();
        let rep = verify_reachability_sequence(&cone, 1.0, p(0.0, 0.0), &sources, 1e-2, 1e-2).unwrap();
        assert!(!rep.established);
        assert!(!rep.monotone_to_zero);
    }

    #[test]
    fn rectangle_interior_radial_sequence() {
        let r = ConstraintSet::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        let x0 = p(0.5, 0.5);
        let sources: Vec<_> = (1..=10)
            .map(|k| {
                let d = 0.5f64.powi(k + 2);
                p(0.5 + d * 0.6, 0.5 + d * 0.8)
            })
            .collect();
        let rep = verify_reachability_sequence(&r, 1.0, x0, &sources, 1e-2, 1e-1).unwrap();
        assert!(rep.monotone_to_zero, "{rep:?}");
    }

    #[test]
    fn manhattan_modulus_on_rectangle() {
        let r = ConstraintSet::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<_> = (0..20)
            .map(|i| {
                let t = p(rng.gen_range(0.55..0.9), rng.gen_range(0.1..0.9));
                let d = rng.gen_range(1e-3..5e-2);
                let s = if i % 2 == 0 { p(t.x1 + d, t.x2) } else { p(t.x1, t.x2 - d) };
                (s, t)
            })
            .collect();
        let rep = uniform_modulus_probe(&r, 1.0, &pairs).unwrap();
        for pp in &rep.per_pair {
            let manhattan = (pp.source.x1 - pp.target.x1).abs() + (pp.source.x2 - pp.target.x2).abs();
            assert!((pp.delta - manhattan).abs() < 1e-12, "{pp:?}");
        }
        let f = rep.delta_fit.unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-6);
        assert!(rep.dominated);
    }

    #[test]
    fn band_modulus_on_random_pairs() {
        let set = band();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pairs = Vec::new();
        while pairs.len() < 50 {
            let d = rng.gen_range(1e-3..0.2);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = p(d * th.cos(), d * th.sin());
            if set.contains(s) {
                pairs.push((s, p(0.0, 0.0)));
            }
        }
        pairs.push((p(0.0, 0.0), p(0.0, 0.0)));
        let rep = uniform_modulus_probe(&set, 1.0, &pairs).unwrap();
        assert!(rep.dominated);
        assert_eq!(rep.per_pair.last().unwrap().delta, 0.0);
    }
}
