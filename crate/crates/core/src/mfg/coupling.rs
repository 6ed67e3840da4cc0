use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::AtomicMeasure;
use crate::dynamics::{CostModel, Field};
use crate::error::{config_err, Result};
use crate::geometry::{BBox, Point};
use crate::scalar::{lit, usize_s, Scalar};

type RunningFn<S> = dyn Fn(&AtomicMeasure<S>, Point<S>, S) -> S + Send + Sync;
type TerminalFn<S> = dyn Fn(&AtomicMeasure<S>, Point<S>) -> S + Send + Sync;

/// User-supplied interaction `(m, x, t) ↦ L[m](x, t)` and `(m, x) ↦ G[m](x)`,
/// added to the base fields before clipping.
#[derive(Clone)]
pub struct CustomCoupling<S> {
    pub running: Arc<RunningFn<S>>,
    pub terminal: Arc<TerminalFn<S>>,
}

impl<S> fmt::Debug for CustomCoupling<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomCoupling")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields, bound = "S: Scalar")]
pub enum CouplingKind<S> {
    /// `strength · Σ_j w_j exp(−|x − z_j|² / (2h²))`
    KernelCongestion {
        bandwidth: S,
        strength: S,
        #[serde(default)]
        terminal_strength: S,
    },
    /// `strength · |x − mean(m)|²`
    MeanAttraction {
        strength: S,
        #[serde(default)]
        terminal_strength: S,
    },
    #[serde(skip)]
    Custom(CustomCoupling<S>),
}

/// Nonlocal costs `L[m](x, t) = clip(ℓ₀(x) + interaction)` and
/// `G[m](x) = clip(g₀(x) + interaction)`, clipped to `[−K, K]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "S: Scalar")]
pub struct CouplingSpec<S> {
    pub kind: CouplingKind<S>,
    pub running: Field<S>,
    pub terminal: Field<S>,
    pub bound_k: S,
}

impl<S: Scalar> CouplingSpec<S> {
    pub fn kernel(running: Field<S>, terminal: Field<S>, bandwidth: S, strength: S, terminal_strength: S, bound_k: S) -> Result<Self> {
        let s = Self {
            kind: CouplingKind::KernelCongestion { bandwidth, strength, terminal_strength },
            running,
            terminal,
            bound_k,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound_k > S::zero() && self.bound_k.is_finite()) {
            return Err(config_err!("bound_k must be positive and finite"));
        }
        if let CouplingKind::KernelCongestion { bandwidth, .. } = &self.kind {
            if !(*bandwidth > S::zero() && bandwidth.is_finite()) {
                return Err(config_err!("kernel bandwidth must be positive, got {bandwidth}"));
            }
        }
        Ok(())
    }

    /// True when the interaction vanishes identically.
    pub fn is_decoupled(&self) -> bool {
        match &self.kind {
            CouplingKind::KernelCongestion { strength, terminal_strength, .. }
            | CouplingKind::MeanAttraction { strength, terminal_strength } => {
                *strength == S::zero() && *terminal_strength == S::zero()
            }
            CouplingKind::Custom(_) => false,
        }
    }

    pub fn clip(&self, v: S) -> S {
        v.max(-self.bound_k).min(self.bound_k)
    }
}

/// `Σ_j w_j exp(−|x − z_j|² / (2h²))`.
pub fn kernel_sum<S: Scalar>(m: &AtomicMeasure<S>, x: Point<S>, h: S) -> S {
    let c = lit::<S>(-0.5) / (h * h);
    m.atoms
        .iter()
        .map(|(z, w)| {
            let d = x.sub(*z);
            *w * ((d.x1 * d.x1 + d.x2 * d.x2) * c).exp()
        })
        .sum()
}

/// `(L[m](x, t), G[m](x))`.
pub fn coupling_eval<S: Scalar>(spec: &CouplingSpec<S>, m: &AtomicMeasure<S>, x: Point<S>, t: S) -> Result<(S, S)> {
    spec.validate()?;
    let (l, g) = (spec.running.eval(x), spec.terminal.eval(x));
    let (dl, dg) = match &spec.kind {
        CouplingKind::KernelCongestion { bandwidth, strength, terminal_strength } => {
            let k = kernel_sum(m, x, *bandwidth);
            (*strength * k, *terminal_strength * k)
        }
        CouplingKind::MeanAttraction { strength, terminal_strength } => {
            let d = x.sub(m.mean());
            let q = d.x1 * d.x1 + d.x2 * d.x2;
            (*strength * q, *terminal_strength * q)
        }
        CouplingKind::Custom(c) => ((c.running)(m, x, t), (c.terminal)(m, x)),
    };
    Ok((spec.clip(l + dl), spec.clip(g + dg)))
}

#[derive(Clone, Debug)]
enum Frozen<S> {
    /// Kernel sums tabulated on a uniform node grid, one slice per time.
    Table { bbox: BBox<S>, n: usize, dx1: S, dx2: S, slices: Vec<Vec<S>> },
    Means(Vec<Point<S>>),
    Marginals(Vec<AtomicMeasure<S>>),
}

/// The costs `L[m(t)]`, `G[m(T)]` for a fixed measure path `m(t_k)`.
/// Kernel sums are tabulated on an `n × n` node grid over `bbox` and
/// interpolated bilinearly in space and linearly in time; mean-field
/// couplings store the means; custom couplings see the marginal at the
/// last grid time not after `t`.
#[derive(Clone, Debug)]
pub struct FrozenCost<S> {
    spec: CouplingSpec<S>,
    times: Vec<S>,
    frozen: Frozen<S>,
}

impl<S: Scalar> FrozenCost<S> {
    pub fn new(spec: &CouplingSpec<S>, path: &[(S, AtomicMeasure<S>)], bbox: BBox<S>, n: usize) -> Result<Self> {
        spec.validate()?;
        if path.is_empty() {
            return Err(config_err!("frozen cost needs at least one marginal"));
        }
        if n < 2 || !bbox.is_finite() {
            return Err(config_err!("frozen cost table needs n >= 2 and a finite box"));
        }
        let times = path.iter().map(|p| p.0).collect();
        let frozen = match &spec.kind {
            CouplingKind::KernelCongestion { bandwidth, .. } => {
                let dx1 = (bbox.x1_max - bbox.x1_min) / usize_s(n - 1);
                let dx2 = (bbox.x2_max - bbox.x2_min) / usize_s(n - 1);
                let slices = path
                    .iter()
                    .map(|(_, m)| {
                        (0..n * n)
                            .map(|idx| {
                                let x = Point::new(
                                    bbox.x1_min + dx1 * usize_s(idx % n),
                                    bbox.x2_min + dx2 * usize_s(idx / n),
                                );
                                kernel_sum(m, x, *bandwidth)
                            })
                            .collect()
                    })
                    .collect();
                Frozen::Table { bbox, n, dx1, dx2, slices }
            }
            CouplingKind::MeanAttraction { .. } => Frozen::Means(path.iter().map(|p| p.1.mean()).collect()),
            CouplingKind::Custom(_) => Frozen::Marginals(path.iter().map(|p| p.1.clone()).collect()),
        };
        Ok(Self { spec: spec.clone(), times, frozen })
    }

    pub fn spec(&self) -> &CouplingSpec<S> {
        &self.spec
    }

    /// Slice below `t` and the linear weight of the next one.
    fn locate(&self, t: S) -> (usize, S) {
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        if k + 1 >= self.times.len() {
            return (self.times.len() - 1, S::zero());
        }
        let w = ((t - self.times[k]) / (self.times[k + 1] - self.times[k])).max(S::zero()).min(S::one());
        (k, w)
    }

    fn table_at(bbox: &BBox<S>, n: usize, dx1: S, dx2: S, slice: &[S], x: Point<S>) -> S {
        let last = usize_s::<S>(n - 1);
        let fx = ((x.x1 - bbox.x1_min) / dx1).max(S::zero()).min(last);
        let fy = ((x.x2 - bbox.x2_min) / dx2).max(S::zero()).min(last);
        let i = fx.floor().to_usize().unwrap_or(0).min(n - 2);
        let j = fy.floor().to_usize().unwrap_or(0).min(n - 2);
        let (s, r) = (fx - usize_s(i), fy - usize_s(j));
        let v = |a: usize, b: usize| slice[b * n + a];
        let one = S::one();
        v(i, j) * (one - s) * (one - r) + v(i + 1, j) * s * (one - r) + v(i, j + 1) * (one - s) * r + v(i + 1, j + 1) * s * r
    }

    /// Interaction terms `(running, terminal)` before clipping.
    fn interaction(&self, x: Point<S>, t: S, terminal: bool) -> S {
        let (k, w) = if terminal { (self.times.len() - 1, S::zero()) } else { self.locate(t) };
        match (&self.frozen, &self.spec.kind) {
            (Frozen::Table { bbox, n, dx1, dx2, slices }, CouplingKind::KernelCongestion { strength, terminal_strength, .. }) => {
                let a = Self::table_at(bbox, *n, *dx1, *dx2, &slices[k], x);
                let v = if w > S::zero() { a + (Self::table_at(bbox, *n, *dx1, *dx2, &slices[k + 1], x) - a) * w } else { a };
                v * if terminal { *terminal_strength } else { *strength }
            }
            (Frozen::Means(means), CouplingKind::MeanAttraction { strength, terminal_strength }) => {
                let mu = if w > S::zero() { means[k].add(means[k + 1].sub(means[k]).scale(w)) } else { means[k] };
                let d = x.sub(mu);
                (d.x1 * d.x1 + d.x2 * d.x2) * if terminal { *terminal_strength } else { *strength }
            }
            (Frozen::Marginals(ms), CouplingKind::Custom(c)) => {
                if terminal {
                    (c.terminal)(&ms[k], x)
                } else {
                    (c.running)(&ms[k], x, t)
                }
            }
            _ => unreachable!("frozen data matches the coupling kind"),
        }
    }
}

impl<S: Scalar> CostModel<S> for FrozenCost<S> {
    fn running(&self, x: Point<S>, t: S) -> S {
        self.spec.clip(self.spec.running.eval(x) + self.interaction(x, t, false))
    }
    fn terminal(&self, x: Point<S>) -> S {
        self.spec.clip(self.spec.terminal.eval(x) + self.interaction(x, S::zero(), true))
    }
    fn bound(&self) -> S {
        self.spec.bound_k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport<S> {
    /// `∫ (L[m1] − L[m2]) d(m1 − m2)` per pair.
    pub running_values: Vec<S>,
    /// Same for `G`.
    pub terminal_values: Vec<S>,
    pub min_pairing_value: S,
    pub is_monotone_on_samples: bool,
}

/// Evaluates `∫ (F[m1] − F[m2]) d(m1 − m2)` for `F = L(·, t)` and `F = G`
/// on every sample pair.
pub fn monotonicity_check<S: Scalar>(
    spec: &CouplingSpec<S>,
    pairs: &[(AtomicMeasure<S>, AtomicMeasure<S>)],
    t: S,
) -> Result<MonotonicityReport<S>> {
    let mut running_values = Vec::with_capacity(pairs.len());
    let mut terminal_values = Vec::with_capacity(pairs.len());
    for (m1, m2) in pairs {
        m1.check()?;
        m2.check()?;
        let mut acc = (S::zero(), S::zero());
        for (sign, m) in [(S::one(), m1), (-S::one(), m2)] {
            for &(z, w) in &m.atoms {
                let (l1, g1) = coupling_eval(spec, m1, z, t)?;
                let (l2, g2) = coupling_eval(spec, m2, z, t)?;
                acc.0 = acc.0 + sign * w * (l1 - l2);
                acc.1 = acc.1 + sign * w * (g1 - g2);
            }
        }
        running_values.push(acc.0);
        terminal_values.push(acc.1);
    }
    let min_pairing_value = running_values
        .iter()
        .chain(&terminal_values)
        .fold(S::infinity(), |m, &v| m.min(v));
    Ok(MonotonicityReport {
        is_monotone_on_samples: min_pairing_value >= lit(-1e-9),
        running_values,
        terminal_values,
        min_pairing_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(a: f64, b: f64) -> Point<f64> {
        Point::new(a, b)
    }

    fn congestion(strength: f64, k: f64) -> CouplingSpec<f64> {
        CouplingSpec::kernel(Field::Affine { offset: 0.0, c1: 0.5, c2: 0.0 }, Field::Zero, 0.2, strength, strength, k).unwrap()
    }

    fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> AtomicMeasure<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        AtomicMeasure::new(
            w.iter()
                .map(|&v| (p(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)), v / s))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_strength_returns_the_base_cost() {
        let spec = congestion(0.0, 10.0);
        let m = AtomicMeasure::dirac(p(0.3, 0.3));
        assert_eq!(coupling_eval(&spec, &m, p(0.4, 0.1), 0.0).unwrap(), (0.2, 0.0));
    }

    #[test]
    fn kernel_is_one_at_zero_offset_and_clipped() {
        let spec = congestion(1.0, 10.0);
        let m = AtomicMeasure::dirac(p(0.4, 0.1));
        assert_eq!(coupling_eval(&spec, &m, p(0.4, 0.1), 0.0).unwrap(), (1.2, 1.0));
        let spec = CouplingSpec::kernel(Field::Zero, Field::Zero, 0.2, 3.0, 3.0, 1.0).unwrap();
        assert_eq!(coupling_eval(&spec, &m, p(0.4, 0.1), 0.0).unwrap(), (1.0, 1.0));
        assert!(CouplingSpec::kernel(Field::<f64>::Zero, Field::Zero, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn pairing_equals_the_kernel_quadratic_form() {
        // with no clipping the pairing is Σ c_i c_j k(z_i − z_j) over the signed measure
        let spec = congestion(0.5, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m1 = random_measure(&mut rng, 3);
            let m2 = random_measure(&mut rng, 4);
            let signed: Vec<(Point<f64>, f64)> = m1.atoms.iter().copied().chain(m2.atoms.iter().map(|&(z, w)| (z, -w))).collect();
            let mut q = 0.0;
            for &(a, wa) in &signed {
                for &(b, wb) in &signed {
                    let d = a.dist(b);
                    q += wa * wb * (-d * d / (2.0 * 0.04)).exp();
                }
            }
            let rep = monotonicity_check(&spec, &[(m1, m2)], 0.0).unwrap();
            assert!((rep.running_values[0] - 0.5 * q).abs() < 1e-12);
            assert!(rep.is_monotone_on_samples);
        }
        let m = random_measure(&mut rng, 5);
        let rep = monotonicity_check(&spec, &[(m.clone(), m)], 0.0).unwrap();
        assert_eq!(rep.min_pairing_value, 0.0);
    }

    #[test]
    fn mean_attraction_is_not_monotone() {
        let spec = CouplingSpec {
            kind: CouplingKind::MeanAttraction { strength: 1.0, terminal_strength: 0.0 },
            running: Field::Zero,
            terminal: Field::Zero,
            bound_k: 10.0,
        };
        // pairing equals −2·strength·|mean(m1) − mean(m2)|²
        let m1 = AtomicMeasure::dirac(p(0.0, 0.0));
        let m2 = AtomicMeasure::dirac(p(1.0, 0.0));
        let rep = monotonicity_check(&spec, &[(m1, m2)], 0.0).unwrap();
        assert!((rep.running_values[0] + 2.0).abs() < 1e-12);
        assert!(!rep.is_monotone_on_samples);
    }

    #[test]
    fn frozen_table_tracks_the_exact_kernel() {
        let spec = congestion(0.5, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m0 = random_measure(&mut rng, 4);
        let m1 = random_measure(&mut rng, 4);
        let bbox = BBox::new(0.0, 1.0, 0.0, 1.0);
        let fc = FrozenCost::new(&spec, &[(0.0, m0.clone()), (1.0, m1.clone())], bbox, 65).unwrap();
        for _ in 0..50 {
            let x = p(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let e0 = coupling_eval(&spec, &m0, x, 0.0).unwrap().0;
            assert!((fc.running(x, 0.0) - e0).abs() < 2e-3);
            let e1 = coupling_eval(&spec, &m1, x, 1.0).unwrap();
            assert!((fc.terminal(x) - e1.1).abs() < 2e-3);
            let mid = 0.5 * (e0 + e1.0);
            assert!((fc.running(x, 0.5) - mid).abs() < 2e-3);
        }
    }
}
