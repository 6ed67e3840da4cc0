use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::scalar::{lit, usize_s, Scalar};

/// Piecewise-constant control `α = (α1, α2)`; piece `i` is active on
/// `[breaks[i], breaks[i + 1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal<S> {
    pub breaks: Vec<S>,
    pub values: Vec<[S; 2]>,
}

impl<S: Scalar> ControlSignal<S> {
    pub fn new(breaks: Vec<S>, values: Vec<[S; 2]>) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(config_err!(
                "control needs one more break than values ({} vs {})",
                breaks.len(),
                values.len()
            ));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || !breaks.iter().all(|t| t.is_finite()) {
            return Err(config_err!("control breaks must be finite and strictly increasing"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(config_err!("control values must be finite"));
        }
        Ok(Self { breaks, values })
    }

    pub fn empty(t0: S) -> Self {
        Self { breaks: vec![t0], values: Vec::new() }
    }

    /// `values.len()` equal pieces on `[t0, t1]`.
    pub fn uniform(t0: S, t1: S, values: Vec<[S; 2]>) -> Result<Self> {
        if values.is_empty() {
            return Err(config_err!("uniform control needs at least one piece"));
        }
        let n = values.len();
        let h = (t1 - t0) / usize_s(n);
        let breaks = (0..=n).map(|i| if i == n { t1 } else { t0 + h * usize_s(i) }).collect();
        Self::new(breaks, values)
    }

    pub fn constant(t0: S, t1: S, a: [S; 2]) -> Result<Self> {
        Self::uniform(t0, t1, vec![a])
    }

    /// Builds a control from consecutive `(duration, value)` pieces starting
    /// at `t0`; zero-length pieces are dropped.
    pub fn from_durations(t0: S, pieces: &[(S, [S; 2])]) -> Result<Self> {
        let mut breaks = vec![t0];
        let mut values = Vec::with_capacity(pieces.len());
        let mut t = t0;
        for &(d, a) in pieces {
            if d < S::zero() {
                return Err(config_err!("negative piece duration {d}"));
            }
            if d > S::zero() {
                t = t + d;
                breaks.push(t);
                values.push(a);
            }
        }
        Self::new(breaks, values)
    }

    pub fn t0(&self) -> S {
        self.breaks[0]
    }

    pub fn t1(&self) -> S {
        *self.breaks.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(start, end, value)` for every piece.
    pub fn pieces(&self) -> impl Iterator<Item = (S, S, [S; 2])> + '_ {
        self.values.iter().enumerate().map(|(i, &a)| (self.breaks[i], self.breaks[i + 1], a))
    }

    /// Right-continuous evaluation; the last value is held at `t1` and
    /// zero is returned outside the support.
    pub fn value_at(&self, t: S) -> [S; 2] {
        if self.values.is_empty() || t < self.t0() || t > self.t1() {
            return [S::zero(); 2];
        }
        let i = self.breaks.partition_point(|&b| b <= t).saturating_sub(1);
        self.values[i.min(self.values.len() - 1)]
    }

    /// Exact `∫ |α|²`.
    pub fn l2_squared(&self) -> S {
        self.pieces().map(|(a, b, v)| (v[0] * v[0] + v[1] * v[1]) * (b - a)).sum()
    }

    pub fn l2(&self) -> S {
        self.l2_squared().sqrt()
    }

    /// Exact `∫ |α_k|` for component `k`.
    pub fn l1_component(&self, k: usize) -> S {
        self.pieces().map(|(a, b, v)| v[k].abs() * (b - a)).sum()
    }

    pub fn sup_norm(&self) -> S {
        self.values.iter().map(|v| v[0].hypot(v[1])).fold(S::zero(), S::max)
    }

    pub fn shifted(&self, dt: S) -> Self {
        Self {
            breaks: self.breaks.iter().map(|&t| t + dt).collect(),
            values: self.values.clone(),
        }
    }

    /// Time-rescales onto a new start: durations multiply by `factor`,
    /// values divide by it, so the driven state path is unchanged.
    pub fn time_rescaled(&self, new_t0: S, factor: S) -> Self {
        let t0 = self.t0();
        Self {
            breaks: self.breaks.iter().map(|&t| new_t0 + (t - t0) * factor).collect(),
            values: self.values.iter().map(|v| [v[0] / factor, v[1] / factor]).collect(),
        }
    }

    /// Appends `next`; its start is snapped onto `self.t1()`.
    pub fn append(&self, next: &Self) -> Result<Self> {
        let gap = (next.t0() - self.t1()).abs();
        let scale = S::one().max(self.t1().abs());
        if gap > lit::<S>(1e-9) * scale {
            return Err(config_err!("controls are not contiguous (gap {gap})"));
        }
        let mut breaks = self.breaks.clone();
        let mut values = self.values.clone();
        let shift = self.t1() - next.t0();
        breaks.extend(next.breaks[1..].iter().map(|&t| t + shift));
        values.extend_from_slice(&next.values);
        Ok(Self { breaks, values })
    }

    /// Restriction to `[a, b]` (pieces are cut at the ends).
    pub fn restricted(&self, a: S, b: S) -> Self {
        let mut breaks = vec![a];
        let mut values = Vec::new();
        for (ta, tb, v) in self.pieces() {
            let lo = ta.max(a);
            let hi = tb.min(b);
            if hi > lo {
                if lo > *breaks.last().unwrap() {
                    // hole in the support: keep the signal well-formed
                    breaks.push(lo);
                    values.push([S::zero(); 2]);
                }
                breaks.push(hi);
                values.push(v);
            }
        }
        Self { breaks, values }
    }
}
