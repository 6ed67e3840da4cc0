use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OcpProblem;
use crate::dynamics::step;
use crate::error::{config_err, Result};
use crate::geometry::{BBox, Point};
use crate::scalar::{lit, usize_s, Scalar};

/// Resolution of the backward sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nx1: usize,
    pub nx2: usize,
    pub nt: usize,
    /// Radii of the polar control samples (quadratically spaced).
    pub n_r: usize,
    pub n_theta: usize,
    /// Hard cap on the sampled control magnitude.
    pub a_cap: f64,
    /// `[x1_min, x1_max, x2_min, x2_max]`; the set's sampling box if absent.
    pub bbox: Option<[f64; 4]>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx1: 64, nx2: 64, nt: 128, n_r: 12, n_theta: 16, a_cap: 20.0, bbox: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ValueGridMeta<S> {
    pub nx1: usize,
    pub nx2: usize,
    pub nt: usize,
    pub bbox: BBox<S>,
    pub horizon: S,
    pub nu: S,
    pub dx1: S,
    pub dx2: S,
    pub dt: S,
    pub a_max: S,
    pub n_controls: usize,
    pub n_feasible: usize,
}

/// `u(x, t_k)` at the nodes of a uniform grid; infeasible nodes carry NaN
/// and are skipped by the interpolation.
#[derive(Clone, Debug)]
pub struct ValueGrid<S> {
    pub meta: ValueGridMeta<S>,
    pub feasible: Vec<bool>,
    /// `values[k][j * nx1 + i]` at `t_k = k·dt`.
    pub values: Vec<Vec<S>>,
    controls: Vec<[S; 2]>,
}

impl<S: Scalar> ValueGrid<S> {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.meta.nx1 + i
    }

    pub fn node(&self, i: usize, j: usize) -> Point<S> {
        let m = &self.meta;
        Point::new(m.bbox.x1_min + m.dx1 * usize_s(i), m.bbox.x2_min + m.dx2 * usize_s(j))
    }

    pub fn time(&self, k: usize) -> S {
        if k == self.meta.nt {
            self.meta.horizon
        } else {
            self.meta.dt * usize_s(k)
        }
    }

    /// Feasible nodes as `(i, j, point)`.
    pub fn space_points(&self) -> Vec<(usize, usize, Point<S>)> {
        let mut out = Vec::new();
        for j in 0..self.meta.nx2 {
            for i in 0..self.meta.nx1 {
                if self.feasible[self.index(i, j)] {
                    out.push((i, j, self.node(i, j)));
                }
            }
        }
        out
    }

    pub fn node_value(&self, k: usize, i: usize, j: usize) -> Option<S> {
        let idx = self.index(i, j);
        self.feasible[idx].then(|| self.values[k][idx])
    }

    /// Masked bilinear interpolation of slice `k` at `p`: infeasible
    /// corners are dropped and the remaining weights renormalized. `None`
    /// when `p` is off the grid or every corner with positive weight is
    /// infeasible.
    pub fn interp(&self, k: usize, p: Point<S>) -> Option<S> {
        interp_slice(&self.meta, &self.feasible, &self.values[k], p)
    }

    /// Interpolation in space, then linear in time between slices.
    pub fn value(&self, p: Point<S>, t: S) -> Option<S> {
        let m = &self.meta;
        if t < S::zero() || t > m.horizon {
            return None;
        }
        let ft = (t / m.dt).min(usize_s(m.nt));
        let k = ft.floor().to_usize()?.min(m.nt.saturating_sub(1));
        let w = ft - usize_s(k);
        let a = self.interp(k, p)?;
        if w <= S::zero() {
            return Some(a);
        }
        let b = self.interp(k + 1, p)?;
        Some(a + (b - a) * w)
    }

    /// Reruns the backward step that produced slice `k` from slice `k + 1`.
    pub fn resweep(&self, pb: &OcpProblem<S>, k: usize) -> Vec<S> {
        sweep_slice(pb, &self.meta, &self.feasible, &self.controls, &self.values[k + 1], self.time(k))
    }

    /// Rows `x1,x2,t,u` for every feasible node and time step.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,t,u\n");
        let pts = self.space_points();
        for k in 0..=self.meta.nt {
            let t = self.time(k);
            for &(i, j, p) in &pts {
                let _ = writeln!(s, "{},{},{},{}", p.x1, p.x2, t, self.values[k][self.index(i, j)]);
            }
        }
        s
    }

    /// Writes `<stem>.csv` and the metadata sidecar `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }
}

fn interp_slice<S: Scalar>(m: &ValueGridMeta<S>, feasible: &[bool], vals: &[S], p: Point<S>) -> Option<S> {
    let slack = lit::<S>(1e-12);
    let fx = (p.x1 - m.bbox.x1_min) / m.dx1;
    let fy = (p.x2 - m.bbox.x2_min) / m.dx2;
    let (nx, ny) = (usize_s::<S>(m.nx1 - 1), usize_s::<S>(m.nx2 - 1));
    if !(fx >= -slack && fy >= -slack && fx <= nx + slack && fy <= ny + slack) {
        return None;
    }
    let fx = fx.max(S::zero()).min(nx);
    let fy = fy.max(S::zero()).min(ny);
    let i = fx.floor().to_usize()?.min(m.nx1 - 2);
    let j = fy.floor().to_usize()?.min(m.nx2 - 2);
    let (s, r) = (fx - usize_s(i), fy - usize_s(j));
    let corners = [
        (i, j, (S::one() - s) * (S::one() - r)),
        (i + 1, j, s * (S::one() - r)),
        (i, j + 1, (S::one() - s) * r),
        (i + 1, j + 1, s * r),
    ];
    let mut total = S::zero();
    let mut best: Option<(S, S)> = None;
    for &(a, b, w) in &corners {
        let idx = b * m.nx1 + a;
        if w > S::zero() && feasible[idx] {
            total = total + w;
            if best.map_or(true, |(bw, _)| w > bw) {
                best = Some((w, vals[idx]));
            }
        }
    }
    let (_, v_ref) = best?;
    // written around a reference value so constants are reproduced exactly
    let mut acc = S::zero();
    for &(a, b, w) in &corners {
        let idx = b * m.nx1 + a;
        if w > S::zero() && feasible[idx] {
            acc = acc + w * (vals[idx] - v_ref);
        }
    }
    Some(v_ref + acc / total)
}

fn sweep_slice<S: Scalar>(
    pb: &OcpProblem<S>,
    m: &ValueGridMeta<S>,
    feasible: &[bool],
    controls: &[[S; 2]],
    next: &[S],
    t: S,
) -> Vec<S> {
    let half = lit::<S>(0.5);
    (0..m.nx1 * m.nx2)
        .into_par_iter()
        .map(|idx| {
            if !feasible[idx] {
                return S::nan();
            }
            let x = Point::new(
                m.bbox.x1_min + m.dx1 * usize_s(idx % m.nx1),
                m.bbox.x2_min + m.dx2 * usize_s(idx / m.nx1),
            );
            let run = pb.cost.running(x, t) * m.dt;
            let mut best = run + next[idx];
            for &a in controls {
                let y = step(x, a, m.dt, pb.nu);
                if !pb.set.contains(y) || !pb.set.contains(step(x, a, m.dt * half, pb.nu)) {
                    continue;
                }
                if let Some(v) = interp_slice(m, feasible, next, y) {
                    let c = run + (a[0] * a[0] + a[1] * a[1]) * half * m.dt + v;
                    if c < best {
                        best = c;
                    }
                }
            }
            best
        })
        .collect()
}

/// Polar samples `r_i (cos θ_j, sin θ_j)` with `r_i = a_max (i/n_r)²`.
fn control_samples<S: Scalar>(a_max: S, n_r: usize, n_theta: usize) -> Vec<[S; 2]> {
    let mut out = Vec::with_capacity(n_r * n_theta);
    if a_max <= S::zero() {
        return out;
    }
    for i in 1..=n_r {
        let f = usize_s::<S>(i) / usize_s(n_r);
        let r = a_max * f * f;
        for j in 0..n_theta {
            let th = S::TAU() * usize_s(j) / usize_s(n_theta);
            out.push([r * th.cos(), r * th.sin()]);
        }
    }
    out
}

/// Backward semi-Lagrangian sweep
/// `u(x, t) = min_a [Δt (|a|²/2 + ℓ(x, t)) + u(x + Δt f(x, a), t + Δt)]`
/// from `u(·, T) = g`. The flow over one step is exact for constant `a`.
/// Moves whose endpoint or midpoint leaves the set are excluded; the zero
/// control always lands back on its node, so the stay-put value is always
/// available. Controls are sampled in a disc of radius
/// `min(2√(2K(1+T)/Δt), a_cap, side/(2Δt))`.
pub fn value_grid_backward<S: Scalar>(pb: &OcpProblem<S>, cfg: &GridConfig) -> Result<ValueGrid<S>> {
    if cfg.nx1 < 2 || cfg.nx2 < 2 || cfg.nt == 0 {
        return Err(config_err!("grid needs nx1, nx2 >= 2 and nt >= 1"));
    }
    if cfg.n_theta == 0 && cfg.n_r > 0 {
        return Err(config_err!("n_theta must be positive when n_r > 0"));
    }
    let bbox = match cfg.bbox {
        Some([a, b, c, d]) => BBox::new(lit(a), lit(b), lit(c), lit(d)),
        None => pb.set.sampling_box(),
    };
    if !bbox.is_finite() || !(bbox.x1_max > bbox.x1_min && bbox.x2_max > bbox.x2_min) {
        return Err(config_err!("grid box must be finite and nondegenerate"));
    }
    let dx1 = (bbox.x1_max - bbox.x1_min) / usize_s(cfg.nx1 - 1);
    let dx2 = (bbox.x2_max - bbox.x2_min) / usize_s(cfg.nx2 - 1);
    let dt = pb.horizon / usize_s(cfg.nt);
    let side = (bbox.x1_max - bbox.x1_min).min(bbox.x2_max - bbox.x2_min);
    let two = lit::<S>(2.0);
    let a_max = (two * (two * pb.cost.bound() * (S::one() + pb.horizon) / dt).sqrt())
        .min(lit(cfg.a_cap))
        .min(side / (two * dt));
    let controls = control_samples(a_max, cfg.n_r, cfg.n_theta);

    let mut meta = ValueGridMeta {
        nx1: cfg.nx1,
        nx2: cfg.nx2,
        nt: cfg.nt,
        bbox,
        horizon: pb.horizon,
        nu: pb.nu,
        dx1,
        dx2,
        dt,
        a_max,
        n_controls: controls.len() + 1,
        n_feasible: 0,
    };
    let mut feasible = vec![false; cfg.nx1 * cfg.nx2];
    let (mut cols, mut rows) = (vec![false; cfg.nx1], vec![false; cfg.nx2]);
    for j in 0..cfg.nx2 {
        for i in 0..cfg.nx1 {
            let p = Point::new(bbox.x1_min + dx1 * usize_s(i), bbox.x2_min + dx2 * usize_s(j));
            if pb.set.contains(p) {
                feasible[j * cfg.nx1 + i] = true;
                cols[i] = true;
                rows[j] = true;
            }
        }
    }
    meta.n_feasible = feasible.iter().filter(|&&f| f).count();
    if cols.iter().filter(|&&c| c).count() < 2 || rows.iter().filter(|&&r| r).count() < 2 {
        return Err(config_err!(
            "grid does not resolve the set ({} feasible nodes)",
            meta.n_feasible
        ));
    }

    let mut values = vec![Vec::new(); cfg.nt + 1];
    values[cfg.nt] = (0..cfg.nx1 * cfg.nx2)
        .map(|idx| {
            if feasible[idx] {
                let p = Point::new(bbox.x1_min + dx1 * usize_s(idx % cfg.nx1), bbox.x2_min + dx2 * usize_s(idx / cfg.nx1));
                pb.cost.terminal(p)
            } else {
                S::nan()
            }
        })
        .collect();
    for k in (0..cfg.nt).rev() {
        let t = dt * usize_s(k);
        values[k] = sweep_slice(pb, &meta, &feasible, &controls, &values[k + 1], t);
    }
    Ok(ValueGrid { meta, feasible, values, controls })
}
