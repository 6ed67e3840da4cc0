use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use grushin_core::geometry::{Point, Shape};
use grushin_core::mfg::{fictitious_play, holder_check, measure_path, mild_solution_extract, MfgProblem};
use grushin_core::ocp::{
    closed_graph_probe, lsc_continuity_probe, solve_trajectory, value_grid_backward, OcpProblem,
};
use grushin_core::reachability::{
    cone_gronwall_bound, connect, truncated_cone_connector, truncated_cone_cost, uniform_modulus_probe,
    verify_reachability_sequence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

pub const FAILED_MARKER: &str = "_FAILED";

/// Output directory with deterministic artifact names.
pub struct Out {
    pub dir: PathBuf,
}

impl Out {
    /// Creates the directory and clears a stale failure marker.
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("key `out_dir`: cannot create {}: {e}", dir.display())))?;
        let marker = dir.join(FAILED_MARKER);
        if marker.exists() {
            std::fs::remove_file(&marker)
                .map_err(|e| CliError::Config(format!("key `out_dir`: {} is not writable: {e}", dir.display())))?;
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn mark_failed(&self, err: &CliError) {
        let _ = std::fs::write(self.dir.join(FAILED_MARKER), format!("{err}\n"));
    }
}

/// What a successful command reports on its summary line.
pub struct Summary {
    pub metric: String,
    pub path: PathBuf,
}

fn summary(metric: String, path: PathBuf) -> Summary {
    Summary { metric, path }
}

fn pt_json(p: Point<f64>) -> serde_json::Value {
    json!([p.x1, p.x2])
}

pub fn reach_connect(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let target = cfg.require_target()?;
    let source = cfg.require_source()?;
    let c = connect(&cfg.set, cfg.nu, source, target)?;
    out.write("connect_traj.csv", &c.traj.to_csv())?;
    let path = out.json(
        "connect.json",
        &json!({
            "source": pt_json(source),
            "target": pt_json(target),
            "delta": c.delta,
            "control_l2": c.control_l2,
            "case_tag": c.case_tag,
            "max_violation": c.traj.admissibility_check(&cfg.set).max_violation,
        }),
    )?;
    Ok(summary(format!("delta={} control_l2={}", c.delta, c.control_l2), path))
}

/// Sources converging to `target`: the configured ones if they end close
/// to it, otherwise points at distance `2^-k` found by scanning directions.
fn sources_toward(cfg: &RunConfig, target: Point<f64>) -> Vec<Point<f64>> {
    if let Some(last) = cfg.sources.last() {
        if last.dist(target) <= 0.5f64.powi(8) {
            return cfg.sources.clone();
        }
    }
    let mut out = Vec::new();
    for k in 1..=10 {
        let h = 0.5f64.powi(k);
        let found = (0..32).map(|m| std::f64::consts::TAU * m as f64 / 32.0).find_map(|th| {
            let x = Point::new(target.x1 + h * th.cos(), target.x2 + h * th.sin());
            cfg.set.contains(x).then_some(x)
        });
        match found {
            Some(x) => out.push(x),
            None => break,
        }
    }
    out
}

pub fn reach_sequence(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let target = cfg.require_target()?;
    let sources = sources_toward(cfg, target);
    if sources.is_empty() {
        return Err(CliError::Probe("no admissible sources near the target".into()));
    }
    let c = &cfg.certify;
    let rep = verify_reachability_sequence(&cfg.set, cfg.nu, target, &sources, c.delta_tol, c.norm_tol)?;
    let path = out.json(
        "sequence.json",
        &json!({ "target": pt_json(target), "sources": sources.iter().map(|&s| pt_json(s)).collect::<Vec<_>>(), "report": rep }),
    )?;
    if !rep.established || !rep.monotone_to_zero {
        return Err(CliError::Probe(format!(
            "sequence toward ({}, {}) not established{}",
            target.x1,
            target.x2,
            rep.failure.map(|f| format!(": {f}")).unwrap_or_default()
        )));
    }
    Ok(summary(
        format!("delta_last={} l2_last={}", rep.deltas.last().unwrap(), rep.l2norms.last().unwrap()),
        path,
    ))
}

struct ConeEvidence {
    json: serde_json::Value,
    holds: bool,
}

/// Truncated straight-to-apex connectors from `x0`: their cost and the
/// Gronwall lower bound along each.
fn cone_evidence(cfg: &RunConfig, x0: Point<f64>) -> Result<ConeEvidence, CliError> {
    let mut levels = Vec::new();
    let mut holds = true;
    let mut prev_cost = f64::NEG_INFINITY;
    for k in 1..=cfg.certify.eps_levels {
        let eps = x0.x1 * 10f64.powi(-(k as i32));
        let cost = truncated_cone_cost(x0, eps)?;
        let traj = truncated_cone_connector(x0, eps, 64)?;
        let cert = cone_gronwall_bound(&cfg.set, &traj)?;
        let end = traj.end();
        holds &= cert.observed_min_ratio >= 1.0 - 1e-6 && cost > prev_cost;
        prev_cost = cost;
        levels.push(json!({
            "eps": eps,
            "energy_cost": cost,
            "alpha2_l1": cert.alpha2_l1,
            "final_y2": end.x2,
            "final_lower_bound": cert.lower_bound.last(),
            "observed_min_ratio": cert.observed_min_ratio,
            "alpha2_l1_needed_for_y2_at_eps": cert.required_alpha2_l1(eps * cert.m1),
        }));
    }
    Ok(ConeEvidence { json: json!({ "x0": pt_json(x0), "levels": levels }), holds })
}

pub fn reach_certify_cone(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let x0 = cfg.source.or(cfg.sources.first().copied()).ok_or_else(|| {
        CliError::Config("missing required key `source` (start point inside the cone)".into())
    })?;
    let ev = cone_evidence(cfg, x0)?;
    let path = out.json("cone_certificate.json", &ev.json)?;
    if !ev.holds {
        return Err(CliError::Probe("Gronwall bound violated along a truncated connector".into()));
    }
    Ok(summary(format!("levels={} bound_holds=true", cfg.certify.eps_levels), path))
}

pub fn reach_modulus(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let b = cfg.grid.bbox.unwrap_or_else(|| {
        let s = cfg.set.sampling_box();
        [s.x1_min, s.x1_max, s.x2_min, s.x2_max]
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.certify.modulus_pairs;
    let mut points = Vec::with_capacity(2 * n);
    for _ in 0..1000 * (n + 1) {
        if points.len() == 2 * n {
            break;
        }
        let x = Point::new(rng.gen_range(b[0]..=b[1]), rng.gen_range(b[2]..=b[3]));
        if cfg.set.contains(x) {
            points.push(x);
        }
    }
    if points.len() < 2 * n {
        return Err(CliError::Probe("rejection sampling found too few points in the set".into()));
    }
    let pairs: Vec<_> = points.chunks(2).map(|c| (c[0], c[1])).collect();
    let rep = uniform_modulus_probe(&cfg.set, cfg.nu, &pairs)?;
    let path = out.json("modulus.json", &rep)?;
    if !rep.dominated {
        return Err(CliError::Probe("no single power modulus bounds the pairs".into()));
    }
    let e = |f: &Option<grushin_core::reachability::PowerFit<f64>>| f.map(|f| f.exponent).unwrap_or(f64::NAN);
    Ok(summary(format!("delta_exponent={} l2_exponent={}", e(&rep.delta_fit), e(&rep.l2_fit)), path))
}

fn ocp_problem(cfg: &RunConfig) -> Result<OcpProblem<'_, f64>, CliError> {
    Ok(OcpProblem::new(&cfg.set, cfg.nu, cfg.horizon, &cfg.cost)?)
}

pub fn value(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let pb = ocp_problem(cfg)?;
    let g = value_grid_backward(&pb, &cfg.grid)?;
    g.write(&out.dir, "u_grid")?;
    let m = &g.meta;
    Ok(summary(
        format!("nodes={}x{}x{} feasible={}", m.nx1, m.nx2, m.nt + 1, m.n_feasible),
        out.dir.join("u_grid.csv"),
    ))
}

/// Closed-graph and continuity probes at the target along the sources.
fn ocp_probe(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let target = cfg.require_target()?;
    let sources = sources_toward(cfg, target);
    if sources.is_empty() {
        return Err(CliError::Probe("no admissible sources near the target".into()));
    }
    let pb = ocp_problem(cfg)?;
    let cg = closed_graph_probe(&pb, target, &sources, &cfg.solver, &cfg.probe)?;
    let lsc = lsc_continuity_probe(&pb, target, &sources, &cfg.solver, &cfg.probe)?;
    out.write("limit_traj.csv", &cg.limit_traj.to_csv())?;
    let path = out.json(
        "closed_graph.json",
        &json!({
            "target": pt_json(target),
            "sources": sources.iter().map(|&s| pt_json(s)).collect::<Vec<_>>(),
            "gap": cg.gap,
            "limit_cost": cg.limit_cost,
            "target_value": cg.target_value,
            "limit_is_optimal": cg.limit_is_optimal,
            "inconclusive": cg.inconclusive,
            "source_values": cg.source_values,
            "sup_distances": cg.sup_distances,
            "liminf_ok": lsc.liminf_ok,
            "continuity_ok": lsc.continuity_ok,
        }),
    )?;
    if cg.inconclusive {
        return Err(CliError::Probe("source trajectories do not settle; closed-graph probe inconclusive".into()));
    }
    Ok(summary(format!("gap={} limit_is_optimal={}", cg.gap, cg.limit_is_optimal), path))
}

pub fn ocp(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let Some(source) = cfg.source else {
        return ocp_probe(cfg, out);
    };
    let pb = ocp_problem(cfg)?;
    let sol = solve_trajectory(&pb, source, cfg.t0, &cfg.solver)?;
    out.write("ocp_traj.csv", &sol.traj.to_csv())?;
    let path = out.json(
        "ocp.json",
        &json!({
            "source": pt_json(source),
            "t0": cfg.t0,
            "value": sol.value,
            "converged": sol.converged,
            "residual": sol.residual,
            "multistart_spread": sol.multistart_spread,
            "restart_values": sol.restart_values,
            "control_l2": sol.traj.control.l2(),
        }),
    )?;
    Ok(summary(format!("value={} converged={}", sol.value, sol.converged), path))
}

pub fn mfg(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let m0 = cfg.require_m0()?;
    let pb = MfgProblem { set: &cfg.set, nu: cfg.nu, horizon: cfg.horizon, spec: &cfg.coupling, m0 };
    let (mu, diag) = fictitious_play(&pb, &cfg.fp)?;
    let mut atoms = String::from("id,weight,origin,born\n");
    for (i, a) in mu.atoms.iter().enumerate() {
        let _ = writeln!(atoms, "{i},{},{},{}", a.weight, a.origin, a.born);
        out.write(&format!("traj_{i:04}.csv"), &a.traj.to_csv())?;
    }
    out.write("mu_atoms.csv", &atoms)?;
    let times = mu.atoms[0].traj.times.clone();
    let path_m = measure_path(&mu, &times, cfg.set.tol_member)?;
    let mut m_csv = String::from("t,x1,x2,w\n");
    for (t, m) in &path_m {
        for (x, w) in &m.atoms {
            let _ = writeln!(m_csv, "{t},{},{},{w}", x.x1, x.x2);
        }
    }
    out.write("m_path.csv", &m_csv)?;
    let holder = holder_check(&mu, cfg.nu, &times, cfg.set.tol_member)?;
    let (u, _) = mild_solution_extract(&pb, &mu, &cfg.fp, &cfg.grid)?;
    u.write(&out.dir, "u_grid")?;
    let last = *diag.exploitability.last().unwrap_or(&f64::NAN);
    let threshold = 1e-2 * cfg.coupling.bound_k * cfg.horizon;
    let path = out.json(
        "diagnostics.json",
        &json!({
            "exploitability": diag.exploitability,
            "w1_successive": diag.w1_successive,
            "initial_marginal_error": diag.initial_marginal_error,
            "atom_counts": diag.atom_counts,
            "support_gap": diag.support_gap,
            "aborted": diag.aborted,
            "exploitability_threshold": threshold,
            "holder": holder,
        }),
    )?;
    if let Some(msg) = &diag.aborted {
        return Err(CliError::Run(format!("fictitious play stopped early: {msg}")));
    }
    Ok(summary(format!("exploitability={last} atoms={}", mu.atoms.len()), path))
}

pub fn certify(cfg: &RunConfig, out: &Out) -> Result<Summary, CliError> {
    let target = cfg.require_target()?;
    let sources = sources_toward(cfg, target);
    let c = &cfg.certify;
    let seq = if sources.is_empty() {
        None
    } else {
        Some(verify_reachability_sequence(&cfg.set, cfg.nu, target, &sources, c.delta_tol, c.norm_tol)?)
    };
    let reachable = seq.as_ref().is_some_and(|r| r.established && r.monotone_to_zero);
    let at_apex = matches!(&cfg.set.shape, Shape::Cone { apex, .. } if *apex == target && apex.x1 == 0.0 && apex.x2 == 0.0);
    let (verdict, method, evidence) = if reachable {
        ("reachable", "connector sequence", serde_json::Value::Null)
    } else if at_apex {
        let x0 = sources.first().copied().or(cfg.source).unwrap_or(Point::new(1.0, m_mid(cfg)));
        let ev = cone_evidence(cfg, x0)?;
        let v = if ev.holds { "unreachable" } else { "inconclusive" };
        (v, "gronwall bound", ev.json)
    } else {
        ("inconclusive", "connector sequence", serde_json::Value::Null)
    };
    let path = out.json(
        "certificate.json",
        &json!({
            "target": pt_json(target),
            "verdict": verdict,
            "method": method,
            "sequence": seq,
            "gronwall": evidence,
        }),
    )?;
    if verdict == "inconclusive" {
        return Err(CliError::Probe(format!("could not certify ({}, {})", target.x1, target.x2)));
    }
    Ok(summary(format!("verdict={verdict}"), path))
}

/// Mid slope of a cone set, for a default interior start.
fn m_mid(cfg: &RunConfig) -> f64 {
    match &cfg.set.shape {
        Shape::Cone { m1, m2, .. } => 0.5 * (m1 + m2),
        _ => 1.0,
    }
}
