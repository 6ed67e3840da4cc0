use std::path::{Path, PathBuf};

use grushin_core::dynamics::CostConfig;
use grushin_core::geometry::{ConstraintSet, Point};
use grushin_core::mfg::{AtomicMeasure, CouplingSpec, FpConfig};
use grushin_core::ocp::{DirectConfig, GridConfig, ProbeConfig};
use grushin_core::presets::{preset, Preset};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "GRUSHIN_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "grushin-out";

/// Thresholds for `certify` and `reach sequence`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    /// Largest final duration for a sequence to count as reaching.
    pub delta_tol: f64,
    /// Largest final control norm for a sequence to count as reaching.
    pub norm_tol: f64,
    /// Truncation lengths `10^-k`, `k = 1..=eps_levels`, for the cone bound.
    pub eps_levels: u32,
    /// Pairs drawn by `reach modulus`.
    pub modulus_pairs: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { delta_tol: 0.1, norm_tol: 0.1, eps_levels: 6, modulus_pairs: 50 }
    }
}

/// Contents of a TOML config file. Every key is optional; a preset fills
/// whatever the file leaves out.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub set: Option<ConstraintSet<f64>>,
    pub nu: Option<f64>,
    pub horizon: Option<f64>,
    pub cost: Option<CostConfig<f64>>,
    pub coupling: Option<CouplingSpec<f64>>,
    /// Initial atoms as `[x1, x2, weight]`.
    pub m0: Option<Vec<[f64; 3]>>,
    pub target: Option<[f64; 2]>,
    pub source: Option<[f64; 2]>,
    pub sources: Option<Vec<[f64; 2]>>,
    /// Start time for `ocp`.
    pub t0: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub solver: Option<DirectConfig>,
    pub fp: Option<FpConfig>,
    pub probe: Option<ProbeConfig>,
    pub certify: Option<CertifyConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Full config equivalent to a preset, suitable as a starting file.
    pub fn from_preset(p: &Preset<f64>) -> Self {
        Self {
            preset: None,
            set: Some(p.set.clone()),
            nu: Some(p.nu),
            horizon: Some(p.horizon),
            cost: Some(p.cost.clone()),
            coupling: Some(p.coupling.clone()),
            m0: Some(p.m0.atoms.iter().map(|(x, w)| [x.x1, x.x2, *w]).collect()),
            target: Some([p.target.x1, p.target.x2]),
            source: None,
            sources: Some(p.sources.iter().map(|s| [s.x1, s.x2]).collect()),
            t0: None,
            seed: None,
            out_dir: None,
            grid: Some(GridConfig { bbox: Some(p.grid_box), ..Default::default() }),
            solver: None,
            fp: None,
            probe: None,
            certify: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub nx: Option<usize>,
    pub nt: Option<usize>,
    pub restarts: Option<usize>,
    pub iters: Option<usize>,
    pub target: Option<[f64; 2]>,
    pub source: Option<[f64; 2]>,
}

/// Fully resolved and validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub set: ConstraintSet<f64>,
    pub nu: f64,
    pub horizon: f64,
    pub cost: CostConfig<f64>,
    pub coupling: CouplingSpec<f64>,
    pub m0: AtomicMeasure<f64>,
    pub target: Option<Point<f64>>,
    pub source: Option<Point<f64>>,
    pub sources: Vec<Point<f64>>,
    pub t0: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub grid: GridConfig,
    pub solver: DirectConfig,
    pub fp: FpConfig,
    pub probe: ProbeConfig,
    pub certify: CertifyConfig,
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing required key `{key}` (set it in the config file or pick a --preset)"))
}

fn pt(a: [f64; 2]) -> Point<f64> {
    Point::new(a[0], a[1])
}

/// Merges preset, file and flags (later wins) and validates the result.
pub fn parse_config(file: Option<&Path>, flags: &Overrides) -> Result<RunConfig, CliError> {
    let file = match file {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let preset_name = flags.preset.clone().or(file.preset.clone());
    let base = match &preset_name {
        Some(name) => Some(preset::<f64>(name).map_err(|e| CliError::Config(format!("key `preset`: {e}")))?),
        None => None,
    };
    let set = file.set.or(base.as_ref().map(|p| p.set.clone())).ok_or_else(|| missing("set"))?;
    let nu = file.nu.or(base.as_ref().map(|p| p.nu)).ok_or_else(|| missing("nu"))?;
    let horizon = file.horizon.or(base.as_ref().map(|p| p.horizon)).ok_or_else(|| missing("horizon"))?;
    let cost = file.cost.or(base.as_ref().map(|p| p.cost.clone())).ok_or_else(|| missing("cost"))?;
    let coupling = match file.coupling.or(base.as_ref().map(|p| p.coupling.clone())) {
        Some(c) => c,
        None => CouplingSpec::kernel(cost.running.clone(), cost.terminal.clone(), 0.2, 0.0, 0.0, cost.bound_k)
            .map_err(|e| CliError::Config(format!("key `coupling`: {e}")))?,
    };
    let m0 = match file.m0 {
        Some(atoms) => AtomicMeasure::new(atoms.iter().map(|a| (Point::new(a[0], a[1]), a[2])).collect())
            .map_err(|e| CliError::Config(format!("key `m0`: {e}")))?,
        None => match &base {
            Some(p) => p.m0.clone(),
            None => AtomicMeasure { atoms: Vec::new() },
        },
    };
    let target = flags.target.or(file.target).map(pt).or(base.as_ref().map(|p| p.target));
    let source = flags.source.or(file.source).map(pt);
    let sources = match file.sources {
        Some(v) => v.into_iter().map(pt).collect(),
        None => base.as_ref().map(|p| p.sources.clone()).unwrap_or_default(),
    };
    let mut grid = file.grid.unwrap_or_else(|| GridConfig {
        bbox: base.as_ref().map(|p| p.grid_box),
        ..Default::default()
    });
    if grid.bbox.is_none() {
        grid.bbox = base.as_ref().map(|p| p.grid_box);
    }
    if let Some(n) = flags.nx {
        grid.nx1 = n;
        grid.nx2 = n;
    }
    if let Some(n) = flags.nt {
        grid.nt = n;
    }
    let seed = flags.seed.or(file.seed).unwrap_or(0);
    let mut solver = file.solver.unwrap_or_default();
    let mut fp = file.fp.unwrap_or_default();
    solver.seed = seed;
    fp.solver.seed = seed;
    if let Some(r) = flags.restarts {
        solver.n_restarts = r;
        fp.solver.n_restarts = r;
    }
    if let Some(n) = flags.iters {
        fp.n_iters = n;
    }
    let out_dir = flags
        .out
        .clone()
        .or(file.out_dir)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let cfg = RunConfig {
        set,
        nu,
        horizon,
        cost,
        coupling,
        m0,
        target,
        source,
        sources,
        t0: file.t0.unwrap_or(0.0),
        seed,
        out_dir,
        grid,
        solver,
        fp,
        probe: file.probe.unwrap_or_default(),
        certify: file.certify.unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::Config(format!("key `{key}`: {msg}")));
        if let Err(e) = self.set.validate() {
            return bad("set", e.to_string());
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("nu", format!("must be positive, got {}", self.nu));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", format!("must be positive, got {}", self.horizon));
        }
        if !(self.t0 >= 0.0 && self.t0 <= self.horizon) {
            return bad("t0", format!("must lie in [0, horizon], got {}", self.t0));
        }
        if !(self.cost.bound_k > 0.0) {
            return bad("cost.bound_k", "must be positive".into());
        }
        if let Err(e) = self.coupling.validate() {
            return bad("coupling", e.to_string());
        }
        if let Some(b) = self.grid.bbox {
            if !(b.iter().all(|v| v.is_finite()) && b[0] < b[1] && b[2] < b[3]) {
                return bad("grid.bbox", format!("needs finite x1_min < x1_max, x2_min < x2_max, got {b:?}"));
            }
        }
        for (key, p) in [("target", self.target), ("source", self.source)] {
            if let Some(p) = p {
                if !self.set.contains(p) {
                    return bad(key, format!("({}, {}) is not in the constraint set", p.x1, p.x2));
                }
            }
        }
        Ok(())
    }

    pub fn require_target(&self) -> Result<Point<f64>, CliError> {
        self.target.ok_or_else(|| missing("target"))
    }

    pub fn require_source(&self) -> Result<Point<f64>, CliError> {
        self.source.ok_or_else(|| missing("source"))
    }

    pub fn require_m0(&self) -> Result<&AtomicMeasure<f64>, CliError> {
        if self.m0.is_empty() {
            return Err(missing("m0"));
        }
        Ok(&self.m0)
    }
}

/// Parses `x1,x2`.
pub fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `x1,x2`, got `{s}`"));
    }
    let a = parts[0].parse::<f64>().map_err(|e| format!("`{}`: {e}", parts[0]))?;
    let b = parts[1].parse::<f64>().map_err(|e| format!("`{}`: {e}", parts[1]))?;
    Ok([a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trips_through_toml() {
        let p = preset::<f64>("cone-halfplane-ex56").unwrap();
        let text = toml::to_string(&FileConfig::from_preset(&p)).unwrap();
        let back: FileConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.set.unwrap(), p.set);
        assert_eq!(back.cost.unwrap(), p.cost);
    }

    #[test]
    fn flags_override_and_unknown_keys_fail() {
        let flags = Overrides { preset: Some("band-ex53".into()), nx: Some(8), nt: Some(4), ..Default::default() };
        let cfg = parse_config(None, &flags).unwrap();
        assert_eq!((cfg.grid.nx1, cfg.grid.nx2, cfg.grid.nt), (8, 8, 4));
        assert_eq!(cfg.grid.bbox, Some([0.0, 1.0, 0.0, 1.0]));
        let err = toml::from_str::<FileConfig>("nu = 1.0\nbogus = 2").unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = parse_config(None, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("`set`"));
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("0.5, -1").unwrap(), [0.5, -1.0]);
        assert!(parse_point("1").is_err());
    }
}
