//! `grushin`: command-line front end for grushin-core.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grushin_core::presets::{preset, PRESET_NAMES};

use config::{parse_point, parse_config, FileConfig, Overrides};
use error::CliError;
use run::{Out, Summary};

#[derive(Parser)]
#[command(
    name = "grushin",
    version,
    about = "State-constrained optimal control and mean field games with Grushin-type dynamics",
    after_help = "Exit codes: 0 success, 1 probe or numerical failure, 2 configuration error.\n\
                  Output directory: --out, else `out_dir` in the config, else $GRUSHIN_OUT_DIR, else ./grushin-out."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML config file; unknown keys are rejected
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Named example (see `grushin preset`); fills keys the config leaves out
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random restarts and sampling [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid nodes per axis [default: 64]
    #[arg(long, global = true)]
    nx: Option<usize>,
    /// Grid time steps [default: 128]
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Restarts per trajectory solve [default: 4, or 2 inside `mfg`]
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Fictitious-play iterations [default: 200]
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// Target point `x1,x2`
    #[arg(long, global = true, value_parser = parse_point, allow_hyphen_values = true)]
    target: Option<[f64; 2]>,
    /// Source point `x1,x2`
    #[arg(long, global = true, value_parser = parse_point, allow_hyphen_values = true)]
    source: Option<[f64; 2]>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reachability constructions and probes
    Reach {
        #[command(subcommand)]
        action: ReachCmd,
    },
    /// Value function on a grid by backward semi-Lagrangian sweeps (u_grid.csv)
    Value,
    /// Optimal trajectory from --source at time t0 (ocp_traj.csv, ocp.json); without --source,
    /// closed-graph and continuity probes at --target (closed_graph.json)
    Ocp,
    /// Fictitious play for the mean field game (mu_atoms.csv, m_path.csv, diagnostics.json, u_grid.csv)
    Mfg,
    /// Certify reachability or unreachability of --target (certificate.json)
    Certify,
    /// List presets, or write one as a config file (preset.toml)
    Preset {
        /// Preset to export
        name: Option<String>,
    },
}

#[derive(Subcommand)]
enum ReachCmd {
    /// Connector from --source to --target (connect_traj.csv, connect.json)
    Connect,
    /// Connectors from sources approaching --target (sequence.json)
    Sequence,
    /// Gronwall bound along truncated connectors toward the cone apex (cone_certificate.json)
    CertifyCone,
    /// Power-law moduli over random pairs (modulus.json)
    Modulus,
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        preset: c.preset.clone(),
        out: c.out.clone(),
        seed: c.seed,
        nx: c.nx,
        nt: c.nt,
        restarts: c.restarts,
        iters: c.iters,
        target: c.target,
        source: c.source,
    }
}

fn export_preset(name: Option<&str>, common: &Common) -> Result<Summary, CliError> {
    let Some(name) = name else {
        for n in PRESET_NAMES {
            let p = preset::<f64>(n).map_err(CliError::from)?;
            println!("{n}\t{}", p.description);
        }
        return Ok(Summary { metric: format!("{} presets", PRESET_NAMES.len()), path: PathBuf::from("-") });
    };
    let p = preset::<f64>(name).map_err(|e| CliError::Config(format!("key `preset`: {e}")))?;
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os(config::OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUT_DIR));
    let out = Out::open(&dir)?;
    let text = toml::to_string(&FileConfig::from_preset(&p))
        .map_err(|e| CliError::Run(format!("cannot serialize preset: {e}")))?;
    let path = out.write("preset.toml", &format!("# {}\n{text}", p.description))?;
    Ok(Summary { metric: format!("preset={name}"), path })
}

fn execute(cli: &Cli) -> (Result<Summary, CliError>, Option<Out>) {
    if let Cmd::Preset { name } = &cli.cmd {
        return (export_preset(name.as_deref(), &cli.common), None);
    }
    let cfg = match parse_config(cli.common.config.as_deref(), &overrides(&cli.common)) {
        Ok(c) => c,
        Err(e) => return (Err(e), None),
    };
    let out = match Out::open(&cfg.out_dir) {
        Ok(o) => o,
        Err(e) => return (Err(e), None),
    };
    let res = match &cli.cmd {
        Cmd::Reach { action: ReachCmd::Connect } => run::reach_connect(&cfg, &out),
        Cmd::Reach { action: ReachCmd::Sequence } => run::reach_sequence(&cfg, &out),
        Cmd::Reach { action: ReachCmd::CertifyCone } => run::reach_certify_cone(&cfg, &out),
        Cmd::Reach { action: ReachCmd::Modulus } => run::reach_modulus(&cfg, &out),
        Cmd::Value => run::value(&cfg, &out),
        Cmd::Ocp => run::ocp(&cfg, &out),
        Cmd::Mfg => run::mfg(&cfg, &out),
        Cmd::Certify => run::certify(&cfg, &out),
        Cmd::Preset { .. } => unreachable!("handled above"),
    };
    (res, Some(out))
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Reach { action: ReachCmd::Connect } => "reach connect",
        Cmd::Reach { action: ReachCmd::Sequence } => "reach sequence",
        Cmd::Reach { action: ReachCmd::CertifyCone } => "reach certify-cone",
        Cmd::Reach { action: ReachCmd::Modulus } => "reach modulus",
        Cmd::Value => "value",
        Cmd::Ocp => "ocp",
        Cmd::Mfg => "mfg",
        Cmd::Certify => "certify",
        Cmd::Preset { .. } => "preset",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.cmd);
    match execute(&cli) {
        (Ok(s), _) => {
            println!("{name}: {} -> {}", s.metric, s.path.display());
            ExitCode::SUCCESS
        }
        (Err(e), out) => {
            if let Some(out) = &out {
                out.mark_failed(&e);
            }
            eprintln!("{name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
