use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use dressed_ion::io::{parse_config, run, ExperimentKind, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "dressed-ion", version, about = "Microwave-dressed trapped-ion qubit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run description. Its `experiment` must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: the config's `out`, else `out/<experiment>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print every effective parameter and where it comes from, then exit.
    #[arg(long, global = true)]
    explain: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Protected-state lifetime after STIRAP preparation.
    Fig2,
    /// Dressed Rabi flopping in an early and a late window.
    Fig3a,
    /// Dressed Ramsey fringes.
    Fig3b,
    /// Noiseless STIRAP robustness scans.
    StirapScan,
    /// Red-sideband gate, full model against the effective one.
    Sideband,
    /// Comb-induced Stark shifts for an ion chain.
    Comb,
    /// A raw schedule from the config's [custom] section.
    Custom,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Fig2 => ExperimentKind::Fig2,
            Command::Fig3a => ExperimentKind::Fig3a,
            Command::Fig3b => ExperimentKind::Fig3b,
            Command::StirapScan => ExperimentKind::StirapScan,
            Command::Sideband => ExperimentKind::Sideband,
            Command::Comb => ExperimentKind::Comb,
            Command::Custom => ExperimentKind::Custom,
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<(RunConfig, PathBuf)> {
    let kind = cli.command.kind();
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let doc = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg = parse_config(&doc).with_context(|| format!("in {}", path.display()))?;
            if cfg.experiment != kind {
                bail!("{} describes `{}`, not `{}`", path.display(), cfg.experiment.name(), kind.name());
            }
            (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None if kind == ExperimentKind::Custom => bail!("custom needs --config with a [custom] section"),
        None => (parse_config(&format!("experiment = \"{}\"", kind.name()))?, PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok((cfg, base))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let (cfg, base) = load(cli)?;
    if cli.explain {
        print!("{}", cfg.explain());
        return Ok(());
    }
    let out_dir = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    let opts = RunOptions { out_dir, base_dir: base };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    let summary = pool.install(|| run(&cfg, &opts))?;
    for a in &summary.artifacts {
        println!("{}  {}", a.sha256, summary.out_dir.join(&a.file).display());
    }
    println!("{:#}", summary.summary);
    Ok(())
}
