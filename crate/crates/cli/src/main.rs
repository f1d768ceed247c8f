//! `opiniond` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use opiniond_core::pipeline::{run_command, Command};
use opiniond_core::{parse_config, Error};

#[derive(Parser)]
#[command(name = "opiniond", version, about = "Evolutionary-game opinion formation on directed social networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Topological statistics and in-degree histogram of the configured graph.
    Stats(Common),
    /// Iteratively remove low-degree nodes and write the remaining edge list.
    Prune(Common),
    /// Generate a directed preferential-attachment graph.
    Generate(Common),
    /// Run a single simulation and write its trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write per-node attributes and initial opinions.
        #[arg(long)]
        dump_attributes: bool,
    },
    /// Replicated runs over a list of variation points.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Sectioned key-value config file (a previous run's manifest works too).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// Master seed.
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Edge-list path; implies `source = file`.
    #[arg(long, allow_hyphen_values = true)]
    path: Option<String>,
    /// Arbitrary `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[arg(long, allow_hyphen_values = true)]
    source: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    prune_threshold: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nodes: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m_attach: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    graph_seed: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma2: Option<String>,

    /// random | top_in_degree | top_expertise
    #[arg(long, allow_hyphen_values = true)]
    strategy: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    initial_fraction: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    leader_count: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    replications: Option<String>,
    /// init-prop | bc | seeding | alpha | sigma2
    #[arg(long, allow_hyphen_values = true)]
    vary: Option<String>,
    /// Comma-separated variation values.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    resample_expertise: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    common_random_numbers: Option<String>,
}

impl Common {
    fn overrides(&self) -> anyhow::Result<Vec<(String, String)>> {
        let named = [
            ("source", &self.source),
            ("path", &self.path),
            ("prune_threshold", &self.prune_threshold),
            ("nodes", &self.nodes),
            ("m_attach", &self.m_attach),
            ("graph_seed", &self.graph_seed),
            ("b", &self.b),
            ("c", &self.c),
            ("omega1", &self.omega1),
            ("omega2", &self.omega2),
            ("omega3", &self.omega3),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("mu", &self.mu),
            ("sigma2", &self.sigma2),
            ("strategy", &self.strategy),
            ("initial_fraction", &self.initial_fraction),
            ("leader_count", &self.leader_count),
            ("epsilon", &self.epsilon),
            ("window", &self.window),
            ("t_max", &self.t_max),
            ("replications", &self.replications),
            ("vary", &self.vary),
            ("values", &self.values),
            ("resample_expertise", &self.resample_expertise),
            ("common_random_numbers", &self.common_random_numbers),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        let mut out = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            out.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        // dedicated flags win over --set
        out.extend(named.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_owned(), v))));
        Ok(out)
    }
}

enum Failure {
    Validation(String),
    Io(String),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (command, common) = match cli.command {
        Cmd::Stats(c) => (Command::Stats, c),
        Cmd::Prune(c) => (Command::Prune, c),
        Cmd::Generate(c) => (Command::Generate, c),
        Cmd::Simulate { common, dump_attributes } => (Command::Simulate { dump_attributes }, common),
        Cmd::Sweep(c) => (Command::Sweep, c),
    };
    let text = match &common.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let overrides = common.overrides().map_err(|e| Failure::Validation(e.to_string()))?;
    let cfg = parse_config(&text, &overrides).map_err(|e| Failure::Validation(e.to_string()))?;
    let files = run_command(command, &cfg).map_err(|e| match e {
        Error::Io(io) => Failure::Io(io.to_string()),
        other => Failure::Validation(other.to_string()),
    })?;
    eprintln!("wrote {} file(s) to {}", files.len(), cfg.out_dir.display());
    if let Some(summary) = files.get("stats.txt").or(files.get("summary.csv")) {
        print!("{summary}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = std::env::var("OPINIOND_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Validation(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Io(msg))) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(3),
    }
}
