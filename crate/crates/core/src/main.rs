use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ehrenfest::config::{ExperimentConfig, Settings};
use ehrenfest::experiments::{execute, Command};
use ehrenfest::Error;

/// Coherent-state delocalization experiments.
#[derive(Parser, Debug)]
#[command(name = "ehrenfest", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evolve a coherent state and record observables.
    Evolve(Common),
    /// Dilation delocalization table.
    Dilation(Common),
    /// Delocalization time against ln(1/hbar).
    Sweep(Common),
    /// Husimi mass transport onto the double-well separatrix.
    Doublewell(Common),
    /// Position sampling, collapse and resampling.
    Measure(Common),
    /// Fixed points and invariant curves of the classical flow.
    Manifold(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Planck constant; repeat for sweeps.
    #[arg(long)]
    hbar: Vec<f64>,
    /// dilation | harmonic | doublewell
    #[arg(long)]
    model: Option<String>,
    /// Absolute snapshot time; repeatable.
    #[arg(long = "t", conflicts_with = "t_ehrenfest")]
    t: Vec<f64>,
    /// Snapshot time in units of ln(1/hbar); repeatable.
    #[arg(long = "t-ehrenfest")]
    t_ehrenfest: Vec<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    grid_l: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Born samples per state (measure).
    #[arg(long)]
    samples: Option<usize>,
    /// Initial centre (evolve).
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<f64>,
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> ehrenfest::Result<ExperimentConfig> {
        let mut s = match &self.config {
            Some(path) => Settings::parse(&std::fs::read_to_string(path)?)?,
            None => Settings::default(),
        };
        s.set("hbar", &self.hbar);
        s.set("model", &self.model);
        if !self.t.is_empty() {
            s.set("t", &self.t);
            s.clear("t-ehrenfest");
        }
        if !self.t_ehrenfest.is_empty() {
            s.set("t-ehrenfest", &self.t_ehrenfest);
            s.clear("t");
        }
        s.set("grid-n", &self.grid_n);
        s.set("grid-l", &self.grid_l);
        s.set("dt", &self.dt);
        s.set("seed", &self.seed);
        s.set("out", self.out.iter().map(|p| p.display()));
        s.set("samples", &self.samples);
        s.set("q0", &self.q0);
        s.set("p0", &self.p0);
        ExperimentConfig::from_settings(&s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Dilation(a) => (Command::Dilation, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Doublewell(a) => (Command::DoubleWell, a),
        Cmd::Measure(a) => (Command::Measure, a),
        Cmd::Manifold(a) => (Command::Manifold, a),
    };
    match args.resolve().and_then(|cfg| execute(cmd, &cfg)) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
