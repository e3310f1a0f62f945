use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgf_cli::{parse_config, run, Kind};

#[derive(Parser)]
#[command(name = "sgf", version, about = "Stochastic second-grade fluid experiments")]
struct Cli {
    #[command(subcommand)]
    kind: Command,
    /// `key = value` configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Adds Galerkin coefficients to trajectory files.
    #[arg(long, global = true)]
    dump_coefficients: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one trajectory.
    Simulate,
    /// Run the invariant suite; exits 1 if any check fails.
    Verify,
    /// Finite-difference checks of the tangent flow.
    Linearize,
    /// Pullback ensemble norms and absorbing radii.
    Pullback,
    /// Attractor point cloud.
    Attractor,
    /// Distance to the deterministic attractor across noise levels.
    Sweep,
}

impl From<Command> for Kind {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Kind::Simulate,
            Command::Verify => Kind::Verify,
            Command::Linearize => Kind::Linearize,
            Command::Pullback => Kind::Pullback,
            Command::Attractor => Kind::Attractor,
            Command::Sweep => Kind::Sweep,
        }
    }
}

fn fail(err: sgf_core::Error) -> ExitCode {
    let record = serde_json::json!({ "error": err.code(), "message": err.to_string() });
    eprintln!("{record}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(e.into()),
        },
        None => String::new(),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    cfg.kind = cli.kind.into();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    cfg.dump_coefficients |= cli.dump_coefficients;
    if let Err(e) = cfg.validate() {
        return fail(e);
    }
    match run(&cfg) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}
