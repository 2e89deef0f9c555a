use std::path::PathBuf;
use std::process;

use belldist_cli::commands::{self, CertifyArgs, ClassifyArgs, Context, ReproTarget};
use belldist_cli::{CliError, Report, EXIT_INPUT};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "belldist", version, about = "Bell-operator violation and distillability reports")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Optimizer restarts.
    #[arg(long, global = true, default_value_t = 16)]
    restarts: usize,
    /// Optimizer angle tolerance (rad).
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Keep measurement directions in the xy-plane.
    #[arg(long, global = true)]
    planar_only: bool,
    /// Also write the JSON report here.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    /// Largest register the linear algebra accepts.
    #[arg(long, global = true, env = "MAX_QUBITS")]
    max_qubits: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a Bell operator on a state.
    Eval {
        #[arg(long)]
        state: String,
        #[arg(long)]
        op: String,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Classify how a state can be distilled.
    Classify {
        #[arg(long)]
        state: Option<String>,
        #[arg(long, conflicts_with = "optimize")]
        op: Option<String>,
        /// Optimize MBK settings for the state first.
        #[arg(long)]
        optimize: bool,
        /// Classify a bare violation value (needs --qubits).
        #[arg(long, requires = "qubits", conflicts_with_all = ["state", "op", "optimize"])]
        beta: Option<f64>,
        #[arg(long)]
        qubits: Option<usize>,
    },
    /// Optimize measurement settings or the GHZ overlap.
    Optimize {
        #[arg(long)]
        state: String,
        #[arg(long, default_value = "mbk")]
        family: String,
        #[arg(long)]
        gamma: Option<f64>,
        /// Maximize the GHZ overlap over local unitaries instead.
        #[arg(long)]
        overlap: bool,
    },
    /// Violation bounds at fixed GHZ overlap.
    Bounds {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        r: Option<f64>,
        /// Report the overlap needed for distillability class p.
        #[arg(long)]
        p: Option<usize>,
        /// Also compute the three-qubit Uffink bound.
        #[arg(long)]
        uffink: bool,
        #[arg(long, default_value_t = 64)]
        grid_points: usize,
    },
    /// Recompute a reference value and compare.
    Repro {
        #[arg(value_enum)]
        target: ReproTarget,
    },
    /// Check the distillation invariants and write counterexample certificates.
    Certify {
        #[arg(long, requires = "op")]
        state: Option<String>,
        #[arg(long, requires = "state")]
        op: Option<String>,
        #[arg(long, default_value_t = 3)]
        qubits: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value = "certificates")]
        out_dir: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Eval { .. } => "eval",
            Self::Classify { .. } => "classify",
            Self::Optimize { .. } => "optimize",
            Self::Bounds { .. } => "bounds",
            Self::Repro { .. } => "repro",
            Self::Certify { .. } => "certify",
        }
    }
}

fn run(ctx: &Context, command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Eval { state, op, gamma } => commands::eval(ctx, state, op, *gamma),
        Command::Classify { state, op, optimize, beta, qubits } => commands::classify(
            ctx,
            &ClassifyArgs { state: state.as_deref(), op: op.as_deref(), optimize: *optimize, beta: *beta, qubits: *qubits },
        ),
        Command::Optimize { state, family, gamma, overlap } => commands::optimize(ctx, state, family, *gamma, *overlap),
        Command::Bounds { qubits, r, p, uffink, grid_points } => commands::bounds(ctx, *qubits, *r, *p, *uffink, *grid_points),
        Command::Repro { target } => commands::repro(ctx, *target),
        Command::Certify { state, op, qubits, count, out_dir } => {
            commands::certify(ctx, &CertifyArgs { state: state.as_deref(), op: op.as_deref(), qubits: *qubits, count: *count, out_dir })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.max_qubits {
        belldist::qlinalg::set_max_qubits(n);
    }
    let ctx = Context { seed: cli.seed, restarts: cli.restarts, tol: cli.tol, planar_only: cli.planar_only };
    let report = run(&ctx, &cli.command)
        .unwrap_or_else(|e| Report::error(cli.command.name(), json!(std::env::args().skip(1).collect::<Vec<_>>()), cli.seed, &e));
    let text = report.render();
    print!("{text}");
    for line in &report.summary {
        eprintln!("{line}");
    }
    if let Some(path) = &cli.json_out {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: {}", CliError::io(path, e));
            process::exit(EXIT_INPUT);
        }
    }
    process::exit(report.status.exit_code());
}
