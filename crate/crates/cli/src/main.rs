use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdelta::geometry::{build_mesh, read_mesh, write_mesh, DomainSpec};
use pdelta::harness::{parse_config, run_experiment, ErrorReport, ExperimentKind, Overrides};
use pdelta::Error;

#[derive(Parser)]
#[command(name = "pdelta", version, about = "Experiments for -div S(Du) = f with shifted power-law stress")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized constitutive equivalence suite.
    Check(RunArgs),
    /// Continuation solve on the finest configured level.
    Solve(RunArgs),
    /// Error table against a manufactured solution.
    Converge(RunArgs),
    /// Refinement study of the regularity indicators.
    Regularity(RunArgs),
    /// Export a built-in mesh, or re-export a mesh file.
    Mesh(MeshArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Finest mesh level; keeps the number of configured levels.
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args)]
struct MeshArgs {
    /// JSON domain spec such as '{"kind": "unit_disk"}'.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    domain: Option<String>,
    #[arg(long, default_value_t = 0)]
    level: usize,
    /// Mesh file to read instead of building one.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("{}", ErrorReport::from_error(err).to_json());
    ExitCode::from(pdelta::harness::exit_code(err) as u8)
}

fn run(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let mut config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if config.kind != kind {
        return fail(&Error::Config(format!(
            "kind: config is '{}' but the subcommand runs '{}'",
            config.kind.name(),
            kind.name()
        )));
    }
    let overrides = Overrides { seed: args.seed, level: args.level, output: args.out.clone() };
    if let Err(e) = config.apply(&overrides) {
        return fail(&e);
    }
    match run_experiment(&config) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if let Some(e) = &outcome.error {
                eprintln!("{}", e.to_json());
            }
            println!("manifest {}", outcome.manifest.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}

fn mesh(args: &MeshArgs) -> Result<(), Error> {
    let mesh = match (&args.input, &args.domain) {
        (Some(path), _) => read_mesh(std::io::BufReader::new(std::fs::File::open(path)?))?,
        (None, Some(text)) => {
            let spec: DomainSpec = serde_json::from_str(text).map_err(|e| Error::Config(format!("domain: {e}")))?;
            build_mesh(&spec, args.level)?
        }
        (None, None) => unreachable!("clap requires one of the two"),
    };
    write_mesh(&mesh, std::fs::File::create(&args.out)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Check(a) => run(ExperimentKind::CheckConstitutive, a),
        Command::Solve(a) => run(ExperimentKind::Solve, a),
        Command::Converge(a) => run(ExperimentKind::Converge, a),
        Command::Regularity(a) => run(ExperimentKind::Regularity, a),
        Command::Mesh(a) => match mesh(a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
    }
}
