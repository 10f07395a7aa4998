use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use atomforce::cli::{self, Command, ForceUnits, RunSpec, SweepSpec};
use atomforce::{Solver, Tolerances};
use clap::Parser;

/// Mean radiative forces on a two-level atom in commensurate plane waves.
#[derive(Parser, Debug)]
#[command(name = "atomforce", version)]
struct Args {
    /// force | spectrum | sweep | oracle | validate
    command: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    /// Sweep direction x,y,z
    #[arg(long, default_value = "1,0,0", allow_hyphen_values = true)]
    axis: String,
    /// Sweep range min,max,n
    #[arg(long, allow_hyphen_values = true)]
    vrange: Option<String>,
    /// Largest harmonic in `spectrum` output
    #[arg(long)]
    nmax: Option<i64>,
    /// Reserved; no command draws random numbers
    #[arg(long)]
    seed: Option<u64>,
    /// auto | matrix | contfrac
    #[arg(long, default_value = "auto")]
    solver: String,
    /// gamma | half-gamma
    #[arg(long, default_value = "gamma")]
    force_units: String,
    /// Config override key=value, e.g. lasers.0.rabi=2
    #[arg(long = "set")]
    overrides: Vec<String>,
    /// Also write a gnuplot script next to the output
    #[arg(long)]
    gnuplot: bool,
}

fn build(args: Args) -> atomforce::Result<RunSpec> {
    let command: Command = args.command.parse()?;
    let mut overrides = BTreeMap::new();
    for o in &args.overrides {
        let (k, v) = cli::parse_override(o)?;
        overrides.insert(k, v);
    }
    let sweep = match &args.vrange {
        Some(r) => Some(SweepSpec::parse_range(cli::parse_vector(&args.axis)?, r)?),
        None => None,
    };
    Ok(RunSpec {
        command,
        config_path: args.config,
        output_path: args.output,
        overrides,
        tolerances: Tolerances {
            rtol: args.rtol,
            atol: args.atol,
        },
        sweep,
        spectrum_n_max: args.nmax,
        seed: args.seed,
        solver: args.solver.parse::<Solver>()?,
        force_units: args.force_units.parse::<ForceUnits>()?,
        gnuplot: args.gnuplot,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = build(args).and_then(|spec| cli::run(&spec));
    match result {
        Ok(report) => {
            print!("{}", report.summary);
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("atomforce: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
