use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqkd::harness::{self, parse_values, PointResult, Scenario, SweepSpec, PRESETS};
use cvqkd::Error;

#[derive(Parser)]
#[command(name = "simulate", version, about = "CV-QKD link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (all of its sweeps, or a single point).
    Run {
        /// Scenario file, or the name of a bundled preset.
        #[arg(long)]
        scenario: String,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads for sweep points (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Sweep one numeric parameter, replacing any sweeps in the scenario.
    Sweep {
        #[arg(long)]
        scenario: String,
        /// Parameter path, e.g. `receiver.nep`.
        #[arg(long)]
        param: String,
        /// `START:STOP:STEPS` or a comma-separated list.
        #[arg(long)]
        values: String,
        /// Space the values logarithmically.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the bundled presets.
    Presets {
        #[arg(long)]
        list: bool,
    },
}

fn load_scenario(arg: &str) -> Result<Scenario, Error> {
    let path = Path::new(arg);
    if path.exists() {
        return Scenario::load(path);
    }
    if PRESETS.iter().any(|(name, _, _)| *name == arg) {
        return harness::preset(arg);
    }
    Err(Error::InvalidArgument(format!(
        "`{arg}` is neither a readable file nor a bundled preset"
    )))
}

fn configure_pool(jobs: Option<usize>) -> Result<(), Error> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::InvalidArgument("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn report(results: &[PointResult]) {
    println!(
        "{:<40} {:>12} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9}",
        "scenario", "value", "T_eff", "xi_hat", "xi_err", "I_AB", "chi_EB", "skf"
    );
    for r in results {
        let m = &r.row;
        println!(
            "{:<40} {:>12.4e} {:>10.5} {:>10.5} {:>10.5} {:>9.4} {:>9.4} {:>9.4}",
            m.scenario, m.value, m.t_eff, m.xi_hat, m.xi_stderr, m.i_ab, m.chi_eb, m.skf
        );
        if let Some(k) = &r.key {
            println!("{}", cvqkd::postproc::pipeline::key_summary(k));
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Presets { .. } => {
            for (name, description, _) in PRESETS {
                println!("{name:<14} {description}");
            }
            Ok(())
        }
        Command::Run {
            scenario,
            seed,
            out,
            jobs,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s.validate()?;
            configure_pool(jobs)?;
            let results = harness::run_all(&s)?;
            harness::write_outputs(&s, &results, &out)?;
            report(&results);
            Ok(())
        }
        Command::Sweep {
            scenario,
            param,
            values,
            log,
            jobs,
            seed,
            out,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let values = parse_values(&values, log).map_err(|e| Error::Validation(vec![e.to_string()]))?;
            s.sweeps = vec![SweepSpec {
                param,
                values,
                set: Vec::new(),
            }];
            s.validate()?;
            configure_pool(jobs)?;
            let results = harness::run_all(&s)?;
            harness::write_outputs(&s, &results, &out)?;
            report(&results);
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Parse { .. } | Error::UnknownParameter(_) | Error::InvalidArgument(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
