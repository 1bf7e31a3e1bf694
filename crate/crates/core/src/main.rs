use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use itergodic::identities::run_suite;
use itergodic::runner::{run, validate_file, IDENTITY_CASES};

#[derive(Parser)]
#[command(version, about = "Iterated sums and integrals of ergodic processes")]
struct Cli {
    /// Worker threads for replications and scans.
    #[arg(long, global = true, env = "ITERGODIC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV files.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// Run the algebraic self-check suite.
    Identities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = IDENTITY_CASES)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> itergodic::Result<ExitCode> {
    match command {
        Command::Run { config, out } => {
            let summary = run(&config, out.as_deref())?;
            for line in &summary.lines {
                println!("{line}");
            }
            println!(
                "wrote {} files to {}",
                summary.files.len(),
                summary.output_dir.display()
            );
            Ok(exit(summary.failures == 0))
        }
        Command::Validate { config } => {
            let exp = validate_file(&config)?;
            println!(
                "{}: ok ({} words, {} checkpoints, depth {})",
                config.display(),
                exp.words.len(),
                exp.checkpoints.len(),
                exp.depth
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Identities { seed, cases } => {
            let checks = run_suite(seed, cases)?;
            for c in &checks {
                println!(
                    "{} {}: {}/{} (worst {:.2e})",
                    if c.ok() { "PASS" } else { "FAIL" },
                    c.name,
                    c.passed,
                    c.total,
                    c.worst
                );
            }
            Ok(exit(checks.iter().all(|c| c.ok())))
        }
    }
}

fn exit(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
