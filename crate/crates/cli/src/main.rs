use clap::Parser;
use rvm_cli::{CliError, ModeRegistry, RunContext};
use std::path::PathBuf;
use std::process::ExitCode;

/// Relativistic Vlasov-Maxwell lab.
///
/// Exit codes: 0 ok, 1 runtime or IO error, 2 malformed input,
/// 3 monitor breach or divergence, 4 oracle failure.
#[derive(Debug, Parser)]
#[command(name = "rvm", version)]
struct Args {
    /// Scenario file (required for simulate).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// simulate | validate-kernels | validate-maxwell | validate-lightcone
    #[arg(long, default_value = "simulate")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, env = "RVM_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn run(args: Args) -> Result<i32, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    let registry = ModeRegistry::with_builtins();
    let mode = registry.get(&args.mode)?;
    let ctx = RunContext { scenario: args.scenario, out: args.out, seed: args.seed, quiet: args.quiet };
    let outcome = mode.run(&ctx)?;
    if !ctx.quiet {
        println!("{}", outcome.headline);
        for a in &outcome.artifacts {
            println!("  wrote {}", a.display());
        }
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { rvm_cli::exit::MALFORMED } else { rvm_cli::exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = run(args).unwrap_or_else(|e| {
        eprintln!("rvm: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
