use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmc::commands::{cmd_eval, cmd_obstruct, cmd_verify, Outcome, EXIT_FAILURE};
use rmc::config::JobConfig;
use rmc::CliError;

/// Rigid meromorphic cocycles: obstruction kernels, special values and invariant suites.
#[derive(Parser)]
#[command(name = "rmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the obstruction kernel and certify or reject the divisor (exit 2 on rejection).
    Obstruct(Common),
    /// Evaluate the cocycle at special points.
    Eval(Common),
    /// Run the invariant suites (nonzero exit on failure).
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// definite3 | sig21 | sig31-bianchi
    #[arg(long, default_value = "sig31-bianchi")]
    model: String,
    /// prime (default 3 for sig21, 5 otherwise)
    #[arg(long)]
    p: Option<u64>,
    /// requested p-adic digits N
    #[arg(long, default_value_t = 6)]
    digits: u32,
    /// divisor weights, e.g. "3:1,6:-1,7:1"
    #[arg(long)]
    divisor: Option<String>,
    /// special point, e.g. "disc=8,flip=cm,orient=1" (repeatable)
    #[arg(long = "point")]
    points: Vec<String>,
    /// recognition target, e.g. "field=Qi_sqrtD,H=1e9"
    #[arg(long)]
    recognize: Option<String>,
    /// truncation level J (default from the digits and affinoid level)
    #[arg(long)]
    levels: Option<u32>,
    /// level-product cache file
    #[arg(long)]
    cache: Option<PathBuf>,
    /// write the JSON report here instead of stdout
    #[arg(long)]
    json: Option<PathBuf>,
    /// seed for randomized suites
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn config(&self) -> Result<JobConfig, CliError> {
        JobConfig::build(
            &self.model,
            self.p,
            self.digits,
            self.divisor.as_deref(),
            &self.points,
            self.recognize.as_deref(),
            self.levels,
            self.cache.clone(),
            self.json.clone(),
            self.seed,
        )
    }
}

fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    let (common, f): (&Common, fn(&JobConfig) -> Result<Outcome, CliError>) = match &cli.command {
        Command::Obstruct(c) => (c, cmd_obstruct),
        Command::Eval(c) => (c, cmd_eval),
        Command::Verify(c) => (c, cmd_verify),
    };
    let cfg = common.config()?;
    Ok((f(&cfg)?, cfg.json))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match run(cli) {
        Ok((out, json)) => {
            let stderr = std::io::stderr();
            let mut err = stderr.lock();
            for m in &out.messages {
                let _ = writeln!(err, "{m}");
            }
            let written = match json {
                Some(path) => std::fs::write(&path, &out.json).map_err(|e| CliError::io(path, e)),
                None => std::io::stdout()
                    .write_all(out.json.as_bytes())
                    .map_err(|e| CliError::io("<stdout>", e)),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return ExitCode::from(EXIT_FAILURE as u8);
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, CliError::Usage(_)) {
                64
            } else {
                EXIT_FAILURE as u8
            })
        }
    }
}
