//! Command-line front end. Exit status: 0 success, 1 usage or config error,
//! 2 numeric failure, 3 a single solve ended without converging.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::diagnostics::run_check;
use crate::error::{Error, Result};
use crate::lane_emden::Polytrope;
use crate::scan::run_scan;
use crate::solver::solve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "COREQUILIB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "corequilib",
    version,
    about = "Rotating self-gravitating gas around a rigid core"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, required_unless_present = "dump_effective_config")]
    out: Option<PathBuf>,
    /// Print the configuration with all defaults filled in and exit.
    #[arg(long)]
    dump_effective_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a single equilibrium.
    Solve(RunArgs),
    /// Sweep rotation rate and core strength.
    Scan(RunArgs),
    /// Run the operator and inequality diagnostics on the configured grid.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dump_effective_config: bool,
    },
    /// Reference solutions.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Debug, Subcommand)]
enum Oracle {
    /// Non-rotating polytrope from the Lane–Emden equation.
    LaneEmden {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) | Error::Domain(_) | Error::Io(_) => EXIT_USAGE,
        Error::Numeric(_) | Error::Range(_) | Error::Degenerate(_) | Error::LambdaBracket(_) => {
            EXIT_NUMERIC
        }
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn run_solve(config: &RunConfig, out: &Path, stdout: &mut dyn Write) -> Result<i32> {
    let spec = config.problem()?;
    let outcome = solve(spec, &config.scf_config())?;
    prepare_out(out)?;
    write_file(out, "config.json", &config.effective_json())?;
    write_file(out, "result.json", &outcome.to_json())?;
    write_file(out, "field.csv", &outcome.field_csv())?;
    write_file(out, "trace.csv", &outcome.trace_csv())?;
    let _ = writeln!(
        stdout,
        "{} after {} iterations, lambda = {:.10e}: {}",
        outcome.verdict.as_str(),
        outcome.state.iter,
        outcome.state.lambda,
        outcome.verdict.note()
    );
    Ok(if outcome.converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn run_scan_command(
    config: &RunConfig,
    out: &Path,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let spec = config.scan_spec()?;
    let table = run_scan(&spec)?;
    prepare_out(out)?;
    let cells = out.join("cells");
    prepare_out(&cells)?;
    write_file(out, "config.json", &config.effective_json())?;
    write_file(out, "scan.csv", &table.to_csv())?;
    let summary = serde_json::json!({ "rows": table.rows(), "warnings": table.warnings });
    write_file(out, "scan.json", &json(&summary))?;
    let n_mu = table.mu_values.len();
    for (n, cell) in table.cells.iter().enumerate() {
        let name = format!("omega{:03}_mu{:03}.json", n / n_mu, n % n_mu);
        write_file(&cells, &name, &cell.outcome.to_json())?;
    }
    for w in &table.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    for r in table.rows() {
        let _ = writeln!(
            stdout,
            "omega={} mu={} {}",
            r.omega,
            r.mu,
            r.verdict.as_str()
        );
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Solve(args) | Command::Scan(args) if args.dump_effective_config => {
            let config = RunConfig::from_file(&args.config)?;
            let _ = writeln!(stdout, "{}", config.effective_json());
            Ok(EXIT_OK)
        }
        Command::Solve(args) => {
            let config = RunConfig::from_file(&args.config)?;
            run_solve(
                &config,
                args.out.as_deref().expect("clap enforces --out"),
                stdout,
            )
        }
        Command::Scan(args) => {
            let config = RunConfig::from_file(&args.config)?;
            run_scan_command(
                &config,
                args.out.as_deref().expect("clap enforces --out"),
                stdout,
                stderr,
            )
        }
        Command::Check {
            config,
            samples,
            seed,
            dump_effective_config,
        } => {
            let config = RunConfig::from_file(&config)?;
            if dump_effective_config {
                let _ = writeln!(stdout, "{}", config.effective_json());
                return Ok(EXIT_OK);
            }
            let spec = config.problem()?;
            let report = run_check(&spec.grid, &spec.eos, &spec.core, samples, seed)?;
            let _ = writeln!(stdout, "{}", json(&report));
            Ok(EXIT_OK)
        }
        Command::Oracle(Oracle::LaneEmden { gamma, k, mass }) => {
            let p = Polytrope::new(gamma, k, mass)?;
            let _ = writeln!(stdout, "{}", json(&p));
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                // --help and --version
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Thread count requested through [`THREADS_VAR`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!(
                "{THREADS_VAR} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli_main(
            std::iter::once("corequilib").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["solve", "--config", "x.json"]).0, EXIT_USAGE);
        let (code, _, err) = run(&[
            "solve",
            "--config",
            "/nonexistent/c.json",
            "--out",
            "/tmp/x",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("c.json"));
    }

    #[test]
    fn oracle_prints_constants() {
        let (code, out, _) = run(&["oracle", "lane-emden", "--gamma", "2", "--k", "1"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["radius"].as_f64().unwrap() - 1.2533).abs() < 1e-4);
        assert!((v["xi1"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
        assert_eq!(
            run(&["oracle", "lane-emden", "--gamma", "1.2", "--k", "1"]).0,
            EXIT_USAGE
        );
    }

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Numeric("x".into())), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::LambdaBracket("x".into())), EXIT_NUMERIC);
    }
}
