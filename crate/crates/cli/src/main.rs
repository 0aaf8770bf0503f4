use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dislocation_cli::{cmd_audit, cmd_preset, cmd_refine, cmd_run, load_config, CliError, RunSummary};

#[derive(Parser)]
#[command(name = "sim", version, about = "Two-species dislocation density simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file.
    Run { config: PathBuf },
    /// Run a named preset (case1, case2, stationary, pure-transport).
    Preset {
        name: String,
        #[arg(long, default_value = "sim_out")]
        out: PathBuf,
    },
    /// Grid/time refinement study on a configuration.
    Refine {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Recheck every bound in a finished run directory.
    Audit { dir: PathBuf },
}

fn print_run(s: &RunSummary) {
    println!("steps={} t={} dir={}", s.steps, s.final_time, s.output_dir.display());
    if s.strict_cfl_ok == Some(false) {
        println!("warning: step sizes exceed the strict CFL limits");
    }
    match s.first_violation {
        Some((bound, step)) => println!("bounds: first violation '{bound}' at step {step}"),
        None => println!("bounds: all satisfied"),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SIM_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("SIM_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("SIM_THREADS: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => print_run(&cmd_run(&load_config(&config)?)?),
        Command::Preset { name, out } => print_run(&cmd_preset(&name, out)?),
        Command::Refine { config, levels } => {
            let (report, path) = cmd_refine(&load_config(&config)?, levels)?;
            for r in &report.rows {
                let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"));
                println!(
                    "level={} N={} N_T={} err_linf={} order_linf={}",
                    r.level,
                    r.n,
                    r.steps,
                    fmt(r.err_linf()),
                    fmt(r.order_linf)
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Audit { dir } => {
            let s = cmd_audit(&dir)?;
            println!("audit ok: {} rows, {} snapshots", s.rows, s.snapshots);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
