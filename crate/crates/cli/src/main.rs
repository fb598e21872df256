use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nematic_cli::config::RunConfig;
use nematic_cli::runner::{execute, is_config_error};
use nematic_cli::sweep::{parse_amplitudes, sweep, write_table};
use nematic_core::parallel::worker_threads;
use nematic_core::verification::{mms_run_parallel, run_suite, MmsCase, SuiteOptions};
use nematic_core::{Error, SolverConfig};

/// Exit statuses.
const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "nematic", version, about = "Inhomogeneous nematic liquid crystal flow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration to its horizon.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for diagnostics, snapshots and the summary.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the built-in invariant suite.
    Verify {
        #[arg(long, hide = true)]
        flip_elastic_sign: bool,
    },
    /// Manufactured-solution convergence study.
    Mms {
        #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128])]
        cells: Vec<usize>,
    },
    /// Amplitude sweep of a configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        amplitudes: String,
        /// Write `sweep.csv` here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: &Error, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn run(config: PathBuf, out: PathBuf) -> ExitCode {
    let cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    match execute(&cfg, Some(&out)) {
        Ok(s) => {
            println!(
                "{}: {} steps to t = {} (smallness {}, C0 = {:e}); outputs in {}",
                s.status.as_str(),
                s.steps,
                s.t_final,
                s.smallness.verdict,
                s.smallness.c0,
                out.display()
            );
            if let Some(r) = &s.blowup_reason {
                eprintln!("blow-up at T* = {}: {r}", s.t_star.unwrap_or(s.t_final));
            }
            if let Some(f) = &s.failure {
                eprintln!("run failed: {f}");
            }
            ExitCode::from(s.status.exit_code() as u8)
        }
        Err(e) if is_config_error(&e) => fail(&e, EXIT_CONFIG),
        Err(e) => fail(&e, EXIT_RUNTIME),
    }
}

fn verify(flip_elastic_sign: bool) -> ExitCode {
    let report = run_suite(&SuiteOptions {
        flip_elastic_sign,
        ..Default::default()
    });
    println!("{:<28} {:<6} {:>9}  detail", "invariant", "result", "seconds");
    for r in &report.rows {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("{:<28} {:<6} {:>9.2}  {}", r.name, verdict, r.seconds, r.detail);
    }
    if report.all_passed() {
        ExitCode::from(EXIT_OK)
    } else {
        eprintln!("failing invariants: {}", report.failures().join(", "));
        ExitCode::from(EXIT_VERIFY)
    }
}

fn mms(cells: Vec<usize>) -> ExitCode {
    let table = match mms_run_parallel(&SolverConfig::default(), &cells, MmsCase::Manufactured, worker_threads()) {
        Ok(t) => t,
        Err(e @ Error::Precondition(_)) => return fail(&e, EXIT_CONFIG),
        Err(e) => return fail(&e, EXIT_RUNTIME),
    };
    println!("cells,h,dt,steps,err_rho,err_u,err_d");
    for l in &table.levels {
        println!("{},{:e},{:e},{},{:e},{:e},{:e}", l.cells, l.h, l.dt, l.steps, l.err_rho, l.err_u, l.err_d);
    }
    for (name, o) in [("rho", &table.rho), ("u", &table.u), ("d", &table.d)] {
        let pw: Vec<String> = o.pairwise.iter().map(|p| format!("{p:.3}")).collect();
        println!("# order {name}: pairwise [{}], fitted {:.3}", pw.join(", "), o.fitted);
    }
    match table.check() {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => fail(&e, EXIT_VERIFY),
    }
}

fn sweep_cmd(config: PathBuf, amplitudes: String, out: Option<PathBuf>) -> ExitCode {
    let (cfg, amps) = match RunConfig::load(&config).and_then(|c| Ok((c, parse_amplitudes(&amplitudes)?))) {
        Ok(v) => v,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    let rows = match sweep(&cfg, &amps, worker_threads()) {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => return fail(&e, EXIT_CONFIG),
        Err(e) => return fail(&e, EXIT_RUNTIME),
    };
    let written = match out {
        Some(dir) => std::fs::create_dir_all(&dir)
            .map_err(Error::from)
            .and_then(|_| std::fs::File::create(dir.join("sweep.csv")).map_err(Error::from))
            .and_then(|f| write_table(f, &cfg, &rows).map(|_| ())),
        None => write_table(std::io::stdout().lock(), &cfg, &rows).map(|_| ()),
    };
    match written {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => fail(&e, EXIT_RUNTIME),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::Verify { flip_elastic_sign } => verify(flip_elastic_sign),
        Command::Mms { cells } => mms(cells),
        Command::Sweep { config, amplitudes, out } => sweep_cmd(config, amplitudes, out),
    }
}
