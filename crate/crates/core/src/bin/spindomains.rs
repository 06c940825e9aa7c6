//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 invalid input (parse,
//! validation, unsupported configuration, underdetermined fit), 3 numerical
//! failure (integration error, no steady state, partial sweep).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spindomains::experiments::{self, fit_inverse_n};
use spindomains::io::{load_scenario, write_fit, write_series, write_sweep, OracleReport};
use spindomains::Error;

#[derive(Parser)]
#[command(name = "spindomains", version, about = "Two collective spin domains relaxing into a shared reservoir")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write one CSV per solver.
    Run {
        scenario: PathBuf,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        /// Replace a scenario key, e.g. `temperature_mk=400` or `domains.n1=20`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Relaxation times over balanced domain sizes and the `a/N + b` fit.
    Sweep {
        scenario: PathBuf,
        /// Comma-separated sizes or an inclusive range `first..last:step`.
        #[arg(short, long, value_name = "LIST")]
        n: String,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Steady state predicted from the total-spin sector decomposition.
    Oracle {
        scenario: PathBuf,
        /// Machine-readable output.
        #[arg(long)]
        csv: bool,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Domain(_) | Error::Validation { .. } | Error::Unsupported(_) | Error::Fit(_) | Error::Parse(_) => 2,
        Error::Integration { .. } | Error::NumericalCorruption(_) | Error::NotConverged(_) => 3,
        Error::Contract(_) => 1,
    }
}

fn parse_sizes(spec: &str) -> Result<Vec<u32>, Error> {
    let bad = |why: &str| Error::validation("n", format!("`{spec}`: {why}"));
    if let Some((first, rest)) = spec.split_once("..") {
        let (last, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad("expected first..last:step"));
        let (first, last, step) = (num(first)?, num(last)?, num(step)?);
        if step == 0 || last < first {
            return Err(bad("need step > 0 and last >= first"));
        }
        return Ok((first..=last).step_by(step as usize).collect());
    }
    spec.split(',').map(|s| s.trim().parse::<u32>().map_err(|_| bad("expected comma-separated sizes"))).collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_run(scenario: &Path, out: &Path, overrides: &[String]) -> Result<(), Error> {
    let sc = load_scenario(scenario, overrides)?;
    let all = experiments::run(&sc)?;
    let mut unconverged = Vec::new();
    for series in &all {
        let name = format!("{}.{}.csv", sc.name, series.solver.as_str());
        let mut w = create(out, &name)?;
        write_series(&mut w, series)?;
        w.flush()?;
        println!("{}", out.join(&name).display());
        if !series.converged {
            unconverged.push(series.solver.as_str());
        }
    }
    if !unconverged.is_empty() {
        return Err(Error::NotConverged(format!(
            "{} did not reach a steady state by t_max_s = {}",
            unconverged.join(", "),
            sc.t_max_s
        )));
    }
    Ok(())
}

fn cmd_sweep(scenario: &Path, sizes: &str, out: &Path, overrides: &[String]) -> Result<(), Error> {
    let base = load_scenario(scenario, overrides)?;
    let ns = parse_sizes(sizes)?;
    let mut distinct = ns.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct N, got {}", distinct.len())));
    }
    let points = experiments::sweep(&base, &ns)?;
    let mut w = create(out, "tau.csv")?;
    write_sweep(&mut w, &points)?;
    w.flush()?;

    let mut failed = Vec::new();
    let mut taus = Vec::new();
    for p in &points {
        match &p.tau_s {
            Ok(t) => taus.push((p.n, *t)),
            Err(e) => {
                eprintln!("N = {}: {e}", p.n);
                failed.push(p.n);
            }
        }
    }
    if !failed.is_empty() {
        return Err(Error::NotConverged(format!("sweep incomplete, failed at N = {failed:?}")));
    }
    let fit = fit_inverse_n(&taus)?;
    let mut w = create(out, "fit.txt")?;
    write_fit(&mut w, &fit)?;
    w.flush()?;
    let stdout = io::stdout();
    write_fit(stdout.lock(), &fit)?;
    Ok(())
}

fn cmd_oracle(scenario: &Path, csv: bool, overrides: &[String]) -> Result<(), Error> {
    let sc = load_scenario(scenario, overrides)?;
    let report = OracleReport::new(&sc)?;
    let stdout = io::stdout();
    report.write(stdout.lock(), csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out, overrides } => cmd_run(scenario, out, overrides),
        Command::Sweep { scenario, n, out, overrides } => cmd_sweep(scenario, n, out, overrides),
        Command::Oracle { scenario, csv, overrides } => cmd_oracle(scenario, *csv, overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
