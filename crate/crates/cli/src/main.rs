use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ebus_harness::bench::{run_bench_with, BenchConfig, Scenario};
use ebus_harness::decay::{run_decay_with, DecayConfig};
use ebus_harness::output::{Format, RowWriter};
use ebus_harness::selftest::{run_selftest, SelftestConfig};
use ebus_harness::HarnessError;

#[derive(Parser)]
#[command(
    name = "ebus",
    version,
    about = "Experiments and checks for the ebus exact sampler"
)]
struct Cli {
    /// Row format for experiment output.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weight-decay accuracy run: JSD and chi-square p-value per step.
    Decay {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Draws per step.
        #[arg(long, default_value = "1e5", value_parser = parse_count)]
        draws: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median time per iteration for one scenario over a list of sizes.
    Bench {
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// Comma-separated sizes; scientific notation is accepted.
        #[arg(long, value_delimiter = ',', default_value = "1e3,1e4,1e5,1e6", value_parser = parse_count)]
        sizes: Vec<usize>,
        /// Timed runs per size (default: 50 below 1e6 items, 5 from there on).
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in check suites; exits 1 on any failure.
    Selftest {
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
}

/// Positive integer, also written as `1e5` or `2.5e3`.
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.fract() != 0.0 || !(0.0..=9.007_199_254_740_992e15).contains(&v) {
        return Err(format!("not a nonnegative integer: {s:?}"));
    }
    Ok(v as usize)
}

fn open_out(out: Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Decay {
            n,
            steps,
            draws,
            seed,
            out,
        } => {
            let cfg = DecayConfig {
                n,
                steps,
                draws_per_step: draws as u64,
                seed,
            };
            cfg.validate()?;
            let mut w = RowWriter::new(cli.format, open_out(out)?);
            let mut err = None;
            run_decay_with(&cfg, |row| {
                if let Err(e) = w.write(row) {
                    err.get_or_insert(e);
                }
            })?;
            err.map_or(Ok(()), Err)?;
            w.finish()?;
        }
        Command::Bench {
            scenario,
            sizes,
            repeats,
            seed,
            out,
        } => {
            let cfg = BenchConfig {
                scenario,
                sizes,
                repeats,
                seed,
            };
            cfg.validate()?;
            let mut w = RowWriter::new(cli.format, open_out(out)?);
            let mut err = None;
            run_bench_with(&cfg, |row| {
                if let Err(e) = w.write(row) {
                    err.get_or_insert(e);
                }
            })?;
            err.map_or(Ok(()), Err)?;
            w.finish()?;
        }
        Command::Selftest { seed } => {
            let report = run_selftest(&SelftestConfig {
                seed,
                ..SelftestConfig::default()
            });
            println!("{report}");
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(HarnessError::InvalidConfig(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
