//! Command-line driver: argument parsing, run orchestration and output files.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod selftest;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use manifest::RunManifest;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

/// Bad flag combination detected after parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        pool = pool.num_threads(w as usize);
    }
    let pool = pool.build()?;
    pool.install(|| {
        use args::Command::*;
        match &cli.command {
            Simulate(a) => report(commands::simulate(a, &cli.out)?, &cli.out),
            Online(a) => report(commands::online(a, &cli.out)?, &cli.out),
            Ingest(a) => report(commands::ingest(a, &cli.out)?, &cli.out),
            Realbench(a) => report(commands::realbench(a, &cli.out)?, &cli.out),
            Selftest(a) => {
                let checks = selftest::run_checks(a);
                for c in &checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                let failed = checks.iter().filter(|c| !c.passed).count();
                anyhow::ensure!(failed == 0, "{failed} self-test check(s) failed");
                Ok(())
            }
        }
    })
}

fn report(m: RunManifest, dir: &std::path::Path) -> anyhow::Result<()> {
    for s in &m.stats {
        println!(
            "{:<5} n={:<4} rounds={:<5} mean={:.6} median={:.6}{}",
            s.estimator,
            s.n_bids,
            s.rounds,
            s.mean_regret,
            s.median_regret,
            if s.skipped > 0 { format!(" skipped={}", s.skipped) } else { String::new() }
        );
    }
    if let Some(o) = &m.online {
        println!(
            "exploration rounds={} bids={}/{} skipped={} final avg regret={}",
            o.exploration_rounds,
            o.exploration_bids,
            o.exploitation_bids,
            o.skipped_rounds,
            o.final_avg_cumulative_regret.map_or("n/a".into(), |r| format!("{r:.6}"))
        );
    }
    for f in &m.outputs {
        println!("wrote {}", dir.join(f).display());
    }
    Ok(())
}

/// Parses `args` and runs the command, mapping failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
