use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bvalid::project::{load_project, parse_delimiter, run_project, write_reports};
use bvalid::report::Format;

#[derive(Parser)]
#[command(name = "bvalid", version, about = "Check CSV configuration data against B-language rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every rule of a project and write the reports.
    Check {
        /// Project file.
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format (text, csv, json); repeatable.
        #[arg(long = "format", value_parser = parse_format)]
        formats: Vec<Format>,
        /// Maximum counterexamples kept per block.
        #[arg(long = "max-ce", value_parser = clap::value_parser!(u64).range(1..))]
        max_ce: Option<u64>,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        jobs: Option<usize>,
        /// CSV delimiter.
        #[arg(long, value_parser = parse_delimiter)]
        delimiter: Option<u8>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    Format::parse(s).ok_or_else(|| format!("unknown format `{s}` (expected text, csv or json)"))
}

fn main() -> ExitCode {
    let Command::Check { config, out, formats, max_ce, jobs, delimiter } = Cli::parse().command;

    let mut cfg = match load_project(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    if !formats.is_empty() {
        cfg.formats = formats;
        cfg.formats.sort();
        cfg.formats.dedup();
    }
    if let Some(n) = max_ce {
        cfg.max_findings = n as usize;
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    if let Some(d) = delimiter {
        cfg.dialect.delimiter = d;
    }

    let (report, code) = run_project(&cfg);
    for e in &report.load_errors {
        eprintln!("error: {e}");
    }
    for i in &report.data_issues {
        eprintln!("data issue: {i}");
    }
    for r in &report.results {
        if let Some(e) = &r.error {
            eprintln!("error: rule {}: {e}", r.rule_id);
        }
    }
    match write_reports(&report, &cfg) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing reports to {}: {e}", cfg.out_dir.display());
            return ExitCode::from(2);
        }
    }
    let s = &report.summary;
    println!(
        "{} rules: {} pass, {} fail, {} error; {} counterexamples; {} data issues",
        s.rules, s.pass, s.fail, s.error, s.findings, s.data_issues
    );
    ExitCode::from(code as u8)
}
