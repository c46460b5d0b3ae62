//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coevo::cli::{self, CliError, RunOptions};
use coevo::report::{render_counts_table, render_metric_table};

#[derive(Parser)]
#[command(name = "coevo", version, about = "Kernel-driver co-evolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a git repository into a case-pack corpus.
    Mine {
        /// Path to the repository worktree.
        repo: PathBuf,
        #[arg(long, default_value = "drivers/")]
        subtree: String,
        /// Start date, YYYY-MM-DD.
        #[arg(long)]
        since: String,
        /// End date, YYYY-MM-DD (inclusive).
        #[arg(long)]
        until: String,
        /// Classifier confidence cutoff (inclusive).
        #[arg(long, default_value_t = 0.5)]
        min_confidence: f64,
        /// Output corpus directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a generated patch against a reference patch over a baseline.
    Score {
        /// Baseline source: a directory or a single C file.
        #[arg(long)]
        baseline: PathBuf,
        /// Reference patch file.
        #[arg(long = "ref")]
        ref_patch: PathBuf,
        /// Generated patch file.
        #[arg(long = "gen")]
        gen_patch: PathBuf,
        #[arg(long, default_value_t = 20)]
        fuzz: usize,
    },
    /// Run the adaptation loop over every pack in a corpus.
    Run {
        /// Corpus directory (with index.json).
        corpus: PathBuf,
        /// Generation backend: mock, mock-fail, http, or scripted:<path>.
        #[arg(long, default_value = "mock")]
        backend: String,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..=10))]
        max_attempts: u64,
        /// Static gate threshold (inclusive).
        #[arg(long, default_value_t = 0.7)]
        threshold: f64,
        #[arg(long, default_value_t = 20)]
        fuzz: usize,
        /// Per-pack parallelism; 1 keeps runs fully sequential.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Logs directory; defaults to <corpus>/logs.
        #[arg(long)]
        logs: Option<PathBuf>,
    },
    /// Aggregate session logs into a batch report.
    Report {
        /// A sessions.jsonl file or the directory containing one.
        logs: PathBuf,
    },
    /// Validate every pack in a corpus against the schema and invariants.
    Validate { corpus: PathBuf },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Mine {
            repo,
            subtree,
            since,
            until,
            min_confidence,
            out,
        } => {
            let summary = cli::cmd_mine(&repo, &subtree, &since, &until, min_confidence, &out)?;
            println!("candidates: {}", summary.candidates);
            println!("retained:   {}", summary.retained);
            println!("deduped:    {}", summary.deduped);
            println!("linked:     {}", summary.linked);
            println!("exported:   {}", summary.exported);
            if summary.unlinked > 0 {
                eprintln!("skipped {} commit(s) without a kernel-hash trailer", summary.unlinked);
            }
        }
        Command::Score {
            baseline,
            ref_patch,
            gen_patch,
            fuzz,
        } => {
            let report = cli::cmd_score(&baseline, &ref_patch, &gen_patch, fuzz)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Input(e.to_string()))?;
            println!("{json}");
        }
        Command::Run {
            corpus,
            backend,
            max_attempts,
            threshold,
            fuzz,
            jobs,
            config,
            logs,
        } => {
            let report = cli::cmd_run(&RunOptions {
                corpus,
                backend,
                max_attempts: max_attempts as usize,
                threshold,
                fuzz,
                jobs,
                config,
                logs,
            })?;
            print!("{}", render_counts_table(&report.batch));
            eprintln!(
                "{} session(s); logs in {}",
                report.sessions,
                report.logs_dir.display()
            );
        }
        Command::Report { logs } => {
            let output = cli::cmd_report(&logs)?;
            let json = serde_json::to_string_pretty(&output)
                .map_err(|e| CliError::Input(e.to_string()))?;
            println!("{json}");
            eprint!("{}", render_counts_table(&output.batch));
            if !output.batch.scores.is_empty() {
                eprint!("{}", render_metric_table(&output.batch, &output.categories));
            }
        }
        Command::Validate { corpus } => {
            let count = cli::cmd_validate(&corpus)?;
            println!("{count} pack(s) valid");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
