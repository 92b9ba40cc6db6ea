use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ficnull::experiment::{emit_plots, run_experiment, run_verify, ExperimentConfig, VerifyOptions};
use ficnull::linop::compute_singular_system;
use ficnull::models::load_matrix;
use ficnull::Result;

/// Weighted sparsity and Tikhonov regularization through fictitious null spaces.
#[derive(Parser)]
#[command(name = "ficnull", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its bundle.
    Run { config: PathBuf },
    /// Run the seeded verification sweep and print a JSON report.
    Verify {
        /// Seeds as a comma list or inclusive ranges, e.g. `0-49` or `1,5,9`.
        #[arg(long, default_value = "0-49")]
        seeds: String,
        /// Fixed instance shapes `ROWSxCOLS`, comma separated.
        #[arg(long)]
        sizes: Option<String>,
    },
    /// Render SVG charts from a run bundle.
    Plot { bundle: PathBuf },
    /// Print the singular values of a matrix file.
    Svd { matrix: PathBuf },
}

fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| format!("bad seed range '{part}'"))?,
                    b.trim().parse().map_err(|_| format!("bad seed range '{part}'"))?,
                );
                if a > b {
                    return Err(format!("empty seed range '{part}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad seed '{part}'"))?),
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}

fn parse_sizes(s: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (r, c) = p.split_once(['x', 'X']).ok_or_else(|| format!("bad size '{p}'"))?;
            let r: usize = r.parse().map_err(|_| format!("bad size '{p}'"))?;
            let c: usize = c.parse().map_err(|_| format!("bad size '{p}'"))?;
            if r < 2 || c < 2 {
                return Err(format!("size '{p}' is too small"));
            }
            Ok((r, c))
        })
        .collect()
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn execute(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let summary = run_experiment(&cfg)?;
            let failed = summary.records.iter().filter(|r| r.status != "ok").count();
            println!(
                "wrote {} cells to {} ({failed} failed)",
                summary.records.len(),
                summary.output.display()
            );
            Ok(Outcome::Ok)
        }
        Command::Verify { .. } => unreachable!("handled in main"),
        Command::Plot { bundle } => {
            let files = emit_plots(&bundle)?;
            println!("wrote {} plots under {}", files.len(), bundle.join("plots").display());
            Ok(Outcome::Ok)
        }
        Command::Svd { matrix } => {
            let a = load_matrix(&matrix)?;
            let svd = compute_singular_system(&a)?;
            println!("# {}x{} rank {}", a.rows(), a.cols(), svd.rank());
            println!("index,sigma");
            for (i, s) in svd.sigma().iter().enumerate() {
                println!("{},{s:.17e}", i + 1);
            }
            Ok(Outcome::Ok)
        }
    }
}

fn verify(seeds: &str, sizes: Option<&str>) -> std::result::Result<Outcome, String> {
    let opts = VerifyOptions {
        seeds: parse_seeds(seeds)?,
        sizes: sizes.map(parse_sizes).transpose()?.unwrap_or_default(),
    };
    let report = run_verify(&opts);
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    if let Some(first) = report.first_failure() {
        eprintln!("verification failed: {}: {}", first.name, first.detail);
        return Ok(Outcome::VerificationFailed);
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("FICNULL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = match cli.command {
        Command::Verify { seeds, sizes } => verify(&seeds, sizes.as_deref()),
        other => execute(other).map_err(|e| e.to_string()),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
