use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use holonomy_core::sweep::{self, OutputFormat, RunConfig};
use holonomy_core::verify::{run_verify, VerifyOptions};

/// Geometric phases of a spin-1/2 in a rotating field.
#[derive(Parser)]
#[command(name = "holonomy-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Configuration file (key = value lines or a JSON document).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Grid steps per field period.
    #[arg(long, global = true, value_name = "N")]
    steps: Option<usize>,
    /// Seed for the randomized gauge checks.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate both branches once and report their phases.
    Evolve,
    /// Tabulate phases across a range of adiabaticity parameters.
    Sweep,
    /// Run the invariant suite; exit status 1 on any failure.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load_config(c: &Common) -> holonomy_core::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(steps) = c.steps {
        cfg.steps = steps;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(f) = c.format {
        cfg.output_format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if let Some(out) = &c.out {
        cfg.output_path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_output(cfg: &RunConfig) -> holonomy_core::Result<Box<dyn Write>> {
    Ok(match &cfg.output_path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn evolve(cfg: &RunConfig, quiet: bool) -> holonomy_core::Result<bool> {
    let report = sweep::run_evolve(cfg)?;
    let mut out = open_output(cfg)?;
    match cfg.output_format {
        OutputFormat::Csv => sweep::write_evolve_csv(&mut out, &report)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    if !quiet {
        for b in &report.branches {
            eprintln!(
                "{:<5} geometric {:.12} exact {:.12} deviation {:.3e} fidelity {:.15}",
                b.branch,
                b.phases.geometric,
                b.geometric_exact,
                b.deviation_from_exact,
                b.endpoint_fidelity
            );
        }
        if report.alpha_denominator_negative {
            eprintln!(
                "note: tilt-angle denominator is negative; alpha = {:.12} lies past pi/2",
                report.alpha
            );
        }
    }
    Ok(true)
}

fn sweep_cmd(cfg: &RunConfig, quiet: bool) -> holonomy_core::Result<bool> {
    let rows = sweep::run_sweep(cfg)?;
    let mut out = open_output(cfg)?;
    match cfg.output_format {
        OutputFormat::Csv => sweep::write_csv(&mut out, &rows)?,
        OutputFormat::Json => sweep::write_json(&mut out, &rows)?,
    }
    out.flush()?;
    let failed: Vec<_> = rows.iter().filter(|r| !r.is_ok()).collect();
    if !quiet {
        let worst = rows
            .iter()
            .map(|r| r.deviation_from_exact)
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max);
        eprintln!(
            "{} rows, {} failed, max deviation from exact {:.3e}",
            rows.len(),
            failed.len(),
            worst
        );
    }
    for r in &failed {
        eprintln!("eta {:e}: {}", r.eta, r.status);
    }
    Ok(failed.is_empty())
}

fn verify(cfg: &RunConfig, quiet: bool) -> holonomy_core::Result<bool> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        threshold_override: cfg.verify_threshold,
        tol: cfg.tol,
    };
    let report = run_verify(&opts);
    let text = report.render();
    if let Some(path) = &cfg.output_path {
        std::fs::write(path, &text)?;
    }
    if !quiet && cfg.output_path.is_none() {
        print!("{text}");
    }
    if !report.passed() {
        for c in report.failures() {
            eprintln!(
                "FAIL {}: measured {:e}, threshold {:e}",
                c.name, c.measured, c.threshold
            );
        }
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load_config(&cli.common).and_then(|cfg| match cli.command {
        Command::Evolve => evolve(&cfg, cli.common.quiet),
        Command::Sweep => sweep_cmd(&cfg, cli.common.quiet),
        Command::Verify => verify(&cfg, cli.common.quiet),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("holonomy-lab: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
