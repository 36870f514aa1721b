//! Thin command-line front end over the library pipeline: `infer` runs the
//! end-to-end analysis on a CSV, `simulate` drives the coverage harness,
//! `screen` prints screening diagnostics only.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ere_glm::error::Error;
use ere_glm::family::GlmFamily;
use ere_glm::pipeline::{ingest, run_analysis, AnalysisOptions, ModalityMap};
use ere_glm::screening::screen_dataset;
use ere_glm::sim::{run_coverage, write_coverage_csv, CoverageConfig, Method};

#[derive(Parser)]
#[command(name = "ere-glm", version, about = "Modality-level information-gain inference for high-dimensional GLMs")]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate each target modality's information gain with CI and p-value.
    Infer(InferArgs),
    /// Run the synthetic coverage study and emit a plot-ready CSV table.
    Simulate(SimulateArgs),
    /// Screening diagnostics only: marginal estimates and the BIC threshold trace.
    Screen(ScreenArgs),
}

#[derive(Args)]
struct InferArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// JSON modality map: {"response": ..., "modalities": [{"name", "columns"}]}.
    #[arg(long)]
    config: PathBuf,
    /// Response family.
    #[arg(long, default_value = "gaussian")]
    family: String,
    /// Target modality name (repeatable; default: all).
    #[arg(long)]
    modality: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Report the one-sided lower confidence bound instead of the two-sided interval.
    #[arg(long)]
    one_sided: bool,
    /// Fixed screening threshold (skips the BIC grid search).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip column standardization.
    #[arg(long)]
    no_standardize: bool,
    /// Drop the intercept term.
    #[arg(long)]
    no_intercept: bool,
    /// Write the JSON report here (default: stdout table only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Design id: 1 (linear), 2 (logistic), 3 (probit).
    #[arg(long)]
    model: u8,
    /// Comma-separated δ values (default: the design's published grid).
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Comma-separated methods among oracle, sis_scad, sis_refit.
    #[arg(long, value_delimiter = ',', default_value = "oracle,sis_scad,sis_refit")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 20240901)]
    seed: u64,
    /// Quick preset: n = 200, p = 400, 200 replications.
    #[arg(long)]
    small: bool,
    /// Write the CSV table here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScreenArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "gaussian")]
    family: String,
    /// Fixed threshold (skips the BIC grid search).
    #[arg(long)]
    threshold: Option<f64>,
    /// Skip column standardization.
    #[arg(long)]
    no_standardize: bool,
    /// Write the threshold trace as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidConfig(_) | Error::Json(_) | Error::NonCanonicalFamily(_) => 2,
                Error::InvalidData(_) | Error::Csv(_) | Error::Io(_) => 3,
                _ => 4,
            })
        }
    }
}

fn run(command: Command) -> ere_glm::Result<()> {
    match command {
        Command::Infer(args) => infer_command(args),
        Command::Simulate(args) => simulate_command(args),
        Command::Screen(args) => screen_command(args),
    }
}

fn infer_command(args: InferArgs) -> ere_glm::Result<()> {
    let map = ModalityMap::from_path(&args.config)?;
    let (data, partition) = ingest(&args.data, &map)?;
    let opts = AnalysisOptions {
        family: GlmFamily::from_name(&args.family)?,
        targets: args.modality,
        alpha: args.alpha,
        one_sided: args.one_sided,
        threshold: args.threshold,
        standardize: !args.no_standardize,
        intercept: !args.no_intercept,
        seed: args.seed,
        ..AnalysisOptions::default()
    };
    let report = run_analysis(&data, &partition, &opts)?;

    eprintln!(
        "screening: gamma = {:.6}, s_tilde = {} of {} columns",
        report.gamma, report.s_tilde, report.p
    );
    for m in &report.modalities {
        eprintln!(
            "modality {}: s_tilde_m = {}, lambda1 = {:.6}, lambda2 = {:.6}, converged = {}/{}{}",
            m.name,
            m.s_tilde_m,
            m.lambda1,
            m.lambda2,
            m.full_converged,
            m.reduced_converged,
            if m.quasi_separated { ", quasi-separated" } else { "" }
        );
    }
    print!("{}", report.render_table());
    if !report.canonical_theory {
        println!("note: probit results are outside the canonical chi-squared theory");
    }

    if let Some(path) = args.out {
        std::fs::write(&path, report.to_json()?)?;
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}

fn simulate_command(args: SimulateArgs) -> ere_glm::Result<()> {
    let mut cfg = CoverageConfig::new(args.model);
    if args.small {
        cfg = cfg.small();
    }
    if !args.delta.is_empty() {
        cfg.deltas = args.delta;
    }
    cfg.methods = args
        .methods
        .iter()
        .map(|m| Method::from_name(m))
        .collect::<ere_glm::Result<Vec<_>>>()?;
    // --small presets reps to 200 unless the user set --reps explicitly
    if !args.small || args.reps != 500 {
        cfg.reps = args.reps;
    }
    cfg.alpha = args.alpha;
    cfg.base_seed = args.seed;

    let cells = run_coverage(&cfg)?;
    match args.out {
        Some(path) => {
            let file = std::fs::File::create(&path)?;
            write_coverage_csv(&cells, std::io::BufWriter::new(file))?;
            eprintln!("table written to {}", path.display());
        }
        None => {
            let mut buf = Vec::new();
            write_coverage_csv(&cells, &mut buf)?;
            std::io::stdout().write_all(&buf)?;
        }
    }
    Ok(())
}

fn screen_command(args: ScreenArgs) -> ere_glm::Result<()> {
    let map = ModalityMap::from_path(&args.config)?;
    let (data, partition) = ingest(&args.data, &map)?;
    let family = GlmFamily::from_name(&args.family)?;
    data.check_family(&family)?;

    // mirror the inference pipeline's standardization so thresholds match
    let mut x = data.x.clone();
    if !args.no_standardize {
        let n = data.n();
        for j in 0..data.p() {
            let mut col = x.column_mut(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let sd = var.sqrt();
            for v in col.iter_mut() {
                *v = if sd > 0.0 { (*v - mean) / sd } else { *v - mean };
            }
        }
    }
    let work = ere_glm::Dataset::new(x, data.y.clone(), data.column_names.clone())?;
    let result = screen_dataset(&work, &family, None, args.threshold, &[])?;

    println!("chosen threshold: {:.6}", result.threshold);
    println!("screened {} of {} columns:", result.selected.len(), work.p());
    for &j in &result.selected {
        let modality = partition
            .iter()
            .find(|(_, block)| block.contains(&j))
            .map(|(name, _)| name)
            .unwrap_or("-");
        println!("  {:<24} modality={:<12} mmle={:+.6}", work.column_names[j], modality, result.mmle[j]);
    }
    if !result.bic_trace.is_empty() {
        println!("threshold trace (threshold, size, bic):");
        for c in &result.bic_trace {
            println!("  {:.6}, {}, {:.4}", c.threshold, c.size, c.bic);
        }
    }

    if let Some(path) = args.out {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["threshold", "size", "bic"])?;
        for c in &result.bic_trace {
            w.write_record([format!("{}", c.threshold), c.size.to_string(), format!("{}", c.bic)])?;
        }
        w.flush()?;
        eprintln!("trace written to {}", path.display());
    }
    Ok(())
}
