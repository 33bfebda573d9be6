//! `fss-funnel`: assess institutions from CSV extracts, or generate a
//! synthetic dataset to assess.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fss_funnel::cli::synth::{self, SynthParams};
use fss_funnel::cli::{run_assessment, CliError, RunRequest};

#[derive(Debug, Parser)]
#[command(
    name = "fss-funnel",
    version,
    about = "FSS indicator and funnel-plot assessment of institutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score researchers, aggregate per institution and classify against funnel bands
    Assess(AssessArgs),
    /// Write a synthetic researchers/publications/baselines dataset
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct AssessArgs {
    #[arg(long, value_name = "CSV")]
    researchers: PathBuf,
    #[arg(long, value_name = "CSV")]
    publications: PathBuf,
    #[arg(long, value_name = "CSV")]
    baselines: PathBuf,
    /// key=value configuration; defaults apply when omitted
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// JSON report destination
    #[arg(long, value_name = "JSON")]
    report: PathBuf,
    #[arg(long, value_name = "SVG")]
    funnel_svg: Option<PathBuf>,
    #[arg(long, value_name = "SVG")]
    qq_svg: Option<PathBuf>,
    #[arg(long, value_name = "SVG")]
    caterpillar_svg: Option<PathBuf>,
    /// Label flagged institutions on the funnel plot
    #[arg(long)]
    show_labels: bool,
    /// Suppress the summary on stdout
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory for researchers.csv, publications.csv, baselines.csv and config.txt
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    institutions: usize,
    #[arg(long, default_value_t = 5)]
    min_size: usize,
    #[arg(long, default_value_t = 61)]
    max_size: usize,
    /// Total assessable researchers (0 leaves sizes as drawn)
    #[arg(long, default_value_t = 877)]
    total: usize,
    #[arg(long, default_value_t = 0.25)]
    mean: f64,
    #[arg(long, default_value_t = 0.34)]
    sd: f64,
    #[arg(long, default_value_t = 3.1)]
    skewness: f64,
    /// SD of a per-institution log-scale effect; 0 gives homogeneous institutions
    #[arg(long, default_value_t = 0.0)]
    institution_effect_sd: f64,
    /// Extra researchers with under three active years
    #[arg(long, default_value_t = 34)]
    short_tenure: usize,
    #[arg(long, default_value_t = 2015)]
    seed: u64,
}

fn assess(args: AssessArgs) -> Result<(), CliError> {
    let outcome = run_assessment(&RunRequest {
        researchers: args.researchers,
        publications: args.publications,
        baselines: args.baselines,
        config: args.config,
        report: args.report,
        funnel_svg: args.funnel_svg,
        qq_svg: args.qq_svg,
        caterpillar_svg: args.caterpillar_svg,
        show_labels: args.show_labels,
    })?;
    if !args.quiet {
        print!("{}", outcome.summary());
    }
    Ok(())
}

fn generate(args: SynthArgs) -> Result<(), CliError> {
    let params = SynthParams {
        institutions: args.institutions,
        min_size: args.min_size,
        max_size: args.max_size,
        total: (args.total > 0).then_some(args.total),
        mean: args.mean,
        sd: args.sd,
        skewness: args.skewness,
        institution_effect_sd: args.institution_effect_sd,
        short_tenure: args.short_tenure,
        seed: args.seed,
        ..SynthParams::default()
    };
    let dataset = synth::generate(&params).map_err(|e| CliError::Validation(vec![e]))?;
    synth::write_dataset(&dataset, &params, &args.out_dir)?;
    println!(
        "wrote {} researchers and {} publications to {}",
        dataset.researchers.len(),
        dataset.publications.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Assess(args) => assess(args),
        Command::Synth(args) => generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
