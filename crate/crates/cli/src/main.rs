//! Command-line driver: generate a synthetic city, ingest raw inputs into
//! relation matrices, fit and select a fusion model, and emit the report
//! tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modefuse::io::config::{PipelineManifest, RunSettings};
use modefuse::pipeline;
use modefuse::synth::{generate, SyntheticSpec};
use modefuse::Error;

#[derive(Parser)]
#[command(
    name = "modefuse",
    about = "Updates area-level transport mode splits by fusing relation matrices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// pipeline manifest (TOML) describing every input path
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// which relations participate: all, no-dpi, or no-mobile
    #[arg(long, value_name = "CONF")]
    data_configuration: Option<String>,

    /// number of model instances to fit
    #[arg(long, value_name = "N")]
    instances: Option<usize>,

    /// base seed; instance i uses seed + i
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// output directory override
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic city with a planted ground-truth mode split
    Synth {
        #[arg(long, default_value_t = 10)]
        municipalities: usize,
        #[arg(long, default_value_t = 200)]
        towers: usize,
        #[arg(long, default_value_t = 5000)]
        devices: usize,
        #[arg(long, default_value_t = 30)]
        apps: usize,
        #[arg(long, default_value_t = 5)]
        days: usize,
        /// relative perturbation between the prior and the planted truth
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// directory to write the city into
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Derive the mobility and app-usage relations from raw inputs
    Ingest(RunArgs),
    /// Check the relation graph for structural violations
    ValidateGraph(RunArgs),
    /// Fit model instances and persist the best one
    Fit(RunArgs),
    /// Write the updated split, shares, and validation tables
    Report(RunArgs),
}

fn load_run_context(args: &RunArgs) -> Result<(PipelineManifest, RunSettings), Error> {
    let mut manifest = PipelineManifest::load(&args.config)?;
    let mut settings = RunSettings::load(&manifest.run_config)?;
    if let Some(conf) = &args.data_configuration {
        settings.data_configuration = conf.parse()?;
    }
    if let Some(n) = args.instances {
        settings.n_instances = n;
    }
    if let Some(seed) = args.seed {
        settings.base_seed = seed;
    }
    if let Some(out) = &args.out {
        manifest.out_dir = out.clone();
    }
    Ok((manifest, settings))
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth {
            municipalities,
            towers,
            devices,
            apps,
            days,
            noise,
            seed,
            out,
        } => {
            let spec =
                SyntheticSpec::with_defaults(municipalities, towers, devices, apps, days, noise, seed)?;
            let summary = generate(&spec, &out)?;
            println!(
                "synthetic city written to {}: {} trips planned, {} events, {} usage rows",
                out.display(),
                summary.trips_planned,
                summary.n_events,
                summary.n_usage_rows
            );
            println!("pipeline manifest: {}", summary.pipeline_manifest.display());
        }
        Command::Ingest(args) => {
            let (manifest, settings) = load_run_context(&args)?;
            let summary = pipeline::cmd_ingest(&manifest, &settings)?;
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "ingest: {} events, {} trips extracted, {} kept after filters",
                summary.events_total, summary.trips_extracted, summary.trips_filtered
            );
            println!(
                "apps: {} raw domains, {} unified, {} excluded rows, {} kept",
                summary.raw_domains, summary.unified_apps, summary.excluded_apps, summary.kept_apps
            );
        }
        Command::ValidateGraph(args) => {
            let (manifest, settings) = load_run_context(&args)?;
            let violations = pipeline::cmd_validate(&manifest, &settings)?;
            if violations.is_empty() {
                println!(
                    "graph valid under configuration '{}'",
                    settings.data_configuration.as_str()
                );
            } else {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                return Err(Error::Validation(
                    violations.iter().map(|v| v.to_string()).collect(),
                ));
            }
        }
        Command::Fit(args) => {
            let (manifest, settings) = load_run_context(&args)?;
            let summary = pipeline::cmd_fit(&manifest, &settings)?;
            println!(
                "fit: {} instances ({} converged), best seed {} with global error {:.6}",
                summary.n_instances, summary.converged, summary.best_seed, summary.best_error
            );
            println!("instance table: {}", summary.instances_path.display());
        }
        Command::Report(args) => {
            let (manifest, settings) = load_run_context(&args)?;
            let summary = pipeline::cmd_report(&manifest, &settings)?;
            let s = summary.citywide_shares;
            println!(
                "citywide shares: mass-transit {:.2}%, motorised {:.2}%, active {:.2}%, taxi {:.2}%",
                100.0 * s[0],
                100.0 * s[1],
                100.0 * s[2],
                100.0 * s[3]
            );
            println!("clamped cells: {}", summary.clamped_cells);
            for c in &summary.validation {
                match (c.r, c.p_corrected) {
                    (Some(r), Some(p)) => {
                        println!("validation {}: r = {r:.4} (corrected p = {p:.4})", c.mode)
                    }
                    _ => println!("validation {}: undefined (constant column)", c.mode),
                }
            }
            if let Some(r) = summary.baseline_mass_transit_r {
                println!("baseline (prior) mass-transit r = {r:.4}");
            }
            println!("report tables in {}", summary.report_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
