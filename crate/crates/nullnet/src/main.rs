use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nullnet::config::Config;
use nullnet::error::{PipelineError, Result};
use nullnet::pipeline::{
    audit_rows, run_pipeline, run_range, verify_outputs, write_audit_csv, ReportKind, Stage,
};
use nullnet::synth::{generate, FixtureConfig};

/// Statistically validated retweet networks: communities, hubs and the
/// reputability of the news they share.
#[derive(Debug, Parser)]
#[command(name = "nullnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reads, filters and de-duplicates the raw tweet files.
    Ingest(ConfigArg),
    /// Builds the verified and the user-post bipartite graphs.
    Build(ConfigArg),
    /// Fits the null models.
    Fit(ConfigArg),
    /// Validates both monopartite projections.
    Project(ConfigArg),
    /// Louvain communities of verified users and propagation seeds.
    Communities(ConfigArg),
    /// Propagates seed labels over the directed projection.
    Propagate(ConfigArg),
    /// Hub and authority scores of the directed projection.
    Hubs(ConfigArg),
    /// Reputability, NR-share and time-series reports.
    Report(ConfigArg),
    /// Runs every stage in order.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Resumes from this stage, reusing earlier artifacts.
        #[arg(long)]
        from_stage: Option<Stage>,
    },
    /// Lists the url occurrences behind a reputability report, or checks
    /// the output files against the manifest.
    Audit {
        #[command(flatten)]
        config: ConfigArg,
        /// `verified` or `directed`.
        #[arg(long, default_value = "directed")]
        report: ReportKind,
        #[arg(long)]
        community: Option<String>,
        /// Checks output checksums instead of listing rows.
        #[arg(long)]
        verify: bool,
    },
    /// Writes the planted-community fixture (tweets, annotations, ground
    /// truth and a config).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Comma-separated community sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
}

fn single(config: &ConfigArg, stage: Stage) -> Result<()> {
    let cfg = Config::load(&config.config)?;
    run_range(&cfg, stage, stage).map(|_| ())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(c) => single(&c, Stage::Ingest),
        Command::Build(c) => single(&c, Stage::Build),
        Command::Fit(c) => single(&c, Stage::Fit),
        Command::Project(c) => single(&c, Stage::Project),
        Command::Communities(c) => single(&c, Stage::Communities),
        Command::Propagate(c) => single(&c, Stage::Propagate),
        Command::Hubs(c) => single(&c, Stage::Hubs),
        Command::Report(c) => single(&c, Stage::Report),
        Command::Run { config, from_stage } => {
            let cfg = Config::load(&config.config)?;
            let m = run_pipeline(&cfg, from_stage)?;
            let secs: f64 = m.stages.iter().map(|s| s.seconds).sum();
            println!(
                "{} outputs written to {} in {secs:.1} s",
                m.outputs.len(),
                cfg.out_dir.display()
            );
            Ok(())
        }
        Command::Audit {
            config,
            report,
            community,
            verify,
        } => {
            let cfg = Config::load(&config.config)?;
            if verify {
                let r = verify_outputs(&cfg.out_dir)?;
                println!("{}", serde_json::to_string_pretty(&r)?);
                if !r.is_clean() {
                    return Err(PipelineError::Validation(
                        "outputs differ from the manifest".into(),
                    ));
                }
                return Ok(());
            }
            let rows = audit_rows(&cfg, report, community.as_deref())?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_audit_csv(&mut lock, &rows)?;
            lock.flush().map_err(|e| PipelineError::io("stdout", e))
        }
        Command::Synth { out, seed, sizes } => {
            let mut fc = FixtureConfig {
                seed,
                ..FixtureConfig::default()
            };
            if let Some(sizes) = sizes {
                fc.nr_propensity = (0..sizes.len())
                    .map(|k| fc.nr_propensity.get(k).copied().unwrap_or(0.1))
                    .collect();
                fc.community_sizes = sizes;
            }
            let fixture = generate(&fc)?;
            fixture.write(&out, seed)?;
            println!(
                "{} tweets from {} users written to {}",
                fixture.tweets.len(),
                fixture.truth.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
