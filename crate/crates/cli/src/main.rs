//! `evogm`: dataset generation, mapping, training and evaluation.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad command line, 3 unreadable
//! or malformed file, 4 invalid configuration. Failures print one line,
//! `error: <kind>: <message>`, on standard error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use evogm_core::config::RunConfig;
use evogm_core::eval::evaluate_run;
use evogm_core::geometric_ism::geometric_ism;
use evogm_core::grid::{load_grid, render_evidential, render_labels, save_grid, GridFile};
use evogm_core::model::{load_training_set, load_weights, save_weights, train, Model};
use evogm_core::pointcloud::load_cloud;
use evogm_core::synth::{generate_dataset, Manifest};
use evogm_core::Error;

#[derive(Parser)]
#[command(name = "evogm", version, about = "Evidential occupancy grid mapping from lidar point clouds")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => Ok(RunConfig::load(path)?),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset of sparse clouds and label grids.
    GenData {
        #[command(flatten)]
        config: ConfigArg,
        /// Output directory for the samples and manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Number of samples.
        #[arg(long)]
        n: usize,
        /// Dataset seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build maps with the geometric inverse sensor model.
    Geometric {
        #[command(flatten)]
        config: ConfigArg,
        /// A single cloud; --out is then the grid file to write.
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        cloud: Option<PathBuf>,
        /// A dataset manifest; --out is then a directory receiving NNNNN.evgrid.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output grid file or directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the network on a dataset.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Dataset manifest.
        #[arg(long)]
        manifest: PathBuf,
        /// Weights file to write.
        #[arg(long)]
        out_weights: PathBuf,
        /// Per-epoch CSV log to write.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Overrides the configured number of epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Overrides the configured training seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict an evidence grid for one cloud with trained weights.
    Predict {
        /// Weights file.
        #[arg(long)]
        weights: PathBuf,
        /// Input cloud.
        #[arg(long)]
        cloud: PathBuf,
        /// Grid file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the geometric and learned models on a labelled dataset.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        /// Dataset manifest.
        #[arg(long)]
        manifest: PathBuf,
        /// Weights file.
        #[arg(long)]
        weights: PathBuf,
        /// Directory receiving the CSV reports and PPM renderings.
        #[arg(long)]
        out_dir: PathBuf,
        /// Average KL over labelled cells only.
        #[arg(long)]
        observed_only: bool,
    },
    /// Render an evidence or label grid as a binary PPM image.
    Render {
        /// Grid file.
        #[arg(long)]
        grid: PathBuf,
        /// Image to write.
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { config, out, n, seed } => {
            let cfg = config.load()?;
            let start = std::time::Instant::now();
            let manifest = generate_dataset(&out, n, seed, &cfg.dataset)?;
            log::info!(
                "wrote {} samples to {} in {:.1} s",
                manifest.samples.len(),
                out.display(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::Geometric {
            config,
            cloud,
            manifest,
            out,
        } => {
            let cfg = config.load()?;
            if let Some(path) = cloud {
                let cloud = load_cloud(&path)?;
                let grid = geometric_ism(&cloud, &cfg.dataset.grid, &cfg.geometric)?;
                save_grid(&out, &GridFile::Evidential(grid))?;
            } else if let Some(path) = manifest {
                let manifest = Manifest::load(&path)?;
                std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                    path: out.clone(),
                    source,
                })?;
                for entry in &manifest.samples {
                    let cloud = load_cloud(manifest.cloud_path(entry))?;
                    let grid = geometric_ism(&cloud, &manifest.config.grid, &cfg.geometric)?;
                    save_grid(out.join(format!("{:05}.evgrid", entry.index)), &GridFile::Evidential(grid))?;
                }
                log::info!("mapped {} clouds into {}", manifest.samples.len(), out.display());
            }
        }
        Command::Train {
            config,
            manifest,
            out_weights,
            log: log_path,
            epochs,
            seed,
        } => {
            let mut cfg = config.load()?;
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            let manifest = Manifest::load(&manifest)?;
            let samples = load_training_set(&manifest)?;
            let mut model = Model::<f32>::new(cfg.model.clone())?;
            let start = std::time::Instant::now();
            let history = train(&mut model, &samples, &cfg.loss, &cfg.train)?;
            log::info!(
                "trained {} epochs on {} samples in {:.1} s",
                cfg.train.epochs,
                samples.len(),
                start.elapsed().as_secs_f64()
            );
            save_weights(&out_weights, &model)?;
            if let Some(path) = log_path {
                history.write_csv(path)?;
            }
        }
        Command::Predict { weights, cloud, out } => {
            let model = load_weights(&weights)?;
            let cloud = load_cloud(&cloud)?;
            let grid = model.predict(&cloud, &model.config().grid)?;
            save_grid(&out, &GridFile::Evidential(grid))?;
        }
        Command::Eval {
            config,
            manifest,
            weights,
            out_dir,
            observed_only,
        } => {
            let mut cfg = config.load()?;
            cfg.eval.observed_only |= observed_only;
            let manifest = Manifest::load(&manifest)?;
            let model = load_weights(&weights)?;
            let report = evaluate_run(&manifest, &model, &cfg.geometric, &cfg.eval, Some(&out_dir))?;
            for a in &report.aggregate {
                log::info!(
                    "{}: m_unknown {:.4}, mean KL {:.4} over {} frames",
                    a.ism,
                    a.masses.unknown,
                    a.mean_kl,
                    a.frames
                );
            }
        }
        Command::Render { grid, out } => {
            let bytes = match load_grid(&grid)? {
                GridFile::Evidential(g) => render_evidential(&g),
                GridFile::Labels(g) => render_labels(&g),
            };
            write(&out, &bytes).context("writing image")?;
        }
    }
    Ok(())
}

// Exit code and short kind for an error chain.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. }) => (3, "io"),
        Some(Error::Format(_)) => (3, "format"),
        Some(Error::Json { .. }) => (4, "config"),
        Some(Error::Config(_)) => (4, "config"),
        Some(Error::Shape(_)) => (1, "shape"),
        Some(Error::Domain(_)) => (1, "domain"),
        Some(Error::Generation(_)) => (1, "generation"),
        Some(Error::NonFinite { .. }) => (1, "non-finite"),
        _ => (1, "other"),
    }
}

// The error chain joined on one line. Library errors already print their
// source, so a cause whose text the previous entry contains is skipped.
fn describe(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !parts.last().is_some_and(|p| p.contains(&text)) {
            parts.push(text);
        }
    }
    one_line(&parts.join(": "))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(2);
        }
    };

    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: other: cannot start thread pool: {}", one_line(&e.to_string()));
            return ExitCode::FAILURE;
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = classify(&err);
            eprintln!("error: {kind}: {}", describe(&err));
            ExitCode::from(code)
        }
    }
}
