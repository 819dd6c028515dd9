//! `grainforge` command-line pipeline.
//!
//! [`run`] parses arguments, resolves the configuration and dispatches one
//! subcommand. Exit status: 0 on success, 1 on usage or validation failure,
//! 2 on runtime errors. The binary prints the JSON summary to stdout; logs
//! go to stderr and data to files under the output directory.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use grainforge::sim::StepMode;
use serde_json::Value;

use crate::config::{LabelSource, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "grainforge", version, about = "Synthetic microstructure dataset factory and characterization toolkit")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "GRAINFORGE_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true, env = "GRAINFORGE_THREADS")]
    threads: Option<usize>,
    /// Seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run every stage single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate regularized Voronoi structures as 16-bit instance PNGs.
    Seed(SeedArgs),
    /// Evolve structures (or resume checkpoints) with the phase-field stepper.
    Simulate(SimulateArgs),
    /// Render φ, boundary masks and instance maps from checkpoints.
    Render(RenderArgs),
    /// Apply procedural SEM-like appearance to φ renders.
    Texturize(TexturizeArgs),
    /// Build, validate or ingest training datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Segmentation or realism metrics over matched image directories.
    Evaluate(EvaluateArgs),
    /// Per-grain morphometry and size distributions.
    Characterize(CharacterizeArgs),
    /// Grain-size trajectory of a snapshot series.
    Kinetics(KineticsArgs),
    /// t-SNE of texture features, feature files or external embeddings.
    Tsne(TsneArgs),
    /// Contrast-limited adaptive histogram equalization.
    Clahe(ClaheArgs),
}

#[derive(Debug, Args)]
struct SeedArgs {
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    grains: Option<usize>,
    /// Square side; `--width`/`--height` override it per axis.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    lloyd_iters: Option<usize>,
    #[arg(long)]
    cv_target: Option<f64>,
}

#[derive(Debug, Args)]
struct SimParamArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    mobility: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Instance PNG, directory of instance PNGs, or a checkpoint directory.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<StepMode>,
    #[arg(long)]
    energy_every: Option<u64>,
    #[command(flatten)]
    sim: SimParamArgs,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Checkpoint directory, or a directory searched for checkpoints.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
struct TexturizeArgs {
    /// φ PNG or directory.
    #[arg(long, required = true)]
    phi: PathBuf,
    /// Instance PNG or directory with matching file names.
    #[arg(long, required = true)]
    instances: PathBuf,
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
    gray_range: Option<Vec<f64>>,
    #[arg(long)]
    speckle: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    illumination: Option<f64>,
    #[arg(long)]
    jitter: Option<usize>,
    #[arg(long)]
    blur: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Patch, augment and split image/mask pairs into a dataset root.
    Build(DatasetBuildArgs),
    /// Check a manifest; exits 1 on any violation.
    Validate(DatasetValidateArgs),
    /// Validate externally translated images against a manifest's masks.
    Ingest(DatasetIngestArgs),
}

#[derive(Debug, Args)]
struct DatasetBuildArgs {
    #[arg(long, required = true)]
    images: PathBuf,
    #[arg(long, required = true)]
    masks: PathBuf,
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    variants: Option<usize>,
    /// Train, val and test fractions.
    #[arg(long, num_args = 3, value_names = ["TRAIN", "VAL", "TEST"])]
    split: Option<Vec<f64>>,
    /// Also store each un-augmented patch.
    #[arg(long)]
    include_original: bool,
}

#[derive(Debug, Args)]
struct DatasetValidateArgs {
    #[arg(long, required = true)]
    manifest: PathBuf,
}

#[derive(Debug, Args)]
struct DatasetIngestArgs {
    #[arg(long, required = true)]
    manifest: PathBuf,
    /// Directory of translated images named like the manifest's images.
    #[arg(long, required = true)]
    images: PathBuf,
    #[arg(long)]
    min_score: Option<f64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Predicted masks (segmentation mode).
    #[arg(long, requires = "gt", conflicts_with_all = ["images", "reference"])]
    pred: Option<PathBuf>,
    /// Ground-truth masks (segmentation mode).
    #[arg(long, requires = "pred")]
    gt: Option<PathBuf>,
    #[arg(long)]
    bf1_tolerance: Option<f64>,
    /// Images under test (realism mode).
    #[arg(long, requires = "reference")]
    images: Option<PathBuf>,
    /// Reference images (realism mode).
    #[arg(long, requires = "images")]
    reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CharacterizeArgs {
    /// PNG or directory.
    #[arg(long, required = true)]
    input: PathBuf,
    /// Interpret inputs as binary masks or 16-bit instance maps.
    #[arg(long, value_parser = parse_source)]
    source: Option<LabelSource>,
    /// Label components on the torus (periodic simulations).
    #[arg(long)]
    periodic: bool,
    #[arg(long)]
    pixel_scale: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// Keep grains touching the image border in distributions.
    #[arg(long)]
    include_border: bool,
}

#[derive(Debug, Args)]
struct KineticsArgs {
    /// Directory of instance snapshots (with `series.json` from `simulate`).
    #[arg(long, required = true)]
    snapshots: PathBuf,
    #[arg(long)]
    pixel_scale: Option<f64>,
}

#[derive(Debug, Args)]
struct TsneArgs {
    /// `tag=dir` image group; repeatable.
    #[arg(long = "group", value_parser = parse_group)]
    groups: Vec<(String, PathBuf)>,
    /// Feature CSV (`id,tag,f0..`).
    #[arg(long, conflicts_with_all = ["groups", "embeddings_file"])]
    features: Option<PathBuf>,
    /// External embedding CSV in the feature-file format.
    #[arg(long, conflicts_with = "groups")]
    embeddings_file: Option<PathBuf>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    patch: Option<usize>,
    /// Skip per-dimension z-scoring.
    #[arg(long)]
    raw: bool,
}

#[derive(Debug, Args)]
struct ClaheArgs {
    /// PNG or directory.
    #[arg(long, required = true)]
    input: PathBuf,
    #[arg(long)]
    clip: Option<f64>,
    /// Tile grid as COLSxROWS.
    #[arg(long, value_parser = parse_tiles)]
    tiles: Option<(usize, usize)>,
}

fn parse_mode(s: &str) -> Result<StepMode, String> {
    match s {
        "sparse" => Ok(StepMode::Sparse),
        "dense" => Ok(StepMode::Dense),
        _ => Err(format!("expected sparse or dense, got {s:?}")),
    }
}

fn parse_source(s: &str) -> Result<LabelSource, String> {
    match s {
        "mask" => Ok(LabelSource::Mask),
        "instances" => Ok(LabelSource::Instances),
        _ => Err(format!("expected mask or instances, got {s:?}")),
    }
}

fn parse_group(s: &str) -> Result<(String, PathBuf), String> {
    let (tag, dir) = s.split_once('=').ok_or_else(|| format!("expected tag=dir, got {s:?}"))?;
    if tag.is_empty() || tag.contains(',') {
        return Err(format!("invalid group tag {tag:?}"));
    }
    Ok((tag.to_string(), PathBuf::from(dir)))
}

fn parse_tiles(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected COLSxROWS, got {s:?}"))?;
    let a = a.parse().map_err(|_| format!("bad tile count {a:?}"))?;
    let b = b.parse().map_err(|_| format!("bad tile count {b:?}"))?;
    Ok((a, b))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Applies subcommand flags on top of the loaded config.
fn overlay(cfg: &mut RunConfig, cmd: &Command) {
    match cmd {
        Command::Seed(a) => {
            cfg.subcommand = "seed".into();
            set(&mut cfg.seeding.count, a.count);
            set(&mut cfg.seeding.width, a.size);
            set(&mut cfg.seeding.height, a.size);
            set(&mut cfg.seeding.width, a.width);
            set(&mut cfg.seeding.height, a.height);
            set(&mut cfg.seeding.grains, a.grains);
            set(&mut cfg.seeding.corpus.lloyd_iters, a.lloyd_iters);
            set(&mut cfg.seeding.corpus.cv_target, a.cv_target);
        }
        Command::Simulate(a) => {
            cfg.subcommand = "simulate".into();
            cfg.input("input", &a.input);
            set(&mut cfg.simulate.steps, a.steps);
            set(&mut cfg.simulate.snapshot_every, a.snapshot_every);
            set(&mut cfg.simulate.mode, a.mode);
            set(&mut cfg.simulate.energy_every, a.energy_every);
            set(&mut cfg.sim.kappa, a.sim.kappa);
            set(&mut cfg.sim.mobility, a.sim.mobility);
            set(&mut cfg.sim.dt, a.sim.dt);
        }
        Command::Render(a) => {
            cfg.subcommand = "render".into();
            cfg.input("input", &a.input);
            set(&mut cfg.tau, a.tau);
        }
        Command::Texturize(a) => {
            cfg.subcommand = "texturize".into();
            cfg.input("phi", std::slice::from_ref(&a.phi));
            cfg.input("instances", std::slice::from_ref(&a.instances));
            if let Some(r) = &a.gray_range {
                cfg.appearance.grain_gray_range = (r[0], r[1]);
            }
            set(&mut cfg.appearance.speckle_strength, a.speckle);
            set(&mut cfg.appearance.detector_noise_sigma, a.noise_sigma);
            set(&mut cfg.appearance.illumination_amplitude, a.illumination);
            set(&mut cfg.appearance.scanline_jitter, a.jitter);
            set(&mut cfg.appearance.blur_sigma, a.blur);
        }
        Command::Dataset(DatasetCommand::Build(a)) => {
            cfg.subcommand = "dataset build".into();
            cfg.input("images", std::slice::from_ref(&a.images));
            cfg.input("masks", std::slice::from_ref(&a.masks));
            set(&mut cfg.dataset.patch, a.patch);
            if a.stride.is_some() {
                cfg.dataset.stride = a.stride;
            }
            set(&mut cfg.dataset.variants, a.variants);
            if let Some(s) = &a.split {
                cfg.dataset.split = (s[0], s[1], s[2]);
            }
            cfg.dataset.include_original |= a.include_original;
        }
        Command::Dataset(DatasetCommand::Validate(a)) => {
            cfg.subcommand = "dataset validate".into();
            cfg.input("manifest", std::slice::from_ref(&a.manifest));
        }
        Command::Dataset(DatasetCommand::Ingest(a)) => {
            cfg.subcommand = "dataset ingest".into();
            cfg.input("manifest", std::slice::from_ref(&a.manifest));
            cfg.input("images", std::slice::from_ref(&a.images));
            set(&mut cfg.dataset.min_score, a.min_score);
        }
        Command::Evaluate(a) => {
            cfg.subcommand = "evaluate".into();
            for (role, p) in [("pred", &a.pred), ("gt", &a.gt), ("images", &a.images), ("reference", &a.reference)] {
                if let Some(p) = p {
                    cfg.input(role, std::slice::from_ref(p));
                }
            }
            set(&mut cfg.bf1_tolerance, a.bf1_tolerance);
        }
        Command::Characterize(a) => {
            cfg.subcommand = "characterize".into();
            cfg.input("input", std::slice::from_ref(&a.input));
            set(&mut cfg.characterize.source, a.source);
            cfg.characterize.periodic |= a.periodic;
            set(&mut cfg.characterize.pixel_scale, a.pixel_scale);
            set(&mut cfg.characterize.bins, a.bins);
            cfg.characterize.include_border |= a.include_border;
        }
        Command::Kinetics(a) => {
            cfg.subcommand = "kinetics".into();
            cfg.input("snapshots", std::slice::from_ref(&a.snapshots));
            set(&mut cfg.characterize.pixel_scale, a.pixel_scale);
        }
        Command::Tsne(a) => {
            cfg.subcommand = "tsne".into();
            let dirs: Vec<PathBuf> = a.groups.iter().map(|(t, d)| PathBuf::from(format!("{t}={}", d.display()))).collect();
            cfg.input("groups", &dirs);
            if let Some(p) = &a.features {
                cfg.input("features", std::slice::from_ref(p));
            }
            if let Some(p) = &a.embeddings_file {
                cfg.input("embeddings_file", std::slice::from_ref(p));
            }
            set(&mut cfg.tsne.params.perplexity, a.perplexity);
            set(&mut cfg.tsne.params.iterations, a.iterations);
            if a.learning_rate.is_some() {
                cfg.tsne.params.learning_rate = a.learning_rate;
            }
            if a.patch.is_some() {
                cfg.tsne.patch = a.patch;
            }
            if a.raw {
                cfg.tsne.standardize = false;
            }
        }
        Command::Clahe(a) => {
            cfg.subcommand = "clahe".into();
            cfg.input("input", std::slice::from_ref(&a.input));
            set(&mut cfg.clahe.clip_limit, a.clip);
            set(&mut cfg.clahe.tiles, a.tiles);
        }
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    set(&mut cfg.out, cli.out.clone());
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    set(&mut cfg.seed, cli.seed);
    if cli.sequential {
        cfg.exec = grainforge::Exec::Sequential;
    }
    overlay(&mut cfg, &cli.command);
    cfg.propagate_seed();
    cfg.validate()?;
    Ok(cfg)
}

/// Result of one invocation: the process exit status and, on success, the
/// JSON summary.
#[derive(Debug)]
pub struct Invocation {
    pub code: u8,
    pub summary: Option<Value>,
}

pub fn run<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let fail = |code| Invocation { code, summary: None };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return fail(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();

    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return fail(1);
        }
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(&cli.command, &cfg) {
        Ok(summary) => Invocation { code: 0, summary: Some(summary) },
        Err(e) => {
            eprintln!("error: {e:#}");
            fail(commands::exit_code(&e))
        }
    }
}
