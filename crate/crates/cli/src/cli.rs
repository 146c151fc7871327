use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use dpts_core::train::Regime;
use dpts_core::{Error, Result};

use crate::commands::{self, CellJob, Context, PublicSource};
use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "dpts", version, about = "Differentially private time series GAN experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory; overrides `output` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Stop GAN training before ε would exceed this value.
    #[arg(long, global = true)]
    pub max_epsilon: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct PublicArgs {
    /// Public (generated) dataset in `.ts` format.
    #[arg(long)]
    pub public: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the baseline classifier on the private data.
    Baseline,
    /// Train a GAN.
    TrainGan {
        #[arg(long, value_parser = parse_regime)]
        method: Option<Regime>,
    },
    /// Sample a labelled dataset from a generator checkpoint.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Output `.ts` file; defaults to `<out>/reports/generated.ts`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Four-way m±/d± evaluation.
    Evaluate {
        #[arg(long, conflicts_with_all = ["public_train", "public_test"])]
        generator: Option<PathBuf>,
        #[arg(long, requires = "public_test")]
        public_train: Option<PathBuf>,
        #[arg(long, requires = "public_train")]
        public_test: Option<PathBuf>,
    },
    /// L2 distance statistics between private and public data.
    Distances(PublicArgs),
    /// t-SNE embedding of private and public data.
    Embed(PublicArgs),
    /// Overlay private and generated series per class and channel.
    PlotSamples {
        #[command(flatten)]
        public: PublicArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Convolutional generator architecture grid.
    Grid,
    /// Noise multiplier sweep.
    NoiseSweep,
    /// ε of a subsampled Gaussian mechanism composed over `steps`.
    Accountant {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u32>>,
    },
    #[command(hide = true)]
    RunCell {
        #[arg(long)]
        job: PathBuf,
    },
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown method `{s}` (expected wgan, dpwgan or gswgan)"))
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let path = g.config.as_deref().ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(e) = g.max_epsilon {
        cfg.training.max_epsilon = Some(e);
    }
    Ok(cfg)
}

fn context(g: &Global) -> Result<Context> {
    let cfg = load_config(g)?;
    let out = cfg.output_dir(g.out.as_deref());
    Context::new(cfg, &out)
}

fn read_public(path: &Path) -> Result<dpts_core::data::TimeSeriesDataset> {
    commands::read_public(path)
}

/// Parse arguments and run one command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            print!("{e}");
            std::process::exit(0);
        }
        Error::Config(e.to_string())
    })?;
    execute(&cli.global, &cli.command)
}

pub fn execute(g: &Global, command: &Command) -> Result<()> {
    let exe = std::env::current_exe().ok();
    match command {
        Command::Baseline => {
            let ctx = context(g)?;
            let m = commands::cmd_baseline(&ctx)?;
            println!("test_f1 {}", m.metrics["test_f1"]);
        }
        Command::TrainGan { method } => {
            let ctx = context(g)?;
            let method = method
                .or(ctx.cfg.method)
                .ok_or_else(|| Error::Config("pass --method or set `method` in the config".into()))?;
            let (m, _) = commands::cmd_train_gan(&ctx, method)?;
            println!("epsilon {} delta {:?}", m.epsilon, m.delta);
        }
        Command::Generate { checkpoint, n, output } => {
            let (names, seed, out_dir) = match &g.config {
                Some(_) => {
                    let cfg = load_config(g)?;
                    let (train, _) = cfg.datasets()?;
                    (Some(train.class_names().to_vec()), cfg.seed, cfg.output_dir(g.out.as_deref()))
                }
                None => (None, g.seed.unwrap_or(0), g.out.clone().unwrap_or_else(|| PathBuf::from("."))),
            };
            let path = output.clone().unwrap_or_else(|| out_dir.join("reports").join("generated.ts"));
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let side = commands::cmd_generate(checkpoint, *n, seed, &path, names.as_deref())?;
            println!("wrote {} ({} samples, sha256 {})", path.display(), side.n, side.checkpoint_sha256);
        }
        Command::Evaluate { generator, public_train, public_test } => {
            let ctx = context(g)?;
            let src = match (generator, public_train, public_test) {
                (Some(gen), _, _) => PublicSource::Generator(gen),
                (None, Some(train), Some(test)) => PublicSource::Files { train, test },
                _ => return Err(Error::Config("pass --generator or both --public-train and --public-test".into())),
            };
            let r = commands::cmd_evaluate(&ctx, &src)?;
            for (k, v) in r.rows() {
                println!("{k} {v}");
            }
        }
        Command::Distances(p) => {
            let ctx = context(g)?;
            for (scope, s) in commands::cmd_distances(&ctx, &read_public(&p.public)?)? {
                println!("{scope:?} min {} mean {} max {}", s.min, s.mean, s.max);
            }
        }
        Command::Embed(p) => {
            let ctx = context(g)?;
            commands::cmd_embed(&ctx, &read_public(&p.public)?)?;
        }
        Command::PlotSamples { public, k } => {
            let ctx = context(g)?;
            let k = k.unwrap_or(ctx.cfg.overlay);
            if k > ctx.train.len() {
                return Err(Error::Argument(format!("overlay count {k} exceeds the {} private samples", ctx.train.len())));
            }
            let files = commands::cmd_plot_samples(&ctx, &read_public(&public.public)?, k)?;
            println!("wrote {} plots", files.len());
        }
        Command::Grid => {
            let ctx = context(g)?;
            let rows = commands::cmd_grid(&ctx, exe.as_deref())?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            println!("{} cells, {failed} failed", rows.len());
        }
        Command::NoiseSweep => {
            let ctx = context(g)?;
            let cells = commands::cmd_noise_sweep(&ctx, exe.as_deref())?;
            let failed = cells.iter().filter(|c| c.result.is_err()).count();
            println!("{} cells, {failed} failed", cells.len());
        }
        Command::Accountant { q, sigma, steps, delta, orders } => {
            let (eps, order) = commands::cmd_accountant(*q, *sigma, *steps, *delta, orders.clone())?;
            match order {
                Some(o) => println!("epsilon {eps} order {o}"),
                None => println!("epsilon {eps}"),
            }
        }
        Command::RunCell { job } => {
            let text = std::fs::read_to_string(job)?;
            let job: CellJob = serde_json::from_str(&text)?;
            let out = g.out.clone().ok_or_else(|| Error::Config("run-cell needs --out".into()))?;
            commands::run_cell(&job, &out)?;
        }
    }
    Ok(())
}
