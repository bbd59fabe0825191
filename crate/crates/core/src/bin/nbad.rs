use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nbad::dataset::{Plane, Split};
use nbad::harness::{self, PhantomConfig, PrepareConfig, TrainConfig};
use nbad::model::Preset;

#[derive(Parser)]
#[command(name = "nbad", version, about = "Brain MRI abnormality classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn class directories of volumes into PNG samples and a manifest.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 224)]
        size: usize,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a network on a prepared manifest.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a manifest split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Classify one PNG sample or volume.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        image: PathBuf,
    },
    /// Generate a synthetic phantom corpus.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        #[arg(long, default_value_t = 64)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export one slice of a volume as PNG.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plane: Plane,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// JSON file with any TrainConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Continue from the checkpoint if it exists.
    #[arg(long)]
    resume: bool,
}

impl TrainArgs {
    fn into_config(self) -> nbad::Result<TrainConfig> {
        let mut c = match &self.config {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(manifest => manifest, preset => preset, lr => learning_rate, weight_decay => weight_decay,
             momentum => momentum, batch => batch_size, iters => iterations, eval_every => eval_every,
             seed => seed, checkpoint => checkpoint, curves => curves);
        c.resume |= self.resume;
        Ok(c)
    }
}

fn run(cli: Cli) -> nbad::Result<()> {
    match cli.command {
        Command::Prepare {
            input,
            out,
            size,
            train_fraction,
            seed,
        } => {
            let s = harness::prepare(&PrepareConfig {
                input,
                out,
                size,
                train_fraction,
                seed,
            })?;
            let train = s.manifest.split(Split::Train).count();
            let test = s.manifest.split(Split::Test).count();
            println!(
                "{}: {} samples, {train} train, {test} test, {} skipped",
                s.manifest_path.display(),
                s.manifest.entries.len(),
                s.skipped.len()
            );
        }
        Command::Train(args) => {
            let cfg = args.into_config()?;
            eprintln!("{}", cfg.describe());
            let s = harness::train(&cfg)?;
            if let Some(last) = s.rows.last() {
                println!("iteration {}: train loss {}", last.iteration, last.train_loss);
            }
            if let Some((loss, acc)) = s.rows.iter().rev().find_map(|r| r.test) {
                println!("test loss {loss}, test accuracy {acc}");
            }
        }
        Command::Eval {
            checkpoint,
            manifest,
            split,
            report,
        } => {
            let r = harness::eval(&checkpoint, &manifest, split, report.as_deref())?;
            print!("{}", r.to_json());
        }
        Command::Predict { checkpoint, image } => {
            print!("{}", harness::predict(&checkpoint, &image)?);
        }
        Command::Phantom {
            out,
            per_class,
            dims,
            seed,
        } => {
            let files = harness::generate_phantoms(&out, &PhantomConfig { per_class, dims, seed })?;
            println!("{} volumes written to {}", files.len(), out.display());
        }
        Command::Convert {
            input,
            plane,
            index,
            out,
        } => {
            let img = harness::convert(&input, plane, index, &out)?;
            println!("{}: {}x{}", out.display(), img.width, img.height);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            eprintln!("error[Usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.root().code());
            ExitCode::FAILURE
        }
    }
}
