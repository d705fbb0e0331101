use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hgr_core::commands::{cmd_fuse, cmd_report, cmd_synth, cmd_train, FuseMode};
use hgr_core::config::ExperimentConfig;
use hgr_core::dataset::{ClassMode, SyntheticSpec};
use hgr_core::nn::NetworkKind;
use hgr_core::training::PlanOverride;

#[derive(Parser)]
#[command(name = "hgr", version, about = "Depth and skeleton hand-gesture recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a small synthetic dataset in the on-disk dataset layout.
    Synth(SynthArgs),
    /// Train the selected networks with leave-one-subject-out folds.
    Train(TrainArgs),
    /// Score-level fusion of two networks' predictions, or evaluation of
    /// the feature-level fusion checkpoints.
    Fuse(FuseArgs),
    /// Aggregate prediction files into tables, confusion matrices and heatmaps.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    subjects: u32,
    #[arg(long, default_value_t = 2)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shortest and longest sequence, e.g. 7:149.
    #[arg(long, default_value = "7:149")]
    frames: String,
    /// Depth frame size HxW, e.g. 48x64.
    #[arg(long, default_value = "48x64")]
    image: String,
}

#[derive(Args)]
struct TrainArgs {
    /// TOML config; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// 14 or 28.
    #[arg(long)]
    class_mode: Option<ClassMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction in (0, 1] applied to layer widths and epoch counts.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    timestep: Option<usize>,
    #[arg(long)]
    image_size: Option<usize>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated: depth_cnn, depth_cnn_lstm, skeleton_lstm, fl_concat.
    #[arg(long, value_delimiter = ',')]
    networks: Option<Vec<NetworkKind>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    /// Per-network epoch override, e.g. skeleton_lstm=50 (repeatable).
    #[arg(long = "epochs")]
    epochs: Vec<String>,
    /// Finished 14-class run directory to warm-start 28-class networks from.
    #[arg(long)]
    warm_28_from: Option<PathBuf>,
    /// Resolve and echo the plans, write the manifest, train nothing.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct FuseArgs {
    /// Run directory containing fold_<s>/ subdirectories.
    run_dir: PathBuf,
    /// average, max or fl_concat.
    #[arg(long, default_value = "average")]
    mode: FuseMode,
    #[arg(long, default_value = "depth_cnn_lstm")]
    a: String,
    #[arg(long, default_value = "skeleton_lstm")]
    b: String,
    /// Output root (defaults to the run directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Prediction files or directories searched for *.pred.csv.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// 14-class prediction files or directories, for the 14 -> 28 drop split.
    #[arg(long = "compare-14")]
    compare_14: Vec<PathBuf>,
}

fn parse_pair<T: std::str::FromStr>(s: &str, sep: char, what: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(sep).ok_or_else(|| format!("{what}: expected A{sep}B, got '{s}'"))?;
    let p = |x: &str| x.trim().parse::<T>().map_err(|_| format!("{what}: cannot parse '{x}'"));
    Ok((p(a)?, p(b)?))
}

fn train_config(a: &TrainArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => {$( if let Some(v) = &a.$f { cfg.$f = v.clone(); } )*};
    }
    set!(dataset, class_mode, seed, scale, timestep, image_size, preset, networks, out);
    if a.run_id.is_some() {
        cfg.run_id = a.run_id.clone();
    }
    if a.warm_28_from.is_some() {
        cfg.warm_28_from = a.warm_28_from.clone();
    }
    for e in &a.epochs {
        let (k, n) = e.split_once('=').ok_or_else(|| format!("--epochs: expected NETWORK=N, got '{e}'"))?;
        let kind: NetworkKind = k.parse().map_err(|e: hgr_core::Error| e.to_string())?;
        let n: usize = n.parse().map_err(|_| format!("--epochs: bad count '{n}'"))?;
        cfg.overrides.entry(kind).or_insert_with(PlanOverride::default).epochs = Some(n);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                n_subjects: a.subjects,
                n_trials: a.trials,
                frame_len_range: parse_pair(&a.frames, ':', "--frames")?,
                image_size: parse_pair(&a.image, 'x', "--image")?,
                seed: a.seed,
            };
            let r = cmd_synth(&spec, &a.out).map_err(|e| e.to_string())?;
            println!("wrote {} sequences to {}", r.n_sequences, a.out.display());
            println!("tree sha256 {}", r.tree_sha256);
            match r.identical_to_previous {
                Some(true) => println!("identical to the previous generation"),
                Some(false) => println!("differs from the previous generation"),
                None => {}
            }
        }
        Command::Train(a) => {
            let cfg = train_config(&a)?;
            let r = cmd_train(&cfg, a.dry_run).map_err(|e| e.to_string())?;
            if a.dry_run {
                for (k, f) in &r.manifest.fingerprints {
                    println!("{k} fingerprint {f}");
                }
            } else {
                println!(
                    "trained folds {:?}, skipped {:?} (already complete)",
                    r.trained_folds, r.skipped_folds
                );
            }
            println!("run directory {}", r.run_dir.display());
        }
        Command::Fuse(a) => {
            let files = cmd_fuse(&a.run_dir, &a.a, &a.b, a.mode, a.out.as_deref()).map_err(|e| e.to_string())?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Report(a) => {
            let r = cmd_report(&a.inputs, &a.out, &a.compare_14).map_err(|e| e.to_string())?;
            print!("{}", r.text);
            println!("wrote {} files to {}", r.files.len(), a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
