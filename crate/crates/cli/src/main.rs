use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use vmeme::memegraph::WeightVariant;
use vmeme_cli::{stages, Config, Outcome, Stage, Workspace, WORKSPACE_ENV};

#[derive(Parser)]
#[command(name = "vmeme", version, about = "Track near-duplicate video segments through an event corpus")]
struct Cli {
    /// Workspace root holding stage outputs and `config.toml`.
    #[arg(long, short = 'w', global = true, env = WORKSPACE_ENV, default_value = "vmeme-workspace")]
    workspace: PathBuf,
    /// Config file; defaults to `config.toml` in the workspace.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rebuild the requested stages even when up to date.
    #[arg(long, global = true)]
    force: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring config keys; each one wins over the file.
#[derive(Args, Default)]
struct Overrides {
    /// Seed for every randomised step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON Lines video manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Labelled frame pairs for `eval-detect`.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Entropy below which a keyframe counts as blank.
    #[arg(long, global = true)]
    blank_entropy: Option<f64>,
    /// Row/column variance below which edges are cropped as borders.
    #[arg(long, global = true)]
    border_var: Option<f64>,
    /// Histogram distance that starts a new shot.
    #[arg(long, global = true)]
    shot_threshold: Option<f64>,
    /// Match threshold scale.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Neighbours retrieved per keyframe.
    #[arg(long, global = true)]
    knn: Option<usize>,
    /// Candidate checks per query (default round(sqrt(N))).
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Time-decay exponent for diffusion edge weights.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Author edge weights: `star` (meme counts) or `prime` (time-decayed).
    #[arg(long, global = true, value_parser = parse_variant)]
    weight_variant: Option<WeightVariant>,
    /// Text vocabulary size.
    #[arg(long, global = true)]
    vocab_size: Option<usize>,
    /// Observation window after meme onset, in days.
    #[arg(long, global = true)]
    delta_days: Option<f64>,
    /// Reuse author-graph snapshots taken on this day grid.
    #[arg(long, global = true)]
    author_snapshot_days: Option<f64>,
}

fn parse_variant(s: &str) -> Result<WeightVariant, String> {
    match s {
        "star" => Ok(WeightVariant::Star),
        "prime" => Ok(WeightVariant::Prime),
        _ => Err(format!("expected `star` or `prime`, got `{s}`")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read the manifest into the workspace corpus.
    Ingest,
    /// Segment videos into shots and pick keyframes.
    Shots,
    /// Normalise keyframes and extract correlogram features.
    Features,
    /// Build the nearest-neighbour index and candidate lists.
    Index,
    /// Threshold candidates and close them into meme clusters.
    Detect,
    /// Sweep the threshold against labelled pairs.
    EvalDetect,
    /// Build video and author diffusion graphs.
    Graph,
    /// Print the most influential authors.
    Influence {
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Joint text and meme topic model.
    Topics {
        #[command(subcommand)]
        action: TopicsAction,
    },
    /// Words that describe a meme.
    Annotate(AnnotateArgs),
    /// Evaluate popularity prediction.
    Predict {
        /// `volume` or `life`.
        #[arg(long)]
        target: Option<String>,
        /// Feature set such as `net+txt+vmeme`.
        #[arg(long)]
        features: Option<String>,
        #[arg(long)]
        splits: Option<usize>,
    },
    /// Write the report bundle.
    Report,
    /// Run every stage, skipping those already up to date.
    Pipeline,
    /// Write the synthetic demo corpus into the workspace.
    Demo {
        /// Run the pipeline on it afterwards.
        #[arg(long)]
        run: bool,
    },
}

#[derive(Subcommand)]
enum TopicsAction {
    /// Fit the topic model.
    Fit {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Words that describe a meme.
    Annotate(AnnotateArgs),
    /// Memes that illustrate a word.
    Illustrate {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long)]
    meme: u32,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

impl Overrides {
    fn apply(&self, c: &mut Config) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { c.$f = v; })* };
        }
        set!(seed, threads, blank_entropy, border_var, shot_threshold, tau, knn, eta, weight_variant, vocab_size, delta_days);
        if let Some(p) = &self.manifest {
            c.manifest = Some(absolute(p));
        }
        if let Some(p) = &self.labels {
            c.labels = Some(absolute(p));
        }
        if self.budget.is_some() {
            c.budget = self.budget;
        }
        if self.author_snapshot_days.is_some() {
            c.author_snapshot_days = self.author_snapshot_days;
        }
    }
}

/// Command-line paths are relative to the current directory, not the
/// workspace.
fn absolute(p: &std::path::Path) -> PathBuf {
    std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
}

fn report(stage: Stage, outcome: Outcome) {
    match outcome {
        Outcome::Built => println!("{stage}: built"),
        Outcome::UpToDate => println!("{stage}: up-to-date"),
    }
}

fn set_threads(n: usize) {
    #[cfg(feature = "parallel")]
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

fn run(cli: Cli) -> Result<()> {
    let ws = Workspace::open(&cli.workspace)?;
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::load_or_default(&ws.config_path())?,
    };
    cli.overrides.apply(&mut cfg);
    set_threads(cfg.threads);
    let force = cli.force;
    let stage = |s: Stage, cfg: &Config| -> Result<()> {
        report(s, stages::run_stage(&ws, cfg, s, force)?);
        Ok(())
    };
    match cli.command {
        Command::Ingest => stage(Stage::Ingest, &cfg)?,
        Command::Shots => stage(Stage::Shots, &cfg)?,
        Command::Features => stage(Stage::Features, &cfg)?,
        Command::Index => stage(Stage::Index, &cfg)?,
        Command::Detect => {
            stage(Stage::Detect, &cfg)?;
            let corpus = stages::load_corpus(&ws)?;
            println!("{} memes", stages::load_clusters(&ws, &corpus)?.len());
        }
        Command::EvalDetect => {
            stage(Stage::EvalDetect, &cfg)?;
            print!("{}", std::fs::read_to_string(ws.file(Stage::EvalDetect, "best.json"))?);
        }
        Command::Graph => stage(Stage::Graph, &cfg)?,
        Command::Influence { top } => {
            println!("author_id\tproductivity\tchi_hat\tchi_bar");
            for r in vmeme_cli::top_influencers(&ws, top)? {
                println!("{}\t{}\t{:.4}\t{:.4}", r.author_id, r.productivity, r.chi_hat, r.chi_bar);
            }
        }
        Command::Topics { action } => match action {
            TopicsAction::Fit { k } => {
                if let Some(k) = k {
                    cfg.topics = k;
                }
                stage(Stage::Topics, &cfg)?;
            }
            TopicsAction::Annotate(a) => print_annotation(&ws, &cfg, &a)?,
            TopicsAction::Illustrate { word, top } => {
                for (meme, score) in vmeme_cli::illustrate(&ws, &cfg, &word, top)? {
                    println!("meme {meme}\t{score:.6}");
                }
            }
        },
        Command::Annotate(a) => print_annotation(&ws, &cfg, &a)?,
        Command::Predict { target, features, splits } => {
            if let Some(t) = target {
                t.parse::<vmeme::predict::Target>()?;
                cfg.targets = vec![t];
            }
            if let Some(f) = features {
                f.parse::<vmeme::predict::FeatureSet>()?;
                cfg.feature_sets = vec![f];
            }
            if let Some(s) = splits {
                cfg.splits = s;
            }
            stage(Stage::Predict, &cfg)?;
            print!("{}", std::fs::read_to_string(ws.file(Stage::Predict, "report.csv"))?);
        }
        Command::Report => {
            stage(Stage::Report, &cfg)?;
            println!("reports in {}", ws.dir(Stage::Report).display());
        }
        Command::Pipeline => {
            for (s, o) in stages::run_pipeline(&ws, &cfg, force)? {
                report(s, o);
            }
        }
        Command::Demo { run } => {
            let manifest = vmeme_cli::write_demo(&ws, &cfg)?;
            println!("demo corpus written to {}", manifest.display());
            if run {
                let mut cfg = Config::load(&ws.config_path())?;
                cli.overrides.apply(&mut cfg);
                for (s, o) in stages::run_pipeline(&ws, &cfg, force)? {
                    report(s, o);
                }
            }
        }
    }
    Ok(())
}

fn print_annotation(ws: &Workspace, cfg: &Config, a: &AnnotateArgs) -> Result<()> {
    for (word, score) in vmeme_cli::annotate(ws, cfg, a.meme, a.top).context("annotating")? {
        println!("{word}\t{score:.6}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
