//! The `valence` command line. Exit codes: 0 success, 1 usage, 2 data error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand};
use valence_core::dataset::episode_id;
use valence_core::seed::mix_seed;
use valence_core::simulator::simulate_episode;
use valence_core::{generate_dataset, replay_episode, Split};

use crate::annotation::build::build_dataset;
use crate::annotation::http::{router, serve};
use crate::annotation::{Service, ServiceConfig};
use crate::config::PipelineConfig;
use crate::dond::{parse_episode_bytes, serialize_episode};
use crate::eval::{frame_classifier, train_and_evaluate};
use crate::manifest::RunManifest;
use crate::tracks::{read_track_set, write_model, write_track_set};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "valence", version, about = "Weakly supervised valence labels from simulated game shows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate episodes and write them as `.dond` files.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `episodes` from the config.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay `.dond` files and print one CSV row per labeled event.
    Label {
        /// Directory of `.dond` files.
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate episodes and render labeled face tracks.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the pooling model and evaluate it against the voting baseline.
    TrainEval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Track file written by `generate`.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn one split of a track file into an annotation dataset.
    BuildAnnotation {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        /// Dataset name; files go to `<data-dir>/datasets/<name>/`.
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
        #[arg(long)]
        data_dir: PathBuf,
    },
    /// Run the annotation service until interrupted.
    Serve {
        #[arg(long, env = "VALENCE_DATA_DIR")]
        data_dir: PathBuf,
        /// 0 picks a free port; the bound address is printed.
        #[arg(long, env = "VALENCE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "VALENCE_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "VALENCE_FOLDS", default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        folds: u32,
        #[arg(long, env = "VALENCE_MIN_ANNOTATIONS", default_value_t = 4)]
        min_annotations: usize,
        /// Answers needed for a leaderboard rank.
        #[arg(long, env = "VALENCE_MIN_ANSWERS", default_value_t = 10)]
        min_answers: usize,
        /// Static UI bundle served at `/`.
        #[arg(long, env = "VALENCE_UI_DIR")]
        ui_dir: Option<PathBuf>,
    },
}

fn parse_split(s: &str) -> Result<Split, String> {
    Split::from_name(s).ok_or_else(|| format!("expected train, val or test, found `{s}`"))
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    Ok(PipelineConfig::load_or_default(path)?.with_seed(seed))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], manifest: &mut RunManifest) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    manifest.output(name, bytes);
    Ok(())
}

fn finish(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).with_context(|| format!("cannot write {}", path.display()))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, seed, episodes, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let n = episodes.unwrap_or(cfg.episodes);
            cfg.simulator.validate()?;
            fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            let mut manifest = RunManifest::new("simulate", &cfg);
            manifest.argument("--episodes", n);
            if let Some(path) = &config {
                manifest.input(path)?;
            }
            // Same per-episode seeds and ids as `generate`.
            for i in 0..n {
                let mut ep = simulate_episode(&cfg.simulator.with_seed(mix_seed(cfg.simulator.seed, i as u64)))?;
                ep.id = episode_id(i);
                write_file(&out, &format!("{}.dond", ep.id), serialize_episode(&ep).as_bytes(), &mut manifest)?;
            }
            finish(&out, &manifest)?;
            println!("wrote {n} episodes to {}", out.display());
        }
        Command::Label { episodes, config, out } => {
            let cfg = load_config(config.as_deref(), None)?;
            let table = label_table(&episodes, &cfg)?;
            match out {
                Some(path) => fs::write(&path, table).with_context(|| format!("cannot write {}", path.display()))?,
                None => std::io::stdout().write_all(table.as_bytes())?,
            }
        }
        Command::Generate { config, seed, episodes, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let n = episodes.unwrap_or(cfg.episodes);
            let ds = generate_dataset(&cfg.simulator, n, &cfg.actor, cfg.split)?;
            let mut manifest = RunManifest::new("generate", &cfg);
            manifest.argument("--episodes", n);
            if let Some(path) = &config {
                manifest.input(path)?;
            }
            for ep in &ds.episodes {
                write_file(&out, &format!("episodes/{}.dond", ep.id), serialize_episode(ep).as_bytes(), &mut manifest)?;
            }
            write_file(&out, "tracks.txt", write_track_set(&ds.tracks).as_bytes(), &mut manifest)?;
            finish(&out, &manifest)?;
            println!("wrote {} tracks from {n} episodes to {}", ds.tracks.tracks.len(), out.display());
        }
        Command::TrainEval { config, seed, dataset, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let text = fs::read_to_string(&dataset).with_context(|| format!("cannot read {}", dataset.display()))?;
            let tracks = read_track_set(&text).map_err(|e| anyhow!("{}: {e}", dataset.display()))?;
            let eval = train_and_evaluate(&tracks, &cfg)?;
            let mut manifest = RunManifest::new("train-eval", &cfg);
            if let Some(path) = &config {
                manifest.input(path)?;
            }
            manifest.input(&dataset)?;
            write_file(&out, "model.txt", write_model(&eval.model).as_bytes(), &mut manifest)?;
            write_file(&out, "report.toml", eval.report.to_toml().as_bytes(), &mut manifest)?;
            write_file(&out, "distributions.csv", eval.report.distribution_csv().as_bytes(), &mut manifest)?;
            finish(&out, &manifest)?;
            let r = &eval.report;
            println!("method   val_auc  test_auc");
            println!("pooling  {:.4}   {:.4}", r.pooling.val.auc, r.pooling.test.auc);
            println!("voting   {:.4}   {:.4}", r.voting.val.auc, r.voting.test.auc);
            println!("best epoch {} of {}", r.training.best_epoch, r.training.epochs);
        }
        Command::BuildAnnotation { config, dataset, name, split, data_dir } => {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                bail!("dataset name must be non-empty and use only letters, digits, `-` and `_`");
            }
            let cfg = load_config(config.as_deref(), None)?;
            let text = fs::read_to_string(&dataset).with_context(|| format!("cannot read {}", dataset.display()))?;
            let tracks = read_track_set(&text).map_err(|e| anyhow!("{}: {e}", dataset.display()))?;
            let fec = frame_classifier(&cfg.actor)?;
            let built = build_dataset(&name, &tracks, split, &fec);
            if built.items.is_empty() {
                bail!("the {split} split of {} is empty", dataset.display());
            }
            let dir = data_dir.join("datasets").join(&name);
            let mut manifest = RunManifest::new("build-annotation", &cfg);
            manifest.argument("--name", &name);
            manifest.argument("--split", split);
            manifest.input(&dataset)?;
            for (file, body) in &built.media {
                write_file(&dir, &format!("media/{file}"), body.as_bytes(), &mut manifest)?;
            }
            write_file(&dir, "items.jsonl", built.items_jsonl().as_bytes(), &mut manifest)?;
            finish(&dir, &manifest)?;
            println!("wrote {} items to {}", built.items.len(), dir.display());
        }
        Command::Serve { data_dir, port, host, folds, min_annotations, min_answers, ui_dir } => {
            let config = ServiceConfig { folds, min_annotations, min_answers };
            let service = Service::open(&data_dir, config)?;
            if service.datasets().is_empty() {
                bail!("no datasets under {}", data_dir.join("datasets").display());
            }
            let addr: SocketAddr =
                format!("{host}:{port}").parse().with_context(|| format!("invalid address {host}:{port}"))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener =
                    tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
                println!("listening on http://{}", listener.local_addr()?);
                std::io::stdout().flush()?;
                let app = router(service, data_dir.join("datasets"), ui_dir);
                serve(listener, app, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
    }
    Ok(())
}

pub const LABEL_HEADER: &str = "episode,round,removed,mean_before,mean_after,deal,label";

/// One row per event of every `.dond` file in `dir`, files in name order.
/// Amounts are pence; means are exact fractions `numerator/denominator`.
pub fn label_table(dir: &Path, cfg: &PipelineConfig) -> Result<String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dond"))
        .collect();
    files.sort();
    let mut out = format!("{LABEL_HEADER}\n");
    let mut failures = 0;
    for path in &files {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let parsed = match parse_episode_bytes(&bytes) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("{}:{}:{}: {}", path.display(), e.line, e.column, e.kind);
                failures += 1;
                continue;
            }
        };
        match replay_episode(&parsed.episode, cfg.simulator.delta) {
            Ok(events) => {
                for ev in events {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        parsed.episode.id,
                        ev.round,
                        ev.removed.pence(),
                        ev.mean_before,
                        ev.mean_after,
                        ev.deal,
                        ev.label
                    );
                }
            }
            Err(e) => {
                let line = e.action().and_then(|a| parsed.action_lines.get(a)).copied().unwrap_or(1);
                eprintln!("{}:{line}:1: {e}", path.display());
                failures += 1;
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} episode files failed", files.len());
    }
    Ok(out)
}
