//! `resolve-seg`: generate corpora, label them, train, evaluate and infer.
//!
//! Exit status: 0 on success, 2 when some images failed but the run
//! finished, 1 on a fatal error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use resolve_seg::harness::{
    generate_synthetic_corpus, infer, label_corpus_with, read_result, run_experiment, train_model, write_report,
    write_synthetic_corpus, Corpus, ExperimentConfig, LabeledCorpus, RESULT_JSON,
};
use resolve_seg::imaging::{load_image, save_mask};
use resolve_seg::learn::{load_model, save_model};

#[derive(Parser)]
#[command(name = "resolve-seg", version, about = "Pick a pyramid level per image, then segment there")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trade-off weight between accuracy (1) and speed (0).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// `cost` (operation counts, reproducible) or `wall` (seconds).
    #[arg(long, global = true)]
    timing: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Extra configuration override, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus (images, gold masks, manifest).
    Gen {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Segment every image at every level and record its best level.
    Label {
        /// Corpus directory containing `manifest.csv`.
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train the configured learner on a labeled directory.
    Train {
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeated cross-validation with the full report bundle.
    Eval {
        #[arg(long)]
        labels: PathBuf,
        /// Source corpus; with wall timing, predicted levels are segmented again.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Predict a level for each image and segment it there.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Object click `x,y` in full-resolution pixels.
        #[arg(long, value_parser = parse_click)]
        click: Option<(usize, usize)>,
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild the CSV and text tables from an `experiment.json`.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_click(s: &str) -> std::result::Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    Ok((
        x.trim().parse().map_err(|_| format!("bad x `{x}`"))?,
        y.trim().parse().map_err(|_| format!("bad y `{y}`"))?,
    ))
}

enum Outcome {
    Done,
    Partial(usize),
}

fn config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    for o in &c.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("override `{o}` is not key=value"))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(s) = c.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(a) = c.alpha {
        cfg.set("alpha", &a.to_string())?;
    }
    if let Some(t) = &c.timing {
        cfg.set("timing", t)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn save_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let p = dir.join("config.txt");
    fs::write(&p, cfg.to_text()).with_context(|| format!("writing {}", p.display()))
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Gen { count, size, common } => {
            let mut cfg = config(&common)?;
            if let Some(n) = count {
                cfg.corpus_count = n;
            }
            if let Some(s) = size {
                cfg.corpus_size = s;
            }
            if cfg.corpus_count == 0 {
                bail!("corpus count must be at least 1");
            }
            let samples = generate_synthetic_corpus(cfg.corpus_count, cfg.corpus_size, cfg.seed);
            let corpus = write_synthetic_corpus(&common.out, &samples)?;
            println!(
                "wrote {} images of {}x{} to {}",
                corpus.len(),
                cfg.corpus_size,
                cfg.corpus_size,
                common.out.display()
            );
            Ok(Outcome::Done)
        }
        Command::Label { corpus, common } => {
            let cfg = config(&common)?;
            let corpus = Corpus::load(&corpus).with_context(|| format!("loading corpus {}", corpus.display()))?;
            let started = Instant::now();
            let labeled = label_corpus_with(&corpus, &cfg, |done, total| {
                eprint!("\rlabeling {done}/{total}");
                let _ = std::io::stderr().flush();
            })?;
            eprintln!();
            create_out(&common.out)?;
            labeled.write(&common.out, &cfg)?;
            save_config(&common.out, &cfg)?;
            println!(
                "labeled {} images in {:.1} s; {} failed",
                labeled.len(),
                started.elapsed().as_secs_f64(),
                labeled.failures.len()
            );
            for f in &labeled.failures {
                eprintln!("  {}: {}", f.image, f.reason);
            }
            if labeled.is_empty() {
                bail!("no image could be labeled");
            }
            Ok(if labeled.failures.is_empty() {
                Outcome::Done
            } else {
                Outcome::Partial(labeled.failures.len())
            })
        }
        Command::Train { labels, common } => {
            let cfg = config(&common)?;
            let labeled = LabeledCorpus::read(&labels).with_context(|| format!("reading {}", labels.display()))?;
            let model = train_model(&labeled, &cfg)?;
            create_out(&common.out)?;
            let path = common.out.join("model.json");
            save_model(&path, &model)?;
            println!(
                "trained {} on {} images at alpha {}: {} rounds, saved to {}",
                cfg.learner.display_name(),
                labeled.len(),
                cfg.alpha,
                model.rounds.len(),
                path.display()
            );
            Ok(Outcome::Done)
        }
        Command::Eval { labels, corpus, common } => {
            let cfg = config(&common)?;
            let labeled = LabeledCorpus::read(&labels).with_context(|| format!("reading {}", labels.display()))?;
            let corpus = corpus
                .map(|c| Corpus::load(&c).with_context(|| format!("loading corpus {}", c.display())))
                .transpose()?;
            let started = Instant::now();
            let res = run_experiment(&cfg, &labeled, corpus.as_ref())?;
            write_report(&common.out, &res)?;
            save_config(&common.out, &cfg)?;
            println!(
                "evaluated {} images, {} alphas × {} learners in {:.1} s; report in {}",
                res.images,
                res.alphas.len(),
                cfg.learners.len(),
                started.elapsed().as_secs_f64(),
                common.out.display()
            );
            Ok(match res.skipped_images.len() {
                0 => Outcome::Done,
                n => Outcome::Partial(n),
            })
        }
        Command::Infer {
            model,
            images,
            click,
            common,
        } => {
            let cfg = config(&common)?;
            let model = load_model(&model).with_context(|| format!("loading model {}", model.display()))?;
            create_out(&common.out)?;
            let log = common.out.join("inference.jsonl");
            let mut lines = String::new();
            let mut failed = 0;
            for path in &images {
                let name = path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
                let result = load_image(path).and_then(|img| infer(&model, &name, &img, click, &cfg));
                match result {
                    Ok((mut rec, mask)) => {
                        let mask_path = common.out.join(format!("{name}_mask.png"));
                        save_mask(&mask, &mask_path)?;
                        rec.mask = Some(mask_path.display().to_string());
                        let line = serde_json::to_string(&rec)?;
                        println!("{line}");
                        lines += &line;
                        lines.push('\n');
                    }
                    Err(e) => {
                        // a model/config mismatch affects every image alike
                        if matches!(e, resolve_seg::Error::FeatureDimension { .. } | resolve_seg::Error::Config(_)) {
                            return Err(e.into());
                        }
                        eprintln!("{}: {e}", path.display());
                        failed += 1;
                    }
                }
            }
            fs::write(&log, lines).with_context(|| format!("writing {}", log.display()))?;
            if failed == images.len() {
                bail!("no image could be processed");
            }
            Ok(if failed == 0 { Outcome::Done } else { Outcome::Partial(failed) })
        }
        Command::Report { results, common } => {
            let path = if results.is_dir() { results.join(RESULT_JSON) } else { results };
            let res = read_result(&path).with_context(|| format!("reading {}", path.display()))?;
            let files = write_report(&common.out, &res)?;
            println!("wrote {} files to {}", files.len(), common.out.display());
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(n)) => {
            eprintln!("finished with {n} per-image failure(s)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
