//! Best-resolution labeling of a corpus: every image is segmented at every
//! pyramid level, scored, and summarized by its LBP features.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{extract_features, read_feature_csv, write_feature_csv};
use crate::imaging::{build_pyramid, BinaryMask, GrayImage};
use crate::learn::Dataset;
use crate::segment::{segment_all_levels, Seed, Segmenter};
use crate::tradeoff::label_best_resolution;

pub const RUNS_CSV: &str = "runs.csv";
pub const FEATURES_CSV: &str = "features.csv";
pub const LABELS_CSV: &str = "labels.csv";
pub const FAILURES_CSV: &str = "failures.csv";

/// Accuracy and time of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRun {
    pub dice: f64,
    pub time: f64,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub name: String,
    /// Position in the source manifest.
    pub index: usize,
    pub runs: Vec<LevelRun>,
    pub features: Vec<f64>,
}

impl LabeledImage {
    pub fn label(&self, alpha: f64) -> Result<usize> {
        let at: Vec<(f64, f64)> = self.runs.iter().map(|r| (r.dice, r.time)).collect();
        Ok(label_best_resolution(&at, alpha)?.best_level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFailure {
    pub index: usize,
    pub image: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub levels: usize,
    pub images: Vec<LabeledImage>,
    pub failures: Vec<LabelFailure>,
}

/// Runs every level on one image and extracts its features.
pub fn label_image(
    name: &str,
    index: usize,
    image: &GrayImage,
    gold: &BinaryMask,
    click: Option<Seed>,
    cfg: &ExperimentConfig,
    segmenter: &dyn Segmenter,
) -> Result<LabeledImage> {
    let pyr = build_pyramid(image, cfg.levels)?;
    let click = if cfg.use_click { click } else { None };
    let runs = segment_all_levels(&pyr, segmenter, gold, click, &cfg.driver_options())?
        .into_iter()
        .map(|r| LevelRun {
            dice: r.accuracy,
            time: r.time,
            cost: r.cost,
        })
        .collect();
    let features = extract_features(image, &cfg.features)?.into_values();
    Ok(LabeledImage {
        name: name.to_string(),
        index,
        runs,
        features,
    })
}

/// Labels every manifest entry; per-image failures are collected rather
/// than aborting the run.
pub fn label_corpus(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<LabeledCorpus> {
    label_corpus_with(corpus, cfg, |_, _| {})
}

/// [`label_corpus`] with a callback after each entry: `(done, total)`.
pub fn label_corpus_with(
    corpus: &Corpus,
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(usize, usize),
) -> Result<LabeledCorpus> {
    let segmenter = cfg.build_segmenter();
    let mut images = Vec::new();
    let mut failures = Vec::new();
    for (i, entry) in corpus.entries.iter().enumerate() {
        let name = entry.name();
        let result = corpus
            .load_entry(i)
            .and_then(|(img, gold)| label_image(&name, i, &img, &gold, entry.click, cfg, segmenter.as_ref()));
        match result {
            Ok(l) => images.push(l),
            Err(e) => failures.push(LabelFailure {
                index: i,
                image: name,
                reason: e.to_string(),
            }),
        }
        progress(i + 1, corpus.len());
    }
    Ok(LabeledCorpus {
        levels: cfg.levels,
        images,
        failures,
    })
}

impl LabeledCorpus {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self, alpha: f64) -> Result<Vec<usize>> {
        self.images.iter().map(|im| im.label(alpha)).collect()
    }

    pub fn dataset(&self, alpha: f64) -> Result<Dataset> {
        if self.images.is_empty() {
            return Err(Error::EmptyRecords);
        }
        Dataset::new(
            self.images.iter().map(|im| im.features.clone()).collect(),
            self.labels(alpha)?,
            self.levels,
        )
    }

    /// Writes `runs.csv`, `features.csv` (labels at `cfg.alpha`),
    /// `labels.csv` (one column per alpha) and `failures.csv`.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut runs = csv::Writer::from_path(dir.join(RUNS_CSV))?;
        runs.write_record(["index", "image", "level", "dice", "time", "cost"])?;
        for im in &self.images {
            for (l, r) in im.runs.iter().enumerate() {
                runs.write_record([
                    im.index.to_string(),
                    im.name.clone(),
                    l.to_string(),
                    r.dice.to_string(),
                    r.time.to_string(),
                    r.cost.to_string(),
                ])?;
            }
        }
        runs.flush().map_err(|e| Error::io(dir.join(RUNS_CSV), e))?;

        let path = dir.join(FEATURES_CSV);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let rows: Vec<Vec<f64>> = self.images.iter().map(|im| im.features.clone()).collect();
        write_feature_csv(std::io::BufWriter::new(file), &rows, Some(&self.labels(cfg.alpha)?))?;

        let mut labels = csv::Writer::from_path(dir.join(LABELS_CSV))?;
        let mut header = vec!["index".to_string(), "image".to_string()];
        header.extend(cfg.alphas.iter().map(|a| format!("alpha_{a}")));
        labels.write_record(&header)?;
        let per_alpha = cfg.alphas.iter().map(|&a| self.labels(a)).collect::<Result<Vec<_>>>()?;
        for (k, im) in self.images.iter().enumerate() {
            let mut rec = vec![im.index.to_string(), im.name.clone()];
            rec.extend(per_alpha.iter().map(|ls| ls[k].to_string()));
            labels.write_record(&rec)?;
        }
        labels.flush().map_err(|e| Error::io(dir.join(LABELS_CSV), e))?;

        let mut fails = csv::Writer::from_path(dir.join(FAILURES_CSV))?;
        fails.write_record(["index", "image", "reason"])?;
        for f in &self.failures {
            fails.write_record([f.index.to_string(), f.image.clone(), f.reason.clone()])?;
        }
        fails.flush().map_err(|e| Error::io(dir.join(FAILURES_CSV), e))?;
        Ok(())
    }

    /// Reads the files written by [`LabeledCorpus::write`].
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(RUNS_CSV);
        let mut rdr = csv::Reader::from_path(&path)?;
        let mut images: Vec<LabeledImage> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let bad = |what: &str| Error::Config(format!("{}: bad {what} in row {:?}", path.display(), rec));
            let index: usize = field(0).parse().map_err(|_| bad("index"))?;
            let level: usize = field(2).parse().map_err(|_| bad("level"))?;
            let run = LevelRun {
                dice: field(3).parse().map_err(|_| bad("dice"))?,
                time: field(4).parse().map_err(|_| bad("time"))?,
                cost: field(5).parse().map_err(|_| bad("cost"))?,
            };
            match images.last_mut() {
                Some(im) if im.index == index => {
                    if level != im.runs.len() {
                        return Err(bad("level order"));
                    }
                    im.runs.push(run);
                }
                _ => {
                    if level != 0 {
                        return Err(bad("level order"));
                    }
                    images.push(LabeledImage {
                        name: field(1).to_string(),
                        index,
                        runs: vec![run],
                        features: vec![],
                    });
                }
            }
        }
        let levels = images.first().map_or(0, |im| im.runs.len());
        if levels == 0 || images.iter().any(|im| im.runs.len() != levels) {
            return Err(Error::Config(format!("{}: inconsistent level count", path.display())));
        }

        let path = dir.join(FEATURES_CSV);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let (rows, _) = read_feature_csv(file)?;
        if rows.len() != images.len() {
            return Err(Error::Config(format!(
                "{} has {} rows but {} lists {} images",
                FEATURES_CSV,
                rows.len(),
                RUNS_CSV,
                images.len()
            )));
        }
        for (im, row) in images.iter_mut().zip(rows) {
            im.features = row;
        }

        let mut failures = Vec::new();
        let path = dir.join(FAILURES_CSV);
        if path.exists() {
            let mut rdr = csv::Reader::from_path(&path)?;
            for f in rdr.deserialize() {
                failures.push(f?);
            }
        }
        Ok(Self {
            levels,
            images,
            failures,
        })
    }
}
