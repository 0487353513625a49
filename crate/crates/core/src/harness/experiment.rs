//! Repeated k-fold evaluation of best-resolution learners.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Learner};
use super::corpus::Corpus;
use super::label::{LabeledCorpus, LevelRun};
use crate::error::{Error, Result};
use crate::eval::{
    aggregate_confusions, classification_metrics, impact_ratios, peak_resolution, ConfusionMatrix, ImpactRatios,
    ImpactRecord, ResolutionOutcome,
};
use crate::imaging::build_pyramid;
use crate::learn::{adaboost_train, adasyn_sample, ramoboost_train, BoostModel, BoostParams, Dataset};
use crate::rng::{substream, Stream};
use crate::segment::{segment_at_level, TimingMode};

/// Fold index of every instance for one repeat; folds differ in size by at
/// most one.
pub fn fold_assignments(n: usize, folds: usize, seed: u64, repeat: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, Stream::Folds, repeat));
    let mut fold = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

/// A trained learner, or a constant answer when the training fold offers
/// nothing to learn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Model(BoostModel),
    Constant(usize),
}

impl Predictor {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Predictor::Model(m) => Ok(m.predict(x)?.0),
            Predictor::Constant(c) => Ok(*c),
        }
    }
}

fn majority(data: &Dataset) -> usize {
    let counts = data.class_counts();
    // ties to the coarser class, as everywhere else
    (0..counts.len()).rev().max_by_key(|&c| (counts[c], c)).unwrap_or(0)
}

/// Fits `learner` on `data`; `stream` selects the sampling substream.
pub fn fit_learner(learner: Learner, data: &Dataset, cfg: &ExperimentConfig, stream: u64) -> Result<BoostModel> {
    // neighbour counts must stay below the training-set size
    let cap = data.len().saturating_sub(1).max(1);
    let params = BoostParams {
        k1: cfg.boost.k1.min(cap),
        k2: cfg.boost.k2.min(cap),
        ..cfg.boost
    };
    let mut rng = substream(cfg.seed, Stream::Sampling, stream);
    match learner {
        Learner::AdaBoost => adaboost_train(data, &params),
        Learner::RamoBoost => ramoboost_train(data, &params, &mut rng),
        Learner::AdasynAdaBoost => {
            let balanced = adasyn_sample(data, cfg.adasyn_beta, cfg.adasyn_k.min(cap), &mut rng)?;
            adaboost_train(&balanced, &params)
        }
    }
}

/// Like [`fit_learner`], but a training fold with a single class, or one
/// where every round is rejected, yields its majority class.
pub fn train_learner(
    learner: Learner,
    data: &Dataset,
    cfg: &ExperimentConfig,
    stream: u64,
) -> Result<Predictor> {
    if data.distinct_classes() < 2 {
        return Ok(Predictor::Constant(majority(data)));
    }
    match fit_learner(learner, data, cfg, stream) {
        Ok(m) => Ok(Predictor::Model(m)),
        Err(Error::NoValidRound) => Ok(Predictor::Constant(majority(data))),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Accuracy and time at fixed choices of level, over all images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionSummary {
    pub selected_dice: MeanStd,
    pub peak_dice: MeanStd,
    pub selected_time: MeanStd,
    pub peak_time: MeanStd,
    pub original_dice: MeanStd,
    pub original_time: MeanStd,
    pub minimum_dice: MeanStd,
    pub minimum_time: MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Locality {
    pub misclassified: usize,
    /// Misclassified instances predicted one level away from the truth.
    pub within_one: usize,
}

impl Locality {
    pub fn fraction(&self) -> Option<f64> {
        (self.misclassified > 0).then(|| self.within_one as f64 / self.misclassified as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerResult {
    pub learner: String,
    /// Per-class F1 averaged over repeats; `None` for absent classes.
    pub f1: Vec<Option<f64>>,
    pub f1_per_repeat: Vec<Vec<Option<f64>>>,
    pub accuracy: MeanStd,
    pub g_mean: MeanStd,
    /// Row-major `levels × levels` mean and std of the repeat confusions.
    pub confusion_mean: Vec<f64>,
    pub confusion_std: Vec<f64>,
    pub locality: Vec<Locality>,
    pub impact: ImpactRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    pub label_histogram: Vec<usize>,
    pub peak_level: usize,
    pub summary: ResolutionSummary,
    pub learners: Vec<LearnerResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub levels: usize,
    pub images: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub timing: TimingMode,
    /// Whether estimated-level outcomes were re-measured or taken from the
    /// labeling runs.
    pub resegmented: bool,
    pub skipped_images: Vec<String>,
    pub alphas: Vec<AlphaResult>,
}

impl ExperimentResult {
    pub fn alpha(&self, alpha: f64) -> Option<&AlphaResult> {
        self.alphas.iter().find(|a| a.alpha == alpha)
    }
}

impl AlphaResult {
    pub fn learner(&self, learner: Learner) -> Option<&LearnerResult> {
        self.learners.iter().find(|l| l.learner == learner.as_str())
    }
}

fn outcome(r: &LevelRun) -> ResolutionOutcome {
    ResolutionOutcome {
        accuracy: r.dice,
        time: r.time,
    }
}

fn summarize(labeled: &LabeledCorpus, labels: &[usize], peak: usize) -> ResolutionSummary {
    let last = labeled.levels - 1;
    let col = |f: &dyn Fn(usize, &[LevelRun]) -> f64| -> MeanStd {
        MeanStd::of(&labeled.images.iter().enumerate().map(|(k, im)| f(k, &im.runs)).collect::<Vec<_>>())
    };
    ResolutionSummary {
        selected_dice: col(&|k, r| r[labels[k]].dice),
        peak_dice: col(&|_, r| r[peak].dice),
        selected_time: col(&|k, r| r[labels[k]].time),
        peak_time: col(&|_, r| r[peak].time),
        original_dice: col(&|_, r| r[0].dice),
        original_time: col(&|_, r| r[0].time),
        minimum_dice: col(&|_, r| r[last].dice),
        minimum_time: col(&|_, r| r[last].time),
    }
}

/// Out-of-fold predictions of one learner for one repeat.
fn cross_validate(
    learner: Learner,
    data: &Dataset,
    folds: &[usize],
    cfg: &ExperimentConfig,
    stream_base: u64,
) -> Result<Vec<usize>> {
    let mut pred = vec![0; data.len()];
    for f in 0..cfg.folds {
        let train: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
        if test.is_empty() || train.is_empty() {
            continue;
        }
        let model = train_learner(learner, &data.subset(&train), cfg, stream_base + f as u64)
            .map_err(|e| Error::Config(format!("fold {f}, {}: {e}", learner.as_str())))?;
        for &i in &test {
            pred[i] = model.predict(&data.features()[i])?;
        }
    }
    Ok(pred)
}

/// Runs the full protocol over a labeled corpus. With wall-clock timing and
/// the source corpus at hand, each estimated level is segmented again so its
/// time is a real measurement; otherwise the labeling runs are reused, which
/// in cost mode is identical by construction.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    labeled: &LabeledCorpus,
    corpus: Option<&Corpus>,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if labeled.levels != cfg.levels {
        return Err(Error::Config(format!(
            "labels cover {} levels but the configuration asks for {}",
            labeled.levels, cfg.levels
        )));
    }
    let n = labeled.len();
    let levels = cfg.levels;
    let resegment = cfg.timing == TimingMode::Wall && corpus.is_some();
    let segmenter = cfg.build_segmenter();

    let fold_plans: Vec<Vec<usize>> = (0..cfg.repeats)
        .map(|r| fold_assignments(n, cfg.folds, cfg.seed, r as u64))
        .collect();

    let mut alphas = Vec::with_capacity(cfg.alphas.len());
    for (ai, &alpha) in cfg.alphas.iter().enumerate() {
        let data = labeled.dataset(alpha)?;
        let labels = data.labels().to_vec();
        let mut hist = vec![0usize; levels];
        labels.iter().for_each(|&l| hist[l] += 1);
        let peak = peak_resolution(&labels, levels).expect("non-empty labels");
        let summary = summarize(labeled, &labels, peak);

        let mut learners = Vec::new();
        for &learner in &cfg.learners {
            let mut confusions = Vec::with_capacity(cfg.repeats);
            let mut records = Vec::with_capacity(cfg.repeats * n);
            let mut locality = Vec::with_capacity(cfg.repeats);
            for (rep, folds) in fold_plans.iter().enumerate() {
                let stream_base = ((ai as u64) << 40) | ((rep as u64) << 20);
                let pred = cross_validate(learner, &data, folds, cfg, stream_base)?;
                confusions.push(ConfusionMatrix::from_pairs(levels, &labels, &pred));
                let mut loc = Locality { misclassified: 0, within_one: 0 };
                for (k, im) in labeled.images.iter().enumerate() {
                    let (t, p) = (labels[k], pred[k]);
                    if t != p {
                        loc.misclassified += 1;
                        loc.within_one += usize::from(t.abs_diff(p) == 1);
                    }
                    let estimated = match (resegment, corpus) {
                        (true, Some(c)) => {
                            let (img, gold) = c.load_entry(im.index)?;
                            let pyr = build_pyramid(&img, levels)?;
                            let click = if cfg.use_click { c.entries[im.index].click } else { None };
                            let run = segment_at_level(&pyr, p, segmenter.as_ref(), Some(&gold), click, &cfg.driver_options())?;
                            ResolutionOutcome { accuracy: run.accuracy, time: run.time }
                        }
                        _ => outcome(&im.runs[p]),
                    };
                    records.push(ImpactRecord {
                        estimated,
                        original: outcome(&im.runs[0]),
                        minimum: outcome(&im.runs[levels - 1]),
                        peak: outcome(&im.runs[peak]),
                        selected: outcome(&im.runs[t]),
                    });
                }
                locality.push(loc);
            }
            let metrics = confusions.iter().map(classification_metrics).collect::<Result<Vec<_>>>()?;
            let f1_per_repeat: Vec<Vec<Option<f64>>> =
                metrics.iter().map(|m| m.per_class.iter().map(|c| c.f1).collect()).collect();
            let f1 = (0..levels)
                .map(|c| {
                    let vals: Vec<f64> = f1_per_repeat.iter().filter_map(|r| r[c]).collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            let agg = aggregate_confusions(&confusions)?;
            learners.push(LearnerResult {
                learner: learner.as_str().to_string(),
                f1,
                f1_per_repeat,
                accuracy: MeanStd::of(&metrics.iter().map(|m| m.accuracy).collect::<Vec<_>>()),
                g_mean: MeanStd::of(&metrics.iter().map(|m| m.g_mean).collect::<Vec<_>>()),
                confusion_mean: agg.mean,
                confusion_std: agg.std,
                locality,
                impact: impact_ratios(&records)?,
            });
        }
        alphas.push(AlphaResult {
            alpha,
            label_histogram: hist,
            peak_level: peak,
            summary,
            learners,
        });
    }

    Ok(ExperimentResult {
        levels,
        images: n,
        folds: cfg.folds,
        repeats: cfg.repeats,
        seed: cfg.seed,
        timing: cfg.timing,
        resegmented: resegment,
        skipped_images: labeled.failures.iter().map(|f| f.image.clone()).collect(),
        alphas,
    })
}

/// Indices of a two-class, `ratio`:1 skewed subset: every instance of the
/// most frequent class plus `ceil(n_major / ratio)` seeded picks from the
/// second most frequent one.
pub fn skewed_subset(labels: &[usize], ratio: usize, seed: u64) -> Result<(Vec<usize>, usize, usize)> {
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    labels.iter().for_each(|&l| counts[l] += 1);
    let mut order: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(b.cmp(&a)));
    if order.len() < 2 || ratio == 0 {
        return Err(Error::InvalidDataset("a skewed subset needs two populated classes".into()));
    }
    let (major, minor) = (order[0], order[1]);
    let want = counts[major].div_ceil(ratio);
    let mut pool: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == minor).collect();
    pool.shuffle(&mut substream(seed, Stream::Skew, 0));
    pool.truncate(want);
    let mut keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == major).chain(pool).collect();
    keep.sort_unstable();
    Ok((keep, major, minor))
}

impl LabeledCorpus {
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            levels: self.levels,
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            failures: self.failures.clone(),
        }
    }
}
