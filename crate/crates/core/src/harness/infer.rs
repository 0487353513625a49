//! Training a deployable model and picking a level for a new image.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::fit_learner;
use super::label::LabeledCorpus;
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::imaging::{build_pyramid, BinaryMask, GrayImage};
use crate::learn::ModelFile;
use crate::segment::{segment_at_level, Seed};

/// Sampling substream reserved for the final model, apart from the
/// cross-validation streams.
const TRAIN_STREAM: u64 = u64::MAX;

/// Trains `cfg.learner` on the whole labeled corpus at `cfg.alpha`.
pub fn train_model(labeled: &LabeledCorpus, cfg: &ExperimentConfig) -> Result<ModelFile> {
    cfg.validate()?;
    let data = labeled.dataset(cfg.alpha)?;
    if data.distinct_classes() < 2 {
        return Err(Error::InvalidDataset(format!(
            "every image has the same best level at alpha {}; nothing to learn",
            cfg.alpha
        )));
    }
    let model = fit_learner(cfg.learner, &data, cfg, TRAIN_STREAM)?;
    let mut file = ModelFile::new(model);
    file.alpha = Some(cfg.alpha);
    file.features = Some(cfg.features);
    Ok(file)
}

/// One inference outcome; `mask` is filled in by the caller that saved it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub image: String,
    pub level: usize,
    /// Seconds or operation count, per the configured timing mode.
    pub time: f64,
    pub cost: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    /// Normalized vote per level.
    pub scores: Vec<f64>,
}

/// Predicts the level for `image` and segments it there.
pub fn infer(
    model: &ModelFile,
    name: &str,
    image: &GrayImage,
    click: Option<Seed>,
    cfg: &ExperimentConfig,
) -> Result<(InferenceRecord, BinaryMask)> {
    if let Some(f) = model.features {
        if f != cfg.features {
            return Err(Error::Config(format!(
                "model was trained on a {}x{} grid with {} bins, configuration asks for {}x{} with {}",
                f.rows, f.cols, f.bins, cfg.features.rows, cfg.features.cols, cfg.features.bins
            )));
        }
    }
    let features = extract_features(image, &cfg.features)?;
    if features.len() != model.feature_dim {
        return Err(Error::FeatureDimension {
            expected: model.feature_dim,
            actual: features.len(),
        });
    }
    let (level, scores) = model.model().predict(features.values())?;
    // the model's class count fixes the pyramid depth
    let pyr = build_pyramid(image, model.n_classes)?;
    let segmenter = cfg.build_segmenter();
    let run = segment_at_level(&pyr, level, segmenter.as_ref(), None, click, &cfg.driver_options())?;
    Ok((
        InferenceRecord {
            image: name.to_string(),
            level,
            time: run.time,
            cost: run.cost,
            mask: None,
            scores,
        },
        run.mask,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::label::{LabeledImage, LevelRun};
    use crate::harness::synth::generate_synthetic_corpus;
    use crate::learn::Algorithm;
    use crate::segment::CostMeter;

    /// Labels 0..levels carried by the feature value, padded to `dim`.
    fn toy(levels: usize, dim: usize) -> LabeledCorpus {
        LabeledCorpus {
            levels,
            images: (0..6 * levels)
                .map(|i| {
                    let best = i % levels;
                    let mut features = vec![0.0; dim];
                    features[0] = best as f64;
                    LabeledImage {
                        name: format!("t{i}"),
                        index: i,
                        runs: (0..levels)
                            .map(|l| LevelRun {
                                dice: if l <= best { 0.9 } else { 0.1 },
                                time: (1 << (2 * (levels - l))) as f64,
                                cost: 1 << (2 * (levels - l)),
                            })
                            .collect(),
                        features,
                    }
                })
                .collect(),
            failures: vec![],
        }
    }

    #[test]
    fn trained_model_carries_metadata() {
        let cfg = ExperimentConfig::default();
        let m = train_model(&toy(6, cfg.features.dim()), &cfg).unwrap();
        assert_eq!(m.alpha, Some(0.5));
        assert_eq!(m.features, Some(cfg.features));
        assert_eq!(m.n_classes, 6);
        assert_eq!(m.algorithm, Algorithm::RamoBoost);
        m.validate().unwrap();
    }

    #[test]
    fn single_class_cannot_train() {
        let cfg = ExperimentConfig::default();
        let mut t = toy(6, cfg.features.dim());
        t.images.iter_mut().for_each(|im| im.runs.iter_mut().for_each(|r| r.dice = 0.5));
        assert!(train_model(&t, &cfg).is_err());
    }

    #[test]
    fn chosen_level_within_range() {
        let cfg = ExperimentConfig::default();
        let model = train_model(&toy(6, cfg.features.dim()), &cfg).unwrap();
        for s in generate_synthetic_corpus(3, 256, 3) {
            let (rec, mask) = infer(&model, "x", &s.image, s.click, &cfg).unwrap();
            assert!(rec.level < 6);
            assert_eq!(mask.dims(), (256, 256));
            assert_eq!(rec.scores.len(), 6);
        }
    }

    #[test]
    fn level_zero_is_the_plain_segmenter() {
        // at alpha 1 the full-resolution level can be a label
        let mut cfg = ExperimentConfig::default();
        cfg.alpha = 1.0;
        let mut model = train_model(&toy(2, cfg.features.dim()), &cfg).unwrap();
        // make every tree answer level 0
        for r in &mut model.rounds {
            for v in &mut r.tree.value {
                *v = vec![1.0, 0.0];
            }
        }
        let s = &generate_synthetic_corpus(1, 64, 9)[0];
        let (rec, mask) = infer(&model, "x", &s.image, None, &cfg).unwrap();
        assert_eq!(rec.level, 0);
        let plain = cfg.build_segmenter().segment(&s.image, None, &mut CostMeter::default()).unwrap();
        assert_eq!(mask, plain);
    }

    #[test]
    fn mismatched_features_rejected() {
        let cfg = ExperimentConfig::default();
        let model = train_model(&toy(3, cfg.features.dim()), &cfg).unwrap();
        let mut other = cfg.clone();
        other.features.bins = 8;
        let img = GrayImage::filled(64, 64, 10.0);
        assert!(matches!(infer(&model, "x", &img, None, &other), Err(Error::Config(_))));
        let mut bare = model.clone();
        bare.features = None;
        assert!(matches!(infer(&bare, "x", &img, None, &other), Err(Error::FeatureDimension { .. })));
    }
}
