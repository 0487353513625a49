//! End-to-end orchestration: corpora, labeling, experiments, inference.

pub mod config;
pub mod corpus;
pub mod experiment;
pub mod infer;
pub mod label;
pub mod report;
pub mod synth;

pub use config::{ExperimentConfig, Learner, SegmenterKind};
pub use corpus::{write_synthetic_corpus, Corpus, CorpusEntry};
pub use experiment::{fit_learner, fold_assignments, run_experiment, skewed_subset, train_learner, AlphaResult, ExperimentResult, LearnerResult, Locality, MeanStd, Predictor, ResolutionSummary};
pub use infer::{infer, train_model, InferenceRecord};
pub use label::{label_corpus, label_corpus_with, label_image, LabelFailure, LabeledCorpus, LabeledImage, LevelRun};
pub use report::{mean_locality, read_result, render_text, write_report, REPORT_TXT, RESULT_JSON};
pub use synth::{generate_synthetic_corpus, SyntheticSample};
