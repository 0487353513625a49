//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureParams;
use crate::learn::{BoostParams, TreeParams};
use crate::segment::{ChanVese, ChanVeseParams, DriverOptions, RegionGrowSegmenter, Segmenter, TimingMode, DEFAULT_TAU};
use crate::tradeoff::ALPHA_GRID;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmenterKind {
    ChanVese,
    RegionGrow,
}

impl FromStr for SegmenterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chanvese" => Ok(Self::ChanVese),
            "regiongrow" => Ok(Self::RegionGrow),
            _ => Err(Error::Config(format!("unknown segmenter `{s}`"))),
        }
    }
}

impl SegmenterKind {
    fn as_str(self) -> &'static str {
        match self {
            Self::ChanVese => "chanvese",
            Self::RegionGrow => "regiongrow",
        }
    }
}

/// A learner in the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Learner {
    AdaBoost,
    RamoBoost,
    /// AdaBoost on a training set rebalanced once by ADASYN.
    AdasynAdaBoost,
}

impl FromStr for Learner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaboost" => Ok(Self::AdaBoost),
            "ramoboost" => Ok(Self::RamoBoost),
            "adasyn-adaboost" => Ok(Self::AdasynAdaBoost),
            _ => Err(Error::Config(format!("unknown learner `{s}`"))),
        }
    }
}

impl Learner {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AdaBoost => "adaboost",
            Self::RamoBoost => "ramoboost",
            Self::AdasynAdaBoost => "adasyn-adaboost",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Self::AdaBoost => "AdaBoost",
            Self::RamoBoost => "RAMOBoost",
            Self::AdasynAdaBoost => "AdaBoost+ADASYN",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub levels: usize,
    pub alphas: Vec<f64>,
    /// Trade-off weight used by `train`, `infer` and the headline tables.
    pub alpha: f64,
    pub segmenter: SegmenterKind,
    pub chan_vese: ChanVeseParams,
    pub tau: f64,
    pub use_click: bool,
    pub features: FeatureParams,
    /// Learner used by `train`/`infer`; the experiment compares `learners`.
    pub learner: Learner,
    pub learners: Vec<Learner>,
    pub boost: BoostParams,
    pub adasyn_beta: f64,
    pub adasyn_k: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub timing: TimingMode,
    pub corpus_size: usize,
    pub corpus_count: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            levels: 6,
            alphas: ALPHA_GRID.to_vec(),
            alpha: 0.5,
            segmenter: SegmenterKind::ChanVese,
            chan_vese: ChanVeseParams::default(),
            tau: DEFAULT_TAU,
            use_click: true,
            features: FeatureParams::default(),
            learner: Learner::RamoBoost,
            learners: vec![Learner::AdaBoost, Learner::RamoBoost],
            boost: BoostParams::default(),
            adasyn_beta: 0.7,
            adasyn_k: 5,
            folds: 10,
            repeats: 10,
            seed: 42,
            timing: TimingMode::Cost,
            corpus_size: 256,
            corpus_count: 200,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let cv = &mut self.chan_vese;
        match key.trim() {
            "levels" => self.levels = parse(key, v)?,
            "alphas" => self.alphas = parse_list(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "segmenter" => self.segmenter = v.parse()?,
            "cv.lambda1" => cv.lambda1 = parse(key, v)?,
            "cv.lambda2" => cv.lambda2 = parse(key, v)?,
            "cv.mu" => cv.mu = parse(key, v)?,
            "cv.dt" => cv.dt = parse(key, v)?,
            "cv.epsilon" => cv.epsilon = parse(key, v)?,
            "cv.eta" => cv.eta = parse(key, v)?,
            "cv.patience" => cv.patience = parse(key, v)?,
            "cv.max_iterations" => cv.max_iterations = parse(key, v)?,
            "cv.pitch_fraction" => cv.pitch_fraction = parse(key, v)?,
            "cv.max_pitch" => cv.max_pitch = parse(key, v)?,
            "cv.radius_fraction" => cv.radius_fraction = parse(key, v)?,
            "cv.normalize_force" => cv.normalize_force = parse_bool(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "use_click" => self.use_click = parse_bool(key, v)?,
            "lbp.rows" => self.features.rows = parse(key, v)?,
            "lbp.cols" => self.features.cols = parse(key, v)?,
            "lbp.bins" => self.features.bins = parse(key, v)?,
            "learner" => self.learner = v.parse()?,
            "learners" => self.learners = parse_list(key, v)?,
            "rounds" => self.boost.rounds = parse(key, v)?,
            "tree.max_depth" => self.boost.tree.max_depth = parse(key, v)?,
            "tree.min_leaf_fraction" => self.boost.tree.min_leaf_fraction = parse(key, v)?,
            "k1" => self.boost.k1 = parse(key, v)?,
            "k2" => self.boost.k2 = parse(key, v)?,
            "n_syn_per_round" => {
                self.boost.n_syn_per_round = if v == "auto" { None } else { Some(parse(key, v)?) }
            }
            "adasyn.beta" => self.adasyn_beta = parse(key, v)?,
            "adasyn.k" => self.adasyn_k = parse(key, v)?,
            "folds" => self.folds = parse(key, v)?,
            "repeats" => self.repeats = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "timing" => self.timing = v.parse()?,
            "corpus.size" => self.corpus_size = parse(key, v)?,
            "corpus.count" => self.corpus_count = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.levels == 0 || self.levels > crate::imaging::MAX_LEVELS {
            return bad(format!("levels must lie in 1..={}", crate::imaging::MAX_LEVELS));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("alphas must be a non-empty list within [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if self.repeats < 1 {
            return bad("repeats must be at least 1".into());
        }
        if self.learners.is_empty() {
            return bad("learners must not be empty".into());
        }
        if self.features.rows == 0 || self.features.cols == 0 || self.features.bins == 0 {
            return bad("lbp grid and bins must be positive".into());
        }
        if self.boost.rounds == 0 {
            return bad("rounds must be positive".into());
        }
        if !(self.adasyn_beta > 0.0 && self.adasyn_beta <= 1.0) {
            return bad("adasyn.beta must lie in (0, 1]".into());
        }
        if self.corpus_size < 8 << (self.levels - 1).min(8) && self.segmenter == SegmenterKind::ChanVese {
            return bad(format!("corpus.size {} too small for {} levels", self.corpus_size, self.levels));
        }
        Ok(())
    }

    pub fn build_segmenter(&self) -> Box<dyn Segmenter + Send + Sync> {
        match self.segmenter {
            SegmenterKind::ChanVese => Box::new(ChanVese::new(self.chan_vese)),
            SegmenterKind::RegionGrow => Box::new(RegionGrowSegmenter { tau: self.tau }),
        }
    }

    pub fn driver_options(&self) -> DriverOptions {
        DriverOptions {
            tau: self.tau,
            timing: self.timing,
        }
    }

    pub fn tree_params(&self) -> TreeParams {
        self.boost.tree
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let cv = &self.chan_vese;
        let list = |v: &[f64]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("levels", self.levels.to_string());
        kv("alphas", list(&self.alphas));
        kv("alpha", self.alpha.to_string());
        kv("segmenter", self.segmenter.as_str().into());
        kv("cv.lambda1", cv.lambda1.to_string());
        kv("cv.lambda2", cv.lambda2.to_string());
        kv("cv.mu", cv.mu.to_string());
        kv("cv.dt", cv.dt.to_string());
        kv("cv.epsilon", cv.epsilon.to_string());
        kv("cv.eta", cv.eta.to_string());
        kv("cv.patience", cv.patience.to_string());
        kv("cv.max_iterations", cv.max_iterations.to_string());
        kv("cv.pitch_fraction", cv.pitch_fraction.to_string());
        kv("cv.max_pitch", cv.max_pitch.to_string());
        kv("cv.radius_fraction", cv.radius_fraction.to_string());
        kv("cv.normalize_force", cv.normalize_force.to_string());
        kv("tau", self.tau.to_string());
        kv("use_click", self.use_click.to_string());
        kv("lbp.rows", self.features.rows.to_string());
        kv("lbp.cols", self.features.cols.to_string());
        kv("lbp.bins", self.features.bins.to_string());
        kv("learner", self.learner.as_str().into());
        kv("learners", self.learners.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(","));
        kv("rounds", self.boost.rounds.to_string());
        kv("tree.max_depth", self.boost.tree.max_depth.to_string());
        kv("tree.min_leaf_fraction", self.boost.tree.min_leaf_fraction.to_string());
        kv("k1", self.boost.k1.to_string());
        kv("k2", self.boost.k2.to_string());
        kv("n_syn_per_round", self.boost.n_syn_per_round.map_or("auto".into(), |n| n.to_string()));
        kv("adasyn.beta", self.adasyn_beta.to_string());
        kv("adasyn.k", self.adasyn_k.to_string());
        kv("folds", self.folds.to_string());
        kv("repeats", self.repeats.to_string());
        kv("seed", self.seed.to_string());
        kv("timing", match self.timing { TimingMode::Wall => "wall", TimingMode::Cost => "cost" }.into());
        kv("corpus.size", self.corpus_size.to_string());
        kv("corpus.count", self.corpus_count.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse_str(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = ExperimentConfig::parse_str(
            "# small run\nfolds = 2\nrepeats=1 # inline\nalphas = 0.2, 0.8\nlearners = ramoboost\nn_syn_per_round = 40\ntiming = wall\n",
        )
        .unwrap();
        assert_eq!((cfg.folds, cfg.repeats), (2, 1));
        assert_eq!(cfg.alphas, vec![0.2, 0.8]);
        assert_eq!(cfg.learners, vec![Learner::RamoBoost]);
        assert_eq!(cfg.boost.n_syn_per_round, Some(40));
        assert_eq!(cfg.timing, TimingMode::Wall);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["folds = 1", "nonsense = 3", "levels = 0", "alpha = 1.5", "seed = -1", "just text", "use_click = maybe"] {
            assert!(ExperimentConfig::parse_str(text).is_err(), "{text}");
        }
    }
}
