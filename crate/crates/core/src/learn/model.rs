//! Self-describing JSON model documents.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::boost::{Algorithm, BoostModel, BoostRound};
use crate::error::{Error, Result};
use crate::features::FeatureParams;

pub const MODEL_FORMAT: &str = "resolve-seg-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub feature_dim: usize,
    pub n_classes: usize,
    /// Trade-off weight the training labels were computed with.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub features: Option<FeatureParams>,
    pub rounds: Vec<BoostRound>,
}

impl ModelFile {
    pub fn new(model: BoostModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            algorithm: model.algorithm,
            feature_dim: model.feature_dim,
            n_classes: model.n_classes,
            alpha: None,
            features: None,
            rounds: model.rounds,
        }
    }

    pub fn model(&self) -> BoostModel {
        BoostModel {
            algorithm: self.algorithm,
            n_classes: self.n_classes,
            feature_dim: self.feature_dim,
            rounds: self.rounds.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format tag `{}`", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported version {}", self.version)));
        }
        if self.rounds.is_empty() {
            return Err(Error::Model("model has no rounds".into()));
        }
        if let Some(f) = self.features {
            if f.dim() != self.feature_dim {
                return Err(Error::Model(format!(
                    "feature layout gives {} values, model expects {}",
                    f.dim(),
                    self.feature_dim
                )));
            }
        }
        for (i, r) in self.rounds.iter().enumerate() {
            if !(r.beta.is_finite() && r.beta > 0.0) {
                return Err(Error::Model(format!("round {i} has weight {}", r.beta)));
            }
            r.tree.validate(self.feature_dim, self.n_classes)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    fs::write(path, model.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{ramoboost_train, BoostParams, Dataset};
    use crate::rng::{substream, Stream};
    use rand::Rng;

    fn trained() -> (BoostModel, Vec<Vec<f64>>) {
        let mut rng = substream(11, Stream::Corpus, 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..120 {
            let c = [0, 0, 0, 1, 2, 2][i % 6];
            x.push((0..4).map(|j| c as f64 * (j as f64 + 0.5) + rng.random::<f64>() * 2.0).collect());
            y.push(c);
        }
        let d = Dataset::new(x, y, 4).unwrap();
        let m = ramoboost_train(&d, &BoostParams::default(), &mut substream(1, Stream::Sampling, 0)).unwrap();
        let probes = (0..50).map(|_| (0..4).map(|_| rng.random::<f64>() * 8.0).collect()).collect();
        (m, probes)
    }

    #[test]
    fn round_trip_predicts_identically() {
        let (m, probes) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut file = ModelFile::new(m.clone());
        file.alpha = Some(0.5);
        save_model(&path, &file).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, file);
        let m2 = back.model();
        for p in &probes {
            assert_eq!(m.predict(p).unwrap(), m2.predict(p).unwrap());
        }
    }

    #[test]
    fn rejects_tampering() {
        let (m, _) = trained();
        let good = ModelFile::new(m);
        let mut bad = good.clone();
        bad.version = 9;
        assert!(ModelFile::from_json(&bad.to_json().unwrap()).is_err());
        let mut bad = good.clone();
        bad.rounds[0].tree.feature[0] = 99;
        assert!(ModelFile::from_json(&bad.to_json().unwrap()).is_err());
        let mut bad = good.clone();
        bad.features = Some(FeatureParams::default());
        assert!(bad.validate().is_err());
        assert!(ModelFile::from_json("{\"format\":1}").is_err());
    }
}
