//! Imbalance-aware multiclass learning on feature vectors.

mod boost;
mod model;
mod sampling;
mod tree;

pub use boost::{adaboost_train, boost_train, predict, ramoboost_train, Algorithm, BoostModel, BoostParams, BoostRound, TrainTrace};
pub use model::{load_model, save_model, ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use sampling::{adasyn_sample, allocate, interpolate, NeighbourIndex};
pub use tree::{train_tree, DecisionTree, TreeParams};

use crate::error::{Error, Result};

/// Labeled feature vectors; labels are class indices below `n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(first) = features.first() {
            if let Some(i) = features.iter().position(|f| f.len() != first.len()) {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} features, expected {}",
                    features[i].len(),
                    first.len()
                )));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidDataset(format!("label {l} outside {n_classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn distinct_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    pub(crate) fn push(&mut self, features: Vec<f64>, label: usize) {
        self.features.push(features);
        self.labels.push(label);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Dataset::new(vec![vec![1.0]], vec![], 2).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], 2).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![2], 2).is_err());
        let d = Dataset::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 2, 2], 4).unwrap();
        assert_eq!(d.class_counts(), vec![1, 0, 2, 0]);
        assert_eq!(d.distinct_classes(), 2);
        assert_eq!(d.subset(&[2, 0]).labels(), &[2, 0]);
    }
}
