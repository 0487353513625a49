use serde::Serialize;

use crate::error::{Error, Result};

/// Square count matrix, rows are actual classes and columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n: n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDataset("confusion matrix must be square".into()));
        }
        Ok(Self {
            n,
            counts: rows.concat(),
        })
    }

    pub fn from_pairs(n_classes: usize, actual: &[usize], predicted: &[usize]) -> Self {
        let mut cm = Self::new(n_classes);
        for (&a, &p) in actual.iter().zip(predicted) {
            cm.add(a, p);
        }
        cm
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.counts[actual * self.n + predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// Per-class scores; `None` marks a class with no actual (recall) or
/// predicted (precision) instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub g_mean: f64,
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut per_class = Vec::with_capacity(cm.n);
    let mut log_recall = 0.0;
    let mut represented = 0usize;
    let mut zero_recall = false;
    for i in 0..cm.n {
        let tp = cm.get(i, i) as f64;
        let actual = cm.row_sum(i);
        let predicted = cm.col_sum(i);
        let precision = (predicted > 0).then(|| tp / predicted as f64);
        let recall = (actual > 0).then(|| tp / actual as f64);
        let f1 = recall.map(|r| {
            let p = precision.unwrap_or(0.0);
            if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            }
        });
        if let Some(r) = recall {
            represented += 1;
            if r == 0.0 {
                zero_recall = true;
            } else {
                log_recall += r.ln();
            }
        }
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
        });
    }
    let g_mean = if zero_recall {
        0.0
    } else {
        let prod: f64 = per_class.iter().filter_map(|c| c.recall).product();
        // the log form only serves as a fallback against product underflow
        let g = prod.powf(1.0 / represented as f64);
        if g > 0.0 {
            g
        } else {
            (log_recall / represented as f64).exp()
        }
    };
    Ok(Metrics {
        per_class,
        accuracy: cm.trace() as f64 / total as f64,
        g_mean,
    })
}

/// Elementwise mean and sample standard deviation of several matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatedConfusion {
    pub n: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AggregatedConfusion {
    pub fn mean_at(&self, i: usize, j: usize) -> f64 {
        self.mean[i * self.n + j]
    }

    pub fn std_at(&self, i: usize, j: usize) -> f64 {
        self.std[i * self.n + j]
    }

    /// Display form: both matrices rounded to the nearest integer.
    pub fn rounded(&self) -> (Vec<i64>, Vec<i64>) {
        (
            self.mean.iter().map(|v| v.round() as i64).collect(),
            self.std.iter().map(|v| v.round() as i64).collect(),
        )
    }
}

pub fn aggregate_confusions(cms: &[ConfusionMatrix]) -> Result<AggregatedConfusion> {
    let first = cms.first().ok_or(Error::EmptyMatrix)?;
    let n = first.n;
    if cms.iter().any(|c| c.n != n) {
        return Err(Error::DimensionMismatch {
            expected: (n, n),
            actual: cms.iter().find(|c| c.n != n).map(|c| (c.n, c.n)).unwrap_or((0, 0)),
        });
    }
    let k = cms.len() as f64;
    let mut mean = vec![0.0; n * n];
    let mut std = vec![0.0; n * n];
    for idx in 0..n * n {
        let m = cms.iter().map(|c| c.counts[idx] as f64).sum::<f64>() / k;
        mean[idx] = m;
        if cms.len() > 1 {
            let ss: f64 = cms.iter().map(|c| (c.counts[idx] as f64 - m).powi(2)).sum();
            std[idx] = (ss / (k - 1.0)).sqrt();
        }
    }
    Ok(AggregatedConfusion { n, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::from_rows(&[vec![4, 0, 0], vec![0, 7, 0], vec![0, 0, 1]]).unwrap();
        let m = classification_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.g_mean, 1.0);
        for c in m.per_class {
            assert_eq!((c.precision, c.recall, c.f1), (Some(1.0), Some(1.0), Some(1.0)));
        }
    }

    #[test]
    fn two_class_by_hand() {
        let cm = ConfusionMatrix::from_rows(&[vec![8, 2], vec![1, 9]]).unwrap();
        let m = classification_metrics(&cm).unwrap();
        let (p0, p1, r0, r1) = (8.0 / 9.0, 9.0 / 11.0, 0.8, 0.9);
        assert!((m.per_class[0].precision.unwrap() - p0).abs() < 1e-12);
        assert!((m.per_class[1].precision.unwrap() - p1).abs() < 1e-12);
        assert!((m.per_class[0].recall.unwrap() - r0).abs() < 1e-12);
        assert!((m.per_class[1].recall.unwrap() - r1).abs() < 1e-12);
        // F1_0 = 2(8/9)(0.8)/(8/9 + 0.8) = 16/19, F1_1 = 2(9/11)(0.9)/(9/11 + 0.9) = 6/7
        assert!((m.per_class[0].f1.unwrap() - 16.0 / 19.0).abs() < 1e-12);
        assert!((m.per_class[1].f1.unwrap() - 6.0 / 7.0).abs() < 1e-12);
        assert!((m.accuracy - 0.85).abs() < 1e-12);
        assert!((m.g_mean - 0.72f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_recall_zeroes_g_mean() {
        let cm = ConfusionMatrix::from_rows(&[vec![5, 0], vec![3, 0]]).unwrap();
        let m = classification_metrics(&cm).unwrap();
        assert_eq!(m.g_mean, 0.0);
        assert_eq!(m.per_class[1].f1, Some(0.0));
        assert_eq!(m.per_class[1].precision, None);
    }

    #[test]
    fn absent_class_is_not_applicable() {
        let cm = ConfusionMatrix::from_rows(&[vec![5, 0, 0], vec![0, 0, 0], vec![1, 0, 4]]).unwrap();
        let m = classification_metrics(&cm).unwrap();
        assert_eq!(m.per_class[1].recall, None);
        assert_eq!(m.per_class[1].f1, None);
        assert!((m.g_mean - 0.8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_errors() {
        assert!(matches!(classification_metrics(&ConfusionMatrix::new(3)), Err(Error::EmptyMatrix)));
        assert!(aggregate_confusions(&[]).is_err());
        assert!(aggregate_confusions(&[ConfusionMatrix::new(2), ConfusionMatrix::new(3)]).is_err());
    }

    #[test]
    fn aggregation_examples() {
        let a = ConfusionMatrix::from_rows(&[vec![3, 1], vec![0, 2]]).unwrap();
        let agg = aggregate_confusions(&[a.clone()]).unwrap();
        assert_eq!(agg.mean, vec![3.0, 1.0, 0.0, 2.0]);
        assert!(agg.std.iter().all(|&s| s == 0.0));
        let agg = aggregate_confusions(&[a.clone(), a]).unwrap();
        assert!(agg.std.iter().all(|&s| s == 0.0));

        let z = ConfusionMatrix::from_rows(&[vec![0]]).unwrap();
        let t = ConfusionMatrix::from_rows(&[vec![2]]).unwrap();
        let agg = aggregate_confusions(&[z, t]).unwrap();
        assert_eq!(agg.mean_at(0, 0), 1.0);
        assert!((agg.std_at(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg.rounded(), (vec![1], vec![1]));
    }

    proptest! {
        #[test]
        fn accuracy_is_prevalence_weighted_recall(counts in proptest::collection::vec(0u64..20, 9)) {
            let rows: Vec<Vec<u64>> = counts.chunks(3).map(|c| c.to_vec()).collect();
            let cm = ConfusionMatrix::from_rows(&rows).unwrap();
            prop_assume!(cm.total() > 0);
            let m = classification_metrics(&cm).unwrap();
            let weighted: f64 = (0..3)
                .filter_map(|i| m.per_class[i].recall.map(|r| r * cm.row_sum(i) as f64))
                .sum::<f64>() / cm.total() as f64;
            prop_assert!((weighted - m.accuracy).abs() < 1e-12);
            let some_zero = m.per_class.iter().any(|c| c.recall == Some(0.0));
            prop_assert_eq!(m.g_mean == 0.0, some_zero);
        }
    }
}
