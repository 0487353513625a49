//! Weighted CART classification trees (Gini impurity).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum weight of a leaf as a fraction of the total weight.
    pub min_leaf_fraction: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_leaf_fraction: 0.01,
        }
    }
}

/// Flattened binary tree. Node `i` is a leaf when `feature[i] < 0`;
/// otherwise samples with `x[feature] < threshold` go to `left[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// Class probabilities per node (meaningful at leaves).
    pub value: Vec<Vec<f64>>,
}

impl DecisionTree {
    pub fn node_count(&self) -> usize {
        self.feature.len()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            if t.feature[i] < 0 {
                0
            } else {
                1 + go(t, t.left[i] as usize).max(go(t, t.right[i] as usize))
            }
        }
        go(self, 0)
    }

    pub fn predict_proba(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        while self.feature[i] >= 0 {
            i = if x[self.feature[i] as usize] < self.threshold[i] {
                self.left[i]
            } else {
                self.right[i]
            } as usize;
        }
        &self.value[i]
    }

    /// Most probable class, ties to the larger index.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_last(self.predict_proba(x))
    }

    /// Structural checks for trees read from disk.
    pub fn validate(&self, dim: usize, n_classes: usize) -> Result<()> {
        let n = self.feature.len();
        let same = [self.threshold.len(), self.left.len(), self.right.len(), self.value.len()];
        if n == 0 || same.iter().any(|&l| l != n) {
            return Err(Error::Model("tree arrays have inconsistent lengths".into()));
        }
        for i in 0..n {
            if self.feature[i] >= 0 {
                let (l, r) = (self.left[i] as usize, self.right[i] as usize);
                if self.feature[i] as usize >= dim || l <= i || r <= i || l >= n || r >= n {
                    return Err(Error::Model(format!("node {i} has an invalid split")));
                }
            } else {
                let p = &self.value[i];
                if p.len() != n_classes || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Model(format!("leaf {i} probabilities are invalid")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn argmax_last(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p >= v[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    w: &'a [f64],
    k: usize,
    params: TreeParams,
    min_leaf: f64,
    tree: DecisionTree,
}

fn impurity_score(counts: &[f64], total: f64) -> f64 {
    // sum_c w_c^2 / W, larger is purer
    if total <= 0.0 {
        0.0
    } else {
        counts.iter().map(|c| c * c).sum::<f64>() / total
    }
}

impl Builder<'_> {
    fn class_weights(&self, idx: &[usize]) -> Vec<f64> {
        let mut cw = vec![0.0; self.k];
        for &i in idx {
            cw[self.y[i]] += self.w[i];
        }
        cw
    }

    fn push_leaf(&mut self, cw: &[f64]) -> u32 {
        let total: f64 = cw.iter().sum();
        let probs = if total > 0.0 {
            cw.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / self.k as f64; self.k]
        };
        self.tree.feature.push(-1);
        self.tree.threshold.push(0.0);
        self.tree.left.push(0);
        self.tree.right.push(0);
        self.tree.value.push(probs);
        (self.tree.feature.len() - 1) as u32
    }

    /// Best `(feature, threshold, gain)` by weighted Gini decrease.
    fn best_split(&self, idx: &[usize], cw: &[f64]) -> Option<(usize, f64, f64)> {
        let total: f64 = cw.iter().sum();
        let parent = impurity_score(cw, total);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        let dim = self.x[idx[0]].len();
        for f in 0..dim {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0.0; self.k];
            let mut wl = 0.0;
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                left[self.y[i]] += self.w[i];
                wl += self.w[i];
                let (a, b) = (self.x[i][f], self.x[order[pos + 1]][f]);
                if a == b {
                    continue;
                }
                let wr = total - wl;
                if wl < self.min_leaf || wr < self.min_leaf {
                    continue;
                }
                let right: Vec<f64> = cw.iter().zip(&left).map(|(c, l)| c - l).collect();
                let gain = impurity_score(&left, wl) + impurity_score(&right, wr) - parent;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    let mut t = a + (b - a) / 2.0;
                    if t <= a {
                        t = b;
                    }
                    best = Some((f, t, gain));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> u32 {
        let cw = self.class_weights(&idx);
        let pure = cw.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.params.max_depth || idx.len() < 2 {
            return self.push_leaf(&cw);
        }
        let Some((f, t, _)) = self.best_split(&idx, &cw) else {
            return self.push_leaf(&cw);
        };
        let node = self.push_leaf(&cw) as usize;
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][f] < t);
        let li = self.build(l, depth + 1);
        let ri = self.build(r, depth + 1);
        self.tree.feature[node] = f as i64;
        self.tree.threshold[node] = t;
        self.tree.left[node] = li;
        self.tree.right[node] = ri;
        node as u32
    }
}

/// Greedy CART fit. Identical feature vectors with mixed labels yield a
/// single weighted-majority leaf.
pub fn train_tree(
    features: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    n_classes: usize,
    params: &TreeParams,
) -> Result<DecisionTree> {
    if features.is_empty() || features.len() != labels.len() || labels.len() != weights.len() {
        return Err(Error::InvalidDataset("tree training needs aligned, non-empty inputs".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidDataset("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDataset("weights sum to zero".into()));
    }
    let mut b = Builder {
        x: features,
        y: labels,
        w: weights,
        k: n_classes,
        params: *params,
        min_leaf: params.min_leaf_fraction * total,
        tree: DecisionTree {
            feature: vec![],
            threshold: vec![],
            left: vec![],
            right: vec![],
            value: vec![],
        },
    };
    let idx: Vec<usize> = (0..features.len()).filter(|&i| weights[i] > 0.0).collect();
    b.build(idx, 0);
    Ok(b.tree)
}
