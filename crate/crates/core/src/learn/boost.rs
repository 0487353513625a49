//! SAMME boosting over weighted trees, with optional per-round
//! synthetic minority oversampling (RAMOBoost).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{allocate, synthesize, weighted_pick, NeighbourIndex};
use super::tree::{train_tree, DecisionTree, TreeParams};
use super::Dataset;
use crate::error::{Error, Result};

/// Floor on the weighted error so a perfect round gets a finite weight.
const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    AdaBoost,
    RamoBoost,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::AdaBoost => "adaboost",
            Algorithm::RamoBoost => "ramoboost",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adaboost" => Ok(Algorithm::AdaBoost),
            "ramoboost" => Ok(Algorithm::RamoBoost),
            _ => Err(Error::Config(format!("unknown learner `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub rounds: usize,
    pub tree: TreeParams,
    pub k1: usize,
    pub k2: usize,
    /// Synthetics per round; `None` means the total class deficit,
    /// capped at the dataset size.
    pub n_syn_per_round: Option<usize>,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            rounds: 10,
            tree: TreeParams::default(),
            k1: 5,
            k2: 5,
            n_syn_per_round: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub beta: f64,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub algorithm: Algorithm,
    pub n_classes: usize,
    pub feature_dim: usize,
    pub rounds: Vec<BoostRound>,
}

impl BoostModel {
    /// β-weighted vote; ties go to the larger class index.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        if x.len() != self.feature_dim {
            return Err(Error::FeatureDimension {
                expected: self.feature_dim,
                actual: x.len(),
            });
        }
        let mut scores = vec![0.0; self.n_classes];
        for r in &self.rounds {
            scores[r.tree.predict(x)] += r.beta;
        }
        Ok((super::tree::argmax_last(&scores), scores))
    }
}

pub fn predict(model: &BoostModel, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    model.predict(x)
}

/// Per-round diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    /// Instance weights after each round (skipped rounds included).
    pub weights: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
    pub skipped: Vec<bool>,
    /// Synthetic instances per class, per round.
    pub synthetic: Vec<Vec<usize>>,
    /// Synthetic feature vectors of the last round that generated any.
    pub last_synthetics: Vec<(Vec<f64>, usize)>,
}

pub fn adaboost_train(data: &Dataset, params: &BoostParams) -> Result<BoostModel> {
    // the AdaBoost path never draws; any generator will do
    let mut rng = crate::rng::substream(0, crate::rng::Stream::Sampling, 0);
    boost_train(data, params, Algorithm::AdaBoost, &mut rng).map(|(m, _)| m)
}

pub fn ramoboost_train<R: Rng>(data: &Dataset, params: &BoostParams, rng: &mut R) -> Result<BoostModel> {
    boost_train(data, params, Algorithm::RamoBoost, rng).map(|(m, _)| m)
}

struct Oversampler {
    nn: NeighbourIndex,
    difficulty: Vec<f64>,
    alloc: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Oversampler {
    fn new(data: &Dataset, params: &BoostParams) -> Result<Self> {
        let n = data.len();
        if params.k1 == 0 || params.k2 == 0 || params.k1 >= n || params.k2 >= n {
            return Err(Error::Domain(format!(
                "neighbour counts k1={}, k2={} must lie in [1, {n})",
                params.k1, params.k2
            )));
        }
        let counts = data.class_counts();
        let maj = counts.iter().copied().max().unwrap_or(0);
        // interpolation needs a same-class partner, so singletons get no share
        let deficit: Vec<f64> = counts
            .iter()
            .map(|&c| if c < 2 { 0.0 } else { (maj - c) as f64 })
            .collect();
        let total_deficit = deficit.iter().sum::<f64>() as usize;
        let n_syn = params.n_syn_per_round.unwrap_or(total_deficit.min(n));
        let alloc = allocate(n_syn, &deficit);
        let nn = if alloc.iter().any(|&a| a > 0) {
            NeighbourIndex::build(data, params.k1, params.k2)
        } else {
            NeighbourIndex { any: vec![], same: vec![] }
        };
        let difficulty = (0..nn.any.len()).map(|i| nn.difficulty(data, i)).collect();
        let members = (0..data.n_classes())
            .map(|c| (0..n).filter(|&i| data.labels()[i] == c).collect())
            .collect();
        Ok(Self {
            nn,
            difficulty,
            alloc,
            members,
        })
    }

    fn draw<R: Rng>(&self, data: &Dataset, w: &[f64], rng: &mut R) -> Vec<(Vec<f64>, usize)> {
        let mut out = Vec::new();
        for (c, &count) in self.alloc.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let members = &self.members[c];
            let sw: Vec<f64> = members.iter().map(|&i| (1.0 + self.difficulty[i]) * w[i]).collect();
            for _ in 0..count {
                let i = members[weighted_pick(&sw, rng)];
                out.push((synthesize(data, &self.nn, i, rng), c));
            }
        }
        out
    }
}

/// Shared SAMME loop. With `RamoBoost`, each round's tree is fitted on the
/// real data plus freshly drawn synthetics carrying the mean real weight;
/// errors and reweighting only ever see the real instances.
pub fn boost_train<R: Rng>(
    data: &Dataset,
    params: &BoostParams,
    algorithm: Algorithm,
    rng: &mut R,
) -> Result<(BoostModel, TrainTrace)> {
    let k = data.distinct_classes();
    if k < 2 {
        return Err(Error::InvalidDataset(format!("boosting needs at least 2 classes, found {k}")));
    }
    let n = data.len();
    let sampler = match algorithm {
        Algorithm::RamoBoost => Some(Oversampler::new(data, params)?),
        Algorithm::AdaBoost => None,
    };
    let x = data.features();
    let y = data.labels();
    let mut w = vec![1.0 / n as f64; n];
    let mut rounds = Vec::new();
    let mut trace = TrainTrace::default();
    let skip_at = 1.0 - 1.0 / k as f64;
    let ln_k1 = ((k - 1) as f64).ln();

    for _ in 0..params.rounds {
        let synth = match &sampler {
            Some(s) => s.draw(data, &w, rng),
            None => Vec::new(),
        };
        trace.synthetic.push({
            let mut per = vec![0; data.n_classes()];
            synth.iter().for_each(|(_, c)| per[*c] += 1);
            per
        });
        let tree = if synth.is_empty() {
            train_tree(x, y, &w, data.n_classes(), &params.tree)?
        } else {
            let mean_w = w.iter().sum::<f64>() / n as f64;
            let mut fx = x.to_vec();
            let mut fy = y.to_vec();
            let mut fw = w.clone();
            for (f, c) in &synth {
                fx.push(f.clone());
                fy.push(*c);
                fw.push(mean_w);
            }
            trace.last_synthetics = synth;
            train_tree(&fx, &fy, &fw, data.n_classes(), &params.tree)?
        };

        let wrong: Vec<bool> = (0..n).map(|i| tree.predict(&x[i]) != y[i]).collect();
        let total: f64 = w.iter().sum();
        let err = wrong.iter().zip(&w).filter(|(m, _)| **m).map(|(_, wi)| wi).sum::<f64>() / total;
        trace.errors.push(err);
        if err >= skip_at {
            trace.skipped.push(true);
            trace.weights.push(w.clone());
            continue;
        }
        trace.skipped.push(false);
        let e = err.max(MIN_ERROR);
        let beta = ((1.0 - e) / e).ln() + ln_k1;
        rounds.push(BoostRound { beta, tree });
        if err == 0.0 {
            trace.weights.push(w.clone());
            break;
        }
        let boost = beta.exp();
        for (wi, &m) in w.iter_mut().zip(&wrong) {
            if m {
                *wi *= boost;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= s);
        trace.weights.push(w.clone());
    }

    if rounds.is_empty() {
        return Err(Error::NoValidRound);
    }
    Ok((
        BoostModel {
            algorithm,
            n_classes: data.n_classes(),
            feature_dim: data.dim(),
            rounds,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    fn blobs(sizes: &[usize], spread: f64, seed: u64) -> Dataset {
        let mut rng = substream(seed, Stream::Corpus, 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                let cx = c as f64 * 2.0;
                x.push(vec![cx + spread * (rng.random::<f64>() - 0.5), rng.random::<f64>(), (c % 2) as f64 + spread * rng.random::<f64>()]);
                y.push(c);
            }
        }
        Dataset::new(x, y, sizes.len()).unwrap()
    }

    fn training_error(m: &BoostModel, d: &Dataset) -> usize {
        d.features().iter().zip(d.labels()).filter(|(x, &y)| m.predict(x).unwrap().0 != y).count()
    }

    #[test]
    fn separable_reaches_zero_error() {
        // diagonal boundary: axis-aligned stumps need several rounds
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                if i != j {
                    x.push(vec![i as f64, j as f64]);
                    y.push(usize::from(i > j));
                }
            }
        }
        let d = Dataset::new(x, y, 2).unwrap();
        let p = BoostParams { tree: TreeParams { max_depth: 2, min_leaf_fraction: 0.0 }, ..Default::default() };
        let m = adaboost_train(&d, &p).unwrap();
        assert!(m.rounds.len() <= 10);
        let easy = blobs(&[30, 30], 1.0, 4);
        let m2 = adaboost_train(&easy, &BoostParams::default()).unwrap();
        assert_eq!(training_error(&m2, &easy), 0);
        assert!(training_error(&m, &d) < d.len() / 10);
    }

    #[test]
    fn diagonal_with_default_trees_is_exact() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    x.push(vec![i as f64, j as f64]);
                    y.push(usize::from(i > j));
                }
            }
        }
        let d = Dataset::new(x, y, 2).unwrap();
        let m = adaboost_train(&d, &BoostParams::default()).unwrap();
        assert_eq!(training_error(&m, &d), 0);
    }

    #[test]
    fn k2_beta_is_classic() {
        let d = blobs(&[20, 20], 6.0, 1);
        let mut rng = substream(0, Stream::Sampling, 0);
        let (m, t) = boost_train(&d, &BoostParams::default(), Algorithm::AdaBoost, &mut rng).unwrap();
        let kept: Vec<f64> = t.errors.iter().zip(&t.skipped).filter(|(_, s)| !**s).map(|(e, _)| *e).collect();
        for (r, e) in m.rounds.iter().zip(kept) {
            let e = e.max(MIN_ERROR);
            assert!((r.beta - ((1.0 - e) / e).ln()).abs() < 1e-12);
            assert!(r.beta > 0.0);
        }
    }

    #[test]
    fn ramoboost_synthetic_counts() {
        let d = blobs(&[90, 10], 3.0, 2);
        let p = BoostParams { n_syn_per_round: Some(80), ..Default::default() };
        let mut rng = substream(0, Stream::Sampling, 0);
        let (_, t) = boost_train(&d, &p, Algorithm::RamoBoost, &mut rng).unwrap();
        for per in &t.synthetic {
            assert_eq!(per, &vec![0, 80]);
        }
        assert!(t.last_synthetics.iter().all(|(_, c)| *c == 1));
        // default: total deficit (80) capped at n (100)
        let (_, t) = boost_train(&d, &BoostParams::default(), Algorithm::RamoBoost, &mut rng).unwrap();
        assert_eq!(t.synthetic[0], vec![0, 80]);
        let d = blobs(&[200, 10], 3.0, 2);
        let (_, t) = boost_train(&d, &BoostParams::default(), Algorithm::RamoBoost, &mut rng).unwrap();
        assert_eq!(t.synthetic[0], vec![0, 190]);
    }

    #[test]
    fn ramoboost_without_deficit_matches_adaboost() {
        let d = blobs(&[25, 25, 25], 4.0, 3);
        let p = BoostParams::default();
        let a = adaboost_train(&d, &p).unwrap();
        let r = ramoboost_train(&d, &p, &mut substream(9, Stream::Sampling, 0)).unwrap();
        assert_eq!(a.rounds, r.rounds);
        let d = blobs(&[30, 12], 4.0, 3);
        let p0 = BoostParams { n_syn_per_round: Some(0), ..p };
        let a = adaboost_train(&d, &p0).unwrap();
        let r = ramoboost_train(&d, &p0, &mut substream(9, Stream::Sampling, 0)).unwrap();
        assert_eq!(a.rounds, r.rounds);
    }

    #[test]
    fn ramoboost_is_seeded() {
        let d = blobs(&[60, 8, 15], 5.0, 5);
        let p = BoostParams::default();
        let a = ramoboost_train(&d, &p, &mut substream(1, Stream::Sampling, 0)).unwrap();
        let b = ramoboost_train(&d, &p, &mut substream(1, Stream::Sampling, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_member_class_gets_no_share() {
        let d = blobs(&[30, 1, 10], 1.0, 6);
        let p = BoostParams { k2: 3, ..Default::default() };
        let mut rng = substream(2, Stream::Sampling, 0);
        let (_, t) = boost_train(&d, &p, Algorithm::RamoBoost, &mut rng).unwrap();
        assert!(t.synthetic.iter().all(|per| per == &vec![0, 0, 20]));
    }

    #[test]
    fn vote_resolution() {
        let leaf = |c: usize| DecisionTree {
            feature: vec![-1],
            threshold: vec![0.0],
            left: vec![0],
            right: vec![0],
            value: vec![(0..3).map(|i| if i == c { 1.0 } else { 0.0 }).collect()],
        };
        let mut m = BoostModel {
            algorithm: Algorithm::AdaBoost,
            n_classes: 3,
            feature_dim: 1,
            rounds: vec![BoostRound { beta: 0.3, tree: leaf(0) }, BoostRound { beta: 0.9, tree: leaf(2) }],
        };
        assert_eq!(m.predict(&[0.0]).unwrap().0, 2);
        m.rounds[1].beta = 0.3;
        assert_eq!(m.predict(&[0.0]).unwrap().0, 2, "ties go to the larger class");
        m.rounds.truncate(1);
        assert_eq!(m.predict(&[0.0]).unwrap(), (0, vec![0.3, 0.0, 0.0]));
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let d = blobs(&[10, 0], 1.0, 1);
        assert!(adaboost_train(&d, &BoostParams::default()).is_err());
        let d = blobs(&[3, 2], 1.0, 1);
        let p = BoostParams { k1: 5, ..Default::default() };
        assert!(ramoboost_train(&d, &p, &mut substream(0, Stream::Sampling, 0)).is_err());
    }

    #[test]
    fn all_rounds_skipped_is_an_error() {
        // identical features, balanced labels: every tree errs at exactly 1/2
        let d = Dataset::new(vec![vec![0.0]; 4], vec![0, 1, 0, 1], 2).unwrap();
        assert!(matches!(adaboost_train(&d, &BoostParams::default()), Err(Error::NoValidRound)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn weights_stay_a_distribution(seed in 0u64..500, a in 5usize..40, b in 3usize..30, c in 0usize..20) {
            let d = blobs(&[a, b, c], 3.0, seed);
            for alg in [Algorithm::AdaBoost, Algorithm::RamoBoost] {
                let mut rng = substream(seed, Stream::Sampling, 0);
                let (m, t) = boost_train(&d, &BoostParams::default(), alg, &mut rng).unwrap();
                prop_assert!(m.rounds.len() <= 10);
                for w in &t.weights {
                    prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    prop_assert!(w.iter().all(|&x| x >= 0.0));
                }
                prop_assert!(m.rounds.iter().all(|r| r.beta > 0.0));
            }
        }
    }
}
