//! Neighbour queries and synthetic minority oversampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::Dataset;
use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force Euclidean k-NN over a fixed dataset; ties break by index.
#[derive(Debug, Clone)]
pub struct NeighbourIndex {
    /// For each instance, the k nearest other instances of the whole set.
    pub any: Vec<Vec<usize>>,
    /// For each instance, the k nearest other instances of its own class.
    pub same: Vec<Vec<usize>>,
}

impl NeighbourIndex {
    pub fn build(data: &Dataset, k_any: usize, k_same: usize) -> Self {
        let x = data.features();
        let y = data.labels();
        let n = x.len();
        let mut any = Vec::with_capacity(n);
        let mut same = Vec::with_capacity(n);
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            order.clear();
            order.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(&x[i], &x[j]), j)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            any.push(order.iter().take(k_any).map(|&(_, j)| j).collect());
            same.push(order.iter().filter(|&&(_, j)| y[j] == y[i]).take(k_same).map(|&(_, j)| j).collect());
        }
        Self { any, same }
    }

    /// Fraction of `i`'s neighbours whose label differs from `i`'s.
    pub fn difficulty(&self, data: &Dataset, i: usize) -> f64 {
        let nn = &self.any[i];
        if nn.is_empty() {
            return 0.0;
        }
        let y = data.labels();
        nn.iter().filter(|&&j| y[j] != y[i]).count() as f64 / nn.len() as f64
    }
}

/// Integer apportionment of `total` in proportion to `shares` by the
/// largest-remainder method (remainder ties go to the lower index).
pub fn allocate(total: usize, shares: &[f64]) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    if total == 0 || shares.is_empty() || sum <= 0.0 {
        return vec![0; shares.len()];
    }
    let exact: Vec<f64> = shares.iter().map(|s| total as f64 * s / sum).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut rest: Vec<usize> = (0..shares.len()).collect();
    rest.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in rest.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

/// `x + u (partner - x)` with `u ~ U[0, 1]`; a missing partner duplicates `x`.
pub fn interpolate<R: Rng>(x: &[f64], partner: Option<&[f64]>, rng: &mut R) -> Vec<f64> {
    match partner {
        None => x.to_vec(),
        Some(p) => {
            let u: f64 = rng.random();
            x.iter().zip(p).map(|(a, b)| a + u * (b - a)).collect()
        }
    }
}

pub(crate) fn synthesize<R: Rng>(data: &Dataset, nn: &NeighbourIndex, i: usize, rng: &mut R) -> Vec<f64> {
    let x = data.features();
    let partners = &nn.same[i];
    let partner = if partners.is_empty() {
        None
    } else {
        Some(x[partners[rng.random_range(0..partners.len())]].as_slice())
    };
    interpolate(&x[i], partner, rng)
}

/// Weighted draw of an index; uniform when all weights vanish.
pub(crate) fn weighted_pick<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    match WeightedIndex::new(weights) {
        Ok(d) => d.sample(rng),
        Err(_) => rng.random_range(0..weights.len()),
    }
}

/// One-shot multiclass ADASYN: every non-majority class `c` receives
/// `floor((n_maj - n_c) * beta)` synthetics spread over its members in
/// proportion to neighbourhood difficulty.
pub fn adasyn_sample<R: Rng>(data: &Dataset, beta: f64, k: usize, rng: &mut R) -> Result<Dataset> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let counts = data.class_counts();
    let maj = counts.iter().copied().max().unwrap_or(0);
    let mut out = data.clone();
    if counts.iter().all(|&c| c == 0 || c == maj) {
        return Ok(out);
    }
    let nn = NeighbourIndex::build(data, k, k);
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 || count == maj {
            continue;
        }
        // tolerance absorbs products such as 30 * 0.7 = 20.999...
        let g = (((maj - count) as f64) * beta + 1e-9).floor() as usize;
        if g == 0 {
            continue;
        }
        let members: Vec<usize> = (0..data.len()).filter(|&i| data.labels()[i] == c).collect();
        let mut delta: Vec<f64> = members.iter().map(|&i| nn.difficulty(data, i)).collect();
        if delta.iter().sum::<f64>() <= 0.0 {
            delta.iter_mut().for_each(|d| *d = 1.0);
        }
        for (&i, n_i) in members.iter().zip(allocate(g, &delta)) {
            for _ in 0..n_i {
                out.push(synthesize(data, &nn, i, rng), c);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;

    fn two_class(maj: usize, min: usize) -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..maj {
            x.push(vec![(i % 10) as f64, (i / 10) as f64]);
            y.push(0);
        }
        for i in 0..min {
            x.push(vec![4.5 + (i % 3) as f64 * 0.5, 4.5 + (i / 3) as f64 * 0.5]);
            y.push(1);
        }
        Dataset::new(x, y, 2).unwrap()
    }

    #[test]
    fn adasyn_counts() {
        let d = two_class(100, 20);
        let mut rng = substream(1, Stream::Sampling, 0);
        let out = adasyn_sample(&d, 0.7, 5, &mut rng).unwrap();
        assert_eq!(out.len() - d.len(), 56);
        assert!(out.labels()[d.len()..].iter().all(|&l| l == 1));

        let d = two_class(50, 20);
        let out = adasyn_sample(&d, 0.7, 5, &mut rng).unwrap();
        assert_eq!(out.len() - d.len(), 21);
    }

    #[test]
    fn adasyn_noop_cases() {
        let mut rng = substream(1, Stream::Sampling, 0);
        let d = two_class(10, 9);
        assert_eq!(adasyn_sample(&d, 0.5, 3, &mut rng).unwrap(), d);
        let d = two_class(20, 20);
        assert_eq!(adasyn_sample(&d, 1.0, 3, &mut rng).unwrap(), d);
        assert!(adasyn_sample(&d, 0.0, 3, &mut rng).is_err());
        assert!(adasyn_sample(&d, 0.5, 0, &mut rng).is_err());
    }

    #[test]
    fn single_member_duplicates() {
        let d = two_class(10, 1);
        let mut rng = substream(3, Stream::Sampling, 0);
        let out = adasyn_sample(&d, 1.0, 5, &mut rng).unwrap();
        assert_eq!(out.len(), 20);
        for f in &out.features()[11..] {
            assert_eq!(f, &d.features()[10]);
        }
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate(80, &[0.0, 80.0]), vec![0, 80]);
        assert_eq!(allocate(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(allocate(7, &[0.0, 0.0]), vec![0, 0]);
        assert_eq!(allocate(5, &[0.2, 0.5, 0.3]), vec![1, 3, 1]);
    }

    #[test]
    fn neighbours_by_class() {
        let d = two_class(10, 4);
        let nn = NeighbourIndex::build(&d, 3, 2);
        for i in 0..d.len() {
            assert!(!nn.any[i].contains(&i));
            assert!(nn.same[i].iter().all(|&j| d.labels()[j] == d.labels()[i]));
        }
    }

    proptest! {
        #[test]
        fn allocation_sums(total in 0usize..500, shares in proptest::collection::vec(0.0f64..10.0, 1..8)) {
            let a = allocate(total, &shares);
            if shares.iter().sum::<f64>() > 0.0 {
                prop_assert_eq!(a.iter().sum::<usize>(), total);
            }
        }

        #[test]
        fn synthetics_lie_between_parents(seed in 0u64..1000, maj in 10usize..40, min in 2usize..9) {
            let d = two_class(maj, min);
            let mut rng = substream(seed, Stream::Sampling, 0);
            let out = adasyn_sample(&d, 1.0, 5, &mut rng).unwrap();
            let minority: Vec<&Vec<f64>> = (0..d.len()).filter(|&i| d.labels()[i] == 1).map(|i| &d.features()[i]).collect();
            for s in &out.features()[d.len()..] {
                // some same-class pair brackets the synthetic componentwise and collinearly
                let ok = minority.iter().any(|a| minority.iter().any(|b| {
                    let mut u = None;
                    s.iter().zip(a.iter().zip(b.iter())).all(|(&v, (&p, &q))| {
                        let (lo, hi) = (p.min(q), p.max(q));
                        if v < lo - 1e-9 || v > hi + 1e-9 { return false; }
                        if (q - p).abs() < 1e-12 { return true; }
                        let t = (v - p) / (q - p);
                        match u { None => { u = Some(t); true } Some(t0) => (t - t0).abs() < 1e-9 }
                    })
                }));
                prop_assert!(ok);
            }
        }
    }
}
