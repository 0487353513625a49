//! Intensity-homogeneity region growing: boundary refinement of an upsampled
//! mask, and a standalone seeded segmenter.

use std::collections::VecDeque;

use super::{CostMeter, Seed, Segmenter};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage};

/// Default homogeneity threshold, about a tenth of the intensity range.
pub const DEFAULT_TAU: f64 = 25.0;

#[inline]
fn neighbours(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    (y.saturating_sub(1)..=(y + 1).min(h - 1)).flat_map(move |ny| {
        (x.saturating_sub(1)..=(x + 1).min(w - 1))
            .filter(move |&nx| nx != x || ny != y)
            .map(move |nx| ny * w + nx)
    })
}

/// Refines `mask` against the object mean intensity.
///
/// Each sweep is synchronous: background pixels 8-adjacent to the object
/// join when within `tau` of the mean, object pixels on the boundary leave
/// when farther than `tau`. Stops at a fixed point or after `max_sweeps`.
/// Only the neighbourhoods of pixels changed in the previous sweep are
/// re-examined, and every examination is charged to `meter`.
pub fn region_grow_refine(
    img: &GrayImage,
    mask: &BinaryMask,
    tau: f64,
    max_sweeps: usize,
    meter: &mut CostMeter,
) -> Result<BinaryMask> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: mask.dims(),
        });
    }
    let n_obj = mask.count();
    if n_obj == 0 {
        return Err(Error::EmptyMask);
    }
    let (w, h) = img.dims();
    let f = img.data();
    let mu = mask
        .data()
        .iter()
        .zip(f)
        .filter(|(m, _)| **m)
        .map(|(_, v)| v)
        .sum::<f64>()
        / n_obj as f64;

    let mut state = mask.data().to_vec();
    let mut candidates: Vec<usize> = (0..w * h).collect();
    let mut stamp = vec![0usize; w * h];
    let mut changes = Vec::new();

    for sweep in 1..=max_sweeps {
        changes.clear();
        meter.charge(candidates.len());
        for &i in &candidates {
            let inside = state[i];
            let similar = (f[i] - mu).abs() <= tau;
            if inside == similar {
                continue;
            }
            // a flip needs the opposite phase somewhere in the 8-neighbourhood
            if neighbours(i, w, h).any(|j| state[j] != inside) {
                changes.push(i);
            }
        }
        if changes.is_empty() {
            break;
        }
        for &i in &changes {
            state[i] = !state[i];
        }
        candidates.clear();
        for &i in &changes {
            for j in std::iter::once(i).chain(neighbours(i, w, h)) {
                if stamp[j] != sweep {
                    stamp[j] = sweep;
                    candidates.push(j);
                }
            }
        }
    }
    BinaryMask::new(w, h, state)
}

/// Seeded region growing: flood from the seed over 8-connected pixels within
/// `tau` of the running region mean.
#[derive(Debug, Clone)]
pub struct RegionGrowSegmenter {
    pub tau: f64,
}

impl Default for RegionGrowSegmenter {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

impl Segmenter for RegionGrowSegmenter {
    fn name(&self) -> &'static str {
        "regiongrow"
    }

    fn segment(&self, img: &GrayImage, hint: Option<Seed>, meter: &mut CostMeter) -> Result<BinaryMask> {
        let (w, h) = img.dims();
        let (sx, sy) = hint.unwrap_or((w / 2, h / 2));
        let f = img.data();
        let mut mask = vec![false; w * h];
        let mut queued = vec![false; w * h];
        let start = sy * w + sx;
        let (mut sum, mut n) = (0.0, 0usize);
        let mut queue = VecDeque::from([start]);
        queued[start] = true;
        while let Some(i) = queue.pop_front() {
            meter.charge(1);
            let mean = if n == 0 { f[start] } else { sum / n as f64 };
            if (f[i] - mean).abs() > self.tau {
                continue;
            }
            mask[i] = true;
            sum += f[i];
            n += 1;
            for j in neighbours(i, w, h) {
                if !queued[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
        }
        BinaryMask::new(w, h, mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::dice;
    use proptest::prelude::*;

    fn disk(size: usize, r: f64) -> (GrayImage, BinaryMask) {
        let c = size as f64 / 2.0;
        let inside = move |x: usize, y: usize| (x as f64 - c).powi(2) + (y as f64 - c).powi(2) <= r * r;
        (
            GrayImage::from_fn(size, size, |x, y| if inside(x, y) { 180.0 } else { 40.0 }),
            BinaryMask::from_fn(size, size, inside),
        )
    }

    #[test]
    fn exact_mask_is_fixed_point() {
        let (img, gold) = disk(48, 12.0);
        let mut m = CostMeter::default();
        assert_eq!(region_grow_refine(&img, &gold, 30.0, 16, &mut m).unwrap(), gold);
        assert_eq!(m.ops(), 48 * 48);
    }

    #[test]
    fn eroded_disk_improves() {
        let (img, gold) = disk(64, 20.0);
        let (_, eroded) = disk(64, 18.0);
        let mut m = CostMeter::default();
        let out = region_grow_refine(&img, &eroded, 25.0, 16, &mut m).unwrap();
        assert!(dice(&out, &gold).unwrap() > dice(&eroded, &gold).unwrap());
        assert_eq!(out, gold);
    }

    #[test]
    fn tau_zero_shrinks_and_terminates() {
        let img = GrayImage::from_fn(16, 16, |x, y| (y * 16 + x) as f64 * 0.99);
        let mask = BinaryMask::from_fn(16, 16, |x, y| (4..12).contains(&x) && (4..12).contains(&y));
        let mut m = CostMeter::default();
        let out = region_grow_refine(&img, &mask, 0.0, 1000, &mut m).unwrap();
        for (a, b) in out.data().iter().zip(mask.data()) {
            assert!(!a || *b);
        }
    }

    #[test]
    fn empty_mask_errors() {
        let mut m = CostMeter::default();
        let r = region_grow_refine(&GrayImage::filled(4, 4, 0.0), &BinaryMask::empty(4, 4), 10.0, 4, &mut m);
        assert!(matches!(r, Err(Error::EmptyMask)));
    }

    #[test]
    fn seeded_segmenter_fills_disk() {
        let (img, gold) = disk(40, 10.0);
        let mut m = CostMeter::default();
        let out = RegionGrowSegmenter::default().segment(&img, Some((20, 20)), &mut m).unwrap();
        assert_eq!(out, gold);
    }

    proptest! {
        #[test]
        fn one_sweep_only_touches_boundary(px in proptest::collection::vec(0u8..=255, 100), bits in proptest::collection::vec(any::<bool>(), 100), tau in 0.0f64..100.0) {
            let img = GrayImage::new(10, 10, px.iter().map(|&v| v as f64).collect()).unwrap();
            let mask = BinaryMask::new(10, 10, bits).unwrap();
            prop_assume!(!mask.is_blank());
            let mut m = CostMeter::default();
            let out = region_grow_refine(&img, &mask, tau, 1, &mut m).unwrap();
            for i in 0..100 {
                if out.data()[i] != mask.data()[i] {
                    let inside = mask.data()[i];
                    prop_assert!(neighbours(i, 10, 10).any(|j| mask.data()[j] != inside));
                }
            }
        }
    }
}
