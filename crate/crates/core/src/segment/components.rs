use std::collections::VecDeque;

use super::Seed;
use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

/// 8-connected component labels (0 = background, components from 1 in raster
/// order) and the component count.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.data()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if mask.data()[j] && labels[j] == 0 {
                        labels[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// The component under `seed`, or the component nearest to it.
pub fn select_component_at(mask: &BinaryMask, seed: Seed) -> Result<BinaryMask> {
    let (w, h) = mask.dims();
    if seed.0 >= w || seed.1 >= h {
        return Err(Error::Config(format!("seed {seed:?} outside {w}x{h} mask")));
    }
    let (labels, n) = label_components(mask);
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mut chosen = labels[seed.1 * w + seed.0];
    if chosen == 0 {
        let mut best = u64::MAX;
        for (i, &l) in labels.iter().enumerate() {
            if l == 0 {
                continue;
            }
            let dx = (i % w) as i64 - seed.0 as i64;
            let dy = (i / w) as i64 - seed.1 as i64;
            let d = (dx * dx + dy * dy) as u64;
            if d < best {
                best = d;
                chosen = l;
            }
        }
    }
    BinaryMask::new(w, h, labels.iter().map(|&l| l == chosen).collect())
}
