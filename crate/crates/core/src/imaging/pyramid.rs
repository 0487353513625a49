//! Burt-Adelson pyramid with the separable 5-tap generating kernel.

use super::{BinaryMask, GrayImage};
use crate::error::{Error, Result};

/// Kernel shape parameter giving a near-Gaussian response.
pub const BURT_A: f64 = 0.4;

/// Upper bound on pyramid depth.
pub const MAX_LEVELS: usize = 8;

/// `[1/4 - a/2, 1/4, a, 1/4, 1/4 - a/2]`, normalized so the taps sum to exactly 1.
pub fn burt_kernel(a: f64) -> [f64; 5] {
    let side = 0.25 - a / 2.0;
    let mut w = [side, 0.25, a, 0.25, side];
    // walk the center tap by single ulps until the left-to-right sum is exactly 1
    for _ in 0..64 {
        let sum: f64 = w.iter().sum();
        if sum == 1.0 {
            break;
        }
        w[2] = if sum > 1.0 { w[2].next_down() } else { w[2].next_up() };
    }
    debug_assert_eq!(w.iter().sum::<f64>(), 1.0);
    w
}

/// Mirror index into `0..n` without repeating the edge sample.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

/// One REDUCE step with `a = 0.4`.
pub fn reduce(img: &GrayImage) -> Result<GrayImage> {
    reduce_with(img, BURT_A)
}

/// Filters with the separable kernel and keeps the even-indexed samples.
pub fn reduce_with(img: &GrayImage, a: f64) -> Result<GrayImage> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::DimensionTooSmall {
            width: w,
            height: h,
            min: 2,
        });
    }
    let k = burt_kernel(a);
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));

    // horizontal pass at even columns, full height
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for ox in 0..ow {
            let cx = (2 * ox) as isize;
            let mut acc = 0.0;
            for (t, kt) in k.iter().enumerate() {
                acc += kt * img.get(reflect(cx + t as isize - 2, w), y);
            }
            rows[y * ow + ox] = acc;
        }
    }
    // vertical pass at even rows
    Ok(GrayImage::from_fn(ow, oh, |ox, oy| {
        let cy = (2 * oy) as isize;
        k.iter()
            .enumerate()
            .map(|(t, kt)| kt * rows[reflect(cy + t as isize - 2, h) * ow + ox])
            .sum()
    }))
}

/// Ordered levels, `levels[0]` is the source image.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<GrayImage>,
}

impl Pyramid {
    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> Option<&GrayImage> {
        self.levels.get(i)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn base_dims(&self) -> (usize, usize) {
        self.levels[0].dims()
    }

    /// Brings a mask computed at `level` back to the level-0 raster.
    pub fn upsample_to_base(&self, mask: &BinaryMask, level: usize) -> Result<BinaryMask> {
        let (w, h) = self.base_dims();
        upsample_mask(mask, 1 << level, w, h)
    }
}

/// Builds an `r`-level pyramid by repeated [`reduce`].
pub fn build_pyramid(img: &GrayImage, r: usize) -> Result<Pyramid> {
    let (w, h) = img.dims();
    let too_many = Error::TooManyLevels {
        levels: r,
        width: w,
        height: h,
    };
    if r == 0 || r > MAX_LEVELS {
        return Err(too_many);
    }
    // every level, the coarsest included, must stay at least 2x2
    let (mut lw, mut lh) = (w, h);
    for _ in 1..r {
        lw = lw.div_ceil(2);
        lh = lh.div_ceil(2);
    }
    if lw < 2 || lh < 2 {
        return Err(too_many);
    }
    let mut levels = Vec::with_capacity(r);
    levels.push(img.clone());
    for i in 1..r {
        let next = reduce(&levels[i - 1])?;
        levels.push(next);
    }
    Ok(Pyramid { levels })
}

/// Nearest-neighbour replication by `factor`, then crop or edge-pad to `width` x `height`.
pub fn upsample_mask(
    mask: &BinaryMask,
    factor: usize,
    width: usize,
    height: usize,
) -> Result<BinaryMask> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::InvalidFactor(factor));
    }
    let (mw, mh) = mask.dims();
    Ok(BinaryMask::from_fn(width, height, |x, y| {
        mask.get((x / factor).min(mw - 1), (y / factor).min(mh - 1))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct non-separable 5x5 convolution at the even grid.
    fn brute_reduce(img: &GrayImage, a: f64) -> Vec<f64> {
        let side = 0.25 - a / 2.0;
        let k = [side, 0.25, a, 0.25, side];
        let (w, h) = img.dims();
        let mut out = Vec::new();
        for oy in 0..h.div_ceil(2) {
            for ox in 0..w.div_ceil(2) {
                let mut acc = 0.0;
                for m in 0..5 {
                    for n in 0..5 {
                        let sx = reflect(2 * ox as isize + n as isize - 2, w);
                        let sy = reflect(2 * oy as isize + m as isize - 2, h);
                        acc += k[m] * k[n] * img.get(sx, sy);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn kernel_values() {
        let k = burt_kernel(0.4);
        let expected = [0.05, 0.25, 0.40, 0.25, 0.05];
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for a in [0.3, 0.375, 0.4, 0.5, 0.6] {
            assert_eq!(burt_kernel(a).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(-2, 2), 0);
        assert_eq!(reflect(3, 2), 1);
    }

    #[test]
    fn constant_is_fixed_point() {
        let img = GrayImage::filled(8, 8, 128.0);
        let out = reduce(&img).unwrap();
        assert_eq!(out.dims(), (4, 4));
        assert!(out.data().iter().all(|v| (v - 128.0).abs() < 1e-9));
    }

    #[test]
    fn ramp_matches_direct_convolution() {
        let img = GrayImage::from_fn(16, 16, |x, _| x as f64 * 15.0);
        let out = reduce(&img).unwrap();
        assert_eq!(out.dims(), (8, 8));
        for (a, b) in out.data().iter().zip(brute_reduce(&img, BURT_A)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn too_small_to_reduce() {
        let img = GrayImage::filled(1, 5, 0.0);
        assert!(matches!(reduce(&img), Err(Error::DimensionTooSmall { .. })));
    }

    #[test]
    fn pyramid_sizes() {
        let p = build_pyramid(&GrayImage::filled(512, 512, 9.0), 6).unwrap();
        let sizes: Vec<_> = p.levels().iter().map(|l| l.width()).collect();
        assert_eq!(sizes, vec![512, 256, 128, 64, 32, 16]);

        let p = build_pyramid(&GrayImage::filled(100, 60, 9.0), 3).unwrap();
        let dims: Vec<_> = p.levels().iter().map(|l| l.dims()).collect();
        assert_eq!(dims, vec![(100, 60), (50, 30), (25, 15)]);

        let img = GrayImage::filled(7, 7, 3.0);
        let p = build_pyramid(&img, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.levels()[0], img);
    }

    #[test]
    fn pyramid_level_limits() {
        let img = GrayImage::filled(16, 16, 0.0);
        assert!(build_pyramid(&img, 4).is_ok()); // 16, 8, 4, 2
        assert!(matches!(build_pyramid(&img, 5), Err(Error::TooManyLevels { .. })));
        assert!(build_pyramid(&img, 0).is_err());
        assert!(build_pyramid(&GrayImage::filled(4096, 4096, 0.0), 9).is_err());
    }

    #[test]
    fn upsample_identity_and_blocks() {
        let m = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(upsample_mask(&m, 1, 2, 2).unwrap(), m);
        let up = upsample_mask(&m, 2, 4, 4).unwrap();
        let expected = [
            1, 1, 0, 0, //
            1, 1, 0, 0, //
            0, 0, 1, 1, //
            0, 0, 1, 1,
        ];
        let got: Vec<u8> = up.data().iter().map(|&b| b as u8).collect();
        assert_eq!(got, expected);
        assert!(upsample_mask(&m, 3, 6, 6).is_err());
    }

    #[test]
    fn upsample_restores_base_dims() {
        let p = build_pyramid(&GrayImage::filled(100, 60, 0.0), 4).unwrap();
        let coarse = p.level(3).unwrap();
        assert_eq!(coarse.dims(), (13, 8));
        let m = BinaryMask::from_fn(13, 8, |x, y| x > 6 && y < 3);
        let up = p.upsample_to_base(&m, 3).unwrap();
        assert_eq!(up.dims(), (100, 60));
        // the last source column is stretched over the padded margin
        assert!(up.get(99, 0));
        assert!(!up.get(99, 59));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn majority_down(m: &BinaryMask, f: usize) -> BinaryMask {
            let (w, h) = (m.width() / f, m.height() / f);
            BinaryMask::from_fn(w, h, |x, y| {
                let mut n = 0;
                for dy in 0..f {
                    for dx in 0..f {
                        n += m.get(x * f + dx, y * f + dy) as usize;
                    }
                }
                2 * n > f * f
            })
        }

        proptest! {
            #[test]
            fn level_sizes_ceil_halve(w in 2usize..300, h in 2usize..300, r in 1usize..6) {
                let img = GrayImage::filled(w, h, 50.0);
                match build_pyramid(&img, r) {
                    Ok(p) => {
                        prop_assert_eq!(p.len(), r);
                        prop_assert_eq!(p.levels()[0].dims(), (w, h));
                        for i in 1..r {
                            let (pw, ph) = p.levels()[i - 1].dims();
                            prop_assert_eq!(p.levels()[i].dims(), (pw.div_ceil(2), ph.div_ceil(2)));
                        }
                    }
                    Err(_) => {
                        let (mut lw, mut lh) = (w, h);
                        for _ in 1..r { lw = lw.div_ceil(2); lh = lh.div_ceil(2); }
                        prop_assert!(lw < 2 || lh < 2);
                    }
                }
            }

            #[test]
            fn constant_fixed_point_any_a(a in 0.2f64..0.7, v in 0.0f64..255.0, w in 2usize..20, h in 2usize..20) {
                let out = reduce_with(&GrayImage::filled(w, h, v), a).unwrap();
                prop_assert!(out.data().iter().all(|x| (x - v).abs() < 1e-9));
            }

            #[test]
            fn upsample_then_majority_recovers(bits in proptest::collection::vec(any::<bool>(), 24), k in 0u32..3) {
                let m = BinaryMask::new(6, 4, bits).unwrap();
                let f = 1usize << k;
                let up = upsample_mask(&m, f, 6 * f, 4 * f).unwrap();
                prop_assert_eq!(majority_down(&up, f), m);
            }
        }
    }
}
