//! WebAssembly bindings for the static demo page in `www/`.
//!
//! A [`Demo`] holds one synthetic scene and its pyramid. The page can
//! segment it at a chosen level, sweep the trade-off weight to see which
//! level wins, and look at the LBP code raster behind the features.

use wasm_bindgen::prelude::*;

use resolve_seg::features::{extract_features, lbp_label, FeatureParams};
use resolve_seg::harness::{generate_synthetic_corpus, ExperimentConfig, SyntheticSample};
use resolve_seg::imaging::{build_pyramid, BinaryMask, Pyramid};
use resolve_seg::segment::{segment_at_level, ResolutionRunRecord};
use resolve_seg::tradeoff::label_best_resolution;

#[wasm_bindgen]
pub struct Demo {
    sample: SyntheticSample,
    pyramid: Pyramid,
    cfg: ExperimentConfig,
    runs: Vec<Option<ResolutionRunRecord>>,
}

fn err(e: resolve_seg::Error) -> String {
    e.to_string()
}

#[wasm_bindgen]
impl Demo {
    /// A fresh scene of `size`×`size` pixels with a `levels`-deep pyramid.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, size: u32, levels: u32) -> Result<Demo, String> {
        let sample = generate_synthetic_corpus(1, size as usize, seed as u64)
            .pop()
            .ok_or("empty corpus")?;
        let pyramid = build_pyramid(&sample.image, levels as usize).map_err(err)?;
        let mut cfg = ExperimentConfig::default();
        cfg.levels = levels as usize;
        Ok(Demo {
            sample,
            pyramid,
            cfg,
            runs: vec![None; levels as usize],
        })
    }

    pub fn width(&self) -> u32 {
        self.sample.image.width() as u32
    }

    pub fn height(&self) -> u32 {
        self.sample.image.height() as u32
    }

    pub fn levels(&self) -> u32 {
        self.pyramid.len() as u32
    }

    pub fn click_x(&self) -> u32 {
        self.sample.click.map_or(0, |c| c.0 as u32)
    }

    pub fn click_y(&self) -> u32 {
        self.sample.click.map_or(0, |c| c.1 as u32)
    }

    /// The scene as RGBA bytes.
    pub fn image_rgba(&self) -> Vec<u8> {
        gray_rgba(&self.sample.image.to_u8())
    }

    /// Pyramid level `level` as RGBA bytes of its own (smaller) size.
    pub fn level_rgba(&self, level: u32) -> Vec<u8> {
        self.pyramid.level(level as usize).map_or_else(Vec::new, |l| gray_rgba(&l.to_u8()))
    }

    pub fn level_width(&self, level: u32) -> u32 {
        self.pyramid.level(level as usize).map_or(0, |l| l.width() as u32)
    }

    pub fn level_height(&self, level: u32) -> u32 {
        self.pyramid.level(level as usize).map_or(0, |l| l.height() as u32)
    }

    /// Segments at `level` and returns the scene with the result tinted and
    /// the gold outline drawn.
    pub fn segment(&mut self, level: u32) -> Result<Vec<u8>, String> {
        let run = self.run(level as usize)?;
        Ok(overlay(&self.sample, &run.mask))
    }

    /// Dice of the run at `level` (NaN until segmented).
    pub fn dice(&self, level: u32) -> f64 {
        self.cached(level).map_or(f64::NAN, |r| r.accuracy)
    }

    /// Operation count of the run at `level` (NaN until segmented).
    pub fn cost(&self, level: u32) -> f64 {
        self.cached(level).map_or(f64::NAN, |r| r.time)
    }

    /// Trade-off score of every level at `alpha`; runs missing levels first.
    pub fn omegas(&mut self, alpha: f64) -> Result<Vec<f64>, String> {
        Ok(self.tradeoff(alpha)?.omegas)
    }

    pub fn best_level(&mut self, alpha: f64) -> Result<u32, String> {
        Ok(self.tradeoff(alpha)?.best_level as u32)
    }

    /// LBP codes as gray RGBA; the one-pixel border without a code is black.
    pub fn lbp_rgba(&self) -> Result<Vec<u8>, String> {
        let lbp = lbp_label(&self.sample.image).map_err(err)?;
        let (w, h) = (lbp.width(), lbp.height());
        let codes: Vec<u8> = (0..w * h).map(|i| lbp.code(i % w, i / w).unwrap_or(0)).collect();
        Ok(gray_rgba(&codes))
    }

    /// Regional LBP histograms, region-major.
    pub fn features(&self) -> Result<Vec<f64>, String> {
        Ok(extract_features(&self.sample.image, &FeatureParams::default())
            .map_err(err)?
            .into_values())
    }
}

impl Demo {
    fn cached(&self, level: u32) -> Option<&ResolutionRunRecord> {
        self.runs.get(level as usize).and_then(Option::as_ref)
    }

    fn run(&mut self, level: usize) -> Result<ResolutionRunRecord, String> {
        if level >= self.runs.len() {
            return Err(format!("level {level} outside 0..{}", self.runs.len()));
        }
        if let Some(r) = &self.runs[level] {
            return Ok(r.clone());
        }
        let seg = self.cfg.build_segmenter();
        let run = segment_at_level(
            &self.pyramid,
            level,
            seg.as_ref(),
            Some(&self.sample.gold),
            self.sample.click,
            &self.cfg.driver_options(),
        )
        .map_err(err)?;
        self.runs[level] = Some(run.clone());
        Ok(run)
    }

    fn tradeoff(&mut self, alpha: f64) -> Result<resolve_seg::tradeoff::ResolutionLabel, String> {
        let mut at = Vec::with_capacity(self.runs.len());
        for l in 0..self.runs.len() {
            let r = self.run(l)?;
            at.push((r.accuracy, r.time));
        }
        label_best_resolution(&at, alpha).map_err(err)
    }
}

fn gray_rgba(v: &[u8]) -> Vec<u8> {
    v.iter().flat_map(|&g| [g, g, g, 255]).collect()
}

fn overlay(sample: &SyntheticSample, mask: &BinaryMask) -> Vec<u8> {
    let img = sample.image.to_u8();
    let gold = &sample.gold;
    let (w, h) = gold.dims();
    let edge = |x: usize, y: usize| {
        gold.get(x, y)
            && (x == 0 || y == 0 || x + 1 == w || y + 1 == h
                || !gold.get(x - 1, y)
                || !gold.get(x + 1, y)
                || !gold.get(x, y - 1)
                || !gold.get(x, y + 1))
    };
    let mut out = Vec::with_capacity(w * h * 4);
    for y in 0..h {
        for x in 0..w {
            let g = img[y * w + x] as u16;
            let px = if edge(x, y) {
                [40, 220, 90, 255]
            } else if mask.get(x, y) {
                [((g + 255) / 2) as u8, ((g + 120) / 2) as u8, (g / 2) as u8, 255]
            } else {
                [g as u8, g as u8, g as u8, 255]
            };
            out.extend_from_slice(&px);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffers_have_image_size() {
        let mut d = Demo::new(7, 64, 3).unwrap();
        let n = 64 * 64 * 4;
        assert_eq!(d.image_rgba().len(), n);
        assert_eq!(d.lbp_rgba().unwrap().len(), n);
        assert_eq!(d.segment(1).unwrap().len(), n);
        assert_eq!(d.level_rgba(2).len(), (16 * 16 * 4) as usize);
        assert_eq!((d.level_width(2), d.level_height(2)), (16, 16));
        assert_eq!(d.features().unwrap().len(), 160);
    }

    #[test]
    fn runs_are_cached_and_scored() {
        let mut d = Demo::new(3, 64, 3).unwrap();
        assert!(d.dice(0).is_nan());
        d.segment(0).unwrap();
        let dice = d.dice(0);
        assert!((0.0..=1.0).contains(&dice));
        d.segment(0).unwrap();
        assert_eq!(d.dice(0), dice);
        assert!(d.segment(9).is_err());
    }

    #[test]
    fn tradeoff_matches_labeling() {
        let mut d = Demo::new(11, 64, 3).unwrap();
        let om = d.omegas(0.5).unwrap();
        assert_eq!(om.len(), 3);
        let best = d.best_level(0.5).unwrap() as usize;
        let top = om.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(om[best], top);
        // speed only: the cheapest level wins
        let cheapest = (0..3).min_by(|&a, &b| d.cost(a).total_cmp(&d.cost(b))).unwrap();
        assert_eq!(d.best_level(0.0).unwrap(), cheapest);
    }

    #[test]
    fn overlay_marks_gold_edge() {
        let d = Demo::new(5, 64, 2).unwrap();
        let empty = BinaryMask::empty(64, 64);
        let px = overlay(&d.sample, &empty);
        let greens = px.chunks(4).filter(|p| p == &[40, 220, 90, 255]).count();
        assert!(greens > 0);
    }
}
