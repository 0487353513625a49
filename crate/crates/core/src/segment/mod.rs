//! Segmentation backends, refinement, and the timed per-level driver.

mod chan_vese;
mod components;
mod region_grow;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use chan_vese::{chan_vese, ChanVese, ChanVeseOutput, ChanVeseParams};
pub use components::{label_components, select_component_at};
pub use region_grow::{region_grow_refine, RegionGrowSegmenter, DEFAULT_TAU};

use crate::error::Result;
use crate::eval::dice;
use crate::imaging::{BinaryMask, GrayImage, Pyramid};

/// Pixel coordinate `(x, y)`.
pub type Seed = (usize, usize);

/// How the cost of a segmentation run is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingMode {
    /// Elapsed seconds.
    Wall,
    /// Count of per-pixel update operations; reproducible across machines.
    #[default]
    Cost,
}

impl std::str::FromStr for TimingMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(Self::Wall),
            "cost" => Ok(Self::Cost),
            _ => Err(crate::Error::Config(format!("unknown timing mode {s:?}"))),
        }
    }
}

/// Counter of per-pixel operations.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CostMeter {
    ops: u64,
}

impl CostMeter {
    #[inline]
    pub fn charge(&mut self, n: usize) {
        self.ops += n as u64;
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }
}

/// A segmentation backend.
pub trait Segmenter {
    fn name(&self) -> &'static str;

    /// Segments `img`; `hint` is an optional user click in `img` coordinates.
    /// The returned mask has the dimensions of `img`.
    fn segment(&self, img: &GrayImage, hint: Option<Seed>, meter: &mut CostMeter) -> Result<BinaryMask>;
}

/// Settings of the per-level driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverOptions {
    pub tau: f64,
    pub timing: TimingMode,
}

impl Default for DriverOptions {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            timing: TimingMode::Cost,
        }
    }
}

/// Outcome of segmenting one image at one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRunRecord {
    pub level: usize,
    /// Dice against the gold standard.
    pub accuracy: f64,
    /// Seconds or operation count, per [`TimingMode`].
    pub time: f64,
    /// Operation count, recorded in either mode.
    pub cost: u64,
    /// Final mask at level 0.
    pub mask: BinaryMask,
}

/// Segments `pyr` at `level` and brings the result back to full resolution.
///
/// The timed span covers segmentation, upsampling, refinement and click-based
/// component selection; the accuracy computation is outside it.
pub fn segment_at_level(
    pyr: &Pyramid,
    level: usize,
    segmenter: &dyn Segmenter,
    gold: Option<&BinaryMask>,
    click: Option<Seed>,
    opts: &DriverOptions,
) -> Result<ResolutionRunRecord> {
    let img = pyr.level(level).ok_or_else(|| {
        crate::Error::Config(format!("level {level} outside pyramid of {} levels", pyr.len()))
    })?;
    let base = &pyr.levels()[0];
    let (bw, bh) = base.dims();
    if let Some(g) = gold {
        if g.dims() != (bw, bh) {
            return Err(crate::Error::DimensionMismatch {
                expected: (bw, bh),
                actual: g.dims(),
            });
        }
    }

    let started = Instant::now();
    let mut meter = CostMeter::default();
    let hint = click.map(|(x, y)| ((x >> level).min(img.width() - 1), (y >> level).min(img.height() - 1)));
    let coarse = segmenter.segment(img, hint, &mut meter)?;
    let mut mask = if level > 0 {
        let up = pyr.upsample_to_base(&coarse, level)?;
        meter.charge(bw * bh);
        if up.is_blank() {
            up
        } else {
            region_grow_refine(base, &up, opts.tau, 4 << level, &mut meter)?
        }
    } else {
        coarse
    };
    if let Some(seed) = click {
        if !mask.is_blank() {
            mask = select_component_at(&mask, seed)?;
            meter.charge(bw * bh);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();

    let time = match opts.timing {
        TimingMode::Wall => elapsed.max(1e-9),
        TimingMode::Cost => meter.ops().max(1) as f64,
    };
    let accuracy = match gold {
        Some(g) => dice(&mask, g)?,
        None => f64::NAN,
    };
    Ok(ResolutionRunRecord {
        level,
        accuracy,
        time,
        cost: meter.ops(),
        mask,
    })
}

/// Runs every level of the pyramid in order.
pub fn segment_all_levels(
    pyr: &Pyramid,
    segmenter: &dyn Segmenter,
    gold: &BinaryMask,
    click: Option<Seed>,
    opts: &DriverOptions,
) -> Result<Vec<ResolutionRunRecord>> {
    (0..pyr.len())
        .map(|level| segment_at_level(pyr, level, segmenter, Some(gold), click, opts))
        .collect()
}
