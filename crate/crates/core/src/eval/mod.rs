//! Segmentation and classification metrics.

mod confusion;
mod impact;

pub use confusion::{aggregate_confusions, classification_metrics, AggregatedConfusion, ClassMetrics, ConfusionMatrix, Metrics};
pub use impact::{impact_ratios, peak_resolution, ImpactRatios, ImpactRecord, Ratio, ResolutionOutcome};

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

/// Dice overlap `2|a∩b| / (|a|+|b|)`; two empty masks agree perfectly.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}
