//! Misclassification impact: accuracy and time at the estimated level
//! relative to the original, minimum, peak and selected levels.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Accuracy and time of one image segmented at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionOutcome {
    pub accuracy: f64,
    pub time: f64,
}

/// Aligned outcomes for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactRecord {
    pub estimated: ResolutionOutcome,
    pub original: ResolutionOutcome,
    pub minimum: ResolutionOutcome,
    pub peak: ResolutionOutcome,
    pub selected: ResolutionOutcome,
}

/// Mean of per-image ratios; images whose denominator is zero are skipped
/// and counted in `excluded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    /// NaN when every denominator was zero (serialized as `null`).
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub mean: f64,
    /// Median of the same ratios; a few near-zero denominators can carry
    /// the mean, not the median.
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub median: f64,
    pub used: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactRatios {
    pub acc_est_orig: Ratio,
    pub acc_est_min: Ratio,
    pub acc_est_peak: Ratio,
    pub acc_est_sel: Ratio,
    pub time_orig_est: Ratio,
    pub time_min_est: Ratio,
    pub time_peak_est: Ratio,
    pub time_sel_est: Ratio,
}

fn nan_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_none()
    } else {
        s.serialize_some(v)
    }
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn mean_ratio(pairs: impl Iterator<Item = (f64, f64)>) -> Ratio {
    let mut ratios = Vec::new();
    let mut excluded = 0usize;
    for (num, den) in pairs {
        if den == 0.0 || !num.is_finite() || !den.is_finite() {
            excluded += 1;
        } else {
            ratios.push(num / den);
        }
    }
    let used = ratios.len();
    let mean = if used > 0 { ratios.iter().sum::<f64>() / used as f64 } else { f64::NAN };
    ratios.sort_by(f64::total_cmp);
    let median = match used {
        0 => f64::NAN,
        n if n % 2 == 1 => ratios[n / 2],
        n => 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]),
    };
    Ratio {
        mean,
        median,
        used,
        excluded,
    }
}

pub fn impact_ratios(records: &[ImpactRecord]) -> Result<ImpactRatios> {
    if records.is_empty() {
        return Err(Error::MissingResolution("no per-image records".into()));
    }
    let acc = |f: fn(&ImpactRecord) -> f64| mean_ratio(records.iter().map(move |r| (r.estimated.accuracy, f(r))));
    let time = |f: fn(&ImpactRecord) -> f64| mean_ratio(records.iter().map(move |r| (f(r), r.estimated.time)));
    Ok(ImpactRatios {
        acc_est_orig: acc(|r| r.original.accuracy),
        acc_est_min: acc(|r| r.minimum.accuracy),
        acc_est_peak: acc(|r| r.peak.accuracy),
        acc_est_sel: acc(|r| r.selected.accuracy),
        time_orig_est: time(|r| r.original.time),
        time_min_est: time(|r| r.minimum.time),
        time_peak_est: time(|r| r.peak.time),
        time_sel_est: time(|r| r.selected.time),
    })
}

/// Most frequent label; ties go to the coarser (larger) level.
pub fn peak_resolution(labels: &[usize], n_levels: usize) -> Option<usize> {
    if labels.is_empty() {
        return None;
    }
    let mut hist = vec![0usize; n_levels.max(labels.iter().max().map_or(0, |m| m + 1))];
    for &l in labels {
        hist[l] += 1;
    }
    let best = *hist.iter().max()?;
    hist.iter().rposition(|&c| c == best)
}
