//! Accuracy/time trade-off measure and best-resolution labeling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The accuracy weights swept by the experiment harness.
pub const ALPHA_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// `a^e` with `0^0 = 1`.
#[inline]
fn pow0(a: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        a.powf(e)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Weighted geometric mean `A^α · (1 − T)^(1−α)` of accuracy and normalized time.
pub fn omega(accuracy: f64, time_norm: f64, alpha: f64) -> Result<f64> {
    check_unit("accuracy", accuracy)?;
    check_unit("normalized time", time_norm)?;
    check_unit("alpha", alpha)?;
    Ok(pow0(accuracy, alpha) * pow0(1.0 - time_norm, 1.0 - alpha))
}

/// Best level and the per-level trade-off scores behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionLabel {
    pub best_level: usize,
    pub omegas: Vec<f64>,
}

/// Scores every level from `(accuracy, time)` pairs indexed by level.
///
/// Times are normalized by their maximum. Ties in the trade-off score go to
/// the coarser level.
pub fn label_best_resolution(runs: &[(f64, f64)], alpha: f64) -> Result<ResolutionLabel> {
    if runs.is_empty() {
        return Err(Error::EmptyRecords);
    }
    check_unit("alpha", alpha)?;
    if let Some((_, t)) = runs.iter().find(|(_, t)| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Domain(format!("time {t} must be positive")));
    }
    let max_t = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let omegas = runs
        .iter()
        .map(|&(a, t)| omega(a, t / max_t, alpha))
        .collect::<Result<Vec<_>>>()?;
    let mut best_level = 0;
    for (i, &w) in omegas.iter().enumerate() {
        if w >= omegas[best_level] {
            best_level = i;
        }
    }
    Ok(ResolutionLabel { best_level, omegas })
}
