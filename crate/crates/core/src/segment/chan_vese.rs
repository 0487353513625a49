//! Two-phase piecewise-constant Chan-Vese active contour.
//!
//! The level set is evolved with the semi-implicit Gauss-Seidel scheme for
//! the regularized energy: each sweep updates `phi` in place using the
//! already-updated neighbours. `phi >= 0` is the inside phase.

use serde::{Deserialize, Serialize};

use super::{CostMeter, Seed, Segmenter};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChanVeseParams {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Length (curvature) weight, in squared-intensity units.
    pub mu: f64,
    pub dt: f64,
    /// Width of the regularized Dirac delta.
    pub epsilon: f64,
    /// A sweep with fewer sign flips than this counts as quiet.
    pub eta: usize,
    /// Consecutive quiet sweeps that end the evolution.
    pub patience: usize,
    pub max_iterations: usize,
    /// Sweeps run before the stopping rule is consulted.
    pub min_iterations: usize,
    /// Circle grid pitch as a fraction of the smaller image side.
    pub pitch_fraction: f64,
    /// Upper bound on the circle grid pitch, in pixels.
    pub max_pitch: f64,
    /// Circle radius as a fraction of the pitch.
    pub radius_fraction: f64,
    /// Rescale the data force each sweep so its largest magnitude is `255²`.
    pub normalize_force: bool,
}

impl Default for ChanVeseParams {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            mu: 0.05 * 255.0 * 255.0,
            dt: 0.5,
            epsilon: 1.0,
            eta: 5,
            patience: 5,
            max_iterations: 1000,
            min_iterations: 0,
            pitch_fraction: 0.25,
            max_pitch: 10.0,
            radius_fraction: 0.4,
            normalize_force: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChanVeseOutput {
    /// The `phi >= 0` phase.
    pub inside: BinaryMask,
    pub phi: Vec<f64>,
    pub iterations: usize,
    /// Region means `(c1, c2)` at the last sweep.
    pub means: (f64, f64),
}

/// Signed distance to a tiling of circles, positive inside.
fn circle_tiling(w: usize, h: usize, p: &ChanVeseParams) -> Vec<f64> {
    let pitch = (w.min(h) as f64 * p.pitch_fraction).min(p.max_pitch).max(1.0);
    let radius = pitch * p.radius_fraction;
    let mut phi = Vec::with_capacity(w * h);
    for y in 0..h {
        let cy = ((y as f64 / pitch).floor() + 0.5) * pitch;
        for x in 0..w {
            let cx = ((x as f64 / pitch).floor() + 0.5) * pitch;
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            phi.push(radius - d);
        }
    }
    phi
}

fn region_means(f: &[f64], phi: &[f64]) -> (f64, f64) {
    let (mut s1, mut n1, mut s2, mut n2) = (0.0, 0usize, 0.0, 0usize);
    for (&v, &p) in f.iter().zip(phi) {
        if p >= 0.0 {
            s1 += v;
            n1 += 1;
        } else {
            s2 += v;
            n2 += 1;
        }
    }
    match (n1, n2) {
        (0, _) => (s2 / n2 as f64, s2 / n2 as f64),
        (_, 0) => (s1 / n1 as f64, s1 / n1 as f64),
        _ => (s1 / n1 as f64, s2 / n2 as f64),
    }
}

/// Gauss-Seidel sweeps on `phi` until the stopping rule or `budget` sweeps;
/// returns the sweep count and the last region means.
fn evolve(
    f: &[f64],
    w: usize,
    h: usize,
    phi: &mut [f64],
    params: &ChanVeseParams,
    budget: usize,
    meter: &mut CostMeter,
) -> (usize, (f64, f64)) {
    let eta2 = 1e-16;
    let mut quiet = 0;
    let mut iterations = 0;
    let mut means = region_means(f, phi);

    while iterations < budget {
        means = region_means(f, phi);
        let (c1, c2) = means;
        let force = |v: f64| -params.lambda1 * (v - c1).powi(2) + params.lambda2 * (v - c2).powi(2);
        let gain = if params.normalize_force {
            let peak = f.iter().map(|&v| force(v).abs()).fold(0.0, f64::max);
            if peak > 0.0 { 255.0 * 255.0 / peak } else { 0.0 }
        } else {
            1.0
        };
        let mut flips = 0usize;
        for y in 0..h {
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(h - 1);
            for x in 0..w {
                let xm = x.saturating_sub(1);
                let xp = (x + 1).min(w - 1);
                let at = |xx: usize, yy: usize| phi[yy * w + xx];
                let i = y * w + x;
                let p = phi[i];
                let (pxp, pxm, pyp, pym) = (at(xp, y), at(xm, y), at(x, yp), at(x, ym));
                let c_xp = 1.0 / (eta2 + (pxp - p).powi(2) + ((pyp - pym) / 2.0).powi(2)).sqrt();
                let c_xm = 1.0 / (eta2 + (p - pxm).powi(2) + ((at(xm, yp) - at(xm, ym)) / 2.0).powi(2)).sqrt();
                let c_yp = 1.0 / (eta2 + ((pxp - pxm) / 2.0).powi(2) + (pyp - p).powi(2)).sqrt();
                let c_ym = 1.0 / (eta2 + ((at(xp, ym) - at(xm, ym)) / 2.0).powi(2) + (p - pym).powi(2)).sqrt();
                let delta = params.dt * params.epsilon
                    / (std::f64::consts::PI * (params.epsilon * params.epsilon + p * p));
                let data = gain * force(f[i]);
                let num = p
                    + delta * (params.mu * (c_xp * pxp + c_xm * pxm + c_yp * pyp + c_ym * pym) + data);
                let den = 1.0 + delta * params.mu * (c_xp + c_xm + c_yp + c_ym);
                let next = num / den;
                if (next >= 0.0) != (p >= 0.0) {
                    flips += 1;
                }
                phi[i] = next;
            }
        }
        meter.charge(w * h);
        iterations += 1;
        if flips < params.eta {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if iterations >= params.min_iterations && quiet >= params.patience {
            break;
        }
    }
    (iterations, means)
}

/// Runs the evolution from the circle-tiling initialization.
pub fn chan_vese(img: &GrayImage, params: &ChanVeseParams, meter: &mut CostMeter) -> Result<ChanVeseOutput> {
    let (w, h) = img.dims();
    if w < 8 || h < 8 {
        return Err(Error::DimensionTooSmall {
            width: w,
            height: h,
            min: 8,
        });
    }
    let f = img.data();
    let mut phi = circle_tiling(w, h, params);
    let (iterations, means) = evolve(f, w, h, &mut phi, params, params.max_iterations, meter);

    let inside = BinaryMask::new(w, h, phi.iter().map(|&p| p >= 0.0).collect())?;
    Ok(ChanVeseOutput {
        inside,
        phi,
        iterations,
        means,
    })
}

/// Chan-Vese backend; the object is the phase under the click, or else the
/// phase touching less of the image border.
#[derive(Debug, Clone, Default)]
pub struct ChanVese {
    pub params: ChanVeseParams,
}

impl ChanVese {
    pub fn new(params: ChanVeseParams) -> Self {
        Self { params }
    }
}

/// Picks the object phase of a two-phase partition.
pub(crate) fn object_phase(inside: BinaryMask, hint: Option<Seed>) -> BinaryMask {
    let (w, h) = inside.dims();
    if let Some((x, y)) = hint {
        return if inside.get(x, y) { inside } else { inside.invert() };
    }
    let mut on_border = 0usize;
    let mut border = 0usize;
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                border += 1;
                on_border += inside.get(x, y) as usize;
            }
        }
    }
    let inside_touches_more = 2 * on_border > border
        || (2 * on_border == border && 2 * inside.count() > w * h);
    if inside_touches_more {
        inside.invert()
    } else {
        inside
    }
}

impl Segmenter for ChanVese {
    fn name(&self) -> &'static str {
        "chanvese"
    }

    fn segment(&self, img: &GrayImage, hint: Option<Seed>, meter: &mut CostMeter) -> Result<BinaryMask> {
        let out = chan_vese(img, &self.params, meter)?;
        Ok(object_phase(out.inside, hint))
    }
}
