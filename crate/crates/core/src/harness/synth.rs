//! Synthetic corpus: textured backgrounds with one target blob and up to two
//! distractors, rendered with soft edges and Gaussian noise.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::imaging::{BinaryMask, GrayImage};
use crate::rng::{substream, Stream};
use crate::segment::Seed;

/// Closed star-shaped outline `r(θ) = radius · (1 + Σ a_k cos(kθ + φ_k))`
/// in a frame rotated by `angle` and stretched by `aspect`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobShape {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub aspect: f64,
    pub angle: f64,
    pub harmonics: Vec<(u32, f64, f64)>,
}

impl BlobShape {
    pub fn disk(cx: f64, cy: f64, radius: f64) -> Self {
        Self {
            cx,
            cy,
            radius,
            aspect: 1.0,
            angle: 0.0,
            harmonics: vec![],
        }
    }

    /// Signed distance proxy: positive inside, in pixels along the ray.
    pub fn depth(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.angle.sin_cos();
        let u = c * dx + s * dy;
        let v = (-s * dx + c * dy) * self.aspect;
        let rho = u.hypot(v);
        let theta = v.atan2(u);
        let scale: f64 = 1.0 + self.harmonics.iter().map(|&(k, a, p)| a * (k as f64 * theta + p).cos()).sum::<f64>();
        self.radius * scale - rho
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.depth(x, y) >= 0.0
    }

    /// Largest distance from the centre the outline can reach.
    pub fn extent(&self) -> f64 {
        let amp: f64 = self.harmonics.iter().map(|h| h.1.abs()).sum();
        self.radius * (1.0 + amp) * self.aspect.max(1.0 / self.aspect)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBlob {
    pub shape: BlobShape,
    /// Intensity offset from the background.
    pub contrast: f64,
    /// Edge blur scale in pixels; 0 gives a hard step.
    pub softness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    /// Background intensity change across the image width.
    pub gradient: f64,
    pub noise_sigma: f64,
    /// First blob is the target; the rest are distractors.
    pub blobs: Vec<SyntheticBlob>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub image: GrayImage,
    pub gold: BinaryMask,
    pub click: Option<Seed>,
    pub spec: SceneSpec,
}

fn edge(depth: f64, softness: f64) -> f64 {
    if softness <= 0.0 {
        f64::from(u8::from(depth >= 0.0))
    } else {
        0.5 * (1.0 + (depth / softness).tanh())
    }
}

/// Renders a scene; pixel values are rounded to integers so the image
/// survives an 8-bit round trip unchanged.
pub fn render_scene<R: Rng>(spec: &SceneSpec, rng: &mut R) -> SyntheticSample {
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("finite sigma");
    let (w, h) = (spec.width, spec.height);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64, y as f64);
            let mut v = spec.background + spec.gradient * (px / w as f64 - 0.5);
            for b in &spec.blobs {
                v += b.contrast * edge(b.shape.depth(px, py), b.softness);
            }
            if spec.noise_sigma > 0.0 {
                v += noise.sample(rng);
            }
            data.push(v.round().clamp(0.0, 255.0));
        }
    }
    let image = GrayImage::new(w, h, data).expect("clamped raster");
    let gold = match spec.blobs.first() {
        Some(t) => BinaryMask::from_fn(w, h, |x, y| t.shape.contains(x as f64, y as f64)),
        None => BinaryMask::empty(w, h),
    };
    let click = gold.centroid().filter(|&(x, y)| gold.get(x, y)).or_else(|| {
        // a non-convex outline can put the centroid outside; take the deepest pixel
        let t = &spec.blobs.first()?.shape;
        (0..w * h)
            .filter(|&i| gold.data()[i])
            .max_by(|&a, &b| {
                let d = |i: usize| t.depth((i % w) as f64, (i / w) as f64);
                d(a).total_cmp(&d(b)).then(b.cmp(&a))
            })
            .map(|i| (i % w, i / w))
    });
    SyntheticSample {
        image,
        gold,
        click,
        spec: spec.clone(),
    }
}

fn random_shape<R: Rng>(rng: &mut R, cx: f64, cy: f64, radius: f64) -> BlobShape {
    let mut shape = BlobShape::disk(cx, cy, radius);
    match rng.random_range(0..3) {
        0 => {}
        1 => {
            shape.aspect = rng.random_range(1.2..2.0);
            shape.angle = rng.random_range(0.0..TAU);
        }
        _ => {
            // rounded polygon: one low harmonic gives soft corners
            let k = rng.random_range(3..=6);
            shape.harmonics.push((k, rng.random_range(0.06..0.14), rng.random_range(0.0..TAU)));
            shape.angle = rng.random_range(0.0..TAU);
        }
    }
    shape
}

/// Draws the scene parameters of sample `index`.
pub fn random_scene(size: usize, rng: &mut ChaCha8Rng) -> SceneSpec {
    let s = size as f64;
    let background = rng.random_range(60.0..190.0);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    // log-uniform target size spans objects from a few pixels to a third of the frame
    let radius = s * (rng.random_range((0.025f64).ln()..(0.3f64).ln())).exp();
    let contrast = sign * rng.random_range(30.0..90.0);
    let softness = rng.random_range(0.0..3.0) * rng.random_range(0.0..1.0);
    let noise_sigma = rng.random_range(0.0..28.0);
    let margin = radius * 1.3 + 2.0;
    let cx = rng.random_range(margin.min(s / 2.0)..(s - margin).max(s / 2.0 + 1e-9));
    let cy = rng.random_range(margin.min(s / 2.0)..(s - margin).max(s / 2.0 + 1e-9));
    let mut blobs = vec![SyntheticBlob {
        shape: random_shape(rng, cx, cy, radius),
        contrast,
        softness,
    }];
    let extra = rng.random_range(0..=2);
    for _ in 0..extra {
        // distractors keep clear of the target so the gold outline stays exact
        for _attempt in 0..20 {
            let r = s * (rng.random_range((0.02f64).ln()..(0.12f64).ln())).exp();
            let x = rng.random_range(r..s - r);
            let y = rng.random_range(r..s - r);
            let clear = blobs.iter().all(|b| {
                (b.shape.cx - x).hypot(b.shape.cy - y) > b.shape.extent() + r * 2.0 + 2.0 + 3.0 * b.softness + 6.0
            });
            if clear {
                let c = sign * rng.random_range(30.0..90.0);
                let shape = random_shape(rng, x, y, r);
                blobs.push(SyntheticBlob {
                    shape,
                    contrast: c,
                    softness: rng.random_range(0.0..2.0),
                });
                break;
            }
        }
    }
    SceneSpec {
        width: size,
        height: size,
        background,
        // a global ramp lets the two-phase fit split the frame in halves
        gradient: 0.0,
        noise_sigma,
        blobs,
    }
}

/// `n` square images of side `size`; sample `i` depends only on `(seed, i)`.
pub fn generate_synthetic_corpus(n: usize, size: usize, seed: u64) -> Vec<SyntheticSample> {
    (0..n)
        .map(|i| {
            let mut rng = substream(seed, Stream::Corpus, i as u64);
            let spec = random_scene(size, &mut rng);
            render_scene(&spec, &mut rng)
        })
        .collect()
}
