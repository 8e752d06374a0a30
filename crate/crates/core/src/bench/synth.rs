use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frame::{ForegroundMask, Frame};
use crate::linalg;
use crate::motion::AffineTransform;

/// Synthetic low-rank background with one bouncing rectangular object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Rank of the clean background `B = U V`.
    pub rank: usize,
    pub object_width: usize,
    pub object_height: usize,
    /// `sqrt(var(B) / var(noise))`; `f64::INFINITY` adds no noise.
    pub snr: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            width: 100,
            height: 30,
            frames: 200,
            rank: 5,
            object_width: 10,
            object_height: 10,
            snr: 10.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 || self.rank == 0 {
            return Err(Error::InvalidParameter("dimensions, frames and rank must be positive".into()));
        }
        if !(self.snr > 0.0) {
            return Err(Error::InvalidParameter(format!("snr = {}", self.snr)));
        }
        if self.object_width == 0
            || self.object_height == 0
            || self.object_width > self.width
            || self.object_height > self.height
        {
            return Err(Error::InvalidParameter(format!(
                "object {}x{} does not fit a {}x{} image",
                self.object_width, self.object_height, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Left column of the object in frame `k`: one pixel per frame from the
    /// left border, reversing at either border.
    pub fn object_x(&self, k: usize) -> usize {
        bounce(k, self.width - self.object_width)
    }

    /// Top row of the object (vertically centred).
    pub fn object_y(&self) -> usize {
        (self.height - self.object_height) / 2
    }

    pub fn object_mask(&self, k: usize) -> ForegroundMask {
        rectangle(
            self.width,
            self.height,
            self.object_x(k),
            self.object_y(),
            self.object_width,
            self.object_height,
        )
    }
}

fn bounce(k: usize, span: usize) -> usize {
    if span == 0 {
        return 0;
    }
    let t = k % (2 * span);
    if t <= span {
        t
    } else {
        2 * span - t
    }
}

fn rectangle(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize) -> ForegroundMask {
    let mut mask = ForegroundMask::background(width * height);
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            mask.set(y * width + x, true);
        }
    }
    mask
}

/// Global affine intensity map `unit = (raw − lo) / (hi − lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityMap {
    pub lo: f64,
    pub hi: f64,
}

impl IntensityMap {
    pub fn to_unit(&self, raw: f64) -> f64 {
        (raw - self.lo) / (self.hi - self.lo)
    }

    pub fn to_raw(&self, unit: f64) -> f64 {
        self.lo + unit * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub spec: SyntheticSpec,
    pub frames: Vec<Frame>,
    pub masks: Vec<ForegroundMask>,
    /// Clean background per frame in the same units as `frames` (not clamped).
    pub background: Vec<Vec<f64>>,
    pub map: IntensityMap,
}

/// Draws `B = U V` with standard-normal factors, pastes the object with
/// intensities uniform over the 5th..95th percentile of `B`, adds Gaussian
/// noise of variance `var(B)/snr²` everywhere and maps the whole stack to
/// `[0, 1]` with one global affine map.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let (m, n, r) = (spec.pixels(), spec.frames, spec.rank);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u: Vec<f64> = (0..m * r).map(|_| StandardNormal.sample(&mut rng)).collect();
    let v: Vec<f64> = (0..r * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let clean: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..m).map(|i| (0..r).map(|l| u[i * r + l] * v[l * n + k]).sum()).collect())
        .collect();

    let flat: Vec<f64> = clean.iter().flatten().copied().collect();
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    let var_b = flat.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / flat.len() as f64;
    let (p5, p95) = (linalg::percentile(&flat, 5.0), linalg::percentile(&flat, 95.0));
    let noise_std = if spec.snr.is_infinite() { 0.0 } else { var_b.sqrt() / spec.snr };

    let mut masks = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    for (k, b) in clean.iter().enumerate() {
        let mask = spec.object_mask(k);
        let mut d = b.clone();
        for (i, value) in d.iter_mut().enumerate() {
            if mask.is_foreground(i) {
                *value = rng.random_range(p5..=p95);
            }
        }
        if noise_std > 0.0 {
            for value in d.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *value += noise_std * z;
            }
        }
        masks.push(mask);
        raw.push(d);
    }

    let lo = raw.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateInput("synthetic sequence has zero range".into()));
    }
    let map = IntensityMap { lo, hi };
    let frames = raw
        .iter()
        .map(|d| {
            let unit: Vec<f64> = d.iter().map(|v| map.to_unit(*v)).collect();
            Frame::from_clamped(spec.width, spec.height, &unit)
        })
        .collect::<Result<Vec<_>>>()?;
    let background = clean
        .iter()
        .map(|b| b.iter().map(|v| map.to_unit(*v)).collect())
        .collect();
    Ok(SyntheticSequence {
        spec: *spec,
        frames,
        masks,
        background,
        map,
    })
}

/// Camera panning across a static world with one object moving in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanningSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Horizontal camera motion per frame in pixels, rightwards.
    pub pan: usize,
    pub object_width: usize,
    pub object_height: usize,
    /// Standard deviation of additive noise in `[0, 1]` units.
    pub noise: f64,
    pub seed: u64,
}

impl Default for PanningSpec {
    fn default() -> Self {
        Self {
            width: 100,
            height: 30,
            frames: 120,
            pan: 1,
            object_width: 10,
            object_height: 10,
            noise: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PanningSequence {
    pub spec: PanningSpec,
    pub frames: Vec<Frame>,
    pub masks: Vec<ForegroundMask>,
    /// `transforms[k]` maps frame `k − 1` coordinates to frame `k`;
    /// `transforms[0]` is the identity.
    pub transforms: Vec<AffineTransform>,
    /// Pixels visible in both frame `k − 1` and frame `k`.
    pub in_view: Vec<bool>,
}

/// A smooth static world (sum of random sinusoids, intensities in
/// `[0.15, 0.85]`) under a slowly varying global gain, so the aligned
/// background is rank one. The object bounces inside the image with
/// intensities uniform over `[0, 1]`.
pub fn generate_panning(spec: &PanningSpec) -> Result<PanningSequence> {
    let (w, h, n) = (spec.width, spec.height, spec.frames);
    if w == 0 || h == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty panning sequence".into()));
    }
    if spec.pan >= w || spec.object_width > w || spec.object_height > h || spec.object_width == 0 || spec.object_height == 0 {
        return Err(Error::InvalidParameter("object or pan does not fit the image".into()));
    }
    if !(spec.noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise = {}", spec.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let world_w = w + spec.pan * (n - 1);
    let waves: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.random_range(0.05..0.4),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let mut world = vec![0.0; world_w * h];
    for y in 0..h {
        for x in 0..world_w {
            world[y * world_w + x] = waves
                .iter()
                .map(|(fx, fy, phase, amp)| amp * (fx * x as f64 + fy * y as f64 + phase).sin())
                .sum();
        }
    }
    let lo = world.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = world.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in world.iter_mut() {
        *v = 0.15 + 0.7 * (*v - lo) / (hi - lo).max(f64::MIN_POSITIVE);
    }

    let span = w - spec.object_width;
    let oy = (h - spec.object_height) / 2;
    let mut frames = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    for k in 0..n {
        let gain = 1.0 + 0.05 * (std::f64::consts::TAU * k as f64 / 50.0).sin();
        let mask = rectangle(w, h, bounce(k, span), oy, spec.object_width, spec.object_height);
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let mut v = if mask.is_foreground(i) {
                    rng.random_range(0.0..=1.0)
                } else {
                    gain * world[y * world_w + x + k * spec.pan]
                };
                if spec.noise > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v += spec.noise * z;
                }
                pixels.push(v);
            }
        }
        frames.push(Frame::from_clamped(w, h, &pixels)?);
        masks.push(mask);
    }
    let step = AffineTransform::translation(-(spec.pan as f64), 0.0);
    let mut transforms = vec![step; n];
    transforms[0] = AffineTransform::identity();
    let in_view = (0..w * h).map(|i| i % w + spec.pan < w).collect();
    Ok(PanningSequence {
        spec: *spec,
        frames,
        masks,
        transforms,
        in_view,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounce_reverses_at_borders() {
        let spec = SyntheticSpec::default();
        let xs: Vec<usize> = (0..200).map(|k| spec.object_x(k)).collect();
        assert_eq!(&xs[..3], &[0, 1, 2]);
        assert_eq!(xs[90], 90);
        assert_eq!(xs[91], 89);
        assert_eq!(xs[180], 0);
        assert_eq!(xs[181], 1);
        assert!(xs.windows(2).all(|p| p[0].abs_diff(p[1]) == 1));
    }

    #[test]
    fn masks_have_object_area() {
        let seq = generate(&SyntheticSpec {
            frames: 20,
            ..Default::default()
        })
        .unwrap();
        assert!(seq.masks.iter().all(|m| m.count_foreground() == 100));
        assert_eq!(seq.spec.object_y(), 10);
    }

    #[test]
    fn invalid_specs() {
        let bad = |s: SyntheticSpec| generate(&s).is_err();
        assert!(bad(SyntheticSpec { snr: 0.0, ..Default::default() }));
        assert!(bad(SyntheticSpec { object_width: 101, ..Default::default() }));
        assert!(bad(SyntheticSpec { frames: 0, ..Default::default() }));
    }

    #[test]
    fn panning_is_consistent_with_its_transforms() {
        let seq = generate_panning(&PanningSpec {
            noise: 0.0,
            frames: 5,
            ..Default::default()
        })
        .unwrap();
        let (w, h) = (seq.spec.width, seq.spec.height);
        // a background pixel of frame 1 appears one column left in frame 2,
        // up to the global gain ratio
        let (x, y) = (50, 2);
        let g = |k: usize| 1.0 + 0.05 * (std::f64::consts::TAU * k as f64 / 50.0).sin();
        let a = seq.frames[1].get(x, y) / g(1);
        let b = seq.frames[2].get(x - 1, y) / g(2);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(seq.in_view.iter().filter(|v| !**v).count(), h);
        assert!(!seq.in_view[w - 1]);
    }
}
