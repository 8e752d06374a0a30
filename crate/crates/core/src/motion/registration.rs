//! Affine registration of two grayscale frames by inverse-compositional
//! Gauss-Newton on the intensity difference, coarse to fine. A global gain
//! and offset are fitted alongside the geometry, and steps are
//! Tukey-reweighted so that independently moving objects do not drag the fit.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::transform::AffineTransform;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationConfig {
    pub levels: usize,
    pub max_iterations: usize,
    /// Consecutive non-improving steps before a level stops.
    pub divergence_patience: usize,
    /// Minimum SSD improvement over the identity for a non-identity result.
    pub min_improvement: f64,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            max_iterations: 50,
            divergence_patience: 5,
            min_improvement: 1e-6,
        }
    }
}

#[derive(Clone)]
struct Image {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Image {
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    fn sample(&self, x: f64, y: f64) -> Option<f64> {
        if x < 0.0 || y < 0.0 || x > (self.w - 1) as f64 || y > (self.h - 1) as f64 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        Some(
            (1.0 - fx) * (1.0 - fy) * self.at(x0, y0)
                + fx * (1.0 - fy) * self.at(x1, y0)
                + (1.0 - fx) * fy * self.at(x0, y1)
                + fx * fy * self.at(x1, y1),
        )
    }

    fn half(&self) -> Option<Image> {
        let (w, h) = (self.w / 2, self.h / 2);
        if w < 8 || h < 8 {
            return None;
        }
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(
                    0.25 * (self.at(2 * x, 2 * y)
                        + self.at(2 * x + 1, 2 * y)
                        + self.at(2 * x, 2 * y + 1)
                        + self.at(2 * x + 1, 2 * y + 1)),
                );
            }
        }
        Some(Image { w, h, data })
    }

    fn gradients(&self) -> (Vec<f64>, Vec<f64>) {
        let (w, h) = (self.w, self.h);
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
                gx[y * w + x] = (self.at(xr, y) - self.at(xl, y)) / (xr - xl).max(1) as f64;
                gy[y * w + x] = (self.at(x, yd) - self.at(x, yu)) / (yd - yu).max(1) as f64;
            }
        }
        (gx, gy)
    }

    fn center(&self) -> (f64, f64) {
        ((self.w - 1) as f64 / 2.0, (self.h - 1) as f64 / 2.0)
    }
}

/// Geometric warp in centred coordinates plus a photometric gain and bias,
/// so that `cur(W x) ≈ (1 + gain)·prev(x) + bias`.
#[derive(Clone, Copy)]
struct Warp {
    m: Matrix3<f64>,
    gain: f64,
    bias: f64,
}

impl Warp {
    fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
            gain: 0.0,
            bias: 0.0,
        }
    }
}

/// `cur(W x) − ((1 + gain)·prev(x) + bias)` with the pixel index, over
/// pixels whose warp stays inside `cur`.
fn residuals(prev: &Image, cur: &Image, w: &Warp) -> Vec<(usize, f64)> {
    let (cx, cy) = prev.center();
    let m = &w.m;
    let mut out = Vec::with_capacity(prev.w * prev.h);
    for y in 0..prev.h {
        for x in 0..prev.w {
            let (px, py) = (x as f64 - cx, y as f64 - cy);
            let wx = m[(0, 0)] * px + m[(0, 1)] * py + m[(0, 2)] + cx;
            let wy = m[(1, 0)] * px + m[(1, 1)] * py + m[(1, 2)] + cy;
            if let Some(v) = cur.sample(wx, wy) {
                out.push((y * prev.w + x, v - (1.0 + w.gain) * prev.at(x, y) - w.bias));
            }
        }
    }
    out
}

/// Median squared residual: insensitive to independently moving objects
/// covering less than half the overlap.
fn score(prev: &Image, cur: &Image, w: &Warp) -> f64 {
    let sq: Vec<f64> = residuals(prev, cur, w).iter().map(|(_, r)| r * r).collect();
    if sq.is_empty() {
        f64::INFINITY
    } else {
        linalg::median(&sq)
    }
}

/// Tukey biweight tuning constant in units of the robust residual scale.
const TUKEY_C: f64 = 4.685;

/// Inverse-compositional steps on the geometry, additive steps on gain and
/// bias; each step is Tukey-reweighted around the current residual scale.
fn refine_level(prev: &Image, cur: &Image, mut w: Warp, cfg: &RegistrationConfig) -> Result<Warp> {
    let (gx, gy) = prev.gradients();
    let (cx, cy) = prev.center();
    let mut best = (score(prev, cur, &w), w);
    let mut rising = 0;
    for _ in 0..cfg.max_iterations {
        let res = residuals(prev, cur, &w);
        if res.len() < 12 {
            return Err(Error::EstimationFailed("warp left the image".into()));
        }
        let abs: Vec<f64> = res.iter().map(|(_, r)| r.abs()).collect();
        let cutoff = (TUKEY_C * 1.4826 * linalg::median(&abs)).max(1e-12);
        let mut hess = SMatrix::<f64, 8, 8>::zeros();
        let mut rhs = SVector::<f64, 8>::zeros();
        let g = 1.0 + w.gain;
        for &(i, err) in &res {
            let u = err / cutoff;
            if u.abs() >= 1.0 {
                continue;
            }
            let weight = (1.0 - u * u).powi(2);
            let (px, py) = ((i % prev.w) as f64 - cx, (i / prev.w) as f64 - cy);
            let (tx, ty) = (g * gx[i], g * gy[i]);
            let sd = SVector::<f64, 8>::from([tx * px, tx * py, tx, ty * px, ty * py, ty, prev.data[i], 1.0]);
            hess += weight * sd * sd.transpose();
            rhs += weight * sd * err;
        }
        let Some(delta) = hess.cholesky().map(|c| c.solve(&rhs)) else {
            return Err(Error::EstimationFailed("singular Gauss-Newton system (flat image?)".into()));
        };
        let step = Matrix3::new(
            1.0 + delta[0],
            delta[1],
            delta[2],
            delta[3],
            1.0 + delta[4],
            delta[5],
            0.0,
            0.0,
            1.0,
        );
        let Some(step_inv) = step.try_inverse() else {
            return Err(Error::EstimationFailed("singular update".into()));
        };
        w.m *= step_inv;
        w.gain += delta[6];
        w.bias += delta[7];

        let current = score(prev, cur, &w);
        if current < best.0 {
            best = (current, w);
            rising = 0;
        } else {
            // noise makes the score jitter near the optimum; a run of
            // non-improving steps means the level is done
            rising += 1;
            if rising >= cfg.divergence_patience {
                break;
            }
        }

        let lin = delta[0].abs() + delta[1].abs() + delta[3].abs() + delta[4].abs();
        let trans = delta[2].abs() + delta[5].abs();
        if lin < 1e-6 && trans < 1e-4 {
            break;
        }
    }
    Ok(best.1)
}

/// Affine map taking `prev` coordinates to `cur` coordinates, i.e. the
/// minimizer of `Σ [cur(τ p) − a·prev(p) − b]²` with a global gain `a` and
/// offset `b` estimated alongside (and discarded).
pub fn estimate_affine(prev: &Frame, cur: &Frame, cfg: &RegistrationConfig) -> Result<AffineTransform> {
    prev.same_shape(cur)?;
    let mean = prev.pixels().iter().sum::<f64>() / prev.len() as f64;
    if prev.pixels().iter().all(|v| (v - mean).abs() < 1e-12) {
        return Err(Error::EstimationFailed("previous frame has zero variance".into()));
    }
    let to_image = |f: &Frame| Image {
        w: f.width(),
        h: f.height(),
        data: f.pixels().to_vec(),
    };
    let mut prev_pyr = vec![to_image(prev)];
    let mut cur_pyr = vec![to_image(cur)];
    while prev_pyr.len() < cfg.levels.max(1) {
        match (prev_pyr.last().unwrap().half(), cur_pyr.last().unwrap().half()) {
            (Some(p), Some(c)) => {
                prev_pyr.push(p);
                cur_pyr.push(c);
            }
            _ => break,
        }
    }

    // centred coordinates: the linear part is scale-free, translation halves
    let mut w = Warp::identity();
    for level in (0..prev_pyr.len()).rev() {
        w = refine_level(&prev_pyr[level], &cur_pyr[level], w, cfg)?;
        if level > 0 {
            w.m[(0, 2)] *= 2.0;
            w.m[(1, 2)] *= 2.0;
        }
    }

    let (full_prev, full_cur) = (&prev_pyr[0], &cur_pyr[0]);
    if score(full_prev, full_cur, &Warp::identity()) - score(full_prev, full_cur, &w) < cfg.min_improvement {
        return Ok(AffineTransform::identity());
    }

    // back to pixel coordinates: p' = L (p − c) + t + c
    let (cx, cy) = full_prev.center();
    let m = w.m;
    AffineTransform::new(
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)] + cx - (m[(0, 0)] * cx + m[(0, 1)] * cy),
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)] + cy - (m[(1, 0)] * cx + m[(1, 1)] * cy),
    )
    .map_err(|e| Error::EstimationFailed(e.to_string()))
}
