use nalgebra::DMatrix;

use super::transform::AffineTransform;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pipeline::{FrameOutput, ModelState};

const EDGE_EPS: f64 = 1e-9;
const MIN_COEFF_NORM: f64 = 1e-9;

/// Out-of-view bookkeeping of one warp.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpReport {
    /// Per pixel: no source pixel in the previous frame.
    pub missing: Vec<bool>,
    pub missing_fraction: f64,
    /// Missing-pixel count per image column.
    pub column_fill_counts: Vec<usize>,
}

impl WarpReport {
    fn from_missing(missing: Vec<bool>, width: usize) -> Self {
        let total = missing.len();
        let mut column_fill_counts = vec![0; width];
        let mut count = 0;
        for (i, m) in missing.iter().enumerate() {
            if *m {
                column_fill_counts[i % width] += 1;
                count += 1;
            }
        }
        Self {
            missing,
            missing_fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            column_fill_counts,
        }
    }

    pub fn none(width: usize, height: usize) -> Self {
        Self::from_missing(vec![false; width * height], width)
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    /// Pixels with a source in the previous frame.
    pub fn in_view(&self) -> Vec<bool> {
        self.missing.iter().map(|m| !m).collect()
    }
}

fn source_coords(tau_inv: &AffineTransform, x: usize, y: usize, width: usize, height: usize) -> Option<(f64, f64)> {
    let (sx, sy) = tau_inv.apply(x as f64, y as f64);
    let inside = |v: f64, n: usize| v >= -EDGE_EPS && v <= (n - 1) as f64 + EDGE_EPS;
    if inside(sx, width) && inside(sy, height) {
        Some((sx.clamp(0.0, (width - 1) as f64), sy.clamp(0.0, (height - 1) as f64)))
    } else {
        None
    }
}

fn bilinear(values: &[f64], width: usize, height: usize, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor() as usize;
    let y0 = sy.floor() as usize;
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let v = |x: usize, y: usize| values[y * width + x];
    (1.0 - fx) * (1.0 - fy) * v(x0, y0) + fx * (1.0 - fy) * v(x1, y0) + (1.0 - fx) * fy * v(x0, y1) + fx * fy * v(x1, y1)
}

/// Resamples one image-shaped plane into the coordinates of the next frame:
/// `out(p) = values(τ⁻¹ p)`, bilinear. Returns the plane and the
/// missing-pixel flags; missing pixels are set to 0.
pub fn warp_plane(values: &[f64], width: usize, height: usize, tau: &AffineTransform) -> Result<(Vec<f64>, Vec<bool>)> {
    Error::check_len(width * height, values.len())?;
    if tau.is_identity() {
        return Ok((values.to_vec(), vec![false; values.len()]));
    }
    let inv = tau.inverse();
    let mut out = vec![0.0; values.len()];
    let mut missing = vec![false; values.len()];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            match source_coords(&inv, x, y, width, height) {
                Some((sx, sy)) => out[i] = bilinear(values, width, height, sx, sy),
                None => missing[i] = true,
            }
        }
    }
    Ok((out, missing))
}

fn warp_columns(m: &DMatrix<f64>, width: usize, height: usize, tau: &AffineTransform) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let col: Vec<f64> = m.column(j).iter().copied().collect();
        let (warped, _) = warp_plane(&col, width, height, tau)?;
        out.column_mut(j).copy_from_slice(&warped);
    }
    Ok(out)
}

/// Carries the model through the camera motion `tau`. Basis and `B` columns
/// are warped bilinearly; mixtures by nearest neighbour (modes at adjacent
/// pixels are not interpolable). `A` and `v` are unchanged. Pixels without a
/// source are zeroed in `U` and `B`, get a fresh mixture, and are flagged for
/// [`fill_missing`].
pub fn warp_model(state: &ModelState, tau: &AffineTransform) -> Result<(ModelState, WarpReport)> {
    let (w, h) = (state.width(), state.height());
    if tau.is_identity() {
        return Ok((state.clone(), WarpReport::none(w, h)));
    }
    let mut next = state.clone();
    let basis = warp_columns(state.committed.basis.matrix(), w, h, tau)?;
    *next.committed.basis.matrix_mut() = basis;
    let b = warp_columns(state.committed.accumulators.b(), w, h, tau)?;
    *next.committed.accumulators.b_mut() = b;

    let inv = tau.inverse();
    let mut missing = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            match source_coords(&inv, x, y, w, h) {
                Some((sx, sy)) => {
                    let src = (sy.round() as usize).min(h - 1) * w + (sx.round() as usize).min(w - 1);
                    next.gmm.copy_pixel_from(i, &state.gmm, src);
                }
                None => {
                    missing[i] = true;
                    next.gmm.reset_pixel(i);
                }
            }
        }
    }
    Ok((next, WarpReport::from_missing(missing, w)))
}

/// Compresses the filled entries of a column into the range of its
/// surviving entries (affine map, identity when already inside), then clamps.
fn normalize_fill(col: &mut [f64], missing: &[bool]) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut flo, mut fhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (v, m) in col.iter().zip(missing) {
        if *m {
            flo = flo.min(*v);
            fhi = fhi.max(*v);
        } else {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || !flo.is_finite() || (flo >= lo && fhi <= hi) {
        return;
    }
    let tlo = flo.clamp(lo, hi);
    let thi = fhi.clamp(lo, hi);
    for (v, m) in col.iter_mut().zip(missing) {
        if *m {
            let mapped = if fhi > flo {
                tlo + (*v - flo) * (thi - tlo) / (fhi - flo)
            } else {
                tlo
            };
            *v = mapped.clamp(lo, hi);
        }
    }
}

/// Estimates model entries for pixels that entered the view.
///
/// Missing basis rows come from the rank-one least-squares fit of the new
/// frame on the carried coefficients, `x vᵀ (v vᵀ)†`; missing `B` rows are
/// set to `U (A + β1 I)` so the basis pass keeps them. Filled values are kept
/// inside the range of the surviving entries of their column.
pub fn fill_missing(state: &ModelState, x: &Frame, report: &WarpReport) -> Result<ModelState> {
    Error::check_len(state.pixels(), x.len())?;
    Error::check_len(state.pixels(), report.missing.len())?;
    if report.missing_count() == 0 {
        return Ok(state.clone());
    }
    let v = state.coefficients().vector().clone();
    let norm2 = v.norm_squared();
    if norm2.sqrt() < MIN_COEFF_NORM {
        return Err(Error::FillFailed(format!("coefficient norm {:e}", norm2.sqrt())));
    }
    let r = v.len();
    let mut next = state.clone();

    let missing_rows: Vec<usize> = (0..report.missing.len()).filter(|i| report.missing[*i]).collect();
    {
        let u = next.committed.basis.matrix_mut();
        for &i in &missing_rows {
            for k in 0..r {
                u[(i, k)] = x[i] * v[k] / norm2;
            }
        }
        for j in 0..r {
            normalize_fill(u.column_mut(j).as_mut_slice(), &report.missing);
        }
    }

    let beta1 = state.params().beta1;
    let mut a_reg = state.accumulators().a().clone();
    for k in 0..r {
        a_reg[(k, k)] += beta1;
    }
    let u = next.committed.basis.matrix().clone();
    {
        let b = next.committed.accumulators.b_mut();
        for &i in &missing_rows {
            for k in 0..r {
                let mut s = 0.0;
                for l in 0..r {
                    s += u[(i, l)] * a_reg[(l, k)];
                }
                b[(i, k)] = s;
            }
        }
        for j in 0..r {
            normalize_fill(b.column_mut(j).as_mut_slice(), &report.missing);
        }
    }
    for &i in &missing_rows {
        next.gmm.reset_pixel(i);
    }
    if next.committed.basis.matrix().iter().any(|v| !v.is_finite())
        || next.committed.accumulators.b().iter().any(|v| !v.is_finite())
    {
        return Err(Error::FillFailed("non-finite fill".into()));
    }
    Ok(next)
}

/// Moving-camera step: warp the model by `tau`, fill what entered the view
/// from `x`, then run the static per-frame loop.
pub fn track_frame(state: &mut ModelState, x: &Frame, tau: &AffineTransform) -> Result<(FrameOutput, WarpReport)> {
    if x.width() != state.width() || x.height() != state.height() {
        return Err(Error::Dimension {
            expected: state.pixels(),
            found: x.len(),
        });
    }
    let (warped, report) = warp_model(state, tau)?;
    *state = fill_missing(&warped, x, &report)?;
    let out = state.process_frame(x)?;
    Ok((out, report))
}

/// Brings a run of frames into the coordinates of the last one.
/// `transforms[k]` maps frame `k − 1` to frame `k` (`transforms[0]` unused).
/// Pixels with no source take the last frame's own value.
pub fn align_frames(frames: &[Frame], transforms: &[AffineTransform]) -> Result<Vec<Frame>> {
    let Some(last) = frames.last() else {
        return Ok(Vec::new());
    };
    if transforms.len() < frames.len() {
        return Err(Error::Dimension {
            expected: frames.len(),
            found: transforms.len(),
        });
    }
    let (w, h) = (last.width(), last.height());
    let n = frames.len();
    let mut out = vec![last.clone(); n];
    // to_last maps frame k coordinates to last-frame coordinates
    let mut to_last = AffineTransform::identity();
    for k in (0..n - 1).rev() {
        frames[k].same_shape(last)?;
        to_last = transforms[k + 1].then(&to_last);
        let (warped, missing) = warp_plane(frames[k].pixels(), w, h, &to_last)?;
        let pixels: Vec<f64> = warped
            .iter()
            .zip(&missing)
            .zip(last.pixels())
            .map(|((v, m), own)| if *m { *own } else { *v })
            .collect();
        out[k] = Frame::from_clamped(w, h, &pixels)?;
    }
    Ok(out)
}
