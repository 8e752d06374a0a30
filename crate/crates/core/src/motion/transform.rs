use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

const MIN_DET: f64 = 1e-6;

/// 2D affine map `p' = L p + t`, taking previous-frame pixel coordinates
/// `(x, y)` to current-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    a11: f64,
    a12: f64,
    tx: f64,
    a21: f64,
    a22: f64,
    ty: f64,
}

impl AffineTransform {
    pub fn new(a11: f64, a12: f64, tx: f64, a21: f64, a22: f64, ty: f64) -> Result<Self> {
        let t = Self {
            a11,
            a12,
            tx,
            a21,
            a22,
            ty,
        };
        if !t.to_row().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite affine entry".into()));
        }
        if t.det().abs() <= MIN_DET {
            return Err(Error::InvalidParameter(format!(
                "singular affine transform (det = {:e})",
                t.det()
            )));
        }
        Ok(t)
    }

    pub const fn identity() -> Self {
        Self {
            a11: 1.0,
            a12: 0.0,
            tx: 0.0,
            a21: 0.0,
            a22: 1.0,
            ty: 0.0,
        }
    }

    pub const fn translation(tx: f64, ty: f64) -> Self {
        Self {
            tx,
            ty,
            ..Self::identity()
        }
    }

    /// Rotation by `angle` radians about `(cx, cy)`.
    pub fn rotation_about(angle: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            a11: c,
            a12: -s,
            tx: cx - c * cx + s * cy,
            a21: s,
            a22: c,
            ty: cy - s * cx - c * cy,
        }
    }

    pub fn from_row(row: [f64; 6]) -> Result<Self> {
        Self::new(row[0], row[1], row[2], row[3], row[4], row[5])
    }

    /// `[a11, a12, tx, a21, a22, ty]`.
    pub fn to_row(&self) -> [f64; 6] {
        [self.a11, self.a12, self.tx, self.a21, self.a22, self.ty]
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a11 * x + self.a12 * y + self.tx,
            self.a21 * x + self.a22 * y + self.ty,
        )
    }

    pub fn inverse(&self) -> Self {
        if self.is_identity() {
            return *self;
        }
        let d = self.det();
        let i11 = self.a22 / d;
        let i12 = -self.a12 / d;
        let i21 = -self.a21 / d;
        let i22 = self.a11 / d;
        Self {
            a11: i11,
            a12: i12,
            tx: -(i11 * self.tx + i12 * self.ty),
            a21: i21,
            a22: i22,
            ty: -(i21 * self.tx + i22 * self.ty),
        }
    }

    /// `next ∘ self`: apply `self` first, then `next`.
    pub fn then(&self, next: &AffineTransform) -> Self {
        Self {
            a11: next.a11 * self.a11 + next.a12 * self.a21,
            a12: next.a11 * self.a12 + next.a12 * self.a22,
            tx: next.a11 * self.tx + next.a12 * self.ty + next.tx,
            a21: next.a21 * self.a11 + next.a22 * self.a21,
            a22: next.a21 * self.a12 + next.a22 * self.a22,
            ty: next.a21 * self.tx + next.a22 * self.ty + next.ty,
        }
    }

    /// Rotation angle of the linear part, radians.
    pub fn rotation_angle(&self) -> f64 {
        self.a21.atan2(self.a11)
    }
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for AffineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.to_row();
        write!(f, "{} {} {} {} {} {}", r[0], r[1], r[2], r[3], r[4], r[5])
    }
}

/// Sidecar format: one transform per frame, six whitespace-separated numbers
/// `a11 a12 tx a21 a22 ty`. Blank lines and `#` comments are skipped. Line
/// `k` maps frame `k − 1` to frame `k`; the first line is not used by the
/// tracker and is conventionally the identity.
pub fn parse_transforms(text: &str) -> Result<Vec<AffineTransform>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("transform line {}: {e}", lineno + 1)))?;
        let row: [f64; 6] = nums.try_into().map_err(|v: Vec<f64>| {
            Error::Format(format!(
                "transform line {}: expected 6 numbers, found {}",
                lineno + 1,
                v.len()
            ))
        })?;
        out.push(AffineTransform::from_row(row)?);
    }
    Ok(out)
}

pub fn read_transforms(path: &Path) -> Result<Vec<AffineTransform>> {
    parse_transforms(&std::fs::read_to_string(path)?)
}

pub fn write_transforms(path: &Path, transforms: &[AffineTransform]) -> Result<()> {
    let mut text = String::new();
    for t in transforms {
        text.push_str(&t.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
