//! Binary first-order MRF over the pixel grid, minimized exactly by s-t min-cut.
//!
//! Energy of a labelling `s` (1 = foreground):
//! `Σ_i [s_i = 0]·bg_i + [s_i = 1]·fg_i + γ·Σ_{(i,k) neighbours} |s_i − s_k|`.
//! With `bg_i = ½Ê_i²` and `fg_i = β2` a pixel pays its residual when it is
//! explained as background and a flat sparsity price when it is foreground.

use crate::error::{Error, Result};
use crate::frame::ForegroundMask;
use crate::linalg;
use crate::maxflow::{Graph, Side};

/// Integer capacity resolution of the cut.
pub const CAPACITY_RESOLUTION: f64 = 1e-6;
const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Self::Four),
            8 => Ok(Self::Eight),
            _ => Err(Error::InvalidParameter(format!("connectivity {n}, expected 4 or 8"))),
        }
    }

    /// Neighbour pairs `(i, k)` with `i < k`, each listed once.
    pub fn edges(self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(width * height * if self == Self::Four { 2 } else { 4 });
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                if x + 1 < width {
                    out.push((i, i + 1));
                }
                if y + 1 < height {
                    out.push((i, i + width));
                    if self == Self::Eight {
                        if x + 1 < width {
                            out.push((i, i + width + 1));
                        }
                        if x > 0 {
                            out.push((i, i + width - 1));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrfProblem {
    pub unary_bg: Vec<f64>,
    pub unary_fg: Vec<f64>,
    pub gamma: f64,
    pub width: usize,
    pub height: usize,
    pub connectivity: Connectivity,
}

impl MrfProblem {
    /// Problem for a blended residual: `bg_i = ½Ê_i²`, `fg_i = β2`.
    pub fn from_blended(
        blended: &[f64],
        beta2: f64,
        gamma: f64,
        width: usize,
        height: usize,
        connectivity: Connectivity,
    ) -> Result<Self> {
        let p = Self {
            unary_bg: blended.iter().map(|e| 0.5 * e * e).collect(),
            unary_fg: vec![beta2; blended.len()],
            gamma,
            width,
            height,
            connectivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.len();
        Error::check_len(m, self.unary_bg.len())?;
        Error::check_len(m, self.unary_fg.len())?;
        let bad = |v: &f64| !v.is_finite() || *v < 0.0;
        if self.unary_bg.iter().any(bad) || self.unary_fg.iter().any(bad) {
            return Err(Error::InvalidParameter("unary costs must be finite and non-negative".into()));
        }
        if bad(&self.gamma) {
            return Err(Error::InvalidParameter(format!("gamma = {}", self.gamma)));
        }
        Ok(())
    }
}

fn quantize(c: f64) -> i64 {
    (c / CAPACITY_RESOLUTION).round() as i64
}

/// Result of [`segment_with_flow`]: the mask plus the cut bookkeeping.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub mask: ForegroundMask,
    /// Max-flow value in capacity units.
    pub flow: i64,
    /// Constant removed from the unaries during graph construction, in
    /// capacity units.
    pub offset: i64,
}

impl Segmentation {
    /// Quantized energy of the returned labelling, `(flow + offset) * resolution`.
    pub fn cut_energy(&self) -> f64 {
        (self.flow + self.offset) as f64 * CAPACITY_RESOLUTION
    }
}

/// Global minimizer of the MRF energy. Among tied minimizers the one with the
/// fewest foreground pixels (the elementwise-smallest) is returned.
pub fn segment(p: &MrfProblem) -> Result<ForegroundMask> {
    Ok(segment_with_flow(p)?.mask)
}

pub fn segment_with_flow(p: &MrfProblem) -> Result<Segmentation> {
    p.validate()?;
    let m = p.len();
    let edges = p.connectivity.edges(p.width, p.height);
    let mut g = Graph::with_capacity(m, edges.len());
    let mut offset = 0i64;
    // source side = foreground; cutting source->i pays bg, i->sink pays fg
    for i in 0..m {
        let bg = quantize(p.unary_bg[i]);
        let fg = quantize(p.unary_fg[i]);
        let common = bg.min(fg);
        offset += common;
        g.add_terminal(i, bg - common, fg - common);
    }
    let gq = quantize(p.gamma);
    if gq > 0 {
        for &(i, k) in &edges {
            g.add_edge(i, k, gq, gq);
        }
    }
    let flow = g.maxflow();
    let side = g.min_cut_source_side();
    let mask = ForegroundMask::from_bits(side.iter().map(|s| *s == Side::Source).collect());
    Ok(Segmentation { mask, flow, offset })
}

/// Exact energy of a labelling.
pub fn energy(s: &ForegroundMask, p: &MrfProblem) -> Result<f64> {
    Error::check_len(p.len(), s.len())?;
    let bits = s.bits();
    let mut total = 0.0;
    for (i, fg) in bits.iter().enumerate() {
        total += if *fg { p.unary_fg[i] } else { p.unary_bg[i] };
    }
    if p.gamma > 0.0 {
        let cut = p
            .connectivity
            .edges(p.width, p.height)
            .iter()
            .filter(|(i, k)| bits[*i] != bits[*k])
            .count();
        total += p.gamma * cut as f64;
    }
    Ok(total)
}

/// Exhaustive minimizer for tiny grids (test oracle). Energies within `1e-9`
/// are treated as ties and the lexicographically smallest labelling wins.
pub fn brute_force_segment(p: &MrfProblem) -> Result<ForegroundMask> {
    p.validate()?;
    let m = p.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(m));
    }
    let to_mask = |code: u32| ForegroundMask::from_bits((0..m).map(|i| code >> (m - 1 - i) & 1 == 1).collect());
    let mut best = (f64::INFINITY, 0u32);
    // ascending code order = lexicographic order with pixel 0 most significant
    for code in 0..(1u32 << m) {
        let e = energy(&to_mask(code), p)?;
        if e < best.0 - 1e-9 {
            best = (e, code);
        }
    }
    Ok(to_mask(best.1))
}

/// Decoupled rule (γ = 0): foreground iff `bg_i > fg_i`.
pub fn threshold_mask(p: &MrfProblem) -> ForegroundMask {
    ForegroundMask::from_bits(p.unary_bg.iter().zip(&p.unary_fg).map(|(b, f)| b > f).collect())
}

/// Adaptive sparsity weight `β2 = 4.5σ̂²` with `σ̂ = 1.4826·MAD(values)`, so the
/// decoupled rule flags values beyond `3σ̂` from the bulk.
pub fn adaptive_beta2(values: &[f64]) -> f64 {
    let sigma = linalg::robust_sigma(values);
    4.5 * sigma * sigma
}
