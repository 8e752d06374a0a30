//! Residuals, per-pixel residual mixtures, and the outlier blend.
//!
//! Dynamic background (waving trees, water) leaves a residual that is large
//! but repetitive. Each pixel keeps a small adaptive Gaussian mixture over its
//! residual history; an observation explained by a background component gives
//! zero outlier evidence, anything else gives evidence `|e|`.

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg;

pub const DEFAULT_ALPHA: f64 = 0.1;

/// Signed residual `E = X − L`, computed against the unclamped background.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual(Vec<f64>);

impl Residual {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn compute_residual(x: &Frame, background: &[f64]) -> Result<Residual> {
    Error::check_len(x.len(), background.len())?;
    Ok(Residual(
        x.pixels().iter().zip(background).map(|(a, b)| a - b).collect(),
    ))
}

/// Mixture constants. Defaults: three components, rate 0.01, 2.5σ matching,
/// background weight 0.7.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmParams {
    pub components: usize,
    pub learning_rate: f64,
    pub match_sigmas: f64,
    pub background_weight: f64,
    pub initial_variance: f64,
    pub variance_floor: f64,
    pub replacement_weight: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            components: 3,
            learning_rate: 0.01,
            match_sigmas: 2.5,
            background_weight: 0.7,
            initial_variance: 0.0225,
            variance_floor: 1e-4,
            replacement_weight: 0.05,
        }
    }
}

impl GmmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.components >= 1
            && (0.0..=1.0).contains(&self.learning_rate)
            && self.match_sigmas > 0.0
            && (0.0..=1.0).contains(&self.background_weight)
            && self.variance_floor > 0.0
            && self.initial_variance >= self.variance_floor
            && (0.0..=1.0).contains(&self.replacement_weight);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("mixture parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// One mixture per pixel, stored as `pixels x components`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmState {
    params: GmmParams,
    components: Vec<Component>,
}

impl GmmState {
    pub fn new(pixels: usize, params: GmmParams) -> Result<Self> {
        params.validate()?;
        let mut state = Self {
            params,
            components: vec![
                Component {
                    weight: 0.0,
                    mean: 0.0,
                    variance: params.initial_variance,
                };
                pixels * params.components
            ],
        };
        for i in 0..pixels {
            state.reset_pixel(i);
        }
        Ok(state)
    }

    pub fn params(&self) -> &GmmParams {
        &self.params
    }

    pub fn pixels(&self) -> usize {
        self.components.len() / self.params.components
    }

    pub fn pixel(&self, i: usize) -> &[Component] {
        let k = self.params.components;
        &self.components[i * k..(i + 1) * k]
    }

    pub(crate) fn pixel_mut(&mut self, i: usize) -> &mut [Component] {
        let k = self.params.components;
        &mut self.components[i * k..(i + 1) * k]
    }

    /// Single unit-weight component centred at zero.
    pub fn reset_pixel(&mut self, i: usize) {
        let init = self.params.initial_variance;
        for (k, c) in self.pixel_mut(i).iter_mut().enumerate() {
            *c = Component {
                weight: if k == 0 { 1.0 } else { 0.0 },
                mean: 0.0,
                variance: init,
            };
        }
    }

    /// Copies pixel `src` of `other` into pixel `dst` of `self`.
    pub(crate) fn copy_pixel_from(&mut self, dst: usize, other: &GmmState, src: usize) {
        let from = other.pixel(src).to_vec();
        self.pixel_mut(dst).copy_from_slice(&from);
    }

    /// Feeds one residual frame (already normalized) and returns the outlier
    /// evidence `F`: `|e_i|` where the observation matched no background
    /// component, else 0.
    pub fn observe(&mut self, e: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.pixels(), e.len())?;
        let params = self.params;
        let mut order = vec![0usize; params.components];
        let evidence = e
            .iter()
            .enumerate()
            .map(|(i, &obs)| {
                let comps = self.pixel_mut(i);
                observe_pixel(comps, obs, &params, &mut order)
            })
            .collect();
        Ok(evidence)
    }
}

fn observe_pixel(comps: &mut [Component], obs: f64, p: &GmmParams, order: &mut [usize]) -> f64 {
    for (k, slot) in order.iter_mut().enumerate() {
        *slot = k;
    }
    // Rank by w/σ, most reliable first.
    order.sort_by(|&a, &b| {
        let ka = comps[a].weight / comps[a].variance.sqrt();
        let kb = comps[b].weight / comps[b].variance.sqrt();
        kb.total_cmp(&ka).then(a.cmp(&b))
    });
    let mut background_len = order.len();
    let mut cumulative = 0.0;
    for (n, &k) in order.iter().enumerate() {
        cumulative += comps[k].weight;
        if cumulative > p.background_weight {
            background_len = n + 1;
            break;
        }
    }
    let matched = order
        .iter()
        .position(|&k| (obs - comps[k].mean).abs() <= p.match_sigmas * comps[k].variance.sqrt());

    let rho = p.learning_rate;
    match matched {
        Some(rank) => {
            let hit = order[rank];
            for (k, c) in comps.iter_mut().enumerate() {
                c.weight *= 1.0 - rho;
                if k == hit {
                    c.weight += rho;
                    c.mean += rho * (obs - c.mean);
                    let d = obs - c.mean;
                    c.variance = (c.variance + rho * (d * d - c.variance)).max(p.variance_floor);
                }
            }
        }
        None => {
            let weakest = comps
                .iter()
                .enumerate()
                .fold(0, |best, (k, c)| if c.weight <= comps[best].weight { k } else { best });
            comps[weakest] = Component {
                weight: p.replacement_weight,
                mean: obs,
                variance: p.initial_variance.max(p.variance_floor),
            };
        }
    }
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in comps.iter_mut() {
        c.weight /= total;
    }

    match matched {
        Some(rank) if rank < background_len => 0.0,
        _ => obs.abs(),
    }
}

/// Running scale used to normalize residuals before the mixture sees them:
/// an exponential average of the per-frame 99th percentile of `|E|`, floored.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualScale {
    value: Option<f64>,
    rate: f64,
    floor: f64,
}

impl Default for ResidualScale {
    fn default() -> Self {
        Self {
            value: None,
            rate: 0.05,
            floor: 0.1,
        }
    }
}

impl ResidualScale {
    /// Current divisor, before any frame has been seen this is the floor.
    pub fn current(&self) -> f64 {
        self.value.unwrap_or(self.floor).max(self.floor)
    }

    /// Scale to use for `e`, together with the state after absorbing it.
    pub fn advanced(&self, e: &[f64]) -> (f64, ResidualScale) {
        let abs: Vec<f64> = e.iter().map(|v| v.abs()).collect();
        let p99 = linalg::percentile(&abs, 99.0);
        let value = match self.value {
            None => p99,
            Some(prev) => prev + self.rate * (p99 - prev),
        };
        let next = ResidualScale {
            value: Some(value),
            ..*self
        };
        (next.current(), next)
    }
}

/// Mixture evidence for an unnormalized residual: `e` is divided by `scale`
/// before observation and the evidence is mapped back to residual units.
pub fn scaled_evidence(gmm: &mut GmmState, e: &Residual, scale: f64) -> Result<Vec<f64>> {
    let normalized: Vec<f64> = e.values().iter().map(|v| v / scale).collect();
    let mut f = gmm.observe(&normalized)?;
    for v in &mut f {
        *v *= scale;
    }
    Ok(f)
}

/// Blended magnitude `Ê_i = |α e_i + (1 − α) f_i|`.
pub fn blend(e: &Residual, f: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    Error::check_len(e.len(), f.len())?;
    Ok(e.values()
        .iter()
        .zip(f)
        .map(|(e, f)| (alpha * e + (1.0 - alpha) * f).abs())
        .collect())
}
