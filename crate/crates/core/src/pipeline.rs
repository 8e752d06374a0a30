//! Per-frame alternating loop: low-rank fit, residual mixture, MRF segmentation.
//!
//! Every frame starts from the committed model with all pixels fitting. Each
//! iteration refits the coefficients on the current background pixels, adds
//! one frame's increment to the committed accumulators, takes a basis pass,
//! and re-segments. The iterate of the first iteration is what gets committed
//! and what the emitted background is built from; later iterations only
//! refine the mask.

use crate::error::{Error, Result};
use crate::frame::{ForegroundMask, Frame};
use crate::lowrank::{self, Accumulators, Basis, Coefficients};
use crate::residual::{self, GmmParams, GmmState, ResidualScale};
use crate::segmentation::{self, Connectivity, MrfProblem};

pub const DEFAULT_TOL: f64 = 1e-4;
/// Allowed energy increase between consecutive iterations (relative to
/// `max(1, previous)`) before it is counted as a monotonicity violation.
pub const MONOTONE_TOL: f64 = 1e-9;
const ZERO_ENERGY: f64 = 1e-12;

/// How the sparsity weight β2 is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta2Policy {
    /// `4.5σ̂²` with `σ̂` the robust scale of the first iteration's raw
    /// residual; held fixed for the rest of the frame.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub rank: usize,
    pub beta1: f64,
    pub beta2: Beta2Policy,
    /// Smoothness weight; `None` uses the frame's β2.
    pub gamma: Option<f64>,
    pub alpha: f64,
    pub connectivity: Connectivity,
    /// Iteration cap; `None` uses the rank.
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub init_frames: Option<usize>,
    pub gmm: GmmParams,
    pub seed: u64,
}

impl Params {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            beta1: lowrank::DEFAULT_BETA1,
            beta2: Beta2Policy::Auto,
            gamma: None,
            alpha: residual::DEFAULT_ALPHA,
            connectivity: Connectivity::Four,
            max_iters: None,
            tol: DEFAULT_TOL,
            init_frames: None,
            gmm: GmmParams::default(),
            seed: 0,
        }
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters.unwrap_or(self.rank)
    }

    pub fn init_frames(&self) -> usize {
        self.init_frames.unwrap_or_else(|| lowrank::default_init_frames(self.rank))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.rank == 0 {
            return bad("rank must be at least 1");
        }
        if !(self.beta1 >= 0.0 && self.beta1.is_finite()) {
            return bad("beta1 must be finite and non-negative");
        }
        if let Beta2Policy::Fixed(b) = self.beta2 {
            if !(b >= 0.0 && b.is_finite()) {
                return bad("beta2 must be finite and non-negative");
            }
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return bad("gamma must be finite and non-negative");
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.max_iters() == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        self.gmm.validate()
    }
}

/// Per-iteration energies of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace {
    pub energies: Vec<f64>,
    pub converged: bool,
    /// Set when the segmentation labelled every pixel foreground; the mask
    /// then comes from the decoupled threshold rule and nothing is committed.
    pub no_support: bool,
    /// Iteration steps whose energy rose by more than [`MONOTONE_TOL`].
    pub increases: usize,
    pub beta2: f64,
    pub gamma: f64,
}

impl EnergyTrace {
    pub fn iterations(&self) -> usize {
        self.energies.len()
    }

    pub fn final_energy(&self) -> f64 {
        self.energies.last().copied().unwrap_or(0.0)
    }

    pub fn is_monotone(&self) -> bool {
        self.increases == 0
    }
}

/// The low-rank part of the model that is carried between frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub basis: Basis,
    pub coefficients: Coefficients,
    pub accumulators: Accumulators,
}

#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub mask: ForegroundMask,
    /// `U v` of the committed (first-iteration) iterate, clamped.
    pub background: Frame,
    pub trace: EnergyTrace,
}

/// Everything carried from one frame to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    params: Params,
    width: usize,
    height: usize,
    pub(crate) committed: Snapshot,
    pub(crate) gmm: GmmState,
    pub(crate) scale: ResidualScale,
    frame_index: u64,
}

impl ModelState {
    /// Batch initialization from the leading frames of a stream.
    pub fn initialize(frames: &[Frame], params: Params) -> Result<Self> {
        params.validate()?;
        let first = frames
            .first()
            .ok_or_else(|| Error::Initialization("no frames supplied".into()))?;
        let (basis, accumulators, coefficients) =
            lowrank::initialize_basis(frames, params.rank, params.beta1, params.seed)?;
        let gmm = GmmState::new(first.len(), params.gmm)?;
        Ok(Self {
            width: first.width(),
            height: first.height(),
            committed: Snapshot {
                basis,
                coefficients,
                accumulators,
            },
            gmm,
            scale: ResidualScale::default(),
            frame_index: 0,
            params,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn basis(&self) -> &Basis {
        &self.committed.basis
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.committed.coefficients
    }

    pub fn accumulators(&self) -> &Accumulators {
        &self.committed.accumulators
    }

    pub fn gmm(&self) -> &GmmState {
        &self.gmm
    }

    /// Working copy of the committed low-rank state.
    pub fn snapshot_restore(&self) -> Snapshot {
        self.committed.clone()
    }

    /// Makes `snapshot` the committed low-rank state.
    pub fn snapshot_commit(&mut self, snapshot: Snapshot) -> Result<()> {
        Error::check_len(self.pixels(), snapshot.basis.pixels())?;
        Error::check_len(self.params.rank, snapshot.basis.rank())?;
        Error::check_len(self.params.rank, snapshot.coefficients.len())?;
        Error::check_len(self.pixels(), snapshot.accumulators.pixels())?;
        self.committed = snapshot;
        Ok(())
    }

    /// Bytes of heap storage held by the state. Depends on `m` and `r` only.
    pub fn heap_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        let m = self.pixels();
        let r = self.params.rank;
        let k = self.params.gmm.components;
        (m * r + r + r * r + m * r) * f + m * k * std::mem::size_of::<residual::Component>()
    }

    /// Runs the alternating loop on one frame and commits the result.
    pub fn process_frame(&mut self, x: &Frame) -> Result<FrameOutput> {
        if x.width() != self.width || x.height() != self.height {
            return Err(Error::Dimension {
                expected: self.pixels(),
                found: x.len(),
            });
        }
        let p = &self.params;
        let m = self.pixels();
        let max_iters = p.max_iters();

        let mut mask = ForegroundMask::background(m);
        let mut basis = self.committed.basis.clone();
        let mut first: Option<Snapshot> = None;
        let mut trace = EnergyTrace::default();
        let mut beta2: Option<f64> = None;
        let mut carried_gmm = None;
        let mut carried_scale = None;

        for t in 1..=max_iters {
            let v = lowrank::solve_coefficients(&basis, x.pixels(), &mask, p.beta1)?;
            let mut acc = self.committed.accumulators.clone();
            lowrank::update_accumulators(&mut acc, &v, x.pixels(), &mask, t == 1)?;
            basis = lowrank::update_basis(&basis, &acc, &mask, p.beta1)?;

            let raw = basis.reconstruct(&v)?;
            let e = residual::compute_residual(x, &raw)?;
            let (scale, next_scale) = self.scale.advanced(e.values());
            let mut gmm = self.gmm.clone();
            let f = residual::scaled_evidence(&mut gmm, &e, scale)?;
            let blended = residual::blend(&e, &f, p.alpha)?;

            let b2 = *beta2.get_or_insert_with(|| match p.beta2 {
                Beta2Policy::Fixed(b) => b,
                Beta2Policy::Auto => segmentation::adaptive_beta2(e.values()),
            });
            let gamma = p.gamma.unwrap_or(b2);
            trace.beta2 = b2;
            trace.gamma = gamma;
            let problem = MrfProblem::from_blended(&blended, b2, gamma, self.width, self.height, p.connectivity)?;
            let new_mask = segmentation::segment(&problem)?;

            if t == 1 {
                first = Some(Snapshot {
                    basis: basis.clone(),
                    coefficients: v.clone(),
                    accumulators: acc,
                });
            }

            if new_mask.count_background() == 0 {
                // Nothing left to fit: fall back to the decoupled rule and keep
                // the previous commit.
                log::warn!("frame {}: every pixel labelled foreground", self.frame_index);
                trace.no_support = true;
                let background = lowrank::reconstruct_background(&basis, &v, self.width, self.height)?;
                self.frame_index += 1;
                return Ok(FrameOutput {
                    mask: segmentation::threshold_mask(&problem),
                    background,
                    trace,
                });
            }

            let energy = frame_energy(&problem, &new_mask, &v, p.beta1)?;
            if let Some(&prev) = trace.energies.last() {
                if energy - prev > MONOTONE_TOL * prev.max(1.0) {
                    trace.increases += 1;
                    log::debug!(
                        "frame {} iteration {t}: energy rose {prev:.6e} -> {energy:.6e}",
                        self.frame_index
                    );
                }
            }
            let converged = if energy < ZERO_ENERGY {
                true
            } else if let Some(&prev) = trace.energies.last() {
                (prev - energy) / energy < p.tol
            } else {
                false
            };
            trace.energies.push(energy);
            mask = new_mask;
            carried_gmm = Some(gmm);
            carried_scale = Some(next_scale);
            if converged {
                trace.converged = true;
                break;
            }
        }

        let first = first.expect("at least one iteration runs");
        let background =
            lowrank::reconstruct_background(&first.basis, &first.coefficients, self.width, self.height)?;
        self.committed = first;
        if let Some(g) = carried_gmm {
            self.gmm = g;
        }
        if let Some(s) = carried_scale {
            self.scale = s;
        }
        self.frame_index += 1;
        Ok(FrameOutput {
            mask,
            background,
            trace,
        })
    }
}

/// Objective tracked across iterations: the segmentation energy of `mask`
/// (`½Ê²` on background pixels, `β2` per foreground pixel, `γ` per cut
/// neighbour pair) plus the coefficient ridge `β1‖v‖²`.
pub fn frame_energy(problem: &MrfProblem, mask: &ForegroundMask, v: &Coefficients, beta1: f64) -> Result<f64> {
    Ok(segmentation::energy(mask, problem)? + beta1 * v.vector().norm_squared())
}
