use std::fmt::Write as _;
use std::time::Instant;

use super::baseline::ThresholdBaseline;
use super::metrics::{confusion, confusion_in_region, mean_defined, FrameScore};
use super::synth::{generate, PanningSequence, SyntheticSequence, SyntheticSpec};
use super::DEFAULT_BURN_IN;
use crate::error::{Error, Result};
use crate::frame::ForegroundMask;
use crate::motion::{align_frames, track_frame};
use crate::pipeline::{EnergyTrace, ModelState, Params};

/// Scores of one method on one sequence. Frames before `burn_in` and frames
/// used only for initialization are not scored.
#[derive(Debug, Clone, Default)]
pub struct SequenceScore {
    /// `(frame index, score)` for every scored frame.
    pub frames: Vec<(usize, FrameScore)>,
    /// Pipeline traces of every streamed frame (empty for the baseline).
    pub traces: Vec<(usize, EnergyTrace)>,
    /// Wall time per streamed frame in milliseconds.
    pub frame_ms: Vec<f64>,
}

impl SequenceScore {
    pub fn mean_f(&self) -> Option<f64> {
        mean_defined(self.frames.iter().map(|(_, s)| s.f))
    }

    pub fn mean_precision(&self) -> Option<f64> {
        mean_defined(self.frames.iter().map(|(_, s)| s.precision))
    }

    pub fn mean_recall(&self) -> Option<f64> {
        mean_defined(self.frames.iter().map(|(_, s)| s.recall))
    }

    pub fn mean_iters(&self) -> Option<f64> {
        mean_defined(self.traces.iter().map(|(_, t)| Some(t.iterations() as f64)))
    }

    pub fn ms_per_frame(&self) -> Option<f64> {
        mean_defined(self.frame_ms.iter().map(|v| Some(*v)))
    }
}

fn score(
    masks: impl IntoIterator<Item = (usize, ForegroundMask)>,
    truth: &[ForegroundMask],
    region: Option<&[bool]>,
    burn_in: usize,
) -> Result<Vec<(usize, FrameScore)>> {
    let mut out = Vec::new();
    for (k, mask) in masks {
        if k < burn_in {
            continue;
        }
        let c = match region {
            Some(r) => confusion_in_region(&mask, &truth[k], r)?,
            None => confusion(&mask, &truth[k])?,
        };
        out.push((k, FrameScore::from_counts(c)));
    }
    Ok(out)
}

/// Initializes on the first `params.init_frames()` frames and streams the rest.
pub fn run_sequence(seq: &SyntheticSequence, params: &Params, burn_in: usize) -> Result<SequenceScore> {
    let n0 = params.init_frames();
    if seq.frames.len() <= n0 {
        return Err(Error::InvalidParameter(format!(
            "{} frames leave nothing to stream after {n0} initialization frames",
            seq.frames.len()
        )));
    }
    let mut state = ModelState::initialize(&seq.frames[..n0], params.clone())?;
    let mut masks = Vec::new();
    let mut result = SequenceScore::default();
    for (k, x) in seq.frames.iter().enumerate().skip(n0) {
        let start = Instant::now();
        let out = state.process_frame(x)?;
        result.frame_ms.push(start.elapsed().as_secs_f64() * 1e3);
        result.traces.push((k, out.trace));
        masks.push((k, out.mask));
    }
    result.frames = score(masks, &seq.masks, None, burn_in)?;
    Ok(result)
}

pub fn run_baseline(seq: &SyntheticSequence, baseline: &ThresholdBaseline, burn_in: usize) -> Result<SequenceScore> {
    let mut b = baseline.clone();
    let mut masks = Vec::with_capacity(seq.frames.len());
    let mut frame_ms = Vec::with_capacity(seq.frames.len());
    for (k, x) in seq.frames.iter().enumerate() {
        let start = Instant::now();
        masks.push((k, b.observe(x)?));
        frame_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(SequenceScore {
        frames: score(masks, &seq.masks, None, burn_in)?,
        traces: Vec::new(),
        frame_ms,
    })
}

/// Moving-camera run with the sequence's own transforms. Initialization
/// frames are first aligned to the last of them; scoring is restricted to
/// the region visible in consecutive frames.
pub fn run_panning(seq: &PanningSequence, params: &Params, burn_in: usize) -> Result<SequenceScore> {
    let n0 = params.init_frames();
    if seq.frames.len() <= n0 {
        return Err(Error::InvalidParameter("panning sequence shorter than initialization".into()));
    }
    let aligned = align_frames(&seq.frames[..n0], &seq.transforms[..n0])?;
    let mut state = ModelState::initialize(&aligned, params.clone())?;
    let mut masks = Vec::new();
    let mut result = SequenceScore::default();
    for k in n0..seq.frames.len() {
        let start = Instant::now();
        let (out, _) = track_frame(&mut state, &seq.frames[k], &seq.transforms[k])?;
        result.frame_ms.push(start.elapsed().as_secs_f64() * 1e3);
        result.traces.push((k, out.trace));
        masks.push((k, out.mask));
    }
    result.frames = score(masks, &seq.masks, Some(&seq.in_view), burn_in)?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    /// Rank assumed by the pipeline; the data keep their own rank.
    Rank,
    /// Side of a square object.
    ObjectSize,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(Self::Snr),
            "rank" => Ok(Self::Rank),
            "object_size" | "object-size" => Ok(Self::ObjectSize),
            _ => Err(Error::InvalidParameter(format!("unknown sweep axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub spec: SyntheticSpec,
    pub params: Params,
    pub baseline: ThresholdBaseline,
    pub burn_in: usize,
}

impl SweepConfig {
    pub fn new(axis: SweepAxis, values: Vec<f64>, spec: SyntheticSpec, params: Params) -> Self {
        Self {
            axis,
            values,
            spec,
            params,
            baseline: ThresholdBaseline::default(),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// Sequence settings and pipeline parameters of sweep point `index`.
    pub fn point(&self, index: usize) -> Result<(SyntheticSpec, Params)> {
        let value = self.values[index];
        let mut spec = self.spec;
        let mut params = self.params.clone();
        spec.seed = self.spec.seed.wrapping_add(index as u64);
        let as_count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("sweep value {v} is not a positive integer")))
            }
        };
        match self.axis {
            SweepAxis::Snr => spec.snr = value,
            SweepAxis::Rank => params.rank = as_count(value)?,
            SweepAxis::ObjectSize => {
                spec.object_width = as_count(value)?;
                spec.object_height = spec.object_width;
            }
        }
        Ok((spec, params))
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub corola: SequenceScore,
    pub baseline: SequenceScore,
}

pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    (0..cfg.values.len())
        .map(|i| {
            let (spec, params) = cfg.point(i)?;
            let seq = generate(&spec)?;
            log::info!("sweep point {:?} = {}", cfg.axis, cfg.values[i]);
            Ok(SweepRow {
                axis_value: cfg.values[i],
                corola: run_sequence(&seq, &params, cfg.burn_in)?,
                baseline: run_baseline(&seq, &cfg.baseline, cfg.burn_in)?,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "axis_value,mean_f,mean_precision,mean_recall,mean_iters,ms_per_frame";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), |v| v.to_string())
}

fn csv(rows: &[SweepRow], pick: impl Fn(&SweepRow) -> &SequenceScore, with_ms: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let s = pick(row);
        let ms = if with_ms { cell(s.ms_per_frame()) } else { "0".into() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.axis_value,
            cell(s.mean_f()),
            cell(s.mean_precision()),
            cell(s.mean_recall()),
            cell(s.mean_iters()),
            ms
        );
    }
    out
}

/// One row per sweep point for the pipeline. With `with_timing` false the
/// `ms_per_frame` column is written as 0 so the file is reproducible.
pub fn corola_csv(rows: &[SweepRow], with_timing: bool) -> String {
    csv(rows, |r| &r.corola, with_timing)
}

/// Same schema for the threshold baseline (`mean_iters` is undefined).
pub fn baseline_csv(rows: &[SweepRow], with_timing: bool) -> String {
    csv(rows, |r| &r.baseline, with_timing)
}
