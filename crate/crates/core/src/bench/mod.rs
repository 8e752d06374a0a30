//! Synthetic benchmark: sequence generators, pixel metrics, a per-pixel
//! threshold baseline and parameter sweeps.

mod baseline;
mod metrics;
mod sweep;
mod synth;

pub use baseline::ThresholdBaseline;
pub use metrics::{
    confusion, confusion_in_region, f_measure, mean_defined, precision_recall, ConfusionCounts, FrameScore,
};
pub use sweep::{
    baseline_csv, corola_csv, run_baseline, run_panning, run_sequence, sweep, SequenceScore, SweepAxis,
    SweepConfig, SweepRow, CSV_HEADER,
};
pub use synth::{
    generate, generate_panning, IntensityMap, PanningSequence, PanningSpec, SyntheticSequence, SyntheticSpec,
};

/// Frames skipped before scoring online methods.
pub const DEFAULT_BURN_IN: usize = 25;
