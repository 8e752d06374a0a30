use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use corola::bench::{confusion, confusion_in_region, mean_defined, FrameScore};
use corola::pgm;

use crate::failure::{CliResult, ExitCodeExt, Failure, EXIT_DIMENSION, EXIT_INPUT};
use crate::input::list_frames;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of predicted masks.
    pub pred: PathBuf,
    /// Directory of ground-truth masks; files are matched by name.
    pub gt: PathBuf,
    /// Skip the first N ground-truth frames (in name order).
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Mask of the pixels to score (nonzero = scored).
    #[arg(long)]
    pub region: Option<PathBuf>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), |v| v.to_string())
}

/// Per-frame rows then a `mean` row; frames without a prediction are skipped.
pub fn report(args: &EvalArgs) -> CliResult<String> {
    let gt_paths = list_frames(&args.gt)?;
    if !args.pred.is_dir() {
        return Err(Failure::input(format!("no such directory: {}", args.pred.display())));
    }
    let region = match &args.region {
        Some(p) => Some(pgm::read_mask(p).exit_with(EXIT_INPUT, format!("cannot read {}", p.display()))?),
        None => None,
    };
    let mut out = String::from("frame,tp,fp,tn,fn,precision,recall,f\n");
    let mut scores = Vec::new();
    for gt_path in gt_paths.iter().skip(args.burn_in) {
        let name = gt_path.file_name().unwrap_or_default();
        let pred_path = args.pred.join(name);
        if !pred_path.is_file() {
            log::debug!("no prediction for {}", name.to_string_lossy());
            continue;
        }
        let read = |p: &PathBuf| pgm::read_mask(p).exit_with(EXIT_INPUT, format!("cannot read {}", p.display()));
        let (gt, pred) = (read(gt_path)?, read(&pred_path)?);
        let counts = match &region {
            Some(r) => confusion_in_region(&pred, &gt, r.bits()),
            None => confusion(&pred, &gt),
        }
        .exit_with(EXIT_DIMENSION, format!("{}", name.to_string_lossy()))?;
        let s = FrameScore::from_counts(counts);
        let c = s.counts;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            name.to_string_lossy(),
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            cell(s.precision),
            cell(s.recall),
            cell(s.f)
        );
        scores.push(s);
    }
    let _ = writeln!(
        out,
        "mean,,,,,{},{},{}",
        cell(mean_defined(scores.iter().map(|s| s.precision))),
        cell(mean_defined(scores.iter().map(|s| s.recall))),
        cell(mean_defined(scores.iter().map(|s| s.f)))
    );
    Ok(out)
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    print!("{}", report(&args)?);
    Ok(())
}
