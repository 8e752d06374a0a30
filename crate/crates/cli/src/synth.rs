use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use corola::bench::{self, PanningSpec, SweepAxis, SweepConfig, SyntheticSpec};
use corola::motion::write_transforms;
use corola::{pgm, ForegroundMask, Frame};

use crate::config::{parse_value, ConfigFile, PipelineArgs};
use crate::failure::{CliResult, ExitCodeExt, Failure, EXIT_CONFIG, EXIT_FAILURE};

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 30)]
    pub height: usize,
    #[arg(long, default_value_t = 200)]
    pub frames: usize,
    /// Rank of the clean background.
    #[arg(long, default_value_t = 5)]
    pub data_rank: usize,
    /// Side of the square object.
    #[arg(long, default_value_t = 10)]
    pub object_size: usize,
    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,
    /// Pan the camera this many pixels per frame (writes a moving-camera
    /// sequence with its transforms and visible region).
    #[arg(long)]
    pub pan: Option<usize>,
    /// Noise level of the panning sequence.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Sweep axis: snr, rank or object_size. Without it the sequence is
    /// written out as PGM frames and ground-truth masks.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Comma list of sweep values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = bench::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Keep measured ms per frame in the sweep CSVs (otherwise 0).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

fn write_sequence(out: &Path, frames: &[Frame], masks: &[ForegroundMask]) -> CliResult<()> {
    let (fdir, gdir) = (out.join("frames"), out.join("gt"));
    for d in [&fdir, &gdir] {
        fs::create_dir_all(d).exit_with(EXIT_FAILURE, format!("cannot create {}", d.display()))?;
    }
    for (k, (f, m)) in frames.iter().zip(masks).enumerate() {
        let name = format!("{k:05}.pgm");
        pgm::write_frame(&fdir.join(&name), f).exit_with(EXIT_FAILURE, "cannot write frame")?;
        pgm::write_mask(&gdir.join(&name), m, f.width(), f.height()).exit_with(EXIT_FAILURE, "cannot write mask")?;
    }
    Ok(())
}

pub fn synth(mut args: SynthArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.pipeline.config.as_deref())?;
    args.pipeline.merge(&mut cfg)?;
    cfg.finish()?;
    let seed = args.pipeline.seed.unwrap_or(0);
    fs::create_dir_all(&args.out).exit_with(EXIT_FAILURE, format!("cannot create {}", args.out.display()))?;

    if let Some(pan) = args.pan {
        if args.sweep.is_some() {
            return Err(Failure::config("--sweep does not apply to panning sequences"));
        }
        let spec = PanningSpec {
            width: args.width,
            height: args.height,
            frames: args.frames,
            pan,
            object_width: args.object_size,
            object_height: args.object_size,
            noise: args.noise,
            seed,
        };
        let seq = bench::generate_panning(&spec).exit_with(EXIT_CONFIG, "invalid panning spec")?;
        write_sequence(&args.out, &seq.frames, &seq.masks)?;
        write_transforms(&args.out.join("transforms.txt"), &seq.transforms)
            .exit_with(EXIT_FAILURE, "cannot write transforms")?;
        let region = ForegroundMask::from_bits(seq.in_view.clone());
        pgm::write_mask(&args.out.join("region.pgm"), &region, spec.width, spec.height)
            .exit_with(EXIT_FAILURE, "cannot write region")?;
        return Ok(());
    }

    let spec = SyntheticSpec {
        width: args.width,
        height: args.height,
        frames: args.frames,
        rank: args.data_rank,
        object_width: args.object_size,
        object_height: args.object_size,
        snr: args.snr,
        seed,
    };
    let Some(axis) = &args.sweep else {
        let seq = bench::generate(&spec).exit_with(EXIT_CONFIG, "invalid synthetic spec")?;
        return write_sequence(&args.out, &seq.frames, &seq.masks);
    };
    let axis: SweepAxis = parse_value(axis).map_err(Failure::config)?;
    if args.values.is_empty() {
        return Err(Failure::config("--sweep needs --values"));
    }
    // The map to [0, 1] adds a constant image, so the data carry one more
    // dimension than the clean background.
    let params = args.pipeline.params(Some(spec.rank + 1))?;
    let mut sweep = SweepConfig::new(axis, args.values.clone(), spec, params);
    sweep.burn_in = args.burn_in;
    let rows = bench::sweep(&sweep).exit_with(EXIT_CONFIG, "sweep failed")?;
    let corola = bench::corola_csv(&rows, args.timing);
    let baseline = bench::baseline_csv(&rows, args.timing);
    fs::write(args.out.join("sweep.csv"), &corola).exit_with(EXIT_FAILURE, "cannot write sweep.csv")?;
    fs::write(args.out.join("baseline.csv"), &baseline).exit_with(EXIT_FAILURE, "cannot write baseline.csv")?;
    print!("{corola}");
    Ok(())
}
