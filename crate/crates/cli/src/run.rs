use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use corola::motion::{align_frames, estimate_affine, read_transforms, track_frame, AffineTransform, RegistrationConfig};
use corola::{pgm, Frame, ModelState};

use crate::config::{parse_path, parse_value, ConfigFile, PipelineArgs};
use crate::failure::{CliResult, ExitCodeExt, Failure, EXIT_CONFIG, EXIT_DIMENSION, EXIT_FAILURE, EXIT_INPUT};
use crate::input::{list_frames, output_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Camera {
    Static,
    Moving,
}

impl std::str::FromStr for Camera {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Which per-frame artifacts to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub masks: bool,
    pub backgrounds: bool,
    pub residuals: bool,
    pub trace: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            masks: true,
            backgrounds: true,
            residuals: false,
            trace: true,
        }
    }
}

pub fn parse_emit(s: &str) -> Result<Emit, String> {
    let mut e = Emit {
        masks: false,
        backgrounds: false,
        residuals: false,
        trace: false,
    };
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item {
            "masks" => e.masks = true,
            "backgrounds" => e.backgrounds = true,
            "residuals" => e.residuals = true,
            "trace" => e.trace = true,
            other => return Err(format!("unknown emit item {other:?}")),
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Frame directory or glob pattern (frames are taken in name order).
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub camera: Option<Camera>,
    /// Per-frame affine transforms (moving camera); estimated when absent.
    #[arg(long)]
    pub transforms: Option<PathBuf>,
    /// Comma list of masks, backgrounds, residuals, trace.
    #[arg(long, value_parser = parse_emit)]
    pub emit: Option<Emit>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

enum Motion {
    Static,
    Sidecar(Vec<AffineTransform>),
    Estimated(RegistrationConfig),
}

impl Motion {
    /// Transform from frame `k − 1` to frame `k`.
    fn transform(&self, k: usize, prev: &Frame, cur: &Frame) -> AffineTransform {
        match self {
            Motion::Static => AffineTransform::identity(),
            Motion::Sidecar(t) => t[k],
            Motion::Estimated(cfg) => estimate_affine(prev, cur, cfg).unwrap_or_else(|e| {
                log::warn!("frame {k}: {e}; assuming no motion");
                AffineTransform::identity()
            }),
        }
    }
}

fn read_frame(path: &Path, first: Option<&Frame>) -> CliResult<Frame> {
    let f = pgm::read_frame(path).exit_with(EXIT_INPUT, format!("cannot read {}", path.display()))?;
    if let Some(first) = first {
        if (f.width(), f.height()) != (first.width(), first.height()) {
            return Err(Failure::new(
                EXIT_DIMENSION,
                anyhow::anyhow!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    f.width(),
                    f.height(),
                    first.width(),
                    first.height()
                ),
            ));
        }
    }
    Ok(f)
}

fn residual_frame(x: &Frame, background: &Frame) -> corola::Result<Frame> {
    let values: Vec<f64> = x.pixels().iter().zip(background.pixels()).map(|(a, b)| (a - b).abs()).collect();
    Frame::from_clamped(x.width(), x.height(), &values)
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).exit_with(EXIT_FAILURE, format!("cannot create {}", path.display()))
}

pub fn run(mut args: RunArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.pipeline.config.as_deref())?;
    args.pipeline.merge(&mut cfg)?;
    cfg.fill(&mut args.input, "input", parse_path)?;
    cfg.fill(&mut args.out, "out", parse_path)?;
    cfg.fill(&mut args.camera, "camera", parse_value)?;
    cfg.fill(&mut args.transforms, "transforms", parse_path)?;
    cfg.fill(&mut args.emit, "emit", parse_emit)?;
    cfg.finish()?;

    let params = args.pipeline.params(None)?;
    let input = args.input.ok_or_else(|| Failure::config("an input directory or pattern is required"))?;
    let out = args.out.ok_or_else(|| Failure::config("--out is required"))?;
    let emit = args.emit.unwrap_or_default();
    let camera = args.camera.unwrap_or(Camera::Static);

    let paths = list_frames(&input)?;
    let n0 = params.init_frames();
    if paths.len() <= n0 {
        return Err(Failure::input(format!(
            "{} frames found; need more than the {n0} initialization frames",
            paths.len()
        )));
    }
    let motion = match (camera, &args.transforms) {
        (Camera::Static, Some(_)) => return Err(Failure::config("--transforms needs --camera moving")),
        (Camera::Static, None) => Motion::Static,
        (Camera::Moving, Some(path)) => {
            let t = read_transforms(path).exit_with(EXIT_CONFIG, format!("bad transforms file {}", path.display()))?;
            if t.len() < paths.len() {
                return Err(Failure::config(format!(
                    "{} has {} transforms for {} frames",
                    path.display(),
                    t.len(),
                    paths.len()
                )));
            }
            Motion::Sidecar(t)
        }
        (Camera::Moving, None) => Motion::Estimated(RegistrationConfig::default()),
    };

    let mut init = Vec::with_capacity(n0);
    for path in &paths[..n0] {
        let f = read_frame(path, init.first())?;
        init.push(f);
    }
    let mut state = if matches!(motion, Motion::Static) {
        ModelState::initialize(&init, params)
    } else {
        let mut transforms = vec![AffineTransform::identity()];
        for k in 1..n0 {
            transforms.push(motion.transform(k, &init[k - 1], &init[k]));
        }
        align_frames(&init, &transforms).and_then(|aligned| ModelState::initialize(&aligned, params))
    }
    .exit_with(EXIT_FAILURE, "initialization failed")?;
    let first = init[0].clone();
    let mut prev = init.pop().expect("at least one initialization frame");
    drop(init);

    create_dir(&out)?;
    let dirs: Vec<(bool, PathBuf)> = [
        (emit.masks, "masks"),
        (emit.backgrounds, "backgrounds"),
        (emit.residuals, "residuals"),
    ]
    .into_iter()
    .map(|(on, name)| (on, out.join(name)))
    .collect();
    for (on, dir) in &dirs {
        if *on {
            create_dir(dir)?;
        }
    }
    let mut csv = if emit.trace {
        let path = out.join("run.csv");
        let file = fs::File::create(&path).exit_with(EXIT_FAILURE, format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "frame,energy_final,iters,converged,ms").exit_with(EXIT_FAILURE, "write failed")?;
        Some(w)
    } else {
        None
    };

    for (k, path) in paths.iter().enumerate().skip(n0) {
        let x = read_frame(path, Some(&first))?;
        let start = Instant::now();
        let result = match motion {
            Motion::Static => state.process_frame(&x),
            _ => {
                let tau = motion.transform(k, &prev, &x);
                track_frame(&mut state, &x, &tau).map(|(o, _)| o)
            }
        };
        let output = result.exit_with(EXIT_FAILURE, format!("frame {}", path.display()))?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let name = output_name(path);
        let (w, h) = (x.width(), x.height());
        let write_err = |p: &Path| format!("cannot write {}", p.display());
        if emit.masks {
            let p = dirs[0].1.join(&name);
            pgm::write_mask(&p, &output.mask, w, h).exit_with(EXIT_FAILURE, write_err(&p))?;
        }
        if emit.backgrounds {
            let p = dirs[1].1.join(&name);
            pgm::write_frame(&p, &output.background).exit_with(EXIT_FAILURE, write_err(&p))?;
        }
        if emit.residuals {
            let p = dirs[2].1.join(&name);
            residual_frame(&x, &output.background)
                .and_then(|r| pgm::write_frame(&p, &r))
                .exit_with(EXIT_FAILURE, write_err(&p))?;
        }
        if let Some(w) = csv.as_mut() {
            let t = &output.trace;
            writeln!(w, "{k},{},{},{},{ms:.3}", t.final_energy(), t.iterations(), t.converged)
                .exit_with(EXIT_FAILURE, "write failed")?;
        }
        log::info!(
            "frame {k}: {} iterations, {} foreground pixels, {ms:.2} ms",
            output.trace.iterations(),
            output.mask.count_foreground()
        );
        prev = x;
    }
    if let Some(mut w) = csv {
        w.flush().exit_with(EXIT_FAILURE, "write failed")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emit_lists() {
        let e = parse_emit("masks, trace").unwrap();
        assert!(e.masks && e.trace && !e.backgrounds && !e.residuals);
        assert!(parse_emit("masks,video").is_err());
        assert_eq!("moving".parse::<Camera>(), Ok(Camera::Moving));
    }
}
