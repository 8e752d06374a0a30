//! Plain `key = value` configuration files and the pipeline flags they share
//! with the command line. Flags always win over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use corola::segmentation::Connectivity;
use corola::{Beta2Policy, Params};

use crate::failure::{CliResult, Failure};

/// Keys normalized to lower case with `-` separators.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(format!("line {}: expected key=value, found {raw:?}", n + 1));
            };
            let key = normalize(k);
            if key.is_empty() {
                return Err(format!("line {}: empty key", n + 1));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", n + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    /// Fills `slot` from the file when the flag was not given.
    pub fn fill<T>(&mut self, slot: &mut Option<T>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> CliResult<()> {
        if let Some(raw) = self.entries.remove(key) {
            if slot.is_none() {
                *slot = Some(parse(&raw).map_err(|e| Failure::config(format!("config key {key}: {e}")))?);
            }
        }
        Ok(())
    }

    /// Errors on any key no command consumed.
    pub fn finish(self) -> CliResult<()> {
        match self.entries.keys().next() {
            Some(k) => Err(Failure::config(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }
}

pub fn parse_value<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| format!("{s:?}: {e}"))
}

pub fn parse_path(s: &str) -> Result<PathBuf, String> {
    if s.trim().is_empty() {
        Err("empty path".into())
    } else {
        Ok(PathBuf::from(s.trim()))
    }
}

pub fn parse_beta2(s: &str) -> Result<Beta2Policy, String> {
    match s.trim() {
        "auto" => Ok(Beta2Policy::Auto),
        v => v
            .parse::<f64>()
            .map(Beta2Policy::Fixed)
            .map_err(|_| format!("expected a number or \"auto\", found {v:?}")),
    }
}

pub fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    match s.trim() {
        "4" => Ok(Connectivity::Four),
        "8" => Ok(Connectivity::Eight),
        v => Err(format!("expected 4 or 8, found {v:?}")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Rank of the background basis.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Ridge weight on coefficients and basis.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Foreground cost: a number, or "auto" for a per-frame robust estimate.
    #[arg(long, value_parser = parse_beta2)]
    pub beta2: Option<Beta2Policy>,
    /// Smoothness weight (defaults to the frame's beta2).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Weight of the raw residual in the outlier blend.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Frames used for initialization.
    #[arg(long)]
    pub init_frames: Option<usize>,
    /// Iteration cap per frame (defaults to the rank).
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Neighbourhood of the segmentation grid: 4 or 8.
    #[arg(long, value_parser = parse_connectivity)]
    pub connectivity: Option<Connectivity>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// key=value file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl PipelineArgs {
    pub fn merge(&mut self, cfg: &mut ConfigFile) -> CliResult<()> {
        cfg.fill(&mut self.rank, "rank", parse_value)?;
        cfg.fill(&mut self.beta1, "beta1", parse_value)?;
        cfg.fill(&mut self.beta2, "beta2", parse_beta2)?;
        cfg.fill(&mut self.gamma, "gamma", parse_value)?;
        cfg.fill(&mut self.alpha, "alpha", parse_value)?;
        cfg.fill(&mut self.init_frames, "init-frames", parse_value)?;
        cfg.fill(&mut self.max_iters, "max-iters", parse_value)?;
        cfg.fill(&mut self.connectivity, "connectivity", parse_connectivity)?;
        cfg.fill(&mut self.seed, "seed", parse_value)?;
        Ok(())
    }

    /// Validated parameters; `default_rank` applies when no rank was given.
    pub fn params(&self, default_rank: Option<usize>) -> CliResult<Params> {
        let rank = self
            .rank
            .or(default_rank)
            .ok_or_else(|| Failure::config("--rank is required"))?;
        let mut p = Params::new(rank);
        if let Some(v) = self.beta1 {
            p.beta1 = v;
        }
        if let Some(v) = self.beta2 {
            p.beta2 = v;
        }
        p.gamma = self.gamma;
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        p.init_frames = self.init_frames;
        p.max_iters = self.max_iters;
        if let Some(v) = self.connectivity {
            p.connectivity = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        p.validate().map_err(Failure::config)?;
        if p.init_frames == Some(0) {
            return Err(Failure::config("init-frames must be at least 1"));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let cfg = ConfigFile::parse("# header\nrank = 3\nbeta_2=auto # trailing\n\n").unwrap();
        assert_eq!(cfg.entries.get("rank").map(String::as_str), Some("3"));
        assert_eq!(cfg.entries.get("beta-2").map(String::as_str), Some("auto"));
        assert!(ConfigFile::parse("rank 3").is_err());
        assert!(ConfigFile::parse("rank=1\nrank=2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = ConfigFile::parse("rank=3\nalpha=0.5\nbeta2=0.01\nconnectivity=8").unwrap();
        let mut args = PipelineArgs {
            rank: Some(2),
            ..Default::default()
        };
        args.merge(&mut cfg).unwrap();
        cfg.finish().unwrap();
        let p = args.params(None).unwrap();
        assert_eq!(p.rank, 2);
        assert_eq!(p.alpha, 0.5);
        assert_eq!(p.beta2, Beta2Policy::Fixed(0.01));
        assert_eq!(p.connectivity, Connectivity::Eight);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let mut cfg = ConfigFile::parse("alpha=lots").unwrap();
        let err = PipelineArgs::default().merge(&mut cfg).unwrap_err();
        assert_eq!(err.code, crate::failure::EXIT_CONFIG);
        let mut cfg = ConfigFile::parse("colour=red").unwrap();
        PipelineArgs::default().merge(&mut cfg).unwrap();
        assert_eq!(cfg.finish().unwrap_err().code, crate::failure::EXIT_CONFIG);
        let args = PipelineArgs {
            rank: Some(1),
            alpha: Some(2.0),
            ..Default::default()
        };
        assert_eq!(args.params(None).unwrap_err().code, crate::failure::EXIT_CONFIG);
        assert!(parse_beta2("x").is_err());
        assert!(parse_connectivity("6").is_err());
    }
}
