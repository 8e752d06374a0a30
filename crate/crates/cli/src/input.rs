//! Frame discovery. A directory yields its `.pgm`/`.pnm` files; anything
//! containing a wildcard is treated as a glob. Either way the frames are
//! ordered by a plain lexicographic sort of the file names.

use std::path::{Path, PathBuf};

use crate::failure::{CliResult, Failure};

fn is_image(p: &Path) -> bool {
    p.is_file()
        && p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("pnm"))
}

fn sort_by_name(paths: &mut [PathBuf]) {
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
}

pub fn list_frames(input: &Path) -> CliResult<Vec<PathBuf>> {
    let text = input.to_string_lossy();
    let mut paths: Vec<PathBuf> = if input.is_dir() {
        std::fs::read_dir(input)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", input.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| is_image(p))
            .collect()
    } else if text.contains(['*', '?', '[']) {
        glob::glob(&text)
            .map_err(|e| Failure::input(format!("bad pattern {text:?}: {e}")))?
            .filter_map(|entry| entry.ok())
            .filter(|p| p.is_file())
            .collect()
    } else if input.is_file() {
        vec![input.to_path_buf()]
    } else {
        return Err(Failure::input(format!("no such input: {}", input.display())));
    };
    if paths.is_empty() {
        return Err(Failure::input(format!("no frames found at {}", input.display())));
    }
    sort_by_name(&mut paths);
    Ok(paths)
}

/// Output name for an input frame: same stem, `.pgm` extension.
pub fn output_name(path: &Path) -> PathBuf {
    PathBuf::from(path.file_name().unwrap_or_default()).with_extension("pgm")
}
