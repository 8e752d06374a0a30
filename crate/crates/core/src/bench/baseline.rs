use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frame::{ForegroundMask, Frame};
use crate::linalg;

/// Per-pixel detector: foreground where `|x − median of the last `window`
/// frames| > k·σ`, with `σ` the robust spread of the current differences.
#[derive(Debug, Clone)]
pub struct ThresholdBaseline {
    pub window: usize,
    pub k: f64,
    history: VecDeque<Frame>,
}

impl Default for ThresholdBaseline {
    fn default() -> Self {
        Self::new(25, 3.0)
    }
}

impl ThresholdBaseline {
    pub fn new(window: usize, k: f64) -> Self {
        Self {
            window: window.max(1),
            k,
            history: VecDeque::new(),
        }
    }

    /// Mask for `x`, then `x` joins the history. The first frame has no
    /// history and yields an empty mask.
    pub fn observe(&mut self, x: &Frame) -> Result<ForegroundMask> {
        if let Some(first) = self.history.front() {
            if first.width() != x.width() || first.height() != x.height() {
                return Err(Error::Dimension {
                    expected: first.len(),
                    found: x.len(),
                });
            }
        }
        let mask = if self.history.is_empty() {
            ForegroundMask::background(x.len())
        } else {
            let mut column = Vec::with_capacity(self.history.len());
            let diff: Vec<f64> = (0..x.len())
                .map(|i| {
                    column.clear();
                    column.extend(self.history.iter().map(|f| f[i]));
                    x[i] - linalg::median(&column)
                })
                .collect();
            let sigma = linalg::robust_sigma(&diff);
            ForegroundMask::from_bits(diff.iter().map(|d| d.abs() > self.k * sigma).collect())
        };
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(x.clone());
        Ok(mask)
    }

    pub fn run(&mut self, frames: &[Frame]) -> Result<Vec<ForegroundMask>> {
        frames.iter().map(|f| self.observe(f)).collect()
    }
}
