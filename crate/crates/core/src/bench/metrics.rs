use crate::error::{Error, Result};
use crate::frame::ForegroundMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

pub fn confusion(pred: &ForegroundMask, gt: &ForegroundMask) -> Result<ConfusionCounts> {
    Error::check_len(gt.len(), pred.len())?;
    let mut c = ConfusionCounts::default();
    for (p, g) in pred.bits().iter().zip(gt.bits()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Counts restricted to pixels where `region` is true.
pub fn confusion_in_region(pred: &ForegroundMask, gt: &ForegroundMask, region: &[bool]) -> Result<ConfusionCounts> {
    Error::check_len(gt.len(), pred.len())?;
    Error::check_len(gt.len(), region.len())?;
    let keep = |m: &ForegroundMask| ForegroundMask::from_bits(m.bits().iter().zip(region).map(|(b, r)| *b && *r).collect());
    let mut c = confusion(&keep(pred), &keep(gt))?;
    c.tn -= region.iter().filter(|r| !**r).count();
    Ok(c)
}

/// `TP/(TP+FP)` and `TP/(TP+FN)`. A 0/0 ratio is `None`, except that a frame
/// where both prediction and truth are empty scores `(1, 1)`.
pub fn precision_recall(c: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let predicted = c.tp + c.fp;
    let actual = c.tp + c.fn_;
    if predicted == 0 && actual == 0 {
        return (Some(1.0), Some(1.0));
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    (ratio(c.tp, predicted), ratio(c.tp, actual))
}

/// Harmonic mean. 0 when either side is 0 (the other may be undefined, as
/// `F ≤ 2·min(p, r)`); otherwise `None` if either input is undefined.
pub fn f_measure(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    if precision == Some(0.0) || recall == Some(0.0) {
        return Some(0.0);
    }
    let (p, r) = (precision?, recall?);
    Some(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameScore {
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f: Option<f64>,
}

impl FrameScore {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let (precision, recall) = precision_recall(&counts);
        Self {
            counts,
            precision,
            recall,
            f: f_measure(precision, recall),
        }
    }
}

/// Mean of the defined values; `None` when there are none.
pub fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
