//! Nucleotide-level prediction statistics: confusion counts, sensitivity,
//! specificity, correlation coefficient and accuracy.
//!
//! Every ratio is `None` when its denominator is zero; callers decide how an
//! undefined value is rendered or scored.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedCounts {
    /// Actual positives, `tp + fn`.
    pub ap: u64,
    /// Actual negatives, `tn + fp`.
    pub an: u64,
    /// Predicted positives, `tp + fp`.
    pub pp: u64,
    /// Predicted negatives, `tn + fn`.
    pub pn: u64,
}

/// An inclusive 1-based interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Region {
    pub start: usize,
    pub end: usize,
}

impl Region {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Tallies one (predicted, actual) pair.
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(
            self.tp + o.tp,
            self.fp + o.fp,
            self.tn + o.tn,
            self.fn_ + o.fn_,
        )
    }
}

fn mask(regions: &[Region], seq_len: usize) -> Result<Vec<bool>> {
    let mut covered = vec![false; seq_len];
    for r in regions {
        if r.start < 1 || r.start > r.end || r.end > seq_len {
            return Err(Error::Region {
                start: r.start,
                end: r.end,
                len: seq_len,
            });
        }
        covered[r.start - 1..r.end]
            .iter_mut()
            .for_each(|c| *c = true);
    }
    Ok(covered)
}

/// Position-by-position comparison of predicted against true regions.
pub fn confusion_from_regions(
    pred: &[Region],
    truth: &[Region],
    seq_len: usize,
) -> Result<ConfusionCounts> {
    let p = mask(pred, seq_len)?;
    let t = mask(truth, seq_len)?;
    let mut counts = ConfusionCounts::default();
    for (&predicted, &actual) in p.iter().zip(&t) {
        counts.record(predicted, actual);
    }
    Ok(counts)
}

pub fn derive(c: &ConfusionCounts) -> DerivedCounts {
    DerivedCounts {
        ap: c.tp + c.fn_,
        an: c.tn + c.fp,
        pp: c.tp + c.fp,
        pn: c.tn + c.fn_,
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `tp / (tp + fn)`.
pub fn sensitivity(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

/// `tn / (tn + fp)`.
pub fn specificity(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tn, c.tn + c.fp)
}

pub fn accuracy(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp + c.tn, c.total())
}

/// `(tp·tn − fp·fn) / sqrt(an·pp·ap·pn)`; undefined when any factor is zero.
pub fn correlation(c: &ConfusionCounts) -> Option<f64> {
    let d = derive(c);
    if d.an == 0 || d.pp == 0 || d.ap == 0 || d.pn == 0 {
        return None;
    }
    let num = i128::from(c.tp) * i128::from(c.tn) - i128::from(c.fp) * i128::from(c.fn_);
    let den = (d.an as f64 * d.pp as f64).sqrt() * (d.ap as f64 * d.pn as f64).sqrt();
    Some((num as f64 / den).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub derived: DerivedCounts,
    pub sn: Option<f64>,
    pub sp: Option<f64>,
    pub cc: Option<f64>,
    pub accuracy: Option<f64>,
}

impl MetricsReport {
    pub fn new(counts: ConfusionCounts) -> Self {
        Self {
            counts,
            derived: derive(&counts),
            sn: sensitivity(&counts),
            sp: specificity(&counts),
            cc: correlation(&counts),
            accuracy: accuracy(&counts),
        }
    }
}

/// `name<TAB>value` lines; undefined ratios print as `undefined`.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        let d = &self.derived;
        let mut out = String::new();
        for (name, v) in [
            ("tp", c.tp),
            ("fp", c.fp),
            ("tn", c.tn),
            ("fn", c.fn_),
            ("ap", d.ap),
            ("an", d.an),
            ("pp", d.pp),
            ("pn", d.pn),
        ] {
            let _ = writeln!(out, "{name}\t{v}");
        }
        for (name, v) in [
            ("sn", self.sn),
            ("sp", self.sp),
            ("cc", self.cc),
            ("accuracy", self.accuracy),
        ] {
            match v {
                Some(x) => {
                    let _ = writeln!(out, "{name}\t{x:.6}");
                }
                None => {
                    let _ = writeln!(out, "{name}\tundefined");
                }
            }
        }
        f.write_str(&out)
    }
}
