//! Sequence features scaled into `[0, 1]` for the quantizer.
//!
//! Coding windows use position asymmetry and composition per base plus
//! period-3 spectral power. Promoter windows use GC content, a CpG
//! observed/expected ratio and consensus matches to a TATA box and an
//! initiator-like motif. `N` never matches any base.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const BASES: [u8; 4] = *b"ACGT";
pub const TATA_MOTIF: &str = "TATAAA";
pub const INR_MOTIF: &str = "CCAT";

const CODING_NAMES: [&str; 9] = [
    "asym_A", "asym_C", "asym_G", "asym_T", "comp_A", "comp_C", "comp_G", "comp_T", "period3",
];
const PROMOTER_NAMES: [&str; 4] = ["gc", "cpg_oe", "tata", "inr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSchema {
    Coding,
    Promoter,
}

impl FeatureSchema {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureSchema::Coding => &CODING_NAMES,
            FeatureSchema::Promoter => &PROMOTER_NAMES,
        }
    }

    pub fn len(self) -> usize {
        self.names().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Shortest window every feature is defined on.
    pub fn min_len(self) -> usize {
        match self {
            FeatureSchema::Coding => 3,
            FeatureSchema::Promoter => TATA_MOTIF.len().max(INR_MOTIF.len()),
        }
    }

    pub fn extract(self, seq: &str) -> Result<FeatureVector> {
        match self {
            FeatureSchema::Coding => coding_features(seq),
            FeatureSchema::Promoter => promoter_features(seq),
        }
    }
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSchema::Coding => "coding",
            FeatureSchema::Promoter => "promoter",
        })
    }
}

impl FromStr for FeatureSchema {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "coding" => Ok(FeatureSchema::Coding),
            "promoter" => Ok(FeatureSchema::Promoter),
            _ => Err(format!("unknown task {s:?} (expected coding or promoter)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: FeatureSchema,
    pub values: Vec<f64>,
}

fn require(seq: &str, min: usize) -> Result<&[u8]> {
    if seq.len() < min {
        return Err(Error::TooShort {
            len: seq.len(),
            min,
        });
    }
    Ok(seq.as_bytes())
}

fn count(seq: &[u8], base: u8) -> usize {
    seq.iter().filter(|&&b| b == base).count()
}

fn phase_counts(seq: &[u8], base: u8) -> [u64; 3] {
    let mut c = [0u64; 3];
    for (i, &b) in seq.iter().enumerate() {
        if b == base {
            c[i % 3] += 1;
        }
    }
    c
}

/// Fraction of positions holding `base`.
pub fn composition(seq: &str, base: u8) -> Result<f64> {
    let s = require(seq, 1)?;
    Ok(count(s, base) as f64 / s.len() as f64)
}

/// `(max - min) / (max + min + 1)` over the counts of `base` in the three
/// codon phases.
pub fn position_asymmetry(seq: &str, base: u8) -> Result<f64> {
    let s = require(seq, 3)?;
    let c = phase_counts(s, base);
    let max = *c.iter().max().unwrap_or(&0);
    let min = *c.iter().min().unwrap_or(&0);
    Ok((max - min) as f64 / (max + min + 1) as f64)
}

/// Spectral power at frequency 1/3, summed over the four base indicator
/// sequences and scaled by `3 / L^2`, clamped to 1.
pub fn period3_power(seq: &str) -> Result<f64> {
    let s = require(seq, 3)?;
    // |c0 + c1 w + c2 w^2|^2 with w a primitive cube root of unity
    let total: u64 = BASES
        .iter()
        .map(|&b| {
            let [c0, c1, c2] = phase_counts(s, b);
            c0 * c0 + c1 * c1 + c2 * c2 - c0 * c1 - c1 * c2 - c0 * c2
        })
        .sum();
    let len = s.len() as f64;
    Ok((3.0 * total as f64 / (len * len)).min(1.0))
}

/// Half the CpG observed/expected ratio, clamped to 1; 0 without C or G.
pub fn cpg_ratio(seq: &str) -> Result<f64> {
    let s = require(seq, 2)?;
    let observed = s.windows(2).filter(|w| w == b"CG").count() as f64;
    let expected = (count(s, b'C') * count(s, b'G')) as f64 / s.len() as f64;
    if expected == 0.0 {
        return Ok(0.0);
    }
    Ok((observed / expected / 2.0).min(1.0))
}

/// Best fraction of motif positions matched over all ungapped placements.
pub fn consensus_score(seq: &str, motif: &str) -> Result<f64> {
    let m = motif.as_bytes();
    if m.is_empty() {
        return Err(Error::InvalidParameter("empty motif".into()));
    }
    let s = require(seq, m.len())?;
    let best = s
        .windows(m.len())
        .map(|w| {
            w.iter()
                .zip(m)
                .filter(|(a, b)| a == b && **a != b'N')
                .count()
        })
        .max()
        .unwrap_or(0);
    Ok(best as f64 / m.len() as f64)
}

pub fn coding_features(seq: &str) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(CODING_NAMES.len());
    for &b in &BASES {
        values.push(position_asymmetry(seq, b)?);
    }
    for &b in &BASES {
        values.push(composition(seq, b)?);
    }
    values.push(period3_power(seq)?);
    Ok(FeatureVector {
        schema: FeatureSchema::Coding,
        values,
    })
}

pub fn promoter_features(seq: &str) -> Result<FeatureVector> {
    require(seq, FeatureSchema::Promoter.min_len())?;
    let gc = composition(seq, b'G')? + composition(seq, b'C')?;
    let values = vec![
        gc.min(1.0),
        cpg_ratio(seq)?,
        consensus_score(seq, TATA_MOTIF)?,
        consensus_score(seq, INR_MOTIF)?,
    ];
    Ok(FeatureVector {
        schema: FeatureSchema::Promoter,
        values,
    })
}
