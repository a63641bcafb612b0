//! FASTA and attribute-table input, and fixed-width windowing.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Label, LabeledExample};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    /// Uppercase, over `A`, `C`, `G`, `T`, `N`.
    pub residues: String,
}

impl SequenceRecord {
    pub fn new(id: impl Into<String>, residues: &str) -> Result<Self> {
        let id = id.into();
        let mut out = String::with_capacity(residues.len());
        push_residues(&id, residues, &mut out)?;
        Ok(Self { id, residues: out })
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

fn push_residues(id: &str, line: &str, out: &mut String) -> Result<()> {
    for ch in line.chars() {
        let up = ch.to_ascii_uppercase();
        match up {
            'A' | 'C' | 'G' | 'T' | 'N' => out.push(up),
            _ => {
                return Err(Error::IllegalResidue {
                    id: id.to_string(),
                    ch,
                    offset: out.len() + 1,
                });
            }
        }
    }
    Ok(())
}

/// Parses `>`-headed FASTA records. The id is the first whitespace-separated
/// token of the header. Illegal characters are reported with their 1-based
/// offset within the record.
pub fn parse_fasta(text: &str) -> Result<Vec<SequenceRecord>> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('>') {
            let id = header
                .split_whitespace()
                .next()
                .ok_or_else(|| Error::Parse {
                    line: i + 1,
                    msg: "empty FASTA header".into(),
                })?;
            records.push(SequenceRecord {
                id: id.to_string(),
                residues: String::new(),
            });
        } else if !line.is_empty() {
            let record = records.last_mut().ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "sequence data before first '>' header".into(),
            })?;
            push_residues(&record.id, line, &mut record.residues)?;
        }
    }
    Ok(records)
}

pub fn to_fasta(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, ">{}", r.id);
        for chunk in r.residues.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).unwrap_or_default());
            out.push('\n');
        }
    }
    out
}

pub fn reverse_complement(residues: &str) -> String {
    residues
        .bytes()
        .rev()
        .map(|b| match b {
            b'A' => 'T',
            b'C' => 'G',
            b'G' => 'C',
            b'T' => 'A',
            _ => 'N',
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub width: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(width: usize, stride: usize) -> Result<Self> {
        if width == 0 || stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "window width and stride must be positive (width={width}, stride={stride})"
            )));
        }
        Ok(Self { width, stride })
    }
}

/// A window with 1-based inclusive `start` and exclusive `end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window<'a> {
    pub start: usize,
    pub end: usize,
    pub seq: &'a str,
}

/// Windows starting at 1, 1 + stride, ... that fit inside the record.
pub fn windows<'a>(record: &'a SequenceRecord, spec: WindowSpec) -> Vec<Window<'a>> {
    let len = record.residues.len();
    if len < spec.width {
        return Vec::new();
    }
    (0..=len - spec.width)
        .step_by(spec.stride)
        .map(|offset| Window {
            start: offset + 1,
            end: offset + 1 + spec.width,
            seq: &record.residues[offset..offset + spec.width],
        })
        .collect()
}

fn is_row_index(field: &str) -> bool {
    field
        .strip_suffix('.')
        .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
}

/// Parses a tab- or comma-separated attribute table whose last column is the
/// label. A leading row index such as `12.` is skipped; blank lines and lines
/// starting with `#` are ignored.
pub fn load_table(text: &str) -> Result<Vec<LabeledExample>> {
    let mut examples = Vec::new();
    let mut width: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let sep = if line.contains('\t') { '\t' } else { ',' };
        let mut fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        if fields.first().is_some_and(|f| is_row_index(f)) {
            fields.remove(0);
        }
        let Some((label, attrs)) = fields.split_last() else {
            continue;
        };
        if attrs.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "row has no attributes".into(),
            });
        }
        match width {
            None => width = Some(attrs.len()),
            Some(w) if w != attrs.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("ragged row: {} attributes, expected {w}", attrs.len()),
                })
            }
            _ => {}
        }
        let mut features = Vec::with_capacity(attrs.len());
        for (col, field) in attrs.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("column {}: non-numeric attribute {field:?}", col + 1),
            })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::AttributeRange {
                    line: line_no,
                    column: col + 1,
                    value,
                });
            }
            features.push(value);
        }
        let label = Label::new(*label).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        examples.push(LabeledExample { features, label });
    }
    Ok(examples)
}
