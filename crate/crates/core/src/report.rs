//! Window calls to regions, and the exon-boundary and promoter tables.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Label;

pub const GENE_TABLE_HEADER: &str =
    "Gene number\tElement number\tExons/UTR\tStrand\tLeft end\tRight end";
pub const PROMOTER_TABLE_HEADER: &str = "Start\tEnd\tScore\tPromoter Sequence";

/// A scored window with 1-based inclusive `start` and exclusive `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredWindow {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

/// A merged call with inclusive bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCall {
    pub start: usize,
    pub end: usize,
    pub score: f64,
    pub label: Label,
}

/// Merges windows scoring at least `threshold` whose inclusive extents are
/// separated by no more than `max_gap` uncovered positions. A region keeps
/// the best score of its members. Input must be sorted by start.
pub fn merge_windows(
    calls: &[ScoredWindow],
    threshold: f64,
    max_gap: usize,
    label: &Label,
) -> Result<Vec<RegionCall>> {
    if calls.windows(2).any(|w| w[1].start < w[0].start) {
        return Err(Error::Unsorted);
    }
    let mut regions: Vec<RegionCall> = Vec::new();
    for w in calls
        .iter()
        .filter(|w| w.score >= threshold && w.end > w.start)
    {
        let end = w.end - 1;
        match regions.last_mut() {
            Some(r) if w.start <= r.end + 1 + max_gap => {
                r.end = r.end.max(end);
                r.score = r.score.max(w.score);
            }
            _ => regions.push(RegionCall {
                start: w.start,
                end,
                score: w.score,
                label: label.clone(),
            }),
        }
    }
    Ok(regions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Utr5,
    Initial,
    Internal,
    Terminal,
    Single,
}

impl ElementKind {
    /// Kind of element `index` among `count` ordered coding regions.
    pub fn positional(index: usize, count: usize) -> Self {
        match (index, count) {
            (_, 1) => ElementKind::Single,
            (0, _) => ElementKind::Initial,
            (i, c) if i + 1 == c => ElementKind::Terminal,
            _ => ElementKind::Internal,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Utr5 => "Utr5",
            ElementKind::Initial => "Initial",
            ElementKind::Internal => "Internal",
            ElementKind::Terminal => "Terminal",
            ElementKind::Single => "Single",
        })
    }
}

impl FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Utr5" => Ok(ElementKind::Utr5),
            "Initial" => Ok(ElementKind::Initial),
            "Internal" => Ok(ElementKind::Internal),
            "Terminal" => Ok(ElementKind::Terminal),
            "Single" => Ok(ElementKind::Single),
            _ => Err(format!("unknown element kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strand {
    Forward,
    Reverse,
}

impl fmt::Display for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strand::Forward => "+",
            Strand::Reverse => "-",
        })
    }
}

impl FromStr for Strand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "+" => Ok(Strand::Forward),
            "-" | "\u{2212}" => Ok(Strand::Reverse),
            _ => Err(format!("unknown strand {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneElementRow {
    pub gene_number: usize,
    pub element_number: usize,
    pub kind: ElementKind,
    pub strand: Strand,
    pub left: usize,
    pub right: usize,
}

/// The coding regions of one record on one strand, in forward coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneRegions {
    pub strand: Strand,
    pub regions: Vec<RegionCall>,
}

/// Numbers genes from 1 in input order, skipping empty groups. Elements run
/// in transcription order, so reverse-strand genes count from the right.
pub fn gene_rows(genes: &[GeneRegions]) -> Vec<GeneElementRow> {
    let mut rows = Vec::new();
    for (g, gene) in genes.iter().filter(|g| !g.regions.is_empty()).enumerate() {
        let mut spans: Vec<(usize, usize)> =
            gene.regions.iter().map(|r| (r.start, r.end)).collect();
        spans.sort_unstable();
        if gene.strand == Strand::Reverse {
            spans.reverse();
        }
        let count = spans.len();
        for (i, (left, right)) in spans.into_iter().enumerate() {
            rows.push(GeneElementRow {
                gene_number: g + 1,
                element_number: i,
                kind: ElementKind::positional(i, count),
                strand: gene.strand,
                left,
                right,
            });
        }
    }
    rows
}

pub fn render_gene_rows(rows: &[GeneElementRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{GENE_TABLE_HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.gene_number, r.element_number, r.kind, r.strand, r.left, r.right
        );
    }
    out
}

pub fn gene_table(genes: &[GeneRegions]) -> String {
    render_gene_rows(&gene_rows(genes))
}

fn split_row(line: &str, no: usize, fields: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != fields {
        return Err(Error::Parse {
            line: no,
            msg: format!("expected {fields} fields, found {}", parts.len()),
        });
    }
    Ok(parts)
}

fn parse_field<T: FromStr>(s: &str, no: usize, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line: no,
        msg: format!("bad {what} {s:?}"),
    })
}

/// Reads a gene table, including rows kinds such as `Utr5` that
/// [`gene_rows`] never produces.
pub fn parse_gene_table(text: &str) -> Result<Vec<GeneElementRow>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == GENE_TABLE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing gene table header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(no, line)| {
            let p = split_row(line, no, 6)?;
            let row = GeneElementRow {
                gene_number: parse_field(p[0], no, "gene number")?,
                element_number: parse_field(p[1], no, "element number")?,
                kind: p[2].parse().map_err(|msg| Error::Parse { line: no, msg })?,
                strand: p[3].parse().map_err(|msg| Error::Parse { line: no, msg })?,
                left: parse_field(p[4], no, "left end")?,
                right: parse_field(p[5], no, "right end")?,
            };
            if row.left > row.right {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("left end {} after right end {}", row.left, row.right),
                });
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromoterRow {
    pub start: usize,
    /// Exclusive: `start + width`.
    pub end: usize,
    pub score: f64,
    pub sequence: String,
}

pub fn promoter_table(rows: &[PromoterRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PROMOTER_TABLE_HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.2}\t{}",
            r.start, r.end, r.score, r.sequence
        );
    }
    out
}

pub fn parse_promoter_table(text: &str) -> Result<Vec<PromoterRow>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == PROMOTER_TABLE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing promoter table header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(no, line)| {
            let p = split_row(line, no, 4)?;
            Ok(PromoterRow {
                start: parse_field(p[0], no, "start")?,
                end: parse_field(p[1], no, "end")?,
                score: parse_field(p[2], no, "score")?,
                sequence: p[3].to_string(),
            })
        })
        .collect()
}
