//! Bundled datasets.

use crate::model::LabeledExample;
use crate::seq::load_table;

/// The 22-row, three-attribute example table (12 `C`, 10 `N`).
pub const TABLE1_TSV: &str = include_str!("../fixtures/table1.tsv");

/// A small two-record FASTA file for smoke tests.
pub const SAMPLE_FASTA: &str = include_str!("../fixtures/sample.fasta");

pub fn table1() -> Vec<LabeledExample> {
    load_table(TABLE1_TSV).expect("bundled table parses")
}
