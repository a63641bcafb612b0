//! Fuzzy multiple-attractor cellular automata classification.
//!
//! Feature vectors in `[0, 1]` are quantized onto the cells of a fuzzy
//! cellular automaton; the attractor each configuration falls into decides
//! its class. Rule vectors are searched by clonal selection. Around the
//! classifier sit sequence ingestion, coding and promoter features,
//! nucleotide-level evaluation and the exon and promoter report tables.

pub mod ca;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod fixtures;
pub mod model;
pub mod report;
pub mod seq;
pub mod trainer;

pub use ca::{
    apply_rule, basin_map, evolve, evolve_to_attractor, make_levels, quantize, step, AttractorKey,
    EvolutionResult, FuzzyLattice, FuzzyLevels, FuzzyState, LocalRule, RuleId, RuleVector,
};
pub use error::{Error, Result};
pub use eval::{ConfusionCounts, DerivedCounts, MetricsReport, Region};
pub use features::{FeatureSchema, FeatureVector};
pub use model::{Label, LabeledExample, TrainedModel};
pub use trainer::{train, AffinityMode, FitnessMetric, TrainerConfig, TrainerReport};
