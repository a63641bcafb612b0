//! Synthetic sequence sets for end-to-end classifier checks.

#![allow(dead_code)]

use inmaca::features::FeatureSchema;
use inmaca::model::{Label, LabeledExample};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BASES: [u8; 4] = *b"ACGT";

pub fn uniform_seq(len: usize, rng: &mut impl Rng) -> String {
    (0..len)
        .map(|_| BASES[rng.gen_range(0..4)] as char)
        .collect()
}

/// Each codon position prefers its own base with probability `bias`.
pub fn coding_seq(len: usize, bias: f64, rng: &mut impl Rng) -> String {
    const PREFERRED: [u8; 3] = *b"GAC";
    (0..len)
        .map(|i| {
            let b = if rng.gen_bool(bias) {
                PREFERRED[i % 3]
            } else {
                BASES[rng.gen_range(0..4)]
            };
            b as char
        })
        .collect()
}

/// GC-rich background with extra CG dinucleotides and one TATAAA box.
pub fn promoter_seq(len: usize, rng: &mut impl Rng) -> String {
    let mut s: Vec<u8> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.6) {
                *b"CG".choose(rng).unwrap()
            } else {
                *b"AT".choose(rng).unwrap()
            }
        })
        .collect();
    for _ in 0..len / 10 {
        let at = rng.gen_range(0..len - 1);
        s[at..at + 2].copy_from_slice(b"CG");
    }
    let at = rng.gen_range(0..=len - 6);
    s[at..at + 6].copy_from_slice(b"TATAAA");
    String::from_utf8(s).unwrap()
}

pub struct Split {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

fn labeled(schema: FeatureSchema, seq: &str, label: &str) -> LabeledExample {
    let fv = schema.extract(seq).unwrap();
    LabeledExample::new(fv.values, Label::new(label).unwrap()).unwrap()
}

/// `per_class` positives and negatives, shuffled and split in half.
fn split(mut all: Vec<LabeledExample>, rng: &mut impl Rng) -> Split {
    all.shuffle(rng);
    let test = all.split_off(all.len() / 2);
    Split { train: all, test }
}

pub fn coding_set(per_class: usize, len: usize, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        let s = coding_seq(len, 0.35, &mut rng);
        all.push(labeled(FeatureSchema::Coding, &s, "C"));
        let s = uniform_seq(len, &mut rng);
        all.push(labeled(FeatureSchema::Coding, &s, "N"));
    }
    split(all, &mut rng)
}

pub fn promoter_set(per_class: usize, len: usize, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        let s = promoter_seq(len, &mut rng);
        all.push(labeled(FeatureSchema::Promoter, &s, "P"));
        let s = uniform_seq(len, &mut rng);
        all.push(labeled(FeatureSchema::Promoter, &s, "N"));
    }
    split(all, &mut rng)
}

pub fn test_accuracy(model: &inmaca::model::TrainedModel, test: &[LabeledExample]) -> f64 {
    let hits = test
        .iter()
        .filter(|ex| {
            model
                .classify(&ex.features)
                .map(|(l, _)| l == ex.label)
                .unwrap_or(false)
        })
        .count();
    hits as f64 / test.len() as f64
}
