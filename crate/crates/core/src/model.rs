//! Multiple-attractor classifier: basins of a rule vector vote on labels.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::ca::{AttractorCache, AttractorKey, FuzzyLattice, FuzzyLevels, RuleVector};
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "AIS-INMACA-MODEL v1";
const MODEL_MAGIC: &str = "AIS-INMACA-MODEL";

/// A class token such as `C` or `N`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(token: impl Into<String>) -> Result<Self> {
        let token = token.into();
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!("invalid label {token:?}")));
        }
        Ok(Self(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::new(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, label: Label) -> Result<Self> {
        if let Some(&bad) = features.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain { value: bad });
        }
        Ok(Self { features, label })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinStats {
    pub attractor_key: AttractorKey,
    pub counts: BTreeMap<Label, usize>,
    pub purity: f64,
}

impl BasinStats {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinLabel {
    pub label: Label,
    pub purity: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelMetadata {
    pub seed: Option<u64>,
    pub fitness: Option<f64>,
    pub generations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub levels: FuzzyLevels,
    pub size: usize,
    pub rules: RuleVector,
    pub basin_labels: BTreeMap<AttractorKey, BasinLabel>,
    pub fallback_label: Label,
    pub metadata: ModelMetadata,
}

/// Rounds to the 6 decimals the model file keeps, so text round trips are exact.
pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

pub fn encode(features: &[f64], levels: &FuzzyLevels) -> Result<FuzzyLattice> {
    FuzzyLattice::from_values(*levels, features)
}

/// A dataset quantized once up front, with labels interned to indices
/// in lexicographic order.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub levels: FuzzyLevels,
    pub size: usize,
    pub cells: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
    pub label_names: Vec<Label>,
    pub priors: Vec<usize>,
}

impl EncodedDataset {
    pub fn new(data: &[LabeledExample], levels: FuzzyLevels) -> Result<Self> {
        let first = data.first().ok_or(Error::EmptyDataset)?;
        let size = first.features.len();
        let label_names: Vec<Label> = data
            .iter()
            .map(|e| e.label.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut cells = Vec::with_capacity(data.len());
        let mut labels = Vec::with_capacity(data.len());
        let mut priors = vec![0; label_names.len()];
        for example in data {
            if example.features.len() != size {
                return Err(Error::LengthMismatch {
                    expected: size,
                    actual: example.features.len(),
                });
            }
            cells.push(encode(&example.features, &levels)?.cells().to_vec());
            let idx = label_names
                .binary_search(&example.label)
                .unwrap_or_default();
            labels.push(idx);
            priors[idx] += 1;
        }
        Ok(Self {
            levels,
            size,
            cells,
            labels,
            label_names,
            priors,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the winning label among `counts`: highest count, then higher
    /// training prior, then lexicographically first.
    pub fn vote(&self, counts: &[usize]) -> usize {
        vote_with(counts, &self.priors)
    }

    pub fn majority(&self) -> usize {
        self.vote(&self.priors)
    }

    /// Per-basin label tallies for `rules`, plus each example's basin id.
    pub(crate) fn tally(&self, rules: &RuleVector) -> Result<Tally> {
        if rules.len() != self.size {
            return Err(Error::LengthMismatch {
                expected: self.size,
                actual: rules.len(),
            });
        }
        let mut cache = AttractorCache::new(self.levels, rules);
        let mut index: BTreeMap<AttractorKey, usize> = BTreeMap::new();
        let mut keys = Vec::new();
        let mut counts: Vec<Vec<usize>> = Vec::new();
        let mut membership = Vec::with_capacity(self.len());
        for (cells, &label) in self.cells.iter().zip(&self.labels) {
            let key = cache.resolve(cells)?;
            let id = match index.get(key) {
                Some(&id) => id,
                None => {
                    index.insert(key.clone(), keys.len());
                    keys.push(key.clone());
                    counts.push(vec![0; self.label_names.len()]);
                    keys.len() - 1
                }
            };
            counts[id][label] += 1;
            membership.push(id);
        }
        Ok(Tally {
            keys,
            counts,
            membership,
        })
    }
}

pub(crate) struct Tally {
    pub keys: Vec<AttractorKey>,
    /// `counts[basin][label]`.
    pub counts: Vec<Vec<usize>>,
    /// Basin index of each example.
    pub membership: Vec<usize>,
}

/// Index of the largest `(count, prior)` pair; the first index wins ties.
pub(crate) fn vote_with(counts: &[usize], priors: &[usize]) -> usize {
    let mut best = 0;
    for i in 1..counts.len() {
        if (counts[i], priors[i]) > (counts[best], priors[best]) {
            best = i;
        }
    }
    best
}

/// Tallies each example's label under the attractor its encoding reaches.
pub fn fit_basins(
    rules: &RuleVector,
    data: &[LabeledExample],
    levels: &FuzzyLevels,
) -> Result<BTreeMap<AttractorKey, BasinStats>> {
    let encoded = EncodedDataset::new(data, *levels)?;
    let Tally { keys, counts, .. } = encoded.tally(rules)?;
    Ok(keys
        .into_iter()
        .zip(counts)
        .map(|(key, counts)| {
            let total: usize = counts.iter().sum();
            let max = counts.iter().copied().max().unwrap_or(0);
            let counts = encoded
                .label_names
                .iter()
                .cloned()
                .zip(counts)
                .filter(|&(_, c)| c > 0)
                .collect();
            let stats = BasinStats {
                attractor_key: key.clone(),
                counts,
                purity: max as f64 / total as f64,
            };
            (key, stats)
        })
        .collect())
}

fn prior_of(priors: &BTreeMap<Label, usize>, label: &Label) -> usize {
    priors.get(label).copied().unwrap_or(0)
}

/// Majority label per basin. Ties go to the label with the larger training
/// prior, then to the lexicographically first label.
pub fn label_basins(
    stats: &BTreeMap<AttractorKey, BasinStats>,
    priors: &BTreeMap<Label, usize>,
) -> BTreeMap<AttractorKey, BasinLabel> {
    stats
        .iter()
        .filter_map(|(key, s)| {
            let total = s.total();
            // BTreeMap order is lexicographic, so strict comparison keeps the first.
            let (label, count) =
                s.counts
                    .iter()
                    .fold(None::<(&Label, usize)>, |best, (l, &c)| match best {
                        Some((bl, bc))
                            if (bc, prior_of(priors, bl)) >= (c, prior_of(priors, l)) =>
                        {
                            Some((bl, bc))
                        }
                        _ => Some((l, c)),
                    })?;
            Some((
                key.clone(),
                BasinLabel {
                    label: label.clone(),
                    purity: count as f64 / total as f64,
                },
            ))
        })
        .collect()
}

impl TrainedModel {
    /// Fits and labels the basins of `rules` on `data`.
    pub fn fit(rules: RuleVector, data: &[LabeledExample], levels: FuzzyLevels) -> Result<Self> {
        let encoded = EncodedDataset::new(data, levels)?;
        let stats = fit_basins(&rules, data, &levels)?;
        let priors: BTreeMap<Label, usize> = encoded
            .label_names
            .iter()
            .cloned()
            .zip(encoded.priors.iter().copied())
            .collect();
        let basin_labels = label_basins(&stats, &priors)
            .into_iter()
            .map(|(k, b)| {
                (
                    k,
                    BasinLabel {
                        purity: round6(b.purity),
                        ..b
                    },
                )
            })
            .collect();
        Ok(Self {
            levels,
            size: encoded.size,
            rules,
            basin_labels,
            fallback_label: encoded.label_names[encoded.majority()].clone(),
            metadata: ModelMetadata::default(),
        })
    }

    pub fn with_metadata(mut self, metadata: ModelMetadata) -> Self {
        self.metadata = ModelMetadata {
            fitness: metadata.fitness.map(round6),
            ..metadata
        };
        self
    }

    /// Label and confidence for a feature vector. Attractors never seen in
    /// training fall back to the majority label with confidence 0.
    pub fn classify(&self, features: &[f64]) -> Result<(Label, f64)> {
        if features.len() != self.size {
            return Err(Error::LengthMismatch {
                expected: self.size,
                actual: features.len(),
            });
        }
        let lattice = encode(features, &self.levels)?;
        let mut cache = AttractorCache::new(self.levels, &self.rules);
        let key = cache.resolve(lattice.cells())?;
        Ok(match self.basin_labels.get(key) {
            Some(b) => (b.label.clone(), b.purity),
            None => (self.fallback_label.clone(), 0.0),
        })
    }

    /// Classifies many vectors, sharing one trajectory cache.
    pub fn classify_batch(&self, batch: &[Vec<f64>]) -> Result<Vec<(Label, f64)>> {
        let mut cache = AttractorCache::new(self.levels, &self.rules);
        batch
            .iter()
            .map(|features| {
                if features.len() != self.size {
                    return Err(Error::LengthMismatch {
                        expected: self.size,
                        actual: features.len(),
                    });
                }
                let lattice = encode(features, &self.levels)?;
                let key = cache.resolve(lattice.cells())?;
                Ok(match self.basin_labels.get(key) {
                    Some(b) => (b.label.clone(), b.purity),
                    None => (self.fallback_label.clone(), 0.0),
                })
            })
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_HEADER}");
        let _ = writeln!(out, "n={}", self.levels.n());
        let _ = writeln!(out, "size={}", self.size);
        let _ = writeln!(out, "boundary=null");
        let _ = writeln!(out, "fallback={}", self.fallback_label);
        let _ = writeln!(out, "rules={}", self.rules);
        if let Some(seed) = self.metadata.seed {
            let _ = writeln!(out, "seed={seed}");
        }
        if let Some(fitness) = self.metadata.fitness {
            let _ = writeln!(out, "fitness={fitness:.6}");
        }
        if let Some(generations) = self.metadata.generations {
            let _ = writeln!(out, "generations={generations}");
        }
        for (key, basin) in &self.basin_labels {
            let _ = writeln!(out, "{key}\t{}\t{:.6}", basin.label, basin.purity);
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let perr = |line: usize, msg: String| Error::Parse { line, msg };

        match lines.next() {
            Some((_, MODEL_HEADER)) => {}
            Some((_, h)) if h.starts_with(MODEL_MAGIC) => {
                return Err(Error::Version(h[MODEL_MAGIC.len()..].trim().to_string()))
            }
            Some((no, h)) => {
                return Err(perr(
                    no,
                    format!("expected header {MODEL_HEADER:?}, found {h:?}"),
                ))
            }
            None => return Err(perr(1, "empty model file".into())),
        }

        let mut field = |name: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((no, line)) => match line.split_once('=') {
                    Some((k, v)) if k == name => Ok((no, v.to_string())),
                    _ => Err(perr(no, format!("expected '{name}=' line, found {line:?}"))),
                },
                None => Err(perr(0, format!("missing '{name}=' line"))),
            }
        };

        let (no, n) = field("n")?;
        let levels = n
            .parse::<usize>()
            .map_err(|_| perr(no, format!("bad n {n:?}")))
            .and_then(|n| FuzzyLevels::new(n).map_err(|e| perr(no, e.to_string())))?;
        let (no, size) = field("size")?;
        let size: usize = size
            .parse()
            .map_err(|_| perr(no, format!("bad size {size:?}")))?;
        if size == 0 {
            return Err(perr(no, "size must be at least 1".into()));
        }
        let (no, boundary) = field("boundary")?;
        if boundary != "null" {
            return Err(perr(no, format!("unsupported boundary {boundary:?}")));
        }
        let (no, fallback) = field("fallback")?;
        let fallback_label = Label::new(fallback).map_err(|e| perr(no, e.to_string()))?;
        let (no, rules) = field("rules")?;
        let rules: RuleVector = rules.parse().map_err(|msg| perr(no, msg))?;
        if rules.len() != size {
            return Err(perr(no, format!("{} rules for size {size}", rules.len())));
        }

        let mut metadata = ModelMetadata::default();
        let mut basin_labels = BTreeMap::new();
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            if !line.contains('\t') {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| perr(no, format!("unrecognized line {line:?}")))?;
                let bad = || perr(no, format!("bad {k} value {v:?}"));
                match k {
                    "seed" => metadata.seed = Some(v.parse().map_err(|_| bad())?),
                    "fitness" => metadata.fitness = Some(v.parse().map_err(|_| bad())?),
                    "generations" => metadata.generations = Some(v.parse().map_err(|_| bad())?),
                    _ => return Err(perr(no, format!("unknown field {k:?}"))),
                }
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(perr(
                    no,
                    format!(
                        "basin line needs 3 tab-separated fields, found {}",
                        parts.len()
                    ),
                ));
            }
            let key: AttractorKey = parts[0].parse().map_err(|msg| perr(no, msg))?;
            if key.cells().len() != size || key.cells().iter().any(|&c| c > levels.top()) {
                return Err(perr(
                    no,
                    format!("attractor {key} does not fit n={} size={size}", levels.n()),
                ));
            }
            let label = Label::new(parts[1]).map_err(|e| perr(no, e.to_string()))?;
            let purity: f64 = parts[2]
                .parse()
                .map_err(|_| perr(no, format!("bad purity {:?}", parts[2])))?;
            if !(0.0..=1.0).contains(&purity) {
                return Err(perr(no, format!("purity {purity} outside [0, 1]")));
            }
            if basin_labels
                .insert(key.clone(), BasinLabel { label, purity })
                .is_some()
            {
                return Err(perr(no, format!("duplicate attractor {key}")));
            }
        }
        Ok(Self {
            levels,
            size,
            rules,
            basin_labels,
            fallback_label,
            metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::{make_levels, LocalRule, RuleId};
    use crate::fixtures::table1;

    fn label(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn uniform(id: RuleId) -> RuleVector {
        RuleVector::uniform(LocalRule::plain(id), 3)
    }

    #[test]
    fn label_validation() {
        assert!(Label::new("").is_err());
        assert!(Label::new("a b").is_err());
        assert_eq!(label("promoter").as_str(), "promoter");
    }

    #[test]
    fn encode_examples() {
        let l = make_levels(6).unwrap();
        assert_eq!(
            encode(&[0.0, 0.0, 0.45], &l).unwrap().values(),
            vec![0.0, 0.0, 0.4]
        );
        assert_eq!(
            encode(&[1.0, 1.0, 1.0], &l).unwrap().values(),
            vec![1.0, 1.0, 1.0]
        );
        assert_eq!(
            encode(&[0.75, 1.0, 0.0], &l).unwrap().values(),
            vec![0.8, 1.0, 0.0]
        );
        assert!(matches!(encode(&[0.2, 1.5], &l), Err(Error::Domain { .. })));
    }

    #[test]
    fn fit_basins_zero_rules() {
        let l = make_levels(6).unwrap();
        let stats = fit_basins(&uniform(RuleId::Zero), &table1(), &l).unwrap();
        assert_eq!(stats.len(), 1);
        let s = &stats[&AttractorKey(vec![0, 0, 0])];
        assert_eq!(s.counts[&label("C")], 12);
        assert_eq!(s.counts[&label("N")], 10);
    }

    #[test]
    fn fit_basins_identity_groups_quantized_rows() {
        let l = make_levels(6).unwrap();
        let data = table1();
        let stats = fit_basins(&uniform(RuleId::Identity), &data, &l).unwrap();
        // independent grouping of the quantized rows
        let mut groups: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        for e in &data {
            let key: Vec<u8> = e
                .features
                .iter()
                .map(|&x| l.quantize(x).unwrap().index())
                .collect();
            *groups.entry(key).or_default() += 1;
        }
        assert_eq!(stats.len(), groups.len());
        assert_eq!(stats.len(), 19);
        for (k, count) in groups {
            assert_eq!(stats[&AttractorKey(k)].total(), count);
        }
    }

    #[test]
    fn fit_basins_single_and_empty() {
        let l = make_levels(6).unwrap();
        let one = vec![LabeledExample::new(vec![0.3, 0.1, 0.9], label("C")).unwrap()];
        let stats = fit_basins(&uniform(RuleId::Or3), &one, &l).unwrap();
        assert_eq!(stats.len(), 1);
        assert_eq!(stats.values().next().unwrap().purity, 1.0);
        assert_eq!(
            fit_basins(&uniform(RuleId::Or3), &[], &l),
            Err(Error::EmptyDataset)
        );
    }

    fn stats_of(counts: &[(&str, usize)]) -> BTreeMap<AttractorKey, BasinStats> {
        let counts: BTreeMap<Label, usize> = counts.iter().map(|&(l, c)| (label(l), c)).collect();
        let total: usize = counts.values().sum();
        let max = *counts.values().max().unwrap();
        let key = AttractorKey(vec![0]);
        BTreeMap::from([(
            key.clone(),
            BasinStats {
                attractor_key: key,
                counts,
                purity: max as f64 / total as f64,
            },
        )])
    }

    #[test]
    fn label_basins_examples() {
        let priors = BTreeMap::from([(label("C"), 12), (label("N"), 10)]);
        let key = AttractorKey(vec![0]);
        let out = label_basins(&stats_of(&[("C", 12), ("N", 10)]), &priors);
        assert_eq!(
            out[&key],
            BasinLabel {
                label: label("C"),
                purity: 12.0 / 22.0
            }
        );
        let out = label_basins(&stats_of(&[("C", 1)]), &priors);
        assert_eq!(
            out[&key],
            BasinLabel {
                label: label("C"),
                purity: 1.0
            }
        );
        let out = label_basins(&stats_of(&[("C", 2), ("N", 2)]), &priors);
        assert_eq!(
            out[&key],
            BasinLabel {
                label: label("C"),
                purity: 0.5
            }
        );
        // prior beats lexicographic order
        let priors = BTreeMap::from([(label("C"), 3), (label("N"), 10)]);
        let out = label_basins(&stats_of(&[("C", 2), ("N", 2)]), &priors);
        assert_eq!(out[&key].label, label("N"));
        // equal priors fall through to lexicographic order
        let priors = BTreeMap::from([(label("A"), 4), (label("B"), 4)]);
        let out = label_basins(&stats_of(&[("B", 1), ("A", 1)]), &priors);
        assert_eq!(out[&key].label, label("A"));
    }

    #[test]
    fn classify_identity_model_on_table1() {
        let l = make_levels(6).unwrap();
        let model = TrainedModel::fit(uniform(RuleId::Identity), &table1(), l).unwrap();
        assert_eq!(model.fallback_label, label("C"));
        assert_eq!(
            model.classify(&[0.0, 0.0, 0.45]).unwrap(),
            (label("C"), 1.0)
        );
        // rows 9 (C), 17 (N) and 22 (N) all quantize to (0, .4, .2)
        assert_eq!(
            model.classify(&[0.0, 0.5, 0.25]).unwrap(),
            (label("N"), round6(2.0 / 3.0))
        );
        assert!(matches!(
            model.classify(&[0.1, 0.2]),
            Err(Error::LengthMismatch {
                expected: 3,
                actual: 2
            })
        ));
        // unseen attractor
        assert_eq!(model.classify(&[0.6, 0.0, 0.6]).unwrap(), (label("C"), 0.0));
    }

    #[test]
    fn classify_is_deterministic_and_bounded() {
        let l = make_levels(6).unwrap();
        let rules: RuleVector = "MAJ3:N,OR_LR:C,AND3:N".parse().unwrap();
        let model = TrainedModel::fit(rules, &table1(), l).unwrap();
        for e in table1() {
            let a = model.classify(&e.features).unwrap();
            assert_eq!(a, model.classify(&e.features).unwrap());
            assert!((0.0..=1.0).contains(&a.1));
            assert!(a.1 > 0.0, "every training attractor is labelled");
        }
        let batch: Vec<Vec<f64>> = table1().into_iter().map(|e| e.features).collect();
        let singles: Vec<_> = batch.iter().map(|f| model.classify(f).unwrap()).collect();
        assert_eq!(model.classify_batch(&batch).unwrap(), singles);
    }

    #[test]
    fn model_text_format() {
        let l = make_levels(6).unwrap();
        let model = TrainedModel::fit(uniform(RuleId::Zero), &table1(), l)
            .unwrap()
            .with_metadata(ModelMetadata {
                seed: Some(7),
                fitness: Some(12.0 / 22.0),
                generations: Some(3),
            });
        let text = model.serialize();
        assert_eq!(
            text,
            "AIS-INMACA-MODEL v1\nn=6\nsize=3\nboundary=null\nfallback=C\n\
             rules=ZERO:N,ZERO:N,ZERO:N\nseed=7\nfitness=0.545455\ngenerations=3\n0,0,0\tC\t0.545455\n"
        );
        let back = TrainedModel::deserialize(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn model_parse_errors() {
        let good = "AIS-INMACA-MODEL v1\nn=6\nsize=3\nboundary=null\nfallback=C\nrules=ZERO:N,ZERO:N,ZERO:N\n0,0,0\tC\t0.500000\n";
        assert!(TrainedModel::deserialize(good).is_ok());

        let bad_rule = good.replace("rules=ZERO:N,ZERO:N", "rules=ZERO:N,XOR:N");
        match TrainedModel::deserialize(&bad_rule) {
            Err(Error::Parse { line: 6, msg }) => assert!(msg.contains("XOR"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let v2 = good.replace("v1", "v2");
        assert_eq!(
            TrainedModel::deserialize(&v2),
            Err(Error::Version("v2".into()))
        );
        let bad_basin = good.replace("0,0,0\tC", "0,0,9\tC");
        assert!(matches!(
            TrainedModel::deserialize(&bad_basin),
            Err(Error::Parse { line: 7, .. })
        ));
        let missing = good.replace("boundary=null\n", "");
        assert!(matches!(
            TrainedModel::deserialize(&missing),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            TrainedModel::deserialize("hello"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
