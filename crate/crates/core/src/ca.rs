//! Fuzzy cellular automata over quantized state levels.
//!
//! A lattice is a one-dimensional row of cells, each holding one of `n`
//! levels `j / (n - 1)`. Cells are stored as level indices, so every rule is
//! evaluated in exact integer arithmetic and re-quantized back onto the level
//! set; absent neighbours at the edges read as level 0 (null boundary).
//!
//! With a finite state space every trajectory ends in a cycle. The canonical
//! [`AttractorKey`] of a cycle is its lexicographically smallest member, which
//! labels the basin of every configuration draining into it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest state space [`basin_map`] will enumerate.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Number of distinct `(rule, complement)` genes a cell can carry.
pub const GENE_COUNT: usize = RuleId::ALL.len() * 2;

/// The quantized level set `{ j / (n - 1) : j = 0..n }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FuzzyLevels {
    n: u16,
}

/// Builds the level set for `n` states. Indices are stored as `u8`, so `n`
/// is limited to `2..=256`.
pub fn make_levels(n: usize) -> Result<FuzzyLevels> {
    FuzzyLevels::new(n)
}

impl FuzzyLevels {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=256).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "number of fuzzy states must be in 2..=256, got {n}"
            )));
        }
        Ok(Self { n: n as u16 })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Index of the top level (value 1).
    pub fn top(&self) -> u8 {
        (self.n - 1) as u8
    }

    /// Value of level `j`, correctly rounded from the exact ratio `j / (n - 1)`.
    pub fn value(&self, j: u8) -> f64 {
        f64::from(j) / f64::from(self.n - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.value(j as u8)).collect()
    }

    /// Index of `1 - value(j)`.
    pub fn complement(&self, j: u8) -> u8 {
        self.top() - j
    }

    /// Number of lattice configurations of the given width, saturating.
    pub fn state_space(&self, size: usize) -> u128 {
        let mut total: u128 = 1;
        for _ in 0..size {
            total = total.saturating_mul(self.n as u128);
        }
        total
    }

    /// Nearest level to a real `x` in `[0, 1]`; exact midpoints go down.
    pub fn quantize(&self, x: f64) -> Result<FuzzyState> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { value: x });
        }
        let scaled = x * f64::from(self.n - 1);
        let floor = scaled.floor();
        let mut j = floor as u8;
        if scaled - floor > 0.5 {
            j += 1;
        }
        Ok(FuzzyState(j.min(self.top())))
    }

    /// Nearest level to the rational `num / den` (with `num <= den`), ties down.
    fn quantize_ratio(&self, num: u64, den: u64) -> u8 {
        let scaled = num * u64::from(self.n - 1);
        let j = scaled / den;
        let rem = scaled % den;
        if 2 * rem > den {
            (j + 1) as u8
        } else {
            j as u8
        }
    }
}

impl Default for FuzzyLevels {
    fn default() -> Self {
        Self { n: 6 }
    }
}

pub fn quantize(x: f64, levels: &FuzzyLevels) -> Result<FuzzyState> {
    levels.quantize(x)
}

/// A cell state, held as an index into its [`FuzzyLevels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuzzyState(pub u8);

impl FuzzyState {
    pub fn index(self) -> u8 {
        self.0
    }

    pub fn value(self, levels: &FuzzyLevels) -> f64 {
        levels.value(self.0)
    }
}

/// A lattice configuration with null boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuzzyLattice {
    levels: FuzzyLevels,
    cells: Vec<u8>,
}

impl FuzzyLattice {
    pub fn new(levels: FuzzyLevels, cells: Vec<u8>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidParameter(
                "lattice must have at least one cell".into(),
            ));
        }
        if let Some(&bad) = cells.iter().find(|&&c| c > levels.top()) {
            return Err(Error::InvalidParameter(format!(
                "level index {bad} out of range for n = {}",
                levels.n()
            )));
        }
        Ok(Self { levels, cells })
    }

    /// Quantizes each real value onto the level set.
    pub fn from_values(levels: FuzzyLevels, values: &[f64]) -> Result<Self> {
        let cells = values
            .iter()
            .map(|&x| levels.quantize(x).map(FuzzyState::index))
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels, cells)
    }

    pub fn levels(&self) -> FuzzyLevels {
        self.levels
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| self.levels.value(c)).collect()
    }
}

/// The local rule catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Zero,
    Identity,
    Left,
    Right,
    /// Product of left, self and right.
    And3,
    /// Bounded sum of left, self and right.
    Or3,
    AndLr,
    OrLr,
    /// Median of the neighbourhood.
    Maj3,
}

impl RuleId {
    pub const ALL: [RuleId; 9] = [
        RuleId::Zero,
        RuleId::Identity,
        RuleId::Left,
        RuleId::Right,
        RuleId::And3,
        RuleId::Or3,
        RuleId::AndLr,
        RuleId::OrLr,
        RuleId::Maj3,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RuleId::Zero => "ZERO",
            RuleId::Identity => "IDENTITY",
            RuleId::Left => "LEFT",
            RuleId::Right => "RIGHT",
            RuleId::And3 => "AND3",
            RuleId::Or3 => "OR3",
            RuleId::AndLr => "AND_LR",
            RuleId::OrLr => "OR_LR",
            RuleId::Maj3 => "MAJ3",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.token() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalRule {
    pub id: RuleId,
    pub complemented: bool,
}

impl LocalRule {
    pub const fn new(id: RuleId, complemented: bool) -> Self {
        Self { id, complemented }
    }

    pub const fn plain(id: RuleId) -> Self {
        Self::new(id, false)
    }

    /// Gene index in `0..GENE_COUNT`; inverse of [`LocalRule::from_gene`].
    pub fn gene(self) -> usize {
        let base = RuleId::ALL.iter().position(|&r| r == self.id).unwrap_or(0);
        base * 2 + usize::from(self.complemented)
    }

    pub fn from_gene(gene: usize) -> Self {
        let gene = gene % GENE_COUNT;
        Self::new(RuleId::ALL[gene / 2], gene % 2 == 1)
    }

    /// Raw rule output as an exact ratio `(num, den)` with `num <= den`.
    /// Inputs are level indices over `top = n - 1`.
    fn raw(self, l: u64, s: u64, r: u64, top: u64) -> (u64, u64) {
        let (num, den) = match self.id {
            RuleId::Zero => (0, 1),
            RuleId::Identity => (s, top),
            RuleId::Left => (l, top),
            RuleId::Right => (r, top),
            RuleId::And3 => (l * s * r, top * top * top),
            RuleId::Or3 => ((l + s + r).min(top), top),
            RuleId::AndLr => (l * r, top * top),
            RuleId::OrLr => ((l + r).min(top), top),
            RuleId::Maj3 => (l.max(s).min(l.min(s).max(r)), top),
        };
        if self.complemented {
            (den - num, den)
        } else {
            (num, den)
        }
    }

    #[inline]
    fn eval(self, l: u8, s: u8, r: u8, levels: &FuzzyLevels) -> u8 {
        let top = u64::from(levels.top());
        let (num, den) = self.raw(u64::from(l), u64::from(s), u64::from(r), top);
        levels.quantize_ratio(num, den)
    }
}

impl fmt::Display for LocalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}",
            self.id,
            if self.complemented { 'C' } else { 'N' }
        )
    }
}

/// One local rule per cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleVector(Vec<LocalRule>);

impl RuleVector {
    pub fn new(rules: Vec<LocalRule>) -> Self {
        Self(rules)
    }

    pub fn uniform(rule: LocalRule, size: usize) -> Self {
        Self(vec![rule; size])
    }

    pub fn rules(&self) -> &[LocalRule] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<LocalRule> {
        self.0
    }
}

impl fmt::Display for RuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rule) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{rule}")?;
        }
        Ok(())
    }
}

/// Parses the `ID:FLAG,...` form written by [`RuleVector`]'s `Display`.
impl FromStr for RuleVector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.split(',')
            .map(|item| {
                let (id, flag) = item
                    .split_once(':')
                    .ok_or_else(|| format!("rule {item:?} missing ':N' or ':C' flag"))?;
                let complemented = match flag {
                    "N" => false,
                    "C" => true,
                    other => return Err(format!("unknown complement flag {other:?}")),
                };
                Ok(LocalRule::new(id.parse()?, complemented))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(RuleVector)
    }
}

pub fn apply_rule(
    left: FuzzyState,
    this: FuzzyState,
    right: FuzzyState,
    rule: LocalRule,
    levels: &FuzzyLevels,
) -> FuzzyState {
    FuzzyState(rule.eval(left.0, this.0, right.0, levels))
}

#[inline]
fn step_cells(levels: &FuzzyLevels, rules: &[LocalRule], src: &[u8], dst: &mut Vec<u8>) {
    dst.clear();
    let last = src.len() - 1;
    for (i, rule) in rules.iter().enumerate() {
        let l = if i == 0 { 0 } else { src[i - 1] };
        let r = if i == last { 0 } else { src[i + 1] };
        dst.push(rule.eval(l, src[i], r, levels));
    }
}

/// One synchronous update of every cell.
pub fn step(lattice: &FuzzyLattice, rules: &RuleVector) -> Result<FuzzyLattice> {
    check_width(lattice.len(), rules)?;
    let mut next = Vec::with_capacity(lattice.len());
    step_cells(&lattice.levels, &rules.0, &lattice.cells, &mut next);
    Ok(FuzzyLattice {
        levels: lattice.levels,
        cells: next,
    })
}

fn check_width(size: usize, rules: &RuleVector) -> Result<()> {
    if rules.len() != size {
        return Err(Error::LengthMismatch {
            expected: size,
            actual: rules.len(),
        });
    }
    Ok(())
}

/// Canonical cycle label: the lexicographically smallest cycle member.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttractorKey(pub Vec<u8>);

impl AttractorKey {
    pub fn cells(&self) -> &[u8] {
        &self.0
    }

    pub fn values(&self, levels: &FuzzyLevels) -> Vec<f64> {
        self.0.iter().map(|&c| levels.value(c)).collect()
    }
}

impl fmt::Display for AttractorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for AttractorKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|_| format!("bad level index {t:?}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(AttractorKey)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionResult {
    pub attractor_key: AttractorKey,
    pub transient_len: u64,
    pub cycle_len: u64,
}

/// Iterates until a configuration repeats. Fails with [`Error::StepLimit`]
/// if no repeat occurs within `max_steps` updates; any `max_steps` of at
/// least `n^size` always succeeds.
pub fn evolve(
    lattice: &FuzzyLattice,
    rules: &RuleVector,
    max_steps: u64,
) -> Result<EvolutionResult> {
    check_width(lattice.len(), rules)?;
    let levels = lattice.levels;
    let mut seen: HashMap<Vec<u8>, u64> = HashMap::new();
    let mut history: Vec<Vec<u8>> = Vec::new();
    let mut current = lattice.cells.clone();
    let mut next = Vec::with_capacity(current.len());
    let mut t: u64 = 0;
    loop {
        if let Some(&first) = seen.get(&current) {
            let cycle = &history[first as usize..];
            let key = cycle
                .iter()
                .min()
                .cloned()
                .unwrap_or_else(|| current.clone());
            return Ok(EvolutionResult {
                attractor_key: AttractorKey(key),
                transient_len: first,
                cycle_len: t - first,
            });
        }
        if t == max_steps {
            return Err(Error::StepLimit(max_steps));
        }
        seen.insert(current.clone(), t);
        history.push(current.clone());
        step_cells(&levels, &rules.0, &current, &mut next);
        std::mem::swap(&mut current, &mut next);
        t += 1;
    }
}

/// [`evolve`] with the pigeonhole bound `n^size` as step limit.
pub fn evolve_to_attractor(lattice: &FuzzyLattice, rules: &RuleVector) -> Result<EvolutionResult> {
    let bound = lattice
        .levels
        .state_space(lattice.len())
        .min(u64::MAX as u128) as u64;
    evolve(lattice, rules, bound)
}

/// Memoized trajectory resolver for one rule vector. Every configuration
/// visited along a trajectory is cached with its attractor, so repeated
/// lookups over a dataset or a full enumeration stay linear.
pub struct AttractorCache<'a> {
    levels: FuzzyLevels,
    rules: &'a [LocalRule],
    memo: HashMap<Vec<u8>, u32>,
    keys: Vec<AttractorKey>,
    path: Vec<Vec<u8>>,
    buf: Vec<u8>,
}

impl<'a> AttractorCache<'a> {
    pub fn new(levels: FuzzyLevels, rules: &'a RuleVector) -> Self {
        Self {
            levels,
            rules: &rules.0,
            memo: HashMap::new(),
            keys: Vec::new(),
            path: Vec::new(),
            buf: Vec::new(),
        }
    }

    /// Attractor of the configuration `cells`, which must match the rule width.
    pub fn resolve(&mut self, cells: &[u8]) -> Result<&AttractorKey> {
        if cells.len() != self.rules.len() {
            return Err(Error::LengthMismatch {
                expected: self.rules.len(),
                actual: cells.len(),
            });
        }
        let id = self.resolve_id(cells);
        Ok(&self.keys[id as usize])
    }

    fn resolve_id(&mut self, cells: &[u8]) -> u32 {
        if let Some(&id) = self.memo.get(cells) {
            return id;
        }
        self.path.clear();
        let mut current = cells.to_vec();
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let id = loop {
            if let Some(&id) = self.memo.get(&current) {
                break id;
            }
            if let Some(&first) = index.get(&current) {
                let key = self.path[first..].iter().min().cloned().unwrap_or_default();
                self.keys.push(AttractorKey(key));
                break (self.keys.len() - 1) as u32;
            }
            index.insert(current.clone(), self.path.len());
            self.path.push(current.clone());
            step_cells(&self.levels, self.rules, &current, &mut self.buf);
            std::mem::swap(&mut current, &mut self.buf);
        };
        for state in self.path.drain(..) {
            self.memo.insert(state, id);
        }
        id
    }
}

/// Groups every configuration of width `size` by the attractor it reaches.
/// Configurations inside each basin are listed in lexicographic order.
pub fn basin_map(
    levels: &FuzzyLevels,
    size: usize,
    rules: &RuleVector,
) -> Result<BTreeMap<AttractorKey, Vec<Vec<u8>>>> {
    check_width(size, rules)?;
    if size == 0 {
        return Err(Error::InvalidParameter(
            "lattice size must be at least 1".into(),
        ));
    }
    let states = levels.state_space(size);
    if states > MAX_ENUMERATION {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: MAX_ENUMERATION,
        });
    }
    let mut cache = AttractorCache::new(*levels, rules);
    let mut basins: BTreeMap<AttractorKey, Vec<Vec<u8>>> = BTreeMap::new();
    let mut config = vec![0u8; size];
    for _ in 0..states {
        let key = cache.resolve(&config)?.clone();
        basins.entry(key).or_default().push(config.clone());
        // odometer increment, last cell fastest
        for cell in config.iter_mut().rev() {
            if *cell < levels.top() {
                *cell += 1;
                break;
            }
            *cell = 0;
        }
    }
    Ok(basins)
}
