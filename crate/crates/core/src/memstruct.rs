//! Memory structures: finite first-order models of a heap together with the
//! program variables and the auxiliary values `null`, `T` and `F`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Largest universe a structure may have. Element sets are 64-bit masks.
pub const MAX_UNIVERSE: usize = 64;

pub const NULL: &str = "null";
pub const TRUE: &str = "T";
pub const FALSE: &str = "F";
pub const ADDRESSES: &str = "Addresses";
pub const ALLOC: &str = "Alloc";
pub const POSSIBLE_TARGETS: &str = "PossibleTargets";
pub const MEMPOOL: &str = "MemPool";
pub const AUX: &str = "Aux";

pub const GHOST_SUFFIX: &str = "_gho";
pub const EXT_SUFFIX: &str = "_ext";

/// A set of universe elements, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ElemSet(pub u64);

impl ElemSet {
    pub const EMPTY: ElemSet = ElemSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            ElemSet(u64::MAX)
        } else {
            ElemSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(e: usize) -> Self {
        ElemSet(1u64 << e)
    }

    pub fn contains(self, e: usize) -> bool {
        e < 64 && (self.0 >> e) & 1 == 1
    }

    pub fn insert(&mut self, e: usize) {
        self.0 |= 1u64 << e;
    }

    pub fn remove(&mut self, e: usize) {
        self.0 &= !(1u64 << e);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: ElemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn complement(self, n: usize) -> ElemSet {
        ElemSet(!self.0 & ElemSet::full(n).0)
    }

    pub fn first(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let e = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(e)
            }
        })
    }
}

impl FromIterator<usize> for ElemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ElemSet::EMPTY;
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl BitOr for ElemSet {
    type Output = ElemSet;
    fn bitor(self, rhs: ElemSet) -> ElemSet {
        ElemSet(self.0 | rhs.0)
    }
}

impl BitAnd for ElemSet {
    type Output = ElemSet;
    fn bitand(self, rhs: ElemSet) -> ElemSet {
        ElemSet(self.0 & rhs.0)
    }
}

impl Sub for ElemSet {
    type Output = ElemSet;
    fn sub(self, rhs: ElemSet) -> ElemSet {
        ElemSet(self.0 & !rhs.0)
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A binary relation over a universe of `n` elements; row `a` holds the successors of `a`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    rows: SmallVec<[u64; 8]>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { rows: SmallVec::from_elem(0, n) }
    }

    pub fn full(n: usize) -> Self {
        Relation::product(ElemSet::full(n), ElemSet::full(n), n)
    }

    pub fn product(a: ElemSet, b: ElemSet, n: usize) -> Self {
        let rows = (0..n).map(|i| if a.contains(i) { b.0 } else { 0 }).collect();
        Relation { rows }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Relation::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// Number of universe elements the relation ranges over.
    pub fn universe_size(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        ElemSet(self.rows[a]).contains(b)
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a] |= 1u64 << b;
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.rows[a] &= !(1u64 << b);
    }

    pub fn row(&self, a: usize) -> ElemSet {
        ElemSet(self.rows[a])
    }

    pub fn set_row(&mut self, a: usize, s: ElemSet) {
        self.rows[a] = s.0;
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(a, &r)| ElemSet(r).iter().map(move |b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn inverse(&self) -> Relation {
        let n = self.rows.len();
        let mut out = Relation::empty(n);
        for (a, b) in self.pairs() {
            out.insert(b, a);
        }
        out
    }

    pub fn union(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a & !b)
    }

    fn zip(&self, other: &Relation, op: impl Fn(u64, u64) -> u64) -> Relation {
        let rows = self.rows.iter().zip(other.rows.iter()).map(|(&a, &b)| op(a, b)).collect();
        Relation { rows }
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows.iter().zip(other.rows.iter()).all(|(&a, &b)| a & !b == 0)
    }

    /// Every element has at most one successor.
    pub fn is_functional(&self) -> bool {
        self.rows.iter().all(|r| r.count_ones() <= 1)
    }

    /// Elements with at least one successor inside `set`.
    pub fn preimage(&self, set: ElemSet) -> ElemSet {
        self.rows.iter().enumerate().filter(|(_, &r)| r & set.0 != 0).map(|(a, _)| a).collect()
    }

    pub fn domain(&self) -> ElemSet {
        self.preimage(ElemSet(u64::MAX))
    }

    pub fn range(&self) -> ElemSet {
        ElemSet(self.rows.iter().fold(0, |acc, r| acc | r))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Constant,
    Concept,
    Role,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("symbol `{0}` is already declared")]
    Duplicate(String),
    #[error("symbol `{0}` is not declared")]
    Unknown(String),
    #[error("symbol `{0}` cannot have a ghost twin")]
    NotGhostable(String),
}

/// The signature a structure interprets, plus the bookkeeping for ghost and ext twins.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub constants: BTreeSet<String>,
    pub unary: BTreeSet<String>,
    pub binary: BTreeSet<String>,
    pub fields: BTreeSet<String>,
    pub vars: BTreeSet<String>,
    pub ghost_of: BTreeMap<String, String>,
    pub ext_of: BTreeMap<String, String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

impl Vocabulary {
    /// The required symbols only.
    pub fn new() -> Self {
        let constants = [NULL, TRUE, FALSE].iter().map(|s| s.to_string()).collect();
        let unary = [ADDRESSES, ALLOC, POSSIBLE_TARGETS, MEMPOOL, AUX].iter().map(|s| s.to_string()).collect();
        Vocabulary {
            constants,
            unary,
            binary: BTreeSet::new(),
            fields: BTreeSet::new(),
            vars: BTreeSet::new(),
            ghost_of: BTreeMap::new(),
            ext_of: BTreeMap::new(),
        }
    }

    pub fn kind(&self, name: &str) -> Option<SymbolKind> {
        if self.constants.contains(name) {
            Some(SymbolKind::Constant)
        } else if self.unary.contains(name) {
            Some(SymbolKind::Concept)
        } else if self.binary.contains(name) {
            Some(SymbolKind::Role)
        } else {
            None
        }
    }

    fn check_fresh(&self, name: &str) -> Result<(), VocabError> {
        match self.kind(name) {
            Some(_) => Err(VocabError::Duplicate(name.to_string())),
            None => Ok(()),
        }
    }

    pub fn add_field(&mut self, name: &str) -> Result<(), VocabError> {
        self.check_fresh(name)?;
        self.binary.insert(name.to_string());
        self.fields.insert(name.to_string());
        Ok(())
    }

    pub fn add_var(&mut self, name: &str) -> Result<(), VocabError> {
        self.check_fresh(name)?;
        self.constants.insert(name.to_string());
        self.vars.insert(name.to_string());
        Ok(())
    }

    /// A constant outside the memory vocabulary proper, such as a label or `abo`.
    pub fn add_constant(&mut self, name: &str) -> Result<(), VocabError> {
        self.check_fresh(name)?;
        self.constants.insert(name.to_string());
        Ok(())
    }

    pub fn add_concept(&mut self, name: &str) -> Result<(), VocabError> {
        self.check_fresh(name)?;
        self.unary.insert(name.to_string());
        Ok(())
    }

    pub fn add_role(&mut self, name: &str) -> Result<(), VocabError> {
        self.check_fresh(name)?;
        self.binary.insert(name.to_string());
        Ok(())
    }

    /// Declares a ghost twin for `symbol` and returns the twin's name.
    /// The twin of a field is an ordinary binary relation.
    pub fn add_ghost(&mut self, symbol: &str) -> Result<String, VocabError> {
        let kind = self.kind(symbol).ok_or_else(|| VocabError::Unknown(symbol.to_string()))?;
        if self.is_required(symbol) || self.is_ghost(symbol) || self.is_ext(symbol) {
            return Err(VocabError::NotGhostable(symbol.to_string()));
        }
        if let Some(existing) = self.ghost_of.get(symbol) {
            return Ok(existing.clone());
        }
        let twin = format!("{symbol}{GHOST_SUFFIX}");
        match kind {
            SymbolKind::Constant => self.add_constant(&twin)?,
            SymbolKind::Concept => self.add_concept(&twin)?,
            SymbolKind::Role => self.add_role(&twin)?,
        }
        self.ghost_of.insert(symbol.to_string(), twin.clone());
        Ok(twin)
    }

    pub fn is_required(&self, name: &str) -> bool {
        matches!(name, NULL | TRUE | FALSE | ALLOC | AUX | ADDRESSES)
    }

    pub fn is_ghost(&self, name: &str) -> bool {
        self.ghost_of.values().any(|g| g == name)
    }

    pub fn is_ext(&self, name: &str) -> bool {
        self.ext_of.values().any(|g| g == name)
    }

    pub fn is_field(&self, name: &str) -> bool {
        self.fields.contains(name)
    }

    pub fn is_var(&self, name: &str) -> bool {
        self.vars.contains(name)
    }

    /// Relation symbols whose post-state value is not determined by the program:
    /// every unary or binary relation except the required ones, PossibleTargets,
    /// MemPool, fields, ghost twins and ext twins.
    pub fn rem_symbols(&self) -> Vec<String> {
        self.unary
            .iter()
            .chain(self.binary.iter())
            .filter(|s| {
                !self.is_required(s)
                    && s.as_str() != POSSIBLE_TARGETS
                    && s.as_str() != MEMPOOL
                    && !self.is_field(s)
                    && !self.is_ghost(s)
                    && !self.is_ext(s)
            })
            .cloned()
            .collect()
    }

    pub fn ext_name(&self, symbol: &str) -> String {
        self.ext_of.get(symbol).cloned().unwrap_or_else(|| format!("{symbol}{EXT_SUFFIX}"))
    }

    /// The vocabulary extended with an ext twin for every symbol of `rem_symbols`.
    pub fn with_ext(&self) -> Result<Vocabulary, VocabError> {
        let mut out = self.clone();
        for r in self.rem_symbols() {
            if out.ext_of.contains_key(&r) {
                continue;
            }
            let twin = format!("{r}{EXT_SUFFIX}");
            match self.kind(&r) {
                Some(SymbolKind::Concept) => out.add_concept(&twin)?,
                Some(SymbolKind::Role) => out.add_role(&twin)?,
                _ => unreachable!("rem symbols are relations"),
            }
            out.ext_of.insert(r, twin);
        }
        Ok(out)
    }

    /// Concepts declared by the user: unary symbols that are neither required,
    /// partition-of-addresses symbols, ghosts nor ext twins.
    pub fn user_concepts(&self) -> Vec<String> {
        self.unary
            .iter()
            .filter(|s| {
                !self.is_required(s)
                    && s.as_str() != POSSIBLE_TARGETS
                    && s.as_str() != MEMPOOL
                    && !self.is_ghost(s)
                    && !self.is_ext(s)
            })
            .cloned()
            .collect()
    }

    /// Whether a relation must avoid MemPool elements. Ext twins are post-state
    /// copies and are exempt.
    pub fn avoids_mempool(&self, name: &str) -> bool {
        name != MEMPOOL && name != ADDRESSES && !self.is_field(name) && !self.is_ext(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemError {
    #[error("element `{0}` is not in MemPool")]
    NotInMemPool(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("structures have different universes")]
    UniverseMismatch,
    #[error("relation `{0}` is not interpreted")]
    MissingRelation(String),
    #[error("universe of {0} elements exceeds the limit of {MAX_UNIVERSE}")]
    TooLarge(usize),
}

/// A finite structure. Elements are the indices `0..universe.len()`; `universe`
/// holds their display names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryStructure {
    universe: Vec<String>,
    constants: BTreeMap<String, usize>,
    unary: BTreeMap<String, ElemSet>,
    binary: BTreeMap<String, Relation>,
}

impl MemoryStructure {
    /// A structure over the given elements with nothing interpreted.
    pub fn new(universe: Vec<String>) -> Result<Self, MemError> {
        if universe.len() > MAX_UNIVERSE {
            return Err(MemError::TooLarge(universe.len()));
        }
        Ok(MemoryStructure { universe, constants: BTreeMap::new(), unary: BTreeMap::new(), binary: BTreeMap::new() })
    }

    /// The smallest legal shape: elements `null, T, F` followed by the given
    /// addresses split into Alloc, PossibleTargets and MemPool, every field of
    /// every address pointing to `null`, every other symbol empty and every
    /// variable bound to `null`.
    pub fn skeleton(vocab: &Vocabulary, alloc: usize, targets: usize, pool: usize) -> Self {
        let mut names: Vec<String> = vec![NULL.into(), TRUE.into(), FALSE.into()];
        for i in 0..alloc + targets + pool {
            names.push(format!("m{i}"));
        }
        let n = names.len();
        let mut m = MemoryStructure::new(names).expect("skeleton size");
        m.set_const(NULL, 0);
        m.set_const(TRUE, 1);
        m.set_const(FALSE, 2);
        let addresses = ElemSet::full(n) - ElemSet::full(3);
        m.set_unary(AUX, ElemSet::full(3));
        m.set_unary(ADDRESSES, addresses);
        m.set_unary(ALLOC, (3..3 + alloc).collect());
        m.set_unary(POSSIBLE_TARGETS, (3 + alloc..3 + alloc + targets).collect());
        m.set_unary(MEMPOOL, (3 + alloc + targets..n).collect());
        for c in &vocab.constants {
            if !m.constants.contains_key(c) {
                m.set_const(c, 0);
            }
        }
        for u in &vocab.unary {
            m.unary.entry(u.clone()).or_insert(ElemSet::EMPTY);
        }
        for b in &vocab.binary {
            let mut r = Relation::empty(n);
            if vocab.is_field(b) {
                for a in addresses.iter() {
                    r.insert(a, 0);
                }
            }
            m.binary.insert(b.clone(), r);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn names(&self) -> &[String] {
        &self.universe
    }

    pub fn name(&self, e: usize) -> &str {
        &self.universe[e]
    }

    pub fn element(&self, name: &str) -> Option<usize> {
        self.universe.iter().position(|n| n == name)
    }

    pub fn all(&self) -> ElemSet {
        ElemSet::full(self.size())
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn unary(&self, name: &str) -> Option<ElemSet> {
        self.unary.get(name).copied()
    }

    pub fn binary(&self, name: &str) -> Option<&Relation> {
        self.binary.get(name)
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    pub fn unary_map(&self) -> &BTreeMap<String, ElemSet> {
        &self.unary
    }

    pub fn binary_map(&self) -> &BTreeMap<String, Relation> {
        &self.binary
    }

    pub fn set_const(&mut self, name: &str, e: usize) {
        self.constants.insert(name.to_string(), e);
    }

    pub fn set_unary(&mut self, name: &str, s: ElemSet) {
        self.unary.insert(name.to_string(), s);
    }

    pub fn set_binary(&mut self, name: &str, r: Relation) {
        self.binary.insert(name.to_string(), r);
    }

    pub fn remove_symbol(&mut self, name: &str) {
        self.constants.remove(name);
        self.unary.remove(name);
        self.binary.remove(name);
    }

    /// The unique successor of `e` under `field`, if it has exactly one.
    pub fn field_value(&self, field: &str, e: usize) -> Option<usize> {
        let row = self.binary.get(field)?.row(e);
        if row.len() == 1 {
            row.first()
        } else {
            None
        }
    }

    /// Sets `field(a) := b`, replacing any previous successor.
    pub fn set_field(&mut self, field: &str, a: usize, b: usize) {
        let n = self.size();
        let r = self.binary.entry(field.to_string()).or_insert_with(|| Relation::empty(n));
        r.set_row(a, ElemSet::singleton(b));
    }

    fn set_of(&self, name: &str) -> ElemSet {
        self.unary(name).unwrap_or_default()
    }

    pub fn alloc(&self) -> ElemSet {
        self.set_of(ALLOC)
    }

    pub fn mempool(&self) -> ElemSet {
        self.set_of(MEMPOOL)
    }

    /// Number of free-pool elements left for `new`.
    pub fn reserve(&self) -> usize {
        self.mempool().len()
    }

    /// Adds a fresh element to MemPool with every field pointing to `null`.
    pub fn with_fresh_pool_element(&self, fields: &BTreeSet<String>) -> Result<Self, MemError> {
        let n = self.size();
        if n + 1 > MAX_UNIVERSE {
            return Err(MemError::TooLarge(n + 1));
        }
        let mut name = format!("m{}", n - 3);
        while self.element(&name).is_some() {
            name.push('\'');
        }
        let mut universe = self.universe.clone();
        universe.push(name);
        let mut out = MemoryStructure::new(universe)?;
        out.constants = self.constants.clone();
        out.unary = self.unary.clone();
        for (k, r) in &self.binary {
            let mut grown = Relation::empty(n + 1);
            for (a, b) in r.pairs() {
                grown.insert(a, b);
            }
            out.binary.insert(k.clone(), grown);
        }
        out.unary.entry(ADDRESSES.into()).or_default().insert(n);
        out.unary.entry(MEMPOOL.into()).or_default().insert(n);
        let null = self.constant(NULL).unwrap_or(0);
        for f in fields {
            out.set_field(f, n, null);
        }
        Ok(out)
    }
}

/// Moves `target` from MemPool to Alloc.
pub fn allocate(m: &MemoryStructure, target: usize) -> Result<MemoryStructure, MemError> {
    if target >= m.size() {
        return Err(MemError::UnknownElement(target.to_string()));
    }
    if !m.mempool().contains(target) {
        return Err(MemError::NotInMemPool(m.name(target).to_string()));
    }
    let mut out = m.clone();
    let mut pool = out.mempool();
    pool.remove(target);
    out.set_unary(MEMPOOL, pool);
    let mut alloc = out.alloc();
    alloc.insert(target);
    out.set_unary(ALLOC, alloc);
    Ok(out)
}

/// Copies the post-state value of every remaining symbol into its ext twin on `pre`.
pub fn extend_with_ext(
    pre: &MemoryStructure,
    post: &MemoryStructure,
    vocab: &Vocabulary,
) -> Result<MemoryStructure, MemError> {
    if pre.universe != post.universe {
        return Err(MemError::UniverseMismatch);
    }
    let mut out = pre.clone();
    for r in vocab.rem_symbols() {
        let twin = vocab.ext_name(&r);
        if let Some(s) = post.unary(&r) {
            out.set_unary(&twin, s);
        } else if let Some(rel) = post.binary(&r) {
            out.set_binary(&twin, rel.clone());
        } else {
            return Err(MemError::MissingRelation(r));
        }
    }
    Ok(out)
}

/// One failed well-formedness condition. Condition 0 marks a vocabulary symbol
/// without an interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: u8,
    pub message: String,
    pub elements: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition ({}): {}", self.condition, self.message)?;
        if !self.elements.is_empty() {
            write!(f, " [{}]", self.elements.join(", "))?;
        }
        Ok(())
    }
}

fn violation(m: &MemoryStructure, condition: u8, message: String, elems: impl IntoIterator<Item = usize>) -> Violation {
    Violation { condition, message, elements: elems.into_iter().map(|e| m.name(e).to_string()).collect() }
}

/// Checks conditions (1)-(10); returns one record per failed condition.
pub fn validate(m: &MemoryStructure, vocab: &Vocabulary) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = m.size();
    let all = m.all();

    let missing: Vec<String> = vocab
        .constants
        .iter()
        .filter(|c| m.constant(c).is_none())
        .chain(vocab.unary.iter().filter(|u| m.unary(u).is_none()))
        .chain(vocab.binary.iter().filter(|b| m.binary(b).is_none()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        out.push(Violation { condition: 0, message: "symbols without interpretation".into(), elements: missing });
    }

    let aux_consts: Vec<Option<usize>> = [NULL, TRUE, FALSE].iter().map(|c| m.constant(c)).collect();
    if aux_consts.iter().any(|c| c.is_none()) {
        out.push(Violation { condition: 1, message: "null, T and F must be interpreted".into(), elements: vec![] });
    }
    let required_unary = [ADDRESSES, ALLOC, POSSIBLE_TARGETS, MEMPOOL, AUX];
    let absent: Vec<String> = required_unary.iter().filter(|u| m.unary(u).is_none()).map(|u| u.to_string()).collect();
    if !absent.is_empty() {
        out.push(Violation { condition: 2, message: "required unary relations missing".into(), elements: absent });
    }

    let aux = m.unary(AUX).unwrap_or_default();
    let expected_aux: ElemSet = aux_consts.iter().flatten().copied().collect();
    if aux != expected_aux || expected_aux.len() != 3 {
        out.push(violation(
            m,
            3,
            "Aux must be exactly {null, T, F} with three distinct elements".into(),
            (aux | expected_aux).iter(),
        ));
    }

    let addresses = m.unary(ADDRESSES).unwrap_or_default();
    if !(addresses & aux).is_empty() || (addresses | aux) != all {
        let bad = (addresses & aux) | (all - (addresses | aux));
        out.push(violation(m, 4, "Addresses and Aux must partition the universe".into(), bad.iter()));
    }

    let alloc = m.alloc();
    let targets = m.unary(POSSIBLE_TARGETS).unwrap_or_default();
    let pool = m.mempool();
    let overlap = (alloc & targets) | (alloc & pool) | (targets & pool);
    let cover = alloc | targets | pool;
    if !overlap.is_empty() || cover != addresses {
        let bad = overlap | (cover - addresses) | (addresses - cover);
        out.push(violation(m, 5, "Alloc, PossibleTargets and MemPool must partition Addresses".into(), bad.iter()));
    }

    let bad_consts: Vec<usize> =
        vocab.constants.iter().filter_map(|c| m.constant(c)).filter(|&e| pool.contains(e)).collect();
    if !bad_consts.is_empty() {
        out.push(violation(m, 6, "constants must not denote MemPool elements".into(), bad_consts));
    }

    let mut bad7 = ElemSet::EMPTY;
    let mut bad8 = ElemSet::EMPTY;
    let ok_pool_targets: ElemSet = [m.constant(NULL), m.constant(FALSE)].into_iter().flatten().collect();
    for f in &vocab.fields {
        let Some(r) = m.binary(f) else { continue };
        for a in 0..n {
            let row = r.row(a);
            if addresses.contains(a) {
                if row.len() != 1 || !(row & pool).is_empty() {
                    bad7.insert(a);
                }
                if pool.contains(a) && !row.is_subset(ok_pool_targets) {
                    bad8.insert(a);
                }
            } else if !row.is_empty() {
                bad7.insert(a);
            }
        }
    }
    if !bad7.is_empty() {
        out.push(violation(
            m,
            7,
            "fields must be total functions from Addresses into non-MemPool elements".into(),
            bad7.iter(),
        ));
    }
    if !bad8.is_empty() {
        out.push(violation(m, 8, "fields of MemPool elements must be null or F".into(), bad8.iter()));
    }

    let mut bad9 = ElemSet::EMPTY;
    for u in &vocab.unary {
        if vocab.avoids_mempool(u) {
            if let Some(s) = m.unary(u) {
                bad9 = bad9 | (s & pool);
            }
        }
    }
    for b in &vocab.binary {
        if vocab.avoids_mempool(b) {
            if let Some(r) = m.binary(b) {
                for (x, y) in r.pairs() {
                    if pool.contains(x) || pool.contains(y) {
                        bad9.insert(if pool.contains(x) { x } else { y });
                    }
                }
            }
        }
    }
    if !bad9.is_empty() {
        out.push(violation(m, 9, "relations other than fields must avoid MemPool".into(), bad9.iter()));
    }

    if pool.is_empty() {
        out.push(violation(m, 10, "MemPool must be nonempty".into(), []));
    }
    out
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed structure file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("invalid structure: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// On-disk form of a structure.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct StructureFile {
    pub universe: Vec<String>,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
    #[serde(default)]
    pub unary: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub binary: BTreeMap<String, Vec<[String; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vars: Vec<String>,
}

impl StructureFile {
    pub fn from_structure(m: &MemoryStructure, vocab: Option<&Vocabulary>) -> Self {
        let name = |e: usize| m.name(e).to_string();
        StructureFile {
            universe: m.universe.clone(),
            constants: m.constants.iter().map(|(k, &v)| (k.clone(), name(v))).collect(),
            unary: m.unary.iter().map(|(k, s)| (k.clone(), s.iter().map(name).collect())).collect(),
            binary: m
                .binary
                .iter()
                .map(|(k, r)| (k.clone(), r.pairs().map(|(a, b)| [name(a), name(b)]).collect()))
                .collect(),
            fields: vocab.map(|v| v.fields.iter().cloned().collect()).unwrap_or_default(),
            vars: vocab.map(|v| v.vars.iter().cloned().collect()).unwrap_or_default(),
        }
    }

    /// The vocabulary implied by the file: every interpreted symbol, with the
    /// listed fields and variables designated as such.
    pub fn vocabulary(&self) -> Result<Vocabulary, VocabError> {
        let mut v = Vocabulary::new();
        for f in &self.fields {
            v.add_field(f)?;
        }
        for x in &self.vars {
            v.add_var(x)?;
        }
        for c in self.constants.keys() {
            if v.kind(c).is_none() {
                if self.vars.is_empty() {
                    v.add_var(c)?;
                } else {
                    v.add_constant(c)?;
                }
            }
        }
        for u in self.unary.keys() {
            if v.kind(u).is_none() {
                v.add_concept(u)?;
            }
        }
        for b in self.binary.keys() {
            if v.kind(b).is_none() {
                v.add_role(b)?;
            }
        }
        Ok(v)
    }

    /// Builds the structure, deriving Aux, Addresses, Alloc, PossibleTargets and
    /// MemPool when absent. Does not validate.
    pub fn to_structure(&self) -> Result<MemoryStructure, LoadError> {
        let mut seen = BTreeSet::new();
        for e in &self.universe {
            if !seen.insert(e) {
                return Err(LoadError::DuplicateElement(e.clone()));
            }
        }
        let mut m = MemoryStructure::new(self.universe.clone())?;
        let elem = |name: &str| m.element(name).ok_or_else(|| LoadError::UnknownElement(name.to_string()));
        let mut constants = BTreeMap::new();
        for (k, v) in &self.constants {
            constants.insert(k.clone(), elem(v)?);
        }
        let mut unary = BTreeMap::new();
        for (k, vs) in &self.unary {
            let mut s = ElemSet::EMPTY;
            for v in vs {
                s.insert(elem(v)?);
            }
            unary.insert(k.clone(), s);
        }
        let mut binary = BTreeMap::new();
        for (k, ps) in &self.binary {
            let mut r = Relation::empty(m.size());
            for [a, b] in ps {
                r.insert(elem(a)?, elem(b)?);
            }
            binary.insert(k.clone(), r);
        }
        m.constants = constants;
        m.unary = unary;
        m.binary = binary;
        let all = m.all();
        if m.unary(AUX).is_none() {
            let aux = [NULL, TRUE, FALSE].iter().filter_map(|c| m.constant(c)).collect();
            m.set_unary(AUX, aux);
        }
        let aux = m.unary(AUX).unwrap_or_default();
        if m.unary(ADDRESSES).is_none() {
            m.set_unary(ADDRESSES, all - aux);
        }
        let addresses = m.unary(ADDRESSES).unwrap_or_default();
        for u in [ALLOC, POSSIBLE_TARGETS] {
            if m.unary(u).is_none() {
                m.set_unary(u, ElemSet::EMPTY);
            }
        }
        if m.unary(MEMPOOL).is_none() {
            let rest = addresses - m.alloc() - m.unary(POSSIBLE_TARGETS).unwrap_or_default();
            m.set_unary(MEMPOOL, rest);
        }
        Ok(m)
    }
}

/// Parses and validates a structure file. With no vocabulary given, the file's
/// own symbols form the vocabulary.
pub fn load_structure(json: &str, vocab: Option<&Vocabulary>) -> Result<(MemoryStructure, Vocabulary), LoadError> {
    let file: StructureFile = serde_json::from_str(json)?;
    let vocab = match vocab {
        Some(v) => v.clone(),
        None => file.vocabulary()?,
    };
    let m = file.to_structure()?;
    let violations = validate(&m, &vocab);
    if violations.is_empty() {
        Ok((m, vocab))
    } else {
        Err(LoadError::Invalid(violations))
    }
}

pub fn structure_to_json(m: &MemoryStructure, vocab: Option<&Vocabulary>) -> String {
    serde_json::to_string_pretty(&StructureFile::from_structure(m, vocab)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab_xf() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field("next").unwrap();
        v.add_var("x").unwrap();
        v
    }

    fn minimal() -> (MemoryStructure, Vocabulary) {
        let v = Vocabulary::new();
        let mut v2 = v.clone();
        v2.add_field("next").unwrap();
        (MemoryStructure::skeleton(&v2, 0, 0, 1), v2)
    }

    #[test]
    fn minimal_structure_is_valid() {
        let (m, v) = minimal();
        assert_eq!(m.size(), 4);
        assert_eq!(validate(&m, &v), vec![]);
    }

    #[test]
    fn constant_in_mempool_breaks_condition_6() {
        let (mut m, mut v) = minimal();
        v.add_var("x").unwrap();
        m.set_const("x", 3);
        let conds: Vec<u8> = validate(&m, &v).iter().map(|x| x.condition).collect();
        assert_eq!(conds, vec![6]);
    }

    #[test]
    fn field_into_mempool_breaks_condition_7() {
        let v = vocab_xf();
        let mut m = MemoryStructure::skeleton(&v, 1, 0, 1);
        m.set_field("next", 3, 4);
        let conds: Vec<u8> = validate(&m, &v).iter().map(|x| x.condition).collect();
        assert_eq!(conds, vec![7]);
        assert_eq!(validate(&m, &v)[0].elements, vec!["m0".to_string()]);
    }

    #[test]
    fn allocate_moves_pool_element() {
        let (m, v) = minimal();
        let m2 = allocate(&m, 3).unwrap();
        assert!(m2.alloc().contains(3));
        assert!(m2.mempool().is_empty());
        assert!(matches!(allocate(&m2, 3), Err(MemError::NotInMemPool(_))));
        assert_eq!(validate(&m2, &v).iter().map(|x| x.condition).collect::<Vec<_>>(), vec![10]);
    }

    #[test]
    fn allocate_keeps_validity_with_reserve_left() {
        let v = vocab_xf();
        let m = MemoryStructure::skeleton(&v, 1, 1, 2);
        assert!(validate(&m, &v).is_empty());
        let m2 = allocate(&m, 5).unwrap();
        assert!(validate(&m2, &v).is_empty());
    }

    #[test]
    fn ext_copies_post_values_only_for_rem_symbols() {
        let mut v = vocab_xf();
        v.add_concept("ELst").unwrap();
        v.add_ghost("ELst").unwrap();
        v.add_ghost("next").unwrap();
        assert_eq!(v.rem_symbols(), vec!["ELst".to_string()]);
        let mut pre = MemoryStructure::skeleton(&v, 2, 0, 1);
        pre.set_unary("ELst", ElemSet::singleton(3));
        let mut post = pre.clone();
        post.set_unary("ELst", [3, 4].into_iter().collect());
        let out = extend_with_ext(&pre, &post, &v).unwrap();
        assert_eq!(out.unary("ELst"), Some(ElemSet::singleton(3)));
        assert_eq!(out.unary("ELst_ext"), Some([3, 4].into_iter().collect()));
        assert!(out.binary("next_ext").is_none());
        assert!(out.unary("ELst_gho_ext").is_none());
    }

    #[test]
    fn ext_with_nothing_remaining_is_identity() {
        let v = vocab_xf();
        let m = MemoryStructure::skeleton(&v, 1, 0, 1);
        assert_eq!(extend_with_ext(&m, &m, &v).unwrap(), m);
    }

    #[test]
    fn ext_rejects_universe_mismatch() {
        let v = vocab_xf();
        let a = MemoryStructure::skeleton(&v, 1, 0, 1);
        let b = MemoryStructure::skeleton(&v, 1, 0, 2);
        assert_eq!(extend_with_ext(&a, &b, &v), Err(MemError::UniverseMismatch));
    }

    #[test]
    fn json_round_trip_and_derivation() {
        let json = r#"{
            "universe": ["n", "t", "f", "a", "b"],
            "constants": {"null": "n", "T": "t", "F": "f", "x": "a"},
            "unary": {"Alloc": ["a"]},
            "binary": {"next": [["a", "n"], ["b", "n"]]},
            "fields": ["next"]
        }"#;
        let (m, v) = load_structure(json, None).unwrap();
        assert_eq!(m.mempool(), ElemSet::singleton(4));
        assert!(v.is_var("x"));
        let back = structure_to_json(&m, Some(&v));
        let (m2, _) = load_structure(&back, None).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn loader_rejects_invalid() {
        let json = r#"{
            "universe": ["n", "t", "f", "a"],
            "constants": {"null": "n", "T": "t", "F": "f", "x": "a"},
            "binary": {"next": [["a", "n"]]},
            "fields": ["next"]
        }"#;
        match load_structure(json, None) {
            Err(LoadError::Invalid(v)) => assert!(v.iter().any(|x| x.condition == 6)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relation_ops() {
        let r = Relation::from_pairs(4, [(0, 1), (1, 2)]);
        assert_eq!(r.inverse().inverse(), r);
        assert!(r.is_functional());
        assert_eq!(r.preimage(ElemSet::singleton(2)), ElemSet::singleton(1));
        assert_eq!(Relation::full(3).len(), 9);
    }
}
