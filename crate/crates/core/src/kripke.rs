//! Finite Kripke structures, the graded satisfaction relation, frame
//! classes, generated substructures and the depth/breadth/width metrics of
//! transitive structures.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{small, Formula, PropLetter};

#[derive(Debug, Error)]
pub enum KripkeError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("duplicate world `{0}`")]
    DuplicateWorld(String),
    #[error("a structure needs at least one world")]
    NoWorlds,
    #[error("seed set is empty")]
    EmptySeed,
    #[error("structure is not transitive")]
    NotTransitive,
    #[error("unknown frame class `{0}`")]
    UnknownClass(String),
    #[error("invalid proposition letter `{0}`")]
    InvalidLetter(String),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Frame classes

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameClass {
    Rfl,
    Ser,
    Sym,
    Tr,
    Eucl,
}

impl FrameClass {
    pub const ALL: [FrameClass; 5] = [
        FrameClass::Rfl,
        FrameClass::Ser,
        FrameClass::Sym,
        FrameClass::Tr,
        FrameClass::Eucl,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameClass::Rfl => "rfl",
            FrameClass::Ser => "ser",
            FrameClass::Sym => "sym",
            FrameClass::Tr => "tr",
            FrameClass::Eucl => "eucl",
        }
    }
}

impl fmt::Display for FrameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrameClass {
    type Err = KripkeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FrameClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| KripkeError::UnknownClass(s.to_string()))
    }
}

/// A subset of `{Rfl, Ser, Sym, Tr, Eucl}`; read as the intersection of the
/// named classes, so the empty set is the class of all frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameClasses(u8);

impl FrameClasses {
    pub const EMPTY: FrameClasses = FrameClasses(0);

    pub fn contains(self, c: FrameClass) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn with(self, c: FrameClass) -> FrameClasses {
        FrameClasses(self.0 | c.bit())
    }

    pub fn without(self, c: FrameClass) -> FrameClasses {
        FrameClasses(self.0 & !c.bit())
    }

    pub fn is_subset(self, other: FrameClasses) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = FrameClass> {
        FrameClass::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// All 32 subsets, in bitmask order.
    pub fn all_subsets() -> impl Iterator<Item = FrameClasses> {
        (0u8..32).map(FrameClasses)
    }
}

impl FromIterator<FrameClass> for FrameClasses {
    fn from_iter<I: IntoIterator<Item = FrameClass>>(iter: I) -> Self {
        iter.into_iter().fold(FrameClasses::EMPTY, FrameClasses::with)
    }
}

impl<const N: usize> From<[FrameClass; N]> for FrameClasses {
    fn from(arr: [FrameClass; N]) -> Self {
        arr.into_iter().collect()
    }
}

impl fmt::Display for FrameClasses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(FrameClass::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FrameClasses {
    type Err = KripkeError;

    /// Comma-separated class names; the empty string is the empty set.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(FrameClass::from_str)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Structures

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeStructure {
    names: Vec<String>,
    index: HashMap<String, usize>,
    succ: Vec<FixedBitSet>,
    valuation: BTreeMap<PropLetter, FixedBitSet>,
}

/// Depth, breadth and width of a transitive structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub depth: usize,
    pub breadth: usize,
    pub width: usize,
}

impl KripkeStructure {
    /// A structure with the given world names and no edges.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, KripkeError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(KripkeError::NoWorlds);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(KripkeError::DuplicateWorld(n.clone()));
            }
        }
        let n = names.len();
        Ok(KripkeStructure {
            names,
            index,
            succ: vec![FixedBitSet::with_capacity(n); n],
            valuation: BTreeMap::new(),
        })
    }

    /// `n` worlds named `w0 .. w{n-1}`. Panics if `n == 0`.
    pub fn with_size(n: usize) -> Self {
        assert!(n > 0, "a structure needs at least one world");
        KripkeStructure::new((0..n).map(|i| format!("w{i}"))).expect("distinct names")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, w: usize) -> &str {
        &self.names[w]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn world(&self, name: &str) -> Result<usize, KripkeError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| KripkeError::UnknownWorld(name.to_string()))
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.succ[from].insert(to);
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) {
        self.succ[from].set(to, false);
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(to)
    }

    pub fn successors(&self, w: usize) -> &FixedBitSet {
        &self.succ[w]
    }

    pub fn set_successors(&mut self, w: usize, set: FixedBitSet) {
        assert_eq!(set.len(), self.len());
        self.succ[w] = set;
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.ones().map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|s| s.count_ones(..)).sum()
    }

    pub fn set_letter(&mut self, letter: &PropLetter, w: usize, value: bool) {
        let n = self.len();
        self.valuation
            .entry(letter.clone())
            .or_insert_with(|| FixedBitSet::with_capacity(n))
            .set(w, value);
    }

    pub fn set_valuation(&mut self, letter: PropLetter, set: FixedBitSet) {
        assert_eq!(set.len(), self.len());
        self.valuation.insert(letter, set);
    }

    pub fn remove_letter(&mut self, letter: &PropLetter) {
        self.valuation.remove(letter);
    }

    /// Worlds where `letter` holds; empty if it is not in the valuation.
    pub fn valuation(&self, letter: &PropLetter) -> FixedBitSet {
        self.valuation
            .get(letter)
            .cloned()
            .unwrap_or_else(|| self.empty_set())
    }

    pub fn holds(&self, letter: &PropLetter, w: usize) -> bool {
        self.valuation.get(letter).is_some_and(|s| s.contains(w))
    }

    pub fn letters(&self) -> impl Iterator<Item = &PropLetter> {
        self.valuation.keys()
    }

    pub fn empty_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> FixedBitSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    /// The set of worlds at which `f` is true.
    pub fn extension(&self, f: &Formula) -> FixedBitSet {
        match f {
            Formula::True => self.full_set(),
            Formula::False => self.empty_set(),
            Formula::Letter(l) => self.valuation(l),
            Formula::Not(a) => {
                let mut s = self.extension(a);
                s.toggle_range(..);
                s
            }
            Formula::And(a, b) => {
                let mut s = self.extension(a);
                s.intersect_with(&self.extension(b));
                s
            }
            Formula::Or(a, b) => {
                let mut s = self.extension(a);
                s.union_with(&self.extension(b));
                s
            }
            Formula::Implies(a, b) => {
                let mut s = self.extension(a);
                s.toggle_range(..);
                s.union_with(&self.extension(b));
                s
            }
            Formula::Iff(a, b) => {
                let mut s = self.extension(a);
                s.symmetric_difference_with(&self.extension(b));
                s.toggle_range(..);
                s
            }
            Formula::AtLeast(c, a) | Formula::AtMost(c, a) => {
                let body = self.extension(a);
                let at_least = matches!(f, Formula::AtLeast(..));
                let mut s = self.empty_set();
                for w in 0..self.len() {
                    let count = self.succ[w].intersection_count(&body);
                    let ge = small(c).is_some_and(|c| count >= c);
                    let truth = if at_least { ge } else { small(c).is_none_or(|c| count <= c) };
                    s.set(w, truth);
                }
                s
            }
        }
    }

    /// Truth of `f` at world `w`. Panics if `w` is out of range.
    pub fn check(&self, w: usize, f: &Formula) -> bool {
        assert!(w < self.len(), "world index {w} out of range");
        self.extension(f).contains(w)
    }

    pub fn check_named(&self, world: &str, f: &Formula) -> Result<bool, KripkeError> {
        Ok(self.check(self.world(world)?, f))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.len()).all(|w| self.succ[w].contains(w))
    }

    pub fn is_serial(&self) -> bool {
        self.succ.iter().all(|s| !s.is_clear())
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(a, b)| self.succ[b].contains(a))
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.len()).all(|w| self.succ[w].ones().all(|v| self.succ[v].is_subset(&self.succ[w])))
    }

    pub fn is_euclidean(&self) -> bool {
        (0..self.len()).all(|w| self.succ[w].ones().all(|v| self.succ[w].is_subset(&self.succ[v])))
    }

    /// Every class whose defining first-order sentence holds on the frame.
    pub fn frame_properties(&self) -> FrameClasses {
        let mut out = FrameClasses::EMPTY;
        let checks: [(FrameClass, bool); 5] = [
            (FrameClass::Rfl, self.is_reflexive()),
            (FrameClass::Ser, self.is_serial()),
            (FrameClass::Sym, self.is_symmetric()),
            (FrameClass::Tr, self.is_transitive()),
            (FrameClass::Eucl, self.is_euclidean()),
        ];
        for (c, holds) in checks {
            if holds {
                out = out.with(c);
            }
        }
        out
    }

    /// `R*(X)`: every world reachable from `seeds` in zero or more steps.
    pub fn reachable(&self, seeds: &FixedBitSet) -> FixedBitSet {
        let mut seen = seeds.clone();
        let mut stack: Vec<usize> = seeds.ones().collect();
        while let Some(w) = stack.pop() {
            for v in self.succ[w].ones() {
                if !seen.put(v) {
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Restriction to `keep`, preserving world order and names. Returns the
    /// substructure and the old-to-new index map.
    pub fn restrict(&self, keep: &FixedBitSet) -> (KripkeStructure, Vec<Option<usize>>) {
        let mut map = vec![None; self.len()];
        let kept: Vec<usize> = keep.ones().collect();
        for (new, &old) in kept.iter().enumerate() {
            map[old] = Some(new);
        }
        let mut sub =
            KripkeStructure::new(kept.iter().map(|&w| self.names[w].clone())).expect("non-empty restriction");
        for (new, &old) in kept.iter().enumerate() {
            for v in self.succ[old].ones() {
                if let Some(nv) = map[v] {
                    sub.succ[new].insert(nv);
                }
            }
        }
        for (l, set) in &self.valuation {
            let mut s = sub.empty_set();
            for (new, &old) in kept.iter().enumerate() {
                s.set(new, set.contains(old));
            }
            sub.valuation.insert(l.clone(), s);
        }
        (sub, map)
    }

    /// The substructure generated by `seeds`.
    pub fn generated(&self, seeds: &[usize]) -> Result<(KripkeStructure, Vec<Option<usize>>), KripkeError> {
        if seeds.is_empty() {
            return Err(KripkeError::EmptySeed);
        }
        let mut set = self.empty_set();
        for &w in seeds {
            if w >= self.len() {
                return Err(KripkeError::UnknownWorld(format!("#{w}")));
            }
            set.insert(w);
        }
        Ok(self.restrict(&self.reachable(&set)))
    }

    /// Transitive closure of the relation.
    pub fn transitive_closure(&self) -> KripkeStructure {
        let mut out = self.clone();
        let n = self.len();
        for k in 0..n {
            let row_k = out.succ[k].clone();
            for i in 0..n {
                if out.succ[i].contains(k) {
                    out.succ[i].union_with(&row_k);
                }
            }
        }
        out
    }

    pub fn reflexive_closure(&self) -> KripkeStructure {
        let mut out = self.clone();
        for w in 0..self.len() {
            out.succ[w].insert(w);
        }
        out
    }

    /// Whether `v` is in the R-clique of `w`: equal, or mutually related.
    pub fn equivalent(&self, w: usize, v: usize) -> bool {
        w == v || (self.succ[w].contains(v) && self.succ[v].contains(w))
    }

    /// `Q(w)`: `w` together with every world mutually related to it.
    pub fn clique(&self, w: usize) -> FixedBitSet {
        let mut q = self.empty_set();
        q.insert(w);
        for v in self.succ[w].ones() {
            if self.succ[v].contains(w) {
                q.insert(v);
            }
        }
        q
    }

    /// The smallest member of each world's clique; a canonical clique label.
    pub fn clique_representatives(&self) -> Vec<usize> {
        (0..self.len())
            .map(|w| self.clique(w).minimum().expect("clique contains w"))
            .collect()
    }

    /// Strict successors: related, but not back.
    pub fn strict_successors(&self, w: usize) -> FixedBitSet {
        let mut s = self.empty_set();
        for v in self.succ[w].ones() {
            if !self.succ[v].contains(w) {
                s.insert(v);
            }
        }
        s
    }

    /// Direct successors of `w` in a transitive structure: strict successors
    /// with no strictly intermediate world outside both cliques.
    pub fn direct_successors(&self, w: usize) -> FixedBitSet {
        let strict = self.strict_successors(w);
        let mut out = self.empty_set();
        for v in strict.ones() {
            let blocked = strict.ones().any(|u| u != v && self.succ[u].contains(v) && !self.succ[v].contains(u));
            if !blocked {
                out.insert(v);
            }
        }
        out
    }

    /// Depth, breadth and width. Rejects non-transitive structures.
    pub fn metrics(&self) -> Result<FrameMetrics, KripkeError> {
        if !self.is_transitive() {
            return Err(KripkeError::NotTransitive);
        }
        let n = self.len();
        let strict: Vec<FixedBitSet> = (0..n).map(|w| self.strict_successors(w)).collect();
        // Longest strict chain from each world; strict successors form a DAG.
        let mut height: Vec<Option<usize>> = vec![None; n];
        fn longest(w: usize, strict: &[FixedBitSet], height: &mut [Option<usize>]) -> usize {
            if let Some(h) = height[w] {
                return h;
            }
            let h = strict[w]
                .ones()
                .map(|v| 1 + longest(v, strict, height))
                .max()
                .unwrap_or(0);
            height[w] = Some(h);
            h
        }
        let depth = (0..n).map(|w| longest(w, &strict, &mut height)).max().unwrap_or(0);
        let reps = self.clique_representatives();
        let breadth = (0..n)
            .map(|w| {
                let mut seen = self.empty_set();
                for v in self.direct_successors(w).ones() {
                    seen.insert(reps[v]);
                }
                seen.count_ones(..)
            })
            .max()
            .unwrap_or(0);
        let width = (0..n).map(|w| self.clique(w).count_ones(..)).max().unwrap_or(1);
        Ok(FrameMetrics { depth, breadth, width })
    }

    /// Graphviz rendering; valuations appear in node labels.
    pub fn to_dot(&self, designated: Option<usize>) -> String {
        let mut out = String::from("digraph kripke {\n");
        for w in 0..self.len() {
            let true_letters: Vec<&str> = self
                .valuation
                .iter()
                .filter(|(_, s)| s.contains(w))
                .map(|(l, _)| l.as_str())
                .collect();
            let shape = if designated == Some(w) { ", shape=doublecircle" } else { "" };
            out.push_str(&format!(
                "  \"{}\" [label=\"{}\\n{}\"{}];\n",
                escape(&self.names[w]),
                escape(&self.names[w]),
                true_letters.join(","),
                shape
            ));
        }
        for (a, b) in self.edges() {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                escape(&self.names[a]),
                escape(&self.names[b])
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Upper bound on the size of a generated substructure of a structure with
/// depth `d`, breadth `b` and width `c`.
pub fn generated_size_bound(b: usize, c: usize, d: usize) -> BigUint {
    let c = BigUint::from(c);
    match b {
        0 => c,
        1 => c * BigUint::from(d + 1),
        _ => {
            let b = BigUint::from(b);
            let num = b.pow(d as u32 + 1) - BigUint::one();
            c * num / (b - BigUint::one())
        }
    }
}

// ---------------------------------------------------------------------------
// Pointed structures and JSON

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct PointedStructure {
    pub structure: KripkeStructure,
    pub world: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    worlds: Vec<String>,
    edges: Vec<(String, String)>,
    valuation: BTreeMap<String, Vec<String>>,
    designated: String,
}

impl TryFrom<ModelJson> for PointedStructure {
    type Error = KripkeError;

    fn try_from(m: ModelJson) -> Result<Self, Self::Error> {
        let mut s = KripkeStructure::new(m.worlds)?;
        for (a, b) in &m.edges {
            let (a, b) = (s.world(a)?, s.world(b)?);
            s.add_edge(a, b);
        }
        for (letter, worlds) in &m.valuation {
            let l = PropLetter::new(letter.clone()).map_err(|_| KripkeError::InvalidLetter(letter.clone()))?;
            let mut set = s.empty_set();
            for w in worlds {
                set.insert(s.world(w)?);
            }
            s.set_valuation(l, set);
        }
        let world = s.world(&m.designated)?;
        Ok(PointedStructure { structure: s, world })
    }
}

impl From<PointedStructure> for ModelJson {
    fn from(p: PointedStructure) -> Self {
        let s = &p.structure;
        ModelJson {
            worlds: s.names.clone(),
            edges: s.edges().map(|(a, b)| (s.names[a].clone(), s.names[b].clone())).collect(),
            valuation: s
                .valuation
                .iter()
                .map(|(l, set)| (l.to_string(), set.ones().map(|w| s.names[w].clone()).collect()))
                .collect(),
            designated: s.names[p.world].clone(),
        }
    }
}

impl PointedStructure {
    pub fn new(structure: KripkeStructure, world: usize) -> Self {
        assert!(world < structure.len(), "designated world out of range");
        PointedStructure { structure, world }
    }

    pub fn check(&self, f: &Formula) -> bool {
        self.structure.check(self.world, f)
    }

    /// The substructure generated by the designated world, re-pointed.
    pub fn generated(&self) -> PointedStructure {
        let (s, map) = self.structure.generated(&[self.world]).expect("designated world is valid");
        PointedStructure::new(s, map[self.world].expect("seed is kept"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, KripkeError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_dot(&self) -> String {
        self.structure.to_dot(Some(self.world))
    }
}
