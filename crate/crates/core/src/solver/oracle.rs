//! Exhaustive model search over small structures.
//!
//! Frames are enumerated up to isomorphism. For each frame, every valuation
//! of the formula's letters is evaluated at once: bit `v` of a 64-bit word
//! stands for valuation `v`, in which letter `l` holds at world `w` iff bit
//! `w * L + l` of `v` is set.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_traits::ToPrimitive;

use crate::exec::Execution;
use crate::formula::{Formula, PropLetter};
use crate::kripke::{FrameClasses, KripkeStructure, PointedStructure};

/// Largest structure size the oracle enumerates.
pub const MAX_ORACLE_SIZE: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Sat(PointedStructure),
    NoneUpTo(usize),
}

impl OracleResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleResult::Sat(_))
    }
}

/// A frame on `n` worlds; bit `i * n + j` of `edges` is the edge `(i, j)`.
#[derive(Clone, Copy, Debug)]
struct Frame {
    n: usize,
    edges: u32,
}

impl Frame {
    fn has(self, i: usize, j: usize) -> bool {
        self.edges >> (i * self.n + j) & 1 == 1
    }

    fn structure(self) -> KripkeStructure {
        let mut a = KripkeStructure::with_size(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.has(i, j) {
                    a.add_edge(i, j);
                }
            }
        }
        a
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// One frame per isomorphism class on `n` worlds, each the numerically
/// smallest encoding in its class, in increasing order.
fn canonical_frames(n: usize) -> &'static [Frame] {
    static CACHE: [OnceLock<Vec<Frame>>; MAX_ORACLE_SIZE + 1] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!(n <= MAX_ORACLE_SIZE, "oracle frames above {MAX_ORACLE_SIZE} worlds");
    CACHE[n].get_or_init(|| {
        let perms = permutations(n);
        let bits = n * n;
        (0u32..1 << bits)
            .filter(|&e| {
                perms.iter().all(|p| {
                    let mut img = 0u32;
                    for i in 0..n {
                        for j in 0..n {
                            if e >> (i * n + j) & 1 == 1 {
                                img |= 1 << (p[i] * n + p[j]);
                            }
                        }
                    }
                    img >= e
                })
            })
            .map(|edges| Frame { n, edges })
            .collect()
    })
}

#[derive(Clone, Debug)]
enum Op {
    Const(bool),
    Letter(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Iff(usize, usize),
    AtLeast(usize, usize),
    AtMost(usize, usize),
}

/// A formula flattened into a post-order list of distinct subformulas.
struct Program {
    ops: Vec<Op>,
    letters: Vec<PropLetter>,
}

impl Program {
    fn new(f: &Formula) -> Program {
        let letters: Vec<PropLetter> = f.letters().into_iter().collect();
        let mut p = Program {
            ops: Vec::new(),
            letters,
        };
        let mut seen = HashMap::new();
        p.add(f, &mut seen);
        p
    }

    fn add<'a>(&mut self, f: &'a Formula, seen: &mut HashMap<&'a Formula, usize>) -> usize {
        if let Some(&i) = seen.get(f) {
            return i;
        }
        let op = match f {
            Formula::True => Op::Const(true),
            Formula::False => Op::Const(false),
            Formula::Letter(l) => Op::Letter(self.letters.binary_search(l).expect("collected")),
            Formula::Not(a) => Op::Not(self.add(a, seen)),
            Formula::And(a, b) => Op::And(self.add(a, seen), self.add(b, seen)),
            Formula::Or(a, b) => Op::Or(self.add(a, seen), self.add(b, seen)),
            Formula::Implies(a, b) => Op::Implies(self.add(a, seen), self.add(b, seen)),
            Formula::Iff(a, b) => Op::Iff(self.add(a, seen), self.add(b, seen)),
            Formula::AtLeast(c, a) => Op::AtLeast(c.to_usize().unwrap_or(usize::MAX), self.add(a, seen)),
            Formula::AtMost(c, a) => Op::AtMost(c.to_usize().unwrap_or(usize::MAX), self.add(a, seen)),
        };
        self.ops.push(op);
        seen.insert(f, self.ops.len() - 1);
        self.ops.len() - 1
    }

    /// Truth of the whole formula at each world, over the 64 valuations
    /// `64 * word .. 64 * word + 63`. `succ[w]` lists the successors of `w`.
    fn eval(&self, n: usize, succ: &[Vec<usize>], word: u64, vals: &mut Vec<u64>) -> Vec<u64> {
        const PATTERNS: [u64; 6] = [
            0xAAAA_AAAA_AAAA_AAAA,
            0xCCCC_CCCC_CCCC_CCCC,
            0xF0F0_F0F0_F0F0_F0F0,
            0xFF00_FF00_FF00_FF00,
            0xFFFF_0000_FFFF_0000,
            0xFFFF_FFFF_0000_0000,
        ];
        let l = self.letters.len();
        vals.clear();
        vals.resize(self.ops.len() * n, 0);
        for (k, op) in self.ops.iter().enumerate() {
            for w in 0..n {
                let at = |i: usize, v: usize| vals[i * n + v];
                let x = match *op {
                    Op::Const(b) => {
                        if b {
                            !0
                        } else {
                            0
                        }
                    }
                    Op::Letter(i) => {
                        let bit = w * l + i;
                        if bit < 6 {
                            PATTERNS[bit]
                        } else if (word << 6) >> bit & 1 == 1 {
                            !0
                        } else {
                            0
                        }
                    }
                    Op::Not(a) => !at(a, w),
                    Op::And(a, b) => at(a, w) & at(b, w),
                    Op::Or(a, b) => at(a, w) | at(b, w),
                    Op::Implies(a, b) => !at(a, w) | at(b, w),
                    Op::Iff(a, b) => !(at(a, w) ^ at(b, w)),
                    Op::AtLeast(c, a) | Op::AtMost(c, a) => {
                        let ge = |c: usize| -> u64 {
                            if c == 0 {
                                return !0;
                            }
                            if c > succ[w].len() {
                                return 0;
                            }
                            // ge[j]: at least j successors satisfy the body.
                            let mut ge = vec![0u64; c + 1];
                            ge[0] = !0;
                            for &v in &succ[w] {
                                let b = at(a, v);
                                for j in (1..=c).rev() {
                                    ge[j] |= ge[j - 1] & b;
                                }
                            }
                            ge[c]
                        };
                        match *op {
                            Op::AtLeast(..) => ge(c),
                            _ => !ge(c.saturating_add(1)),
                        }
                    }
                };
                vals[k * n + w] = x;
            }
        }
        let root = self.ops.len() - 1;
        (0..n).map(|w| vals[root * n + w]).collect()
    }

    /// First (valuation, world) at which the formula holds on `frame`.
    fn first_model(&self, n: usize, succ: &[Vec<usize>], worlds: &[usize]) -> Option<(u64, usize)> {
        let bits = n * self.letters.len();
        let total: u64 = 1 << bits;
        let words = total.div_ceil(64);
        let mask = if total >= 64 { !0 } else { (1u64 << total) - 1 };
        let mut vals = Vec::new();
        for word in 0..words {
            let truth = self.eval(n, succ, word, &mut vals);
            let mut best: Option<(u64, usize)> = None;
            for &w in worlds {
                let t = truth[w] & mask;
                if t != 0 {
                    let v = word * 64 + u64::from(t.trailing_zeros());
                    if best.is_none_or(|(bv, _)| v < bv) {
                        best = Some((v, w));
                    }
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    fn build(&self, mut a: KripkeStructure, valuation: u64, world: usize) -> PointedStructure {
        let l = self.letters.len();
        for (i, letter) in self.letters.iter().enumerate() {
            let mut set = a.empty_set();
            for w in 0..a.len() {
                if valuation >> (w * l + i) & 1 == 1 {
                    set.insert(w);
                }
            }
            a.set_valuation(letter.clone(), set);
        }
        PointedStructure::new(a, world)
    }
}

fn successor_lists(frame: Frame) -> Vec<Vec<usize>> {
    (0..frame.n)
        .map(|i| (0..frame.n).filter(|&j| frame.has(i, j)).collect())
        .collect()
}

/// Per-frame satisfiability of one formula for all structures up to a size,
/// from which the answer for any frame class can be read off.
pub struct OracleTable {
    max_size: usize,
    /// Satisfiable frames in enumeration order, with their properties.
    hits: Vec<(FrameClasses, PointedStructure)>,
}

impl OracleTable {
    /// Evaluates `f` on every frame with at most `max_size` worlds.
    ///
    /// Panics if `max_size` exceeds [`MAX_ORACLE_SIZE`] or the letters of
    /// `f` give more than 2^40 valuations on the largest frames.
    pub fn build(f: &Formula, max_size: usize, exec: Execution) -> OracleTable {
        assert!(max_size <= MAX_ORACLE_SIZE, "oracle size above {MAX_ORACLE_SIZE}");
        let prog = Program::new(f);
        assert!(max_size * prog.letters.len() <= 40, "too many valuations for the oracle");
        let mut hits = Vec::new();
        for n in 1..=max_size {
            let frames = canonical_frames(n);
            let worlds: Vec<usize> = (0..n).collect();
            let found = exec.map(frames, |&frame| {
                let succ = successor_lists(frame);
                prog.first_model(n, &succ, &worlds).map(|(v, w)| {
                    let a = frame.structure();
                    let props = a.frame_properties();
                    (props, prog.build(a, v, w))
                })
            });
            hits.extend(found.into_iter().flatten());
        }
        OracleTable { max_size, hits }
    }

    pub fn result(&self, classes: FrameClasses) -> OracleResult {
        match self.hits.iter().find(|(props, _)| classes.is_subset(*props)) {
            Some((_, m)) => OracleResult::Sat(m.clone()),
            None => OracleResult::NoneUpTo(self.max_size),
        }
    }
}

/// Exhaustive search over all structures with at most `max_size` worlds
/// whose frame lies in every class of `classes`, and all designated worlds.
///
/// Deterministic: frames are tried by size, then by canonical encoding,
/// then valuations in increasing order.
pub fn brute_force(f: &Formula, classes: FrameClasses, max_size: usize) -> OracleResult {
    OracleTable::build(f, max_size, Execution::default()).result(classes)
}

/// Rooted trees on `n` nodes as parent arrays with `parent[i] < i`.
fn parent_arrays(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize; n]];
    for i in 1..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..i).map(move |q| {
                    let mut p = p.clone();
                    p[i] = q;
                    p
                })
            })
            .collect();
    }
    out
}

/// Exhaustive search over transitive closures of rooted trees with at most
/// `max_size` nodes, designated at the root; reflexive closures as well when
/// `reflexive` is set.
pub fn brute_force_trees(f: &Formula, max_size: usize, reflexive: bool) -> OracleResult {
    let prog = Program::new(f);
    assert!(max_size * prog.letters.len() <= 40, "too many valuations for the oracle");
    for n in 1..=max_size {
        for parent in parent_arrays(n) {
            let mut a = KripkeStructure::with_size(n);
            for v in 1..n {
                let mut u = parent[v];
                loop {
                    a.add_edge(u, v);
                    if u == 0 {
                        break;
                    }
                    u = parent[u];
                }
            }
            if reflexive {
                a = a.reflexive_closure();
            }
            let succ: Vec<Vec<usize>> = (0..n).map(|w| a.successors(w).ones().collect()).collect();
            if let Some((v, w)) = prog.first_model(n, &succ, &[0]) {
                return OracleResult::Sat(prog.build(a, v, w));
            }
        }
    }
    OracleResult::NoneUpTo(max_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::kripke::FrameClass;

    #[test]
    fn isomorphism_class_counts() {
        // Digraphs with loops allowed, up to isomorphism.
        let counts: Vec<usize> = (1..=4).map(|n| canonical_frames(n).len()).collect();
        assert_eq!(counts, vec![2, 10, 104, 3044]);
    }

    #[test]
    fn simple_cases() {
        assert!(brute_force(&parse("p").unwrap(), FrameClasses::EMPTY, 1).is_sat());
        assert_eq!(
            brute_force(&parse("p & ~p").unwrap(), FrameClasses::EMPTY, 3),
            OracleResult::NoneUpTo(3)
        );
        assert_eq!(
            brute_force(&parse("dia>=2 p & dia<=1 true").unwrap(), FrameClasses::EMPTY, 4),
            OracleResult::NoneUpTo(4)
        );
    }

    #[test]
    fn witnesses_are_models_in_class() {
        let f = parse("dia>=2 (p & dia<=1 ~p) & dia<=2 true").unwrap();
        let table = OracleTable::build(&f, 3, Execution::Sequential);
        for classes in FrameClasses::all_subsets() {
            if let OracleResult::Sat(m) = table.result(classes) {
                assert!(m.check(&f));
                assert!(classes.is_subset(m.structure.frame_properties()));
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let f = parse("dia>=1 (q & dia>=2 p) & ~p").unwrap();
        let a = OracleTable::build(&f, 4, Execution::Sequential);
        let b = OracleTable::build(&f, 4, Execution::Parallel);
        for classes in FrameClasses::all_subsets() {
            assert_eq!(a.result(classes), b.result(classes));
        }
    }

    #[test]
    fn agrees_with_model_checker() {
        // Bit-parallel evaluation versus the reference checker on one frame.
        let f = parse("(dia>=2 p <-> q) & dia<=1 (p -> dia q)").unwrap();
        let prog = Program::new(&f);
        let frame = canonical_frames(3)[57];
        let succ = successor_lists(frame);
        let mut vals = Vec::new();
        let truth = prog.eval(3, &succ, 0, &mut vals);
        for v in 0..64u64 {
            let m = prog.build(frame.structure(), v, 0);
            for (w, t) in truth.iter().enumerate() {
                assert_eq!(t >> v & 1 == 1, m.structure.check(w, &f));
            }
        }
    }

    #[test]
    fn reflexive_class_needs_loops() {
        let f = parse("p & box ~p").unwrap();
        assert!(brute_force(&f, FrameClasses::EMPTY, 1).is_sat());
        assert!(!brute_force(&f, FrameClasses::from([FrameClass::Rfl]), 3).is_sat());
    }

    #[test]
    fn tree_search() {
        assert_eq!(parent_arrays(4).len(), 6);
        // The intro formula has a model on the transitive closure of a
        // four-element chain: w2 lies below w1 and both see w3.
        let intro = parse("q0 & dia>=2 (~q0 & q1 & dia>=1 (~q0 & ~q1)) & dia<=1 ~q1").unwrap();
        assert_eq!(brute_force_trees(&intro, 3, false), OracleResult::NoneUpTo(3));
        match brute_force_trees(&intro, 6, false) {
            OracleResult::Sat(m) => {
                assert!(m.check(&intro));
                assert_eq!(m.structure.len(), 4);
                assert_eq!(m.structure.edge_count(), 6);
                assert_eq!(m.structure.metrics().unwrap().depth, 3);
            }
            other => panic!("{other:?}"),
        }
        let chain = parse("dia (~p & dia p) & dia<=1 p").unwrap();
        match brute_force_trees(&chain, 3, false) {
            OracleResult::Sat(m) => {
                assert!(m.check(&chain));
                assert!(m.structure.is_transitive());
            }
            other => panic!("{other:?}"),
        }
    }
}
