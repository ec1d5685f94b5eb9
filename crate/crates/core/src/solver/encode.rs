//! Propositional encoding of "f has a model with exactly n worlds in which
//! world 0 satisfies it", with optional frame conditions.

use std::collections::{BTreeSet, HashMap};

use num_traits::ToPrimitive;
use varisat::{ExtendFormula, Lit, Solver};

use crate::formula::{Formula, PropLetter};
use crate::kripke::KripkeStructure;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct FrameSpec {
    pub reflexive: bool,
    pub serial: bool,
    pub symmetric: bool,
    pub transitive: bool,
}

/// A literal or a constant, folded eagerly.
#[derive(Clone, Copy, Debug)]
enum B {
    Const(bool),
    Lit(Lit),
}

impl std::ops::Not for B {
    type Output = B;
    fn not(self) -> B {
        match self {
            B::Const(b) => B::Const(!b),
            B::Lit(l) => B::Lit(!l),
        }
    }
}

struct Encoder<'a, 'f> {
    solver: Solver<'a>,
    n: usize,
    edge: Vec<Vec<B>>,
    letters: HashMap<PropLetter, Vec<Lit>>,
    cache: HashMap<(&'f Formula, usize), B>,
    /// Treat graded subformulas as opaque atoms.
    abstract_graded: bool,
}

impl<'f> Encoder<'_, 'f> {
    fn fresh(&mut self) -> Lit {
        self.solver.new_lit()
    }

    fn and(&mut self, a: B, b: B) -> B {
        match (a, b) {
            (B::Const(false), _) | (_, B::Const(false)) => B::Const(false),
            (B::Const(true), x) | (x, B::Const(true)) => x,
            (B::Lit(x), B::Lit(y)) => {
                let z = self.fresh();
                self.solver.add_clause(&[!z, x]);
                self.solver.add_clause(&[!z, y]);
                self.solver.add_clause(&[z, !x, !y]);
                B::Lit(z)
            }
        }
    }

    fn or(&mut self, a: B, b: B) -> B {
        let c = self.and(!a, !b);
        !c
    }

    fn iff(&mut self, a: B, b: B) -> B {
        match (a, b) {
            (B::Const(true), x) | (x, B::Const(true)) => x,
            (B::Const(false), x) | (x, B::Const(false)) => !x,
            (B::Lit(x), B::Lit(y)) => {
                let z = self.fresh();
                self.solver.add_clause(&[!z, !x, y]);
                self.solver.add_clause(&[!z, x, !y]);
                self.solver.add_clause(&[z, x, y]);
                self.solver.add_clause(&[z, !x, !y]);
                B::Lit(z)
            }
        }
    }

    fn assert(&mut self, b: B) -> bool {
        match b {
            B::Const(v) => v,
            B::Lit(l) => {
                self.solver.add_clause(&[l]);
                true
            }
        }
    }

    /// `count(items) >= k` via a sequential counter.
    fn at_least(&mut self, items: &[B], k: usize) -> B {
        if k == 0 {
            return B::Const(true);
        }
        if k > items.len() {
            return B::Const(false);
        }
        // s[j] = "at least j of the items seen so far", j = 0..=k.
        let mut s = vec![B::Const(false); k + 1];
        s[0] = B::Const(true);
        for &a in items {
            for j in (1..=k).rev() {
                let carry = self.and(s[j - 1], a);
                s[j] = self.or(s[j], carry);
            }
        }
        s[k]
    }

    fn encode(&mut self, f: &'f Formula, w: usize) -> B {
        let key = (f, w);
        if let Some(&b) = self.cache.get(&key) {
            return b;
        }
        let b = match f {
            Formula::True => B::Const(true),
            Formula::False => B::Const(false),
            Formula::Letter(l) => B::Lit(self.letters[l][w]),
            Formula::Not(a) => !self.encode(a, w),
            Formula::And(a, b) => {
                let (x, y) = (self.encode(a, w), self.encode(b, w));
                self.and(x, y)
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.encode(a, w), self.encode(b, w));
                self.or(x, y)
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.encode(a, w), self.encode(b, w));
                self.or(!x, y)
            }
            Formula::Iff(a, b) => {
                let (x, y) = (self.encode(a, w), self.encode(b, w));
                self.iff(x, y)
            }
            Formula::AtLeast(..) | Formula::AtMost(..) if self.abstract_graded => B::Lit(self.fresh()),
            Formula::AtLeast(c, a) | Formula::AtMost(c, a) => {
                let items: Vec<B> = (0..self.n)
                    .map(|v| {
                        let body = self.encode(a, v);
                        self.and(self.edge[w][v], body)
                    })
                    .collect();
                let at_least = matches!(f, Formula::AtLeast(..));
                // Counts beyond n behave like n + 1.
                let k = c.to_usize().unwrap_or(usize::MAX).min(self.n + 1);
                if at_least {
                    self.at_least(&items, k)
                } else {
                    let over = self.at_least(&items, k.saturating_add(1).min(self.n + 1));
                    !over
                }
            }
        };
        self.cache.insert(key, b);
        b
    }
}

fn letters_of(f: &Formula) -> BTreeSet<PropLetter> {
    f.letters()
}

/// Searches for a structure on `n` worlds, within `spec`, whose world 0
/// satisfies `f`.
pub(crate) fn find_model(f: &Formula, n: usize, spec: FrameSpec) -> Option<KripkeStructure> {
    assert!(n >= 1);
    let mut solver = Solver::new();
    let mut edge = vec![vec![B::Const(false); n]; n];
    for i in 0..n {
        for j in 0..n {
            edge[i][j] = if spec.reflexive && i == j {
                B::Const(true)
            } else if spec.symmetric && j < i {
                edge[j][i]
            } else {
                B::Lit(solver.new_lit())
            };
        }
    }
    let letters: HashMap<PropLetter, Vec<Lit>> = letters_of(f)
        .into_iter()
        .map(|l| (l, (0..n).map(|_| solver.new_lit()).collect()))
        .collect();
    let mut enc = Encoder {
        solver,
        n,
        edge,
        letters,
        cache: HashMap::new(),
        abstract_graded: false,
    };
    if spec.transitive {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if let (B::Lit(a), B::Lit(b)) = (enc.edge[i][j], enc.edge[j][k]) {
                        match enc.edge[i][k] {
                            B::Const(true) => {}
                            B::Const(false) => enc.solver.add_clause(&[!a, !b]),
                            B::Lit(c) => enc.solver.add_clause(&[!a, !b, c]),
                        }
                    }
                }
            }
        }
    }
    if spec.serial && !spec.reflexive {
        for i in 0..n {
            let row: Vec<Lit> = enc
                .edge[i]
                .iter()
                .filter_map(|b| match b {
                    B::Lit(l) => Some(*l),
                    B::Const(_) => None,
                })
                .collect();
            enc.solver.add_clause(&row);
        }
    }
    let root = enc.encode(f, 0);
    if !enc.assert(root) {
        return None;
    }
    if !enc.solver.solve().expect("no proof output configured") {
        return None;
    }
    let model: BTreeSet<Lit> = enc.solver.model().expect("satisfiable").into_iter().collect();
    let truth = |b: B| match b {
        B::Const(v) => v,
        B::Lit(l) => model.contains(&l),
    };
    let mut a = KripkeStructure::with_size(n);
    for i in 0..n {
        for j in 0..n {
            if truth(enc.edge[i][j]) {
                a.add_edge(i, j);
            }
        }
    }
    for (l, lits) in &enc.letters {
        let mut set = a.empty_set();
        for (w, lit) in lits.iter().enumerate() {
            if model.contains(lit) {
                set.insert(w);
            }
        }
        a.set_valuation(l.clone(), set);
    }
    Some(a)
}

/// Whether `f` is satisfiable when every graded subformula is read as an
/// independent proposition letter. `false` implies `f` has no model at all.
pub(crate) fn propositionally_satisfiable(f: &Formula) -> bool {
    let mut solver = Solver::new();
    let letters: HashMap<PropLetter, Vec<Lit>> = letters_of(f)
        .into_iter()
        .map(|l| (l, vec![solver.new_lit()]))
        .collect();
    let mut enc = Encoder {
        solver,
        n: 1,
        edge: vec![vec![B::Const(false)]],
        letters,
        cache: HashMap::new(),
        abstract_graded: true,
    };
    let root = enc.encode(f, 0);
    enc.assert(root) && enc.solver.solve().expect("no proof output configured")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn tr() -> FrameSpec {
        FrameSpec {
            transitive: true,
            ..FrameSpec::default()
        }
    }

    #[test]
    fn counting_needs_enough_worlds() {
        // World 0 may count itself.
        let f = parse("dia>=3 p").unwrap();
        assert!(find_model(&f, 2, FrameSpec::default()).is_none());
        let a = find_model(&f, 3, FrameSpec::default()).unwrap();
        assert!(a.check(0, &f));
    }

    #[test]
    fn upper_bounds() {
        let f = parse("dia>=2 p & dia<=1 p").unwrap();
        assert!(find_model(&f, 4, FrameSpec::default()).is_none());
        let g = parse("dia>=2 true & dia<=1 p & dia<=1 ~p").unwrap();
        let a = find_model(&g, 3, FrameSpec::default()).unwrap();
        assert!(a.check(0, &g));
    }

    #[test]
    fn frame_conditions_hold() {
        let f = parse("dia>=1 dia>=2 q").unwrap();
        let spec = FrameSpec {
            reflexive: true,
            serial: true,
            symmetric: true,
            transitive: true,
        };
        let a = find_model(&f, 4, spec).unwrap();
        assert!(a.check(0, &f));
        assert!(a.is_reflexive() && a.is_symmetric() && a.is_transitive());
    }

    #[test]
    fn intro_formula_over_transitive_frames() {
        let f = parse("q0 & dia>=2 (~q0 & q1 & dia>=1 (~q0 & ~q1)) & dia<=1 ~q1").unwrap();
        assert!(find_model(&f, 3, tr()).is_none());
        let a = find_model(&f, 4, tr()).unwrap();
        assert!(a.check(0, &f) && a.is_transitive());
    }

    #[test]
    fn huge_subscripts() {
        let f = parse("dia>=100000000000000000000 p").unwrap();
        assert!(find_model(&f, 3, FrameSpec::default()).is_none());
        let g = parse("dia<=100000000000000000000 p").unwrap();
        assert!(find_model(&g, 1, FrameSpec::default()).is_some());
    }

    #[test]
    fn propositional_abstraction() {
        assert!(!propositionally_satisfiable(&parse("p & ~p").unwrap()));
        assert!(!propositionally_satisfiable(&parse("dia p & ~dia p").unwrap()));
        assert!(propositionally_satisfiable(&parse("dia p & ~dia q").unwrap()));
    }
}
