//! Renaming normal form for transitive frames:
//!
//! ```text
//! eta & boxdot(theta & AND_i (p_i -> dia>=C_i pi_i) & AND_j (q_j -> dia<=D_j chi_j))
//! ```
//!
//! with `eta`, `theta`, `pi_i`, `chi_j` propositional. Each graded
//! subformula `rho` with propositional body is replaced by a fresh letter
//! `p`, and `q` is introduced for its complement, until no graded operator
//! remains outside the guarded conjuncts.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::formula::{fresh_letters, Formula, PropLetter};
use crate::kripke::KripkeStructure;

/// A guarded graded obligation `guard -> dia>=count body` (lower) or
/// `guard -> dia<=count body` (upper).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub guard: PropLetter,
    pub count: BigUint,
    pub body: Formula,
}

/// One renaming step: `pos` names `replaced`, `neg` names its complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Renaming {
    pub pos: PropLetter,
    pub neg: PropLetter,
    pub replaced: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub eta: Formula,
    pub theta: Formula,
    pub lowers: Vec<Constraint>,
    pub uppers: Vec<Constraint>,
    pub fresh: BTreeSet<PropLetter>,
    /// Renaming history, in application order. Empty for hand-built forms.
    pub renamings: Vec<Renaming>,
}

impl NormalForm {
    /// Number of lower constraints.
    pub fn ell(&self) -> usize {
        self.lowers.len()
    }

    /// Number of upper constraints.
    pub fn m(&self) -> usize {
        self.uppers.len()
    }

    /// Sum of the lower counts.
    pub fn lower_sum(&self) -> BigUint {
        self.lowers.iter().map(|c| &c.count).sum()
    }

    pub fn lower_formula(c: &Constraint) -> Formula {
        Formula::implies(
            Formula::Letter(c.guard.clone()),
            Formula::AtLeast(c.count.clone(), Box::new(c.body.clone())),
        )
    }

    pub fn upper_formula(c: &Constraint) -> Formula {
        Formula::implies(
            Formula::Letter(c.guard.clone()),
            Formula::AtMost(c.count.clone(), Box::new(c.body.clone())),
        )
    }

    /// `theta` conjoined with every guarded constraint: the part under boxdot.
    pub fn global_part(&self) -> Formula {
        let mut parts = vec![self.theta.clone()];
        parts.extend(self.lowers.iter().map(Self::lower_formula));
        parts.extend(self.uppers.iter().map(Self::upper_formula));
        Formula::conj(parts)
    }

    /// Checks the shape invariants.
    pub fn is_well_formed(&self) -> bool {
        let all = self.lowers.iter().chain(&self.uppers);
        let props = self.eta.is_propositional()
            && self.theta.is_propositional()
            && all.clone().all(|c| c.body.is_propositional());
        let positive = self.lowers.iter().all(|c| !c.count.is_zero());
        let guards: Vec<&PropLetter> = all.map(|c| &c.guard).collect();
        let distinct = guards.iter().collect::<BTreeSet<_>>().len() == guards.len();
        props && positive && distinct
    }

    /// Expands `a` with the valuation of every guard letter, defined so that
    /// `pos` holds exactly where the renamed formula holds and `neg` exactly
    /// where it fails. A model of the original formula becomes a model of
    /// `to_formula(self)` at the same world.
    pub fn expand_model(&self, a: &KripkeStructure) -> KripkeStructure {
        let mut out = a.clone();
        for r in &self.renamings {
            let ext = out.extension(&r.replaced);
            let mut neg = ext.clone();
            neg.toggle_range(..);
            out.set_valuation(r.pos.clone(), ext);
            out.set_valuation(r.neg.clone(), neg);
        }
        out
    }

    /// Removes the guard letters from a structure's valuation.
    pub fn strip_model(&self, a: &KripkeStructure) -> KripkeStructure {
        let mut out = a.clone();
        for l in &self.fresh {
            out.remove_letter(l);
        }
        out
    }
}

fn complement(rho: &Formula) -> Formula {
    match rho {
        Formula::AtMost(c, body) => Formula::AtLeast(c + BigUint::one(), body.clone()),
        Formula::AtLeast(c, body) => {
            debug_assert!(!c.is_zero());
            Formula::AtMost(c - BigUint::one(), body.clone())
        }
        _ => unreachable!("complement of a non-graded formula"),
    }
}

/// Replaces every `dia>=0 _` by `true`.
fn drop_trivial(f: &Formula) -> Formula {
    let rec = |a: &Formula| Box::new(drop_trivial(a));
    match f {
        Formula::AtLeast(c, _) if c.is_zero() => Formula::True,
        Formula::True | Formula::False | Formula::Letter(_) => f.clone(),
        Formula::Not(a) => Formula::Not(rec(a)),
        Formula::And(a, b) => Formula::And(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::Or(rec(a), rec(b)),
        Formula::Implies(a, b) => Formula::Implies(rec(a), rec(b)),
        Formula::Iff(a, b) => Formula::Iff(rec(a), rec(b)),
        Formula::AtLeast(c, a) => Formula::AtLeast(c.clone(), rec(a)),
        Formula::AtMost(c, a) => Formula::AtMost(c.clone(), rec(a)),
    }
}

/// The leftmost graded subformula whose body is propositional.
fn innermost(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::True | Formula::False | Formula::Letter(_) => None,
        Formula::Not(a) => innermost(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            innermost(a).or_else(|| innermost(b))
        }
        Formula::AtLeast(_, a) | Formula::AtMost(_, a) => innermost(a).or(Some(f)),
    }
}

pub fn normalize(f: &Formula) -> NormalForm {
    let mut current = drop_trivial(f);
    let mut avoid = f.letters();
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    let mut theta = Vec::new();
    let mut renamings = Vec::new();
    let mut fresh = BTreeSet::new();
    while let Some(rho) = innermost(&current).cloned() {
        let pair = fresh_letters(2, &avoid);
        let (p, q) = (pair[0].clone(), pair[1].clone());
        avoid.extend([p.clone(), q.clone()]);
        fresh.extend([p.clone(), q.clone()]);
        let rho_bar = complement(&rho);
        for (guard, graded) in [(&p, &rho), (&q, &rho_bar)] {
            let (count, body, is_lower) = match graded {
                Formula::AtLeast(c, b) => (c.clone(), (**b).clone(), true),
                Formula::AtMost(c, b) => (c.clone(), (**b).clone(), false),
                _ => unreachable!(),
            };
            let c = Constraint {
                guard: guard.clone(),
                count,
                body,
            };
            if is_lower {
                lowers.push(c);
            } else {
                uppers.push(c);
            }
        }
        theta.push(Formula::or(Formula::Letter(p.clone()), Formula::Letter(q.clone())));
        current = current.substitute(&rho, &Formula::Letter(p.clone()));
        renamings.push(Renaming {
            pos: p,
            neg: q,
            replaced: rho,
        });
    }
    NormalForm {
        eta: current,
        theta: Formula::conj(theta),
        lowers,
        uppers,
        fresh,
        renamings,
    }
}

/// `eta & boxdot(global_part)`.
pub fn to_formula(nf: &NormalForm) -> Formula {
    Formula::and(nf.eta.clone(), Formula::boxdot(nf.global_part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn counts(cs: &[Constraint]) -> Vec<u32> {
        let mut v: Vec<u32> = cs.iter().map(|c| u32::try_from(&c.count).unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn propositional_input() {
        let nf = normalize(&parse("p").unwrap());
        assert_eq!(nf.eta, parse("p").unwrap());
        assert_eq!(nf.theta, Formula::True);
        assert_eq!((nf.ell(), nf.m()), (0, 0));
        assert_eq!(to_formula(&nf), parse("p & boxdot true").unwrap());
    }

    #[test]
    fn intro_formula_counts() {
        let nf = normalize(&parse("q0 & dia>=2 (~q0 & q1 & dia>=1 (~q0 & ~q1)) & dia<=1 ~q1").unwrap());
        assert_eq!(counts(&nf.lowers), vec![1, 2, 2]);
        assert_eq!(counts(&nf.uppers), vec![0, 1, 1]);
        assert!(nf.is_well_formed());
        assert_eq!(nf.fresh.len(), 6);
    }

    #[test]
    fn zero_lower_bound_is_dropped() {
        let nf = normalize(&parse("dia>=0 p & q").unwrap());
        assert_eq!(nf.eta, parse("true & q").unwrap());
        assert_eq!((nf.ell(), nf.m()), (0, 0));
    }

    #[test]
    fn identical_subformulas_share_guards() {
        let nf = normalize(&parse("dia p & (r | dia p)").unwrap());
        assert_eq!((nf.ell(), nf.m()), (1, 1));
    }

    #[test]
    fn guards_avoid_original_letters() {
        let f = parse("x0 & dia x1").unwrap();
        let nf = normalize(&f);
        assert!(nf.fresh.is_disjoint(&f.letters()));
    }

    #[test]
    fn guards_occur_only_in_guard_positions() {
        let f = parse("dia>=2 (p & dia<=1 q) | box ~p").unwrap();
        let nf = normalize(&f);
        let g = to_formula(&nf);
        let mut guard_positions = BTreeSet::new();
        for c in nf.lowers.iter().chain(&nf.uppers) {
            guard_positions.insert(c.guard.clone());
            assert!(nf.fresh.contains(&c.guard));
        }
        assert_eq!(guard_positions, nf.fresh);
        assert!(g.letters().is_superset(&nf.fresh));
    }
}
