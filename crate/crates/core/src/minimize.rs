//! Small-model extraction for transitive models of a normal form.
//!
//! Four stages, each returning a new structure that still satisfies
//! `to_formula(nf)` at its designated world:
//!
//! 1. merge worlds that agree on every upper-constraint count, giving finite
//!    depth (at most `sum D_j + m` on reflexive inputs);
//! 2. drop direct edges that no lower constraint needs, until depth `<= 2l`;
//! 3. keep at most `C_i` strict `pi_i`-witnesses per clique, bounding breadth
//!    by `sum C_i`;
//! 4. keep at most `C_i` `pi_i`-members per clique plus one world satisfying
//!    the formula, bounding width by `sum C_i + 1`.
//!
//! [`minimize`] composes them and takes the substructure generated by the
//! designated world. Every stage starts from that generated substructure, so
//! the boxed part of the normal form holds at every world it looks at. World
//! indices in traces refer to the structure the stage received after this
//! restriction.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::formula::Formula;
use crate::kripke::{KripkeStructure, PointedStructure};
use crate::normal_form::{to_formula, NormalForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinimizeError {
    #[error("the normal form is malformed")]
    MalformedNormalForm,
    #[error("the structure is not transitive")]
    NotTransitive,
    #[error("the designated world does not satisfy the normal form")]
    NotAModel,
    #[error("depth {depth} exceeds {bound}")]
    DepthTooLarge { depth: usize, bound: usize },
    #[error("breadth {breadth} exceeds {bound}")]
    BreadthTooLarge { breadth: usize, bound: BigUint },
    #[error("depth still above the bound after {0} passes")]
    NoConvergence(usize),
}

/// `I(w)` and `I^s(w)`: lower constraints whose count is met by all
/// successors, and by successors outside the clique of `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSets {
    pub all: BTreeSet<usize>,
    pub strict: BTreeSet<usize>,
}

#[derive(Clone, Debug)]
pub struct Stage1Trace {
    pub input: PointedStructure,
    /// `d[w][j] = min(D_j + 1, |R*(w, chi_j)|)`.
    pub d: Vec<Vec<usize>>,
    /// Worlds whose reflexive and irreflexive counts agree on every active
    /// upper constraint; only these may gain a loop.
    pub stable: Vec<bool>,
    /// `R_d`: edges between stable worlds that agree on every `d^j`.
    pub merged: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct Stage2Trace {
    pub input: PointedStructure,
    pub index_sets: Vec<IndexSets>,
    /// Edges removed in each pass.
    pub removed: Vec<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug)]
pub struct Stage3Trace {
    pub input: PointedStructure,
    /// `witnesses[w][i]`: strict `pi_i`-successors of `w`.
    pub witnesses: Vec<Vec<Vec<usize>>>,
    /// The retained prefix of each witness list.
    pub selected: Vec<Vec<Vec<usize>>>,
    /// `R_q`: edges inside a clique.
    pub clique_edges: Vec<(usize, usize)>,
    /// `R_i'`: edges to selected witnesses.
    pub witness_edges: Vec<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug)]
pub struct Stage4Trace {
    pub input: PointedStructure,
    /// `members[w][i]`: members of the clique of `w` satisfying `pi_i`.
    pub members: Vec<Vec<Vec<usize>>>,
    pub selected: Vec<Vec<Vec<usize>>>,
    /// `Q_0'(w)`: a clique member satisfying the formula, if any, else the
    /// smallest member.
    pub anchor: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct StageTrace {
    pub stage1: Stage1Trace,
    pub stage2: Stage2Trace,
    pub stage3: Stage3Trace,
    pub stage4: Stage4Trace,
    /// Output of each stage, before the next one restricts it.
    pub outputs: Vec<PointedStructure>,
}

fn clamp(c: &BigUint) -> usize {
    c.to_usize().unwrap_or(usize::MAX)
}

fn prepare(a: &PointedStructure, nf: &NormalForm) -> Result<PointedStructure, MinimizeError> {
    if !nf.is_well_formed() {
        return Err(MinimizeError::MalformedNormalForm);
    }
    if !a.structure.is_transitive() {
        return Err(MinimizeError::NotTransitive);
    }
    if !a.check(&to_formula(nf)) {
        return Err(MinimizeError::NotAModel);
    }
    Ok(a.generated())
}

fn edge_list(a: &KripkeStructure) -> Vec<(usize, usize)> {
    a.edges().collect()
}

/// Replaces the relation of `a` with the transitive closure of `edges`.
fn with_closure(a: &KripkeStructure, edges: impl IntoIterator<Item = (usize, usize)>) -> KripkeStructure {
    let mut out = a.clone();
    for w in 0..a.len() {
        out.set_successors(w, a.empty_set());
    }
    for (x, y) in edges {
        out.add_edge(x, y);
    }
    out.transitive_closure()
}

/// `d^j(w)` for every world and upper constraint.
pub fn upper_counts(a: &KripkeStructure, nf: &NormalForm) -> Vec<Vec<usize>> {
    let exts: Vec<FixedBitSet> = nf.uppers.iter().map(|c| a.extension(&c.body)).collect();
    (0..a.len())
        .map(|w| {
            let mut reach = a.successors(w).clone();
            reach.insert(w);
            nf.uppers
                .iter()
                .zip(&exts)
                .map(|(c, ext)| {
                    let n = reach.intersection(ext).count();
                    n.min(clamp(&c.count).saturating_add(1))
                })
                .collect()
        })
        .collect()
}

/// A merged world becomes reflexive and so counts itself. That is harmless
/// unless an active upper constraint counts a body true at the world itself
/// while the world is irreflexive.
pub fn stable_worlds(a: &KripkeStructure, nf: &NormalForm) -> Vec<bool> {
    let risky: Vec<FixedBitSet> = nf
        .uppers
        .iter()
        .map(|c| {
            let mut ext = a.extension(&c.body);
            ext.intersect_with(&a.valuation(&c.guard));
            ext
        })
        .collect();
    (0..a.len())
        .map(|w| a.has_edge(w, w) || risky.iter().all(|r| !r.contains(w)))
        .collect()
}

/// `I(w)` and `I^s(w)` for every world.
pub fn index_sets(a: &KripkeStructure, nf: &NormalForm) -> Vec<IndexSets> {
    let exts: Vec<FixedBitSet> = nf.lowers.iter().map(|c| a.extension(&c.body)).collect();
    (0..a.len())
        .map(|w| {
            let succ = a.successors(w);
            let clique = a.clique(w);
            let mut sets = IndexSets {
                all: BTreeSet::new(),
                strict: BTreeSet::new(),
            };
            for (i, (c, ext)) in nf.lowers.iter().zip(&exts).enumerate() {
                let need = clamp(&c.count);
                let hits = succ.intersection(ext);
                let (mut total, mut outside) = (0usize, 0usize);
                for v in hits {
                    total += 1;
                    if !clique.contains(v) {
                        outside += 1;
                    }
                }
                if total >= need {
                    sets.all.insert(i);
                }
                if outside >= need {
                    sets.strict.insert(i);
                }
            }
            sets
        })
        .collect()
}

pub fn stage1_traced(a: &PointedStructure, nf: &NormalForm) -> Result<(PointedStructure, Stage1Trace), MinimizeError> {
    let input = prepare(a, nf)?;
    let s = &input.structure;
    let d = upper_counts(s, nf);
    let stable = stable_worlds(s, nf);
    let merged: Vec<(usize, usize)> = s
        .edges()
        .filter(|&(x, y)| d[x] == d[y] && stable[x] && stable[y])
        .collect();
    let edges = edge_list(s).into_iter().chain(merged.iter().map(|&(x, y)| (y, x)));
    let out = PointedStructure::new(with_closure(s, edges), input.world);
    Ok((
        out,
        Stage1Trace {
            input,
            d,
            stable,
            merged,
        },
    ))
}

pub fn stage1_finite_depth(a: &PointedStructure, nf: &NormalForm) -> Result<PointedStructure, MinimizeError> {
    stage1_traced(a, nf).map(|(out, _)| out)
}

pub fn stage2_traced(a: &PointedStructure, nf: &NormalForm) -> Result<(PointedStructure, Stage2Trace), MinimizeError> {
    let input = prepare(a, nf)?;
    let bound = 2 * nf.ell();
    let depth0 = input.structure.metrics().map_err(|_| MinimizeError::NotTransitive)?.depth;
    let mut cur = input.structure.clone();
    let mut removed = Vec::new();
    let mut depth = depth0;
    while depth > bound {
        if removed.len() > depth0 {
            return Err(MinimizeError::NoConvergence(removed.len()));
        }
        let sets = index_sets(&cur, nf);
        let mut pass = Vec::new();
        for w1 in 0..cur.len() {
            for w2 in cur.direct_successors(w1).ones() {
                if sets[w2].strict == sets[w1].all {
                    pass.push((w1, w2));
                }
            }
        }
        for &(x, y) in &pass {
            cur.remove_edge(x, y);
        }
        removed.push(pass);
        depth = cur.metrics().map_err(|_| MinimizeError::NotTransitive)?.depth;
    }
    let index_sets = index_sets(&input.structure, nf);
    let out = PointedStructure::new(cur, input.world);
    Ok((
        out,
        Stage2Trace {
            input,
            index_sets,
            removed,
        },
    ))
}

pub fn stage2_bound_depth(a: &PointedStructure, nf: &NormalForm) -> Result<PointedStructure, MinimizeError> {
    stage2_traced(a, nf).map(|(out, _)| out)
}

pub fn stage3_traced(a: &PointedStructure, nf: &NormalForm) -> Result<(PointedStructure, Stage3Trace), MinimizeError> {
    let input = prepare(a, nf)?;
    let s = &input.structure;
    let depth = s.metrics().map_err(|_| MinimizeError::NotTransitive)?.depth;
    if depth > 2 * nf.ell() {
        return Err(MinimizeError::DepthTooLarge {
            depth,
            bound: 2 * nf.ell(),
        });
    }
    let exts: Vec<FixedBitSet> = nf.lowers.iter().map(|c| s.extension(&c.body)).collect();
    let reps = s.clique_representatives();
    let witnesses: Vec<Vec<Vec<usize>>> = (0..s.len())
        .map(|w| {
            let strict = s.strict_successors(w);
            exts.iter().map(|ext| strict.intersection(ext).collect()).collect()
        })
        .collect();
    // Selecting at the representative keeps the choice uniform per clique.
    let selected: Vec<Vec<Vec<usize>>> = (0..s.len())
        .map(|w| {
            witnesses[reps[w]]
                .iter()
                .zip(&nf.lowers)
                .map(|(ws, c)| ws.iter().copied().take(clamp(&c.count)).collect())
                .collect()
        })
        .collect();
    let clique_edges: Vec<(usize, usize)> = s.edges().filter(|&(x, y)| s.equivalent(x, y)).collect();
    let witness_edges: Vec<Vec<(usize, usize)>> = (0..nf.ell())
        .map(|i| {
            (0..s.len())
                .flat_map(|w| selected[w][i].iter().map(move |&v| (w, v)))
                .collect()
        })
        .collect();
    let edges = clique_edges.iter().copied().chain(witness_edges.iter().flatten().copied());
    let out = PointedStructure::new(with_closure(s, edges), input.world);
    Ok((
        out,
        Stage3Trace {
            input,
            witnesses,
            selected,
            clique_edges,
            witness_edges,
        },
    ))
}

pub fn stage3_bound_breadth(a: &PointedStructure, nf: &NormalForm) -> Result<PointedStructure, MinimizeError> {
    stage3_traced(a, nf).map(|(out, _)| out)
}

pub fn stage4_traced(a: &PointedStructure, nf: &NormalForm) -> Result<(PointedStructure, Stage4Trace), MinimizeError> {
    let input = prepare(a, nf)?;
    let s = &input.structure;
    let m = s.metrics().map_err(|_| MinimizeError::NotTransitive)?;
    if m.depth > 2 * nf.ell() {
        return Err(MinimizeError::DepthTooLarge {
            depth: m.depth,
            bound: 2 * nf.ell(),
        });
    }
    let sum = nf.lower_sum();
    if BigUint::from(m.breadth) > sum {
        return Err(MinimizeError::BreadthTooLarge {
            breadth: m.breadth,
            bound: sum,
        });
    }
    let phi: Formula = to_formula(nf);
    let sat = s.extension(&phi);
    let exts: Vec<FixedBitSet> = nf.lowers.iter().map(|c| s.extension(&c.body)).collect();
    let mut members = Vec::with_capacity(s.len());
    let mut selected = Vec::with_capacity(s.len());
    let mut anchor = Vec::with_capacity(s.len());
    let mut keep = s.empty_set();
    for w in 0..s.len() {
        let clique = s.clique(w);
        let qs: Vec<Vec<usize>> = exts.iter().map(|ext| clique.intersection(ext).collect()).collect();
        let picks: Vec<Vec<usize>> = qs
            .iter()
            .zip(&nf.lowers)
            .map(|(q, c)| q.iter().copied().take(clamp(&c.count)).collect())
            .collect();
        let q0 = clique
            .intersection(&sat)
            .next()
            .unwrap_or_else(|| clique.minimum().expect("clique contains w"));
        keep.insert(q0);
        keep.extend(picks.iter().flatten().copied());
        members.push(qs);
        selected.push(picks);
        anchor.push(q0);
    }
    let (sub, map) = s.restrict(&keep);
    let designated = map[input.world].or(map[anchor[input.world]]).expect("anchor is kept");
    let out = PointedStructure::new(sub, designated);
    Ok((
        out,
        Stage4Trace {
            input,
            members,
            selected,
            anchor,
        },
    ))
}

pub fn stage4_bound_width(a: &PointedStructure, nf: &NormalForm) -> Result<PointedStructure, MinimizeError> {
    stage4_traced(a, nf).map(|(out, _)| out)
}

/// All four stages, then the substructure generated by the designated world.
pub fn minimize_traced(a: &PointedStructure, nf: &NormalForm) -> Result<(PointedStructure, StageTrace), MinimizeError> {
    let (s1, stage1) = stage1_traced(a, nf)?;
    let (s2, stage2) = stage2_traced(&s1, nf)?;
    let (s3, stage3) = stage3_traced(&s2, nf)?;
    let (s4, stage4) = stage4_traced(&s3, nf)?;
    let out = s4.generated();
    Ok((
        out,
        StageTrace {
            stage1,
            stage2,
            stage3,
            stage4,
            outputs: vec![s1, s2, s3, s4],
        },
    ))
}

pub fn minimize(a: &PointedStructure, nf: &NormalForm) -> Result<PointedStructure, MinimizeError> {
    minimize_traced(a, nf).map(|(out, _)| out)
}
