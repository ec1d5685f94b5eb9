//! Satisfiability over a frame class given as a set of frame conditions.
//!
//! Three routes, chosen by [`decide`]:
//! - Euclidean (`eucl`, or both `sym` and `tr`): translation into the
//!   one-variable counting logic, which is decided exactly.
//! - Transitive: search for a model no larger than the small-model bound of
//!   the renaming normal form; complete when the cap allows the full bound.
//! - Everything else: bounded search, complete only for `{}` and `{ser}`
//!   and only when the cap covers a tree-model bound.

mod encode;
mod oracle;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

pub use oracle::{brute_force, brute_force_trees, OracleResult, OracleTable, MAX_ORACLE_SIZE};

use crate::c1::{self, C1Error, C1Verdict};
use crate::exec::Execution;
use crate::formula::Formula;
use crate::kripke::{FrameClass, FrameClasses, KripkeStructure, PointedStructure};
use crate::normal_form::{normalize, NormalForm};
use encode::{find_model, propositionally_satisfiable, FrameSpec};

pub const DEFAULT_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat(PointedStructure),
    Unsat,
    Unknown(String),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn model(&self) -> Option<&PointedStructure> {
        match self {
            Verdict::Sat(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverOptions {
    /// Largest model size tried by the search-based routes. `None` means
    /// the full small-model bound.
    pub cap: Option<usize>,
    /// Parallelism for the per-size searches; verdicts do not depend on it.
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            cap: Some(DEFAULT_CAP),
            execution: Execution::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_cap(cap: usize) -> Self {
        assert!(cap >= 1, "cap must be positive");
        SolverOptions {
            cap: Some(cap),
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("frame classes {0} are outside this procedure's scope")]
    Precondition(FrameClasses),
}

fn is_euclidean_case(classes: FrameClasses) -> bool {
    classes.contains(FrameClass::Eucl) || (classes.contains(FrameClass::Sym) && classes.contains(FrameClass::Tr))
}

/// Decides `f` over the frames satisfying every condition in `classes`.
///
/// Every `Sat` model is checked against `f` and `classes` before it is
/// returned; a failed check panics, since it can only come from a bug.
pub fn decide(f: &Formula, classes: FrameClasses, opts: SolverOptions) -> Verdict {
    let verdict = if is_euclidean_case(classes) {
        decide_euclidean(f, classes)
    } else if classes.contains(FrameClass::Tr) {
        decide_transitive(f, classes, opts)
    } else {
        decide_fallback(f, classes, opts)
    }
    .expect("dispatch respects preconditions");
    if let Verdict::Sat(m) = &verdict {
        verify(m, f, classes);
    }
    verdict
}

fn verify(m: &PointedStructure, f: &Formula, classes: FrameClasses) {
    assert!(m.check(f), "solver returned a model falsifying {f}");
    let props = m.structure.frame_properties();
    assert!(
        classes.is_subset(props),
        "solver returned a {props} frame for class {classes}"
    );
}

/// The Euclidean route: `classes` must contain `eucl`, or both `sym` and `tr`.
pub fn decide_euclidean(f: &Formula, classes: FrameClasses) -> Result<Verdict, SolverError> {
    if !is_euclidean_case(classes) {
        return Err(SolverError::Precondition(classes));
    }
    let tr = c1::translate(f, classes.without(FrameClass::Eucl)).expect("eucl removed");
    let profile = match c1::decide_c1(&tr.alpha) {
        Ok(C1Verdict::Unsat) => return Ok(Verdict::Unsat),
        Ok(C1Verdict::Sat(p)) => p,
        Err(C1Error::TooManyPredicates(k)) => {
            return Ok(Verdict::Unknown(format!("{k} predicates exceed the counting solver's limit")))
        }
        Err(e) => panic!("counting solver failed: {e}"),
    };
    match c1::model_from_profile(&profile, &tr, f) {
        Ok(m) => {
            verify(&m, f, classes);
            Ok(Verdict::Sat(m))
        }
        Err(C1Error::TooLarge(n)) => Ok(Verdict::Unknown(format!(
            "satisfiable, but the model has {n} worlds, too many to build"
        ))),
        Err(e) => panic!("model reconstruction failed: {e}"),
    }
}

/// `(b + 1) * (b^(2l + 1) - 1) / (b - 1)` with `l` the number of lower
/// constraints and `b = max(2, sum of their counts)`.
pub fn model_size_bound(nf: &NormalForm) -> BigUint {
    let b = nf.lower_sum().max(BigUint::from(2u32));
    let e = u32::try_from(2 * nf.ell() + 1).expect("exponent fits");
    let one = BigUint::one();
    (&b + &one) * (b.pow(e) - &one) / (&b - &one)
}

/// Worlds of the largest tree needed for a model of `f` over all frames
/// (plus one extra successor per node for serial frames): each node keeps
/// at most `C + 1` children per graded subformula, down to the modal depth.
pub fn tree_size_bound(f: &Formula, serial: bool) -> BigUint {
    let mut graded = std::collections::BTreeSet::new();
    f.visit(&mut |g| {
        if g.is_graded() {
            graded.insert(g);
        }
    });
    let mut branching: BigUint = graded
        .iter()
        .map(|g| match g {
            Formula::AtLeast(c, _) | Formula::AtMost(c, _) => c + BigUint::one(),
            _ => BigUint::zero(),
        })
        .sum();
    if serial {
        branching += 1u32;
    }
    let mut total = BigUint::zero();
    let mut level = BigUint::one();
    for _ in 0..=f.modal_depth() {
        total += &level;
        level *= &branching;
    }
    total
}

fn cap_to(bound: &BigUint, cap: Option<usize>) -> usize {
    let b = bound.to_usize().unwrap_or(usize::MAX);
    cap.map_or(b, |c| c.min(b)).max(1)
}

/// A smallest model with at most `max` worlds, if any.
///
/// Models persist when an unreachable world is added, so one search at
/// `max` settles existence; smaller sizes are then tried in order.
fn search(f: &Formula, max: usize, spec: FrameSpec, exec: Execution) -> Option<PointedStructure> {
    let largest = find_model(f, max, spec)?;
    let sizes: Vec<usize> = (1..max).collect();
    let smaller = if exec.is_parallel() {
        exec.find_map_first(&sizes, |&n| find_model(f, n, spec))
    } else {
        sizes.iter().find_map(|&n| find_model(f, n, spec))
    };
    let a: KripkeStructure = smaller.unwrap_or(largest);
    Some(PointedStructure::new(a, 0).generated())
}

/// The transitive route: `classes` must contain `tr` and lie within
/// `{rfl, ser, tr}`.
pub fn decide_transitive(f: &Formula, classes: FrameClasses, opts: SolverOptions) -> Result<Verdict, SolverError> {
    let allowed: FrameClasses = [FrameClass::Rfl, FrameClass::Ser, FrameClass::Tr].into();
    if !classes.contains(FrameClass::Tr) || !classes.is_subset(allowed) {
        return Err(SolverError::Precondition(classes));
    }
    if !propositionally_satisfiable(f) {
        return Ok(Verdict::Unsat);
    }
    let reflexive = classes.contains(FrameClass::Rfl);
    let target = if classes.contains(FrameClass::Ser) && !reflexive {
        Formula::and(f.clone(), Formula::boxdot(Formula::dia(Formula::True)))
    } else {
        f.clone()
    };
    let bound = model_size_bound(&normalize(&target));
    let limit = cap_to(&bound, opts.cap);
    let spec = FrameSpec {
        reflexive,
        transitive: true,
        ..FrameSpec::default()
    };
    Ok(match search(&target, limit, spec, opts.execution) {
        Some(m) => Verdict::Sat(m),
        None if BigUint::from(limit) >= bound => Verdict::Unsat,
        None => Verdict::Unknown(format!("no model up to {limit} worlds; the size bound is {bound}")),
    })
}

fn decide_fallback(f: &Formula, classes: FrameClasses, opts: SolverOptions) -> Result<Verdict, SolverError> {
    let spec = FrameSpec {
        reflexive: classes.contains(FrameClass::Rfl),
        serial: classes.contains(FrameClass::Ser),
        symmetric: classes.contains(FrameClass::Sym),
        transitive: false,
    };
    if !propositionally_satisfiable(f) {
        return Ok(Verdict::Unsat);
    }
    let complete = !spec.reflexive && !spec.symmetric;
    let bound = complete.then(|| tree_size_bound(f, spec.serial));
    let limit = match &bound {
        Some(b) => cap_to(b, opts.cap),
        None => opts.cap.unwrap_or(DEFAULT_CAP),
    };
    Ok(match search(f, limit, spec, opts.execution) {
        Some(m) => Verdict::Sat(m),
        None if bound.as_ref().is_some_and(|b| BigUint::from(limit) >= *b) => Verdict::Unsat,
        None => Verdict::Unknown("cap reached; class lacks in-scope complete procedure".into()),
    })
}
