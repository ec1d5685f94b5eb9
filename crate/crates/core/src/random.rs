//! Seeded generators for formulas and structures, used by tests, benches
//! and the acceptance corpora.

use rand::Rng;

use crate::formula::{Formula, PropLetter};
use crate::kripke::KripkeStructure;

#[derive(Clone, Debug)]
pub struct FormulaShape {
    pub letters: Vec<PropLetter>,
    /// Maximum modal depth.
    pub depth: usize,
    /// Subscripts are drawn from `0..=max_subscript`.
    pub max_subscript: u32,
    /// Number of connectives and operators to place.
    pub size: usize,
}

impl FormulaShape {
    /// Letters `p`, `q`, `r`, ... truncated to `count`.
    pub fn standard_letters(count: usize) -> Vec<PropLetter> {
        ["p", "q", "r", "s", "t"]
            .iter()
            .take(count)
            .map(|s| PropLetter::new(*s).expect("valid letter"))
            .collect()
    }
}

pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, shape: &FormulaShape) -> Formula {
    gen(rng, shape, shape.depth, shape.size)
}

fn leaf<R: Rng + ?Sized>(rng: &mut R, shape: &FormulaShape) -> Formula {
    if shape.letters.is_empty() || rng.gen_ratio(1, 10) {
        if rng.gen_bool(0.5) {
            Formula::True
        } else {
            Formula::False
        }
    } else {
        Formula::Letter(shape.letters[rng.gen_range(0..shape.letters.len())].clone())
    }
}

fn gen<R: Rng + ?Sized>(rng: &mut R, shape: &FormulaShape, depth: usize, budget: usize) -> Formula {
    if budget == 0 {
        return leaf(rng, shape);
    }
    let choices = if depth > 0 { 7 } else { 5 };
    let op = rng.gen_range(0..choices);
    match op {
        0 => Formula::not(gen(rng, shape, depth, budget - 1)),
        5 | 6 => {
            let c = rng.gen_range(0..=shape.max_subscript);
            let body = gen(rng, shape, depth - 1, budget - 1);
            if op == 5 {
                Formula::at_least(c, body)
            } else {
                Formula::at_most(c, body)
            }
        }
        _ => {
            let left = rng.gen_range(0..budget);
            let a = gen(rng, shape, depth, left);
            let b = gen(rng, shape, depth, budget - 1 - left);
            match op {
                1 => Formula::and(a, b),
                2 => Formula::or(a, b),
                3 => Formula::implies(a, b),
                _ => Formula::iff(a, b),
            }
        }
    }
}

/// `n` worlds, each edge present independently with probability `p`, each
/// letter true at each world with probability one half.
pub fn random_structure<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    letters: &[PropLetter],
    p: f64,
) -> KripkeStructure {
    let mut a = KripkeStructure::with_size(n);
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(p) {
                a.add_edge(i, j);
            }
        }
    }
    for l in letters {
        for w in 0..n {
            if rng.gen_bool(0.5) {
                a.set_letter(l, w, true);
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn respects_shape() {
        let mut rng = StdRng::seed_from_u64(1);
        let shape = FormulaShape {
            letters: FormulaShape::standard_letters(3),
            depth: 2,
            max_subscript: 2,
            size: 8,
        };
        for _ in 0..500 {
            let f = random_formula(&mut rng, &shape);
            assert!(f.modal_depth() <= 2);
            assert!(f.letters().len() <= 3);
            assert!(f.subscripts().iter().all(|c| **c <= 2u32.into()));
        }
    }

    #[test]
    fn seeded_is_reproducible() {
        let shape = FormulaShape {
            letters: FormulaShape::standard_letters(2),
            depth: 2,
            max_subscript: 2,
            size: 6,
        };
        let a = random_formula(&mut StdRng::seed_from_u64(9), &shape);
        let b = random_formula(&mut StdRng::seed_from_u64(9), &shape);
        assert_eq!(a, b);
    }
}
