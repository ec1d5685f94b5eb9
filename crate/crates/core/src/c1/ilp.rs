//! Exact integer feasibility for systems of 0/1-coefficient constraints
//! `lo <= sum_{j in S} x_j <= hi` over non-negative integers.
//!
//! Branch and bound over an exact rational phase-one simplex.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub support: Vec<usize>,
    pub lo: BigUint,
    pub hi: Option<BigUint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Constraint {
    support: Vec<usize>,
    cmp: Cmp,
    rhs: BigInt,
}

/// Finds non-negative integers satisfying every row, or `None`.
///
/// Branching never raises a variable above `cap`. A solution exists within
/// the cap whenever one exists at all, provided the cap exceeds every
/// constant in the system: clamping a variable to the cap keeps each lower
/// bound it occurs in satisfied on its own, and only loosens upper bounds.
pub(crate) fn solve(vars: usize, rows: &[Row], cap: &BigUint) -> Option<Vec<BigUint>> {
    let mut cons = Vec::new();
    for r in rows {
        if let Some(hi) = &r.hi {
            if *hi < r.lo {
                return None;
            }
            if *hi == r.lo {
                cons.push(Constraint {
                    support: r.support.clone(),
                    cmp: Cmp::Eq,
                    rhs: BigInt::from(hi.clone()),
                });
                continue;
            }
            cons.push(Constraint {
                support: r.support.clone(),
                cmp: Cmp::Le,
                rhs: BigInt::from(hi.clone()),
            });
        }
        if !r.lo.is_zero() {
            if r.support.is_empty() {
                return None;
            }
            cons.push(Constraint {
                support: r.support.clone(),
                cmp: Cmp::Ge,
                rhs: BigInt::from(r.lo.clone()),
            });
        }
    }
    let cap = BigInt::from(cap.clone());
    branch(vars, &mut cons, &cap)
}

fn branch(vars: usize, cons: &mut Vec<Constraint>, cap: &BigInt) -> Option<Vec<BigUint>> {
    let x = simplex(vars, cons)?;
    let Some(j) = x.iter().position(|v| !v.is_integer()) else {
        return Some(
            x.iter()
                .map(|v| v.to_integer().to_biguint().expect("non-negative"))
                .collect(),
        );
    };
    let f = x[j].floor().to_integer();
    cons.push(Constraint {
        support: vec![j],
        cmp: Cmp::Le,
        rhs: f.clone(),
    });
    let low = branch(vars, cons, cap);
    cons.pop();
    if low.is_some() {
        return low;
    }
    let c = f + BigInt::one();
    if &c > cap {
        return None;
    }
    cons.push(Constraint {
        support: vec![j],
        cmp: Cmp::Ge,
        rhs: c,
    });
    let high = branch(vars, cons, cap);
    cons.pop();
    high
}

/// Phase-one simplex with Bland's rule. Returns a feasible vertex.
fn simplex(vars: usize, cons: &[Constraint]) -> Option<Vec<BigRational>> {
    let m = cons.len();
    if m == 0 {
        return Some(vec![BigRational::zero(); vars]);
    }
    let slacks = cons.iter().filter(|c| c.cmp != Cmp::Eq).count();
    let arts = cons.iter().filter(|c| c.cmp != Cmp::Le).count();
    let ncols = vars + slacks + arts;
    let rhs_col = ncols;
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut t = vec![vec![zero.clone(); ncols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut is_art = vec![false; ncols];
    let (mut s_next, mut a_next) = (vars, vars + slacks);
    for (i, c) in cons.iter().enumerate() {
        debug_assert!(!c.rhs.is_negative());
        for &j in &c.support {
            t[i][j] = one.clone();
        }
        t[i][rhs_col] = BigRational::from_integer(c.rhs.clone());
        match c.cmp {
            Cmp::Le => {
                t[i][s_next] = one.clone();
                basis[i] = s_next;
                s_next += 1;
            }
            Cmp::Ge => {
                t[i][s_next] = -one.clone();
                s_next += 1;
                t[i][a_next] = one.clone();
                is_art[a_next] = true;
                basis[i] = a_next;
                a_next += 1;
            }
            Cmp::Eq => {
                t[i][a_next] = one.clone();
                is_art[a_next] = true;
                basis[i] = a_next;
                a_next += 1;
            }
        }
    }
    if arts > 0 {
        // Reduced costs for minimizing the sum of artificials.
        let mut z = vec![zero.clone(); ncols + 1];
        for (i, row) in t.iter().enumerate() {
            if is_art[basis[i]] {
                for (j, v) in row.iter().enumerate() {
                    if !v.is_zero() && (j == rhs_col || !is_art[j]) {
                        z[j] -= v;
                    }
                }
            }
        }
        loop {
            let Some(enter) = (0..ncols).find(|&j| z[j].is_negative()) else {
                break;
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..m {
                if t[i][enter].is_positive() {
                    let ratio = &t[i][rhs_col] / &t[i][enter];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (r, _) = leave.expect("phase one is bounded below");
            pivot(&mut t, &mut z, r, enter);
            basis[r] = enter;
        }
        if !z[rhs_col].is_zero() {
            return None;
        }
    }
    let mut x = vec![zero; vars];
    for (i, &b) in basis.iter().enumerate() {
        if b < vars {
            x[b] = t[i][rhs_col].clone();
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<BigRational>], z: &mut [BigRational], r: usize, c: usize) {
    let p = t[r][c].clone();
    if !p.is_one() {
        for v in t[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
    }
    let prow = t[r].clone();
    let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for &j in &nz {
            row[j] -= &f * &prow[j];
        }
    }
    if !z[c].is_zero() {
        let f = z[c].clone();
        for &j in &nz {
            z[j] -= &f * &prow[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(support: &[usize], lo: u32, hi: Option<u32>) -> Row {
        Row {
            support: support.to_vec(),
            lo: lo.into(),
            hi: hi.map(Into::into),
        }
    }

    fn satisfies(x: &[BigUint], rows: &[Row]) -> bool {
        rows.iter().all(|r| {
            let s: BigUint = r.support.iter().map(|&j| &x[j]).sum();
            s >= r.lo && r.hi.as_ref().is_none_or(|h| &s <= h)
        })
    }

    #[test]
    fn contradictory_counts() {
        let rows = [row(&[0], 3, None), row(&[0], 0, Some(2))];
        assert!(solve(1, &rows, &10u32.into()).is_none());
    }

    #[test]
    fn simple_feasible() {
        let rows = [row(&[0, 1], 2, None), row(&[1], 0, Some(0)), row(&[0, 1], 1, None)];
        let x = solve(2, &rows, &10u32.into()).unwrap();
        assert!(satisfies(&x, &rows));
        assert_eq!(x[1], BigUint::zero());
    }

    #[test]
    fn fractional_relaxation_integer_infeasible() {
        // x+y = 1, y+z = 1, x+z = 1 has only the half-integral solution.
        let rows = [
            row(&[0, 1], 1, Some(1)),
            row(&[1, 2], 1, Some(1)),
            row(&[0, 2], 1, Some(1)),
        ];
        assert!(solve(3, &rows, &10u32.into()).is_none());
        let rows2 = [
            row(&[0, 1], 2, Some(2)),
            row(&[1, 2], 2, Some(2)),
            row(&[0, 2], 2, Some(2)),
        ];
        let x = solve(3, &rows2, &10u32.into()).unwrap();
        assert!(satisfies(&x, &rows2));
    }

    #[test]
    fn big_constants() {
        let big: BigUint = BigUint::from(1u32) << 200;
        let rows = [Row {
            support: vec![0, 1],
            lo: big.clone(),
            hi: Some(big.clone()),
        }];
        let x = solve(2, &rows, &(big.clone() + 1u32)).unwrap();
        assert_eq!(&x[0] + &x[1], big);
    }

    #[test]
    fn agrees_with_enumeration() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..300 {
            let vars = rng.gen_range(1..=3);
            let rows: Vec<Row> = (0..rng.gen_range(1..=4))
                .map(|_| {
                    let support: Vec<usize> = (0..vars).filter(|_| rng.gen_bool(0.6)).collect();
                    let lo = rng.gen_range(0..=3);
                    let hi = rng.gen_bool(0.5).then(|| rng.gen_range(0..=3));
                    row(&support, lo, hi)
                })
                .collect();
            let brute = (0..4u32.pow(vars as u32)).any(|code| {
                let x: Vec<BigUint> = (0..vars).map(|j| BigUint::from((code >> (2 * j)) & 3)).collect();
                satisfies(&x, &rows)
            });
            let got = solve(vars, &rows, &4u32.into());
            if let Some(x) = &got {
                assert!(satisfies(x, &rows));
            }
            assert_eq!(got.is_some(), brute, "{rows:?}");
        }
    }
}
