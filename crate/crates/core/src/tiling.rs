//! Tiling systems and their encoding as graded modal formulas over transitive
//! frames.
//!
//! For a grid of side `2^n` the reduction uses the letters `u0..un`,
//! `v0..vn`, `p1..pn`, `q1..qn`, `z`, `oh`, `ov`, and one letter `c_<name>`
//! per colour. Every graded subscript in the output is 0 or 1.
//!
//! Bit strings are stored as integers together with their length, most
//! significant bit first: `s[k]` of a length-`i` string `s` is bit `i - k`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, PropLetter};
use crate::kripke::{KripkeStructure, PointedStructure};

/// Largest `n` for which [`canonical_model`] materializes the structure.
pub const MAX_CANONICAL_N: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TilingError {
    #[error("colour name `{0}` must be non-empty ASCII letters, digits or underscores")]
    InvalidColour(String),
    #[error("unknown colour `{0}`")]
    UnknownColour(String),
    #[error("a tiling system needs at least one colour")]
    NoColours,
    #[error("n must be positive")]
    ZeroN,
    #[error("initial configuration has {len} colours but the grid side is {side}")]
    InitialTooLong { len: usize, side: u64 },
    #[error("grid side {found} does not match {expected}")]
    DimensionMismatch { expected: u64, found: u64 },
    #[error("grid has {found} cells, expected {expected}")]
    Incomplete { expected: usize, found: usize },
    #[error("n = {0} is too large to build the canonical model")]
    TooLarge(usize),
    #[error("world `{0}` lacks a unique character")]
    NoCharacter(String),
    #[error("worlds `{0}` and `{1}` share the index {2}")]
    DuplicateIndex(String, String, ZIndex),
    #[error("no z-world has index {0}")]
    MissingIndex(ZIndex),
    #[error("no shared {kind} o-world for the grid cells at ({s}, {t})")]
    MissingOWorld { kind: &'static str, s: u64, t: u64 },
    #[error("grid cell ({s}, {t}) carries no colour")]
    NoColour { s: u64, t: u64 },
    #[error("grid cell ({s}, {t}) carries more than one colour")]
    AmbiguousColour { s: u64, t: u64 },
    #[error("world `{0}` is not a world of the canonical model")]
    NotCanonical(String),
    #[error("invalid tiling JSON: {0}")]
    Json(String),
}

/// Colours with horizontal and vertical adjacency constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingSystem {
    colors: Vec<String>,
    horizontal: BTreeSet<(String, String)>,
    vertical: BTreeSet<(String, String)>,
}

fn valid_colour(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl TilingSystem {
    pub fn new(
        colors: impl IntoIterator<Item = impl Into<String>>,
        horizontal: impl IntoIterator<Item = (String, String)>,
        vertical: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, TilingError> {
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for c in colors {
            let c = c.into();
            if !valid_colour(&c) {
                return Err(TilingError::InvalidColour(c));
            }
            if seen.insert(c.clone()) {
                list.push(c);
            }
        }
        if list.is_empty() {
            return Err(TilingError::NoColours);
        }
        let check = |pairs: BTreeSet<(String, String)>| {
            for (a, b) in &pairs {
                for c in [a, b] {
                    if !seen.contains(c) {
                        return Err(TilingError::UnknownColour(c.clone()));
                    }
                }
            }
            Ok(pairs)
        };
        let horizontal = check(horizontal.into_iter().collect())?;
        let vertical = check(vertical.into_iter().collect())?;
        Ok(TilingSystem {
            colors: list,
            horizontal,
            vertical,
        })
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    pub fn has_colour(&self, c: &str) -> bool {
        self.colors.iter().any(|x| x == c)
    }

    /// `c` may sit immediately left of `d`.
    pub fn allows_horizontal(&self, c: &str, d: &str) -> bool {
        self.horizontal.contains(&(c.to_string(), d.to_string()))
    }

    /// `d` may sit immediately above `c`.
    pub fn allows_vertical(&self, c: &str, d: &str) -> bool {
        self.vertical.contains(&(c.to_string(), d.to_string()))
    }

    pub fn horizontal(&self) -> &BTreeSet<(String, String)> {
        &self.horizontal
    }

    pub fn vertical(&self) -> &BTreeSet<(String, String)> {
        &self.vertical
    }

    /// The proposition letter standing for a colour.
    pub fn colour_letter(c: &str) -> PropLetter {
        PropLetter::new(format!("c_{c}")).expect("colour names form valid letters")
    }
}

/// A tiling system, a grid exponent `n` (side `2^n`) and an initial row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct TilingInstance {
    pub system: TilingSystem,
    pub n: usize,
    pub initial: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    colors: Vec<String>,
    #[serde(rename = "H")]
    h: Vec<(String, String)>,
    #[serde(rename = "V")]
    v: Vec<(String, String)>,
    n: usize,
    #[serde(default)]
    initial: Vec<String>,
}

impl TryFrom<InstanceJson> for TilingInstance {
    type Error = TilingError;

    fn try_from(j: InstanceJson) -> Result<Self, TilingError> {
        TilingInstance::new(TilingSystem::new(j.colors, j.h, j.v)?, j.n, j.initial)
    }
}

impl From<TilingInstance> for InstanceJson {
    fn from(i: TilingInstance) -> Self {
        InstanceJson {
            colors: i.system.colors.clone(),
            h: i.system.horizontal.into_iter().collect(),
            v: i.system.vertical.into_iter().collect(),
            n: i.n,
            initial: i.initial,
        }
    }
}

impl TilingInstance {
    pub fn new(system: TilingSystem, n: usize, initial: Vec<String>) -> Result<Self, TilingError> {
        if n == 0 {
            return Err(TilingError::ZeroN);
        }
        if let Some(c) = initial.iter().find(|c| !system.has_colour(c)) {
            return Err(TilingError::UnknownColour(c.clone()));
        }
        let side = side_of(n);
        if initial.len() as u64 > side {
            return Err(TilingError::InitialTooLong {
                len: initial.len(),
                side,
            });
        }
        Ok(TilingInstance { system, n, initial })
    }

    pub fn from_json(text: &str) -> Result<Self, TilingError> {
        serde_json::from_str(text).map_err(|e| TilingError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

fn side_of(n: usize) -> u64 {
    1u64.checked_shl(n as u32).unwrap_or(u64::MAX)
}

/// A colouring of an `N x N` grid; `get(x, y)` with `x` to the right and
/// `y` upwards.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingGrid {
    size: usize,
    cells: Vec<String>,
}

impl TilingGrid {
    /// `cells` in row-major order from the bottom row: `cells[x + y * size]`.
    pub fn new(size: usize, cells: Vec<String>) -> Result<Self, TilingError> {
        if cells.len() != size * size {
            return Err(TilingError::Incomplete {
                expected: size * size,
                found: cells.len(),
            });
        }
        Ok(TilingGrid { size, cells })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> String) -> Self {
        let mut cells = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                cells.push(f(x, y));
            }
        }
        TilingGrid { size, cells }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> &str {
        &self.cells[x + y * self.size]
    }
}

impl fmt::Display for TilingGrid {
    /// Top row first, so the picture reads the usual way up.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in (0..self.size).rev() {
            let row: Vec<&str> = (0..self.size).map(|x| self.get(x, y)).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Whether `grid` respects every constraint and starts with `initial` along
/// its bottom row. An initial row longer than the grid never matches.
pub fn check_tiling(sys: &TilingSystem, grid: &TilingGrid, initial: &[String]) -> Result<bool, TilingError> {
    if let Some(c) = grid.cells.iter().chain(initial).find(|c| !sys.has_colour(c)) {
        return Err(TilingError::UnknownColour(c.clone()));
    }
    let n = grid.size;
    if initial.len() > n {
        return Ok(false);
    }
    for y in 0..n {
        for x in 0..n {
            if x + 1 < n && !sys.allows_horizontal(grid.get(x, y), grid.get(x + 1, y)) {
                return Ok(false);
            }
            if y + 1 < n && !sys.allows_vertical(grid.get(x, y), grid.get(x, y + 1)) {
                return Ok(false);
            }
        }
    }
    Ok(initial.iter().enumerate().all(|(x, c)| grid.get(x, 0) == c))
}

// ---------------------------------------------------------------------------
// The reduction

/// Schema families, in emission order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    /// The designated world is the z-world of character (0, 0).
    Start,
    /// Characters are unique.
    Character,
    /// Successors extending the x-coordinate by one bit.
    GrowX,
    /// Successors extending the y-coordinate by one bit.
    GrowY,
    /// Fixed x-bits persist along z-worlds.
    KeepX,
    /// Fixed y-bits persist along z-worlds.
    KeepY,
    UniqueX,
    UniqueY,
    UniqueXY,
    /// Horizontal o-world towards the right neighbour.
    LinkRight,
    /// Horizontal o-world towards the left neighbour.
    LinkLeft,
    /// At most one horizontal o-world per prefix.
    MergeHorizontal,
    LinkUp,
    LinkDown,
    MergeVertical,
    /// Every grid world has exactly one colour.
    Colour,
    /// Horizontal o-worlds copy the colour of the right neighbour.
    CopyHorizontal,
    /// Horizontal constraints.
    Horizontal,
    CopyVertical,
    Vertical,
    /// The initial row.
    Initial,
}

fn letter(name: String) -> Formula {
    Formula::Letter(PropLetter::new(name).expect("reduction letters are valid"))
}

fn u(i: usize) -> Formula {
    letter(format!("u{i}"))
}

fn v(j: usize) -> Formula {
    letter(format!("v{j}"))
}

fn p(k: usize) -> Formula {
    letter(format!("p{k}"))
}

fn q(k: usize) -> Formula {
    letter(format!("q{k}"))
}

fn z() -> Formula {
    letter("z".into())
}

fn oh() -> Formula {
    letter("oh".into())
}

fn ov() -> Formula {
    letter("ov".into())
}

fn colour(c: &str) -> Formula {
    Formula::Letter(TilingSystem::colour_letter(c))
}

fn signed(f: Formula, positive: bool) -> Formula {
    if positive {
        f
    } else {
        Formula::not(f)
    }
}

fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
    Formula::conj(items)
}

fn imp(a: Formula, b: Formula) -> Formula {
    Formula::implies(a, b)
}

fn at_most_one(f: Formula) -> Formula {
    Formula::at_most(1u32, f)
}

/// `~x_i & x_{i+1} & ... & x_n`: the coordinate ends in `0 1...1` at `i`.
fn star(x: fn(usize) -> Formula, i: usize, n: usize) -> Formula {
    and(std::iter::once(Formula::not(x(i))).chain((i + 1..=n).map(x)))
}

/// `x_i & ~x_{i+1} & ... & ~x_n`: the coordinate ends in `1 0...0` at `i`.
fn plus(x: fn(usize) -> Formula, i: usize, n: usize) -> Formula {
    and(std::iter::once(x(i)).chain((i + 1..=n).map(|k| Formula::not(x(k)))))
}

/// The grid-building part, which does not depend on colours.
pub fn gamma_schemas(n: usize) -> Vec<(Schema, Formula)> {
    let mut out = Vec::new();
    out.push((Schema::Start, and([u(0), v(0), z()])));
    for i in 0..=n {
        for j in i + 1..=n {
            out.push((
                Schema::Character,
                Formula::boxdot(and([
                    Formula::not(and([u(i), u(j)])),
                    Formula::not(and([v(i), v(j)])),
                ])),
            ));
        }
    }
    for i in 0..n {
        for j in 0..=n {
            for sign in [true, false] {
                out.push((
                    Schema::GrowX,
                    Formula::boxdot(imp(
                        and([u(i), v(j), z()]),
                        Formula::dia(and([u(i + 1), v(j), z(), signed(p(i + 1), sign)])),
                    )),
                ));
            }
        }
    }
    for i in 0..=n {
        for j in 0..n {
            for sign in [true, false] {
                out.push((
                    Schema::GrowY,
                    Formula::boxdot(imp(
                        and([u(i), v(j), z()]),
                        Formula::dia(and([u(i), v(j + 1), z(), signed(q(j + 1), sign)])),
                    )),
                ));
            }
        }
    }
    for (schema, head, bit) in [(Schema::KeepX, u as fn(usize) -> Formula, p as fn(usize) -> Formula), (Schema::KeepY, v, q)] {
        for i in 1..=n {
            for k in 1..=i {
                for sign in [true, false] {
                    out.push((
                        schema,
                        Formula::box_(imp(
                            and([head(i), signed(bit(k), sign)]),
                            Formula::box_(imp(z(), signed(bit(k), sign))),
                        )),
                    ));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=n {
            for sign in [true, false] {
                out.push((
                    Schema::UniqueX,
                    Formula::boxdot(imp(
                        and([u(i), v(j)]),
                        at_most_one(and([u(i + 1), v(j), signed(p(i + 1), sign)])),
                    )),
                ));
            }
        }
    }
    for i in 0..=n {
        for j in 0..n {
            for sign in [true, false] {
                out.push((
                    Schema::UniqueY,
                    Formula::boxdot(imp(
                        and([u(i), v(j)]),
                        at_most_one(and([u(i), v(j + 1), signed(q(j + 1), sign)])),
                    )),
                ));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for s1 in [true, false] {
                for s2 in [true, false] {
                    out.push((
                        Schema::UniqueXY,
                        Formula::boxdot(imp(
                            and([u(i), v(j)]),
                            at_most_one(and([
                                u(i + 1),
                                v(j + 1),
                                signed(p(i + 1), s1),
                                signed(q(j + 1), s2),
                            ])),
                        )),
                    ));
                }
            }
        }
    }
    let grid = || and([u(n), v(n)]);
    for i in 1..=n {
        out.push((
            Schema::LinkRight,
            Formula::box_(imp(and([grid(), star(p, i, n)]), Formula::dia(and([oh(), plus(p, i, n)])))),
        ));
    }
    for i in 1..=n {
        out.push((
            Schema::LinkLeft,
            Formula::box_(imp(and([grid(), plus(p, i, n)]), Formula::dia(and([oh(), plus(p, i, n)])))),
        ));
    }
    for i in 1..=n {
        out.push((
            Schema::MergeHorizontal,
            Formula::box_(imp(and([u(i - 1), v(n)]), at_most_one(and([oh(), plus(p, i, n)])))),
        ));
    }
    for i in 1..=n {
        out.push((
            Schema::LinkUp,
            Formula::box_(imp(and([grid(), star(q, i, n)]), Formula::dia(and([ov(), plus(q, i, n)])))),
        ));
    }
    for i in 1..=n {
        out.push((
            Schema::LinkDown,
            Formula::box_(imp(and([grid(), plus(q, i, n)]), Formula::dia(and([ov(), plus(q, i, n)])))),
        ));
    }
    for i in 1..=n {
        out.push((
            Schema::MergeVertical,
            Formula::box_(imp(and([u(n), v(i - 1)]), at_most_one(and([ov(), plus(q, i, n)])))),
        ));
    }
    out
}

/// The colouring part for a given system.
pub fn delta_schemas(sys: &TilingSystem, n: usize) -> Vec<(Schema, Formula)> {
    let mut out = Vec::new();
    let grid = || and([u(n), v(n)]);
    let cs = sys.colors();
    let mut exclusive = Vec::new();
    for (a, c) in cs.iter().enumerate() {
        for d in &cs[a + 1..] {
            exclusive.push(Formula::or(Formula::not(colour(c)), Formula::not(colour(d))));
        }
    }
    out.push((
        Schema::Colour,
        Formula::box_(imp(
            grid(),
            Formula::and(Formula::disj(cs.iter().map(|c| colour(c))), and(exclusive)),
        )),
    ));
    for (copy, constraint, link, bit, allowed) in [
        (
            Schema::CopyHorizontal,
            Schema::Horizontal,
            oh as fn() -> Formula,
            p(n),
            sys.horizontal(),
        ),
        (Schema::CopyVertical, Schema::Vertical, ov, q(n), sys.vertical()),
    ] {
        for c in cs {
            for sign in [true, false] {
                out.push((
                    copy,
                    Formula::box_(imp(
                        and([grid(), signed(bit.clone(), sign), colour(c)]),
                        Formula::box_(imp(and([link(), signed(bit.clone(), sign)]), colour(c))),
                    )),
                ));
            }
        }
        for c in cs {
            for d in cs {
                if allowed.contains(&(c.clone(), d.clone())) {
                    continue;
                }
                for sign in [true, false] {
                    out.push((
                        constraint,
                        Formula::box_(imp(
                            and([grid(), signed(bit.clone(), sign), colour(c)]),
                            Formula::box_(imp(
                                and([link(), Formula::not(signed(bit.clone(), sign))]),
                                Formula::not(colour(d)),
                            )),
                        )),
                    ));
                }
            }
        }
    }
    out
}

/// The x-coordinate literals for the integer `k` on `n` bits.
fn coordinate(x: fn(usize) -> Formula, k: u64, n: usize) -> Vec<Formula> {
    (1..=n).map(|b| signed(x(b), (k >> (n - b)) & 1 == 1)).collect()
}

/// Grid cell `(k, 0)` carries `initial[k]`.
pub fn theta_schemas(initial: &[String], n: usize) -> Vec<(Schema, Formula)> {
    initial
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut guard = vec![u(n), v(n), z()];
            guard.extend(coordinate(p, k as u64, n));
            guard.extend(coordinate(q, 0, n));
            (Schema::Initial, Formula::box_(imp(and(guard), colour(c))))
        })
        .collect()
}

/// Every schema instance of the reduction, in emission order.
pub fn reduction_schemas(inst: &TilingInstance) -> Vec<(Schema, Formula)> {
    let mut out = gamma_schemas(inst.n);
    out.extend(delta_schemas(&inst.system, inst.n));
    out.extend(theta_schemas(&inst.initial, inst.n));
    out
}

/// The grid-building conjunction alone.
pub fn gamma(n: usize) -> Formula {
    Formula::conj(gamma_schemas(n).into_iter().map(|(_, f)| f))
}

/// The formula satisfiable over reflexive transitive frames, and over
/// transitive frames, exactly when the instance has a tiling.
pub fn reduction(inst: &TilingInstance) -> Formula {
    Formula::conj(reduction_schemas(inst).into_iter().map(|(_, f)| f))
}

// ---------------------------------------------------------------------------
// The canonical model

fn bits(x: u64, len: usize) -> String {
    (0..len).rev().map(|b| if (x >> b) & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Option<u64> {
    if s.len() > 63 || !s.chars().all(|c| c == '0' || c == '1') {
        return None;
    }
    Some(s.chars().fold(0, |acc, c| acc * 2 + u64::from(c == '1')))
}

/// A world of the canonical model, recovered from its name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Canonical {
    Z(ZIndex),
    H(u64, u64),
    V(u64, u64),
}

fn z_name(x: &ZIndex) -> String {
    format!("z:{}:{}", bits(x.s, x.i), bits(x.t, x.j))
}

fn parse_canonical(name: &str, n: usize) -> Option<Canonical> {
    let mut parts = name.split(':');
    let (kind, s, t) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || s.len() > n || t.len() > n {
        return None;
    }
    let (sv, tv) = (parse_bits(s)?, parse_bits(t)?);
    match kind {
        "z" => Some(Canonical::Z(ZIndex {
            i: s.len(),
            j: t.len(),
            s: sv,
            t: tv,
        })),
        "h" if s.len() == n && t.len() == n => Some(Canonical::H(sv, tv)),
        "v" if s.len() == n && t.len() == n => Some(Canonical::V(sv, tv)),
        _ => None,
    }
}

/// The reflexive transitive model of [`gamma`] whose grid worlds are the
/// z-worlds of character `(n, n)`. World names are `z:<s>:<t>` for
/// z-worlds and `h:<s>:<t>` / `v:<s>:<t>` for o-worlds, with `s`, `t` bit
/// strings; the designated world is `z::`.
pub fn canonical_model(n: usize) -> Result<PointedStructure, TilingError> {
    if n == 0 {
        return Err(TilingError::ZeroN);
    }
    if n > MAX_CANONICAL_N {
        return Err(TilingError::TooLarge(n));
    }
    let side = side_of(n);
    let mut zs = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for s in 0..1u64 << i {
                for t in 0..1u64 << j {
                    zs.push(ZIndex { i, j, s, t });
                }
            }
        }
    }
    let hs: Vec<(u64, u64)> = (1..side).flat_map(|s| (0..side).map(move |t| (s, t))).collect();
    let vs: Vec<(u64, u64)> = (0..side).flat_map(|s| (1..side).map(move |t| (s, t))).collect();
    let mut names: Vec<String> = zs.iter().map(z_name).collect();
    names.extend(hs.iter().map(|&(s, t)| format!("h:{}:{}", bits(s, n), bits(t, n))));
    names.extend(vs.iter().map(|&(s, t)| format!("v:{}:{}", bits(s, n), bits(t, n))));
    let mut a = KripkeStructure::new(names).expect("names are distinct");
    let h_id = |s: u64, t: u64| zs.len() + ((s - 1) * side + t) as usize;
    let v_id = |s: u64, t: u64| zs.len() + hs.len() + (s * (side - 1) + t - 1) as usize;
    // Direct o-successors of each grid world.
    let mut o_succ: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for s in 0..side {
        for t in 0..side {
            let mut out = Vec::new();
            for s2 in [s, s + 1] {
                if s2 >= 1 && s2 < side {
                    out.push(h_id(s2, t));
                }
            }
            for t2 in [t, t + 1] {
                if t2 >= 1 && t2 < side {
                    out.push(v_id(s, t2));
                }
            }
            o_succ.insert((s, t), out);
        }
    }
    for (w, x) in zs.iter().enumerate() {
        for (w2, y) in zs.iter().enumerate() {
            if x.is_prefix_of(y) {
                a.add_edge(w, w2);
                if y.i == n && y.j == n {
                    for &o in &o_succ[&(y.s, y.t)] {
                        a.add_edge(w, o);
                    }
                }
            }
        }
    }
    for o in zs.len()..a.len() {
        a.add_edge(o, o);
    }
    let set = |a: &KripkeStructure, name: String, worlds: &mut dyn Iterator<Item = usize>| {
        let mut bs = a.empty_set();
        bs.extend(worlds);
        (PropLetter::new(name).expect("valid letter"), bs)
    };
    let mut vals = Vec::new();
    vals.push(set(&a, "z".into(), &mut (0..zs.len())));
    vals.push(set(&a, "oh".into(), &mut (zs.len()..zs.len() + hs.len())));
    vals.push(set(&a, "ov".into(), &mut (zs.len() + hs.len()..a.len())));
    for i in 0..=n {
        vals.push(set(&a, format!("u{i}"), &mut zs.iter().enumerate().filter(|(_, x)| x.i == i).map(|(w, _)| w)));
        vals.push(set(&a, format!("v{i}"), &mut zs.iter().enumerate().filter(|(_, x)| x.j == i).map(|(w, _)| w)));
    }
    for k in 1..=n {
        let bit = |x: u64| (x >> (n - k)) & 1 == 1;
        let zp = zs.iter().enumerate().filter(|(_, x)| x.i >= k && x.bit_s(k)).map(|(w, _)| w);
        let hp = hs.iter().filter(|&&(s, _)| bit(s)).map(|&(s, t)| h_id(s, t));
        let vp = vs.iter().filter(|&&(s, _)| bit(s)).map(|&(s, t)| v_id(s, t));
        vals.push(set(&a, format!("p{k}"), &mut zp.chain(hp).chain(vp)));
        let zq = zs.iter().enumerate().filter(|(_, x)| x.j >= k && x.bit_t(k)).map(|(w, _)| w);
        let hq = hs.iter().filter(|&&(_, t)| bit(t)).map(|&(s, t)| h_id(s, t));
        let vq = vs.iter().filter(|&&(_, t)| bit(t)).map(|&(s, t)| v_id(s, t));
        vals.push(set(&a, format!("q{k}"), &mut zq.chain(hq).chain(vq)));
    }
    for (l, bs) in vals {
        a.set_valuation(l, bs);
    }
    Ok(PointedStructure::new(a, 0))
}

/// Colours the grid and o-worlds of a canonical model: cell `(s, t)` colours
/// `z:s:t`, `h:s:t` and `v:s:t`.
pub fn expand_with_tiling(
    s: &PointedStructure,
    grid: &TilingGrid,
    sys: &TilingSystem,
) -> Result<PointedStructure, TilingError> {
    let side = grid.size() as u64;
    if side < 2 || !side.is_power_of_two() {
        return Err(TilingError::DimensionMismatch {
            expected: side.next_power_of_two().max(2),
            found: side,
        });
    }
    let n = side.trailing_zeros() as usize;
    if let Some(c) = grid.cells.iter().find(|c| !sys.has_colour(c)) {
        return Err(TilingError::UnknownColour(c.clone()));
    }
    let a = &s.structure;
    let mut cells = 0u64;
    let mut out = a.clone();
    for c in sys.colors() {
        out.set_valuation(TilingSystem::colour_letter(c), a.empty_set());
    }
    for w in 0..a.len() {
        let name = a.name(w);
        let coords = match parse_canonical(name, n) {
            Some(Canonical::Z(x)) if x.i == n && x.j == n => {
                cells += 1;
                (x.s, x.t)
            }
            Some(Canonical::Z(_)) => continue,
            Some(Canonical::H(s, t)) | Some(Canonical::V(s, t)) => (s, t),
            None => return Err(TilingError::NotCanonical(name.to_string())),
        };
        let c = grid.get(coords.0 as usize, coords.1 as usize);
        out.set_letter(&TilingSystem::colour_letter(c), w, true);
    }
    if cells != side * side {
        return Err(TilingError::DimensionMismatch {
            expected: side,
            found: (cells as f64).sqrt() as u64,
        });
    }
    Ok(PointedStructure::new(out, s.world))
}

// ---------------------------------------------------------------------------
// Reading a grid back out of a model

/// `(i, j, s, t)`: character `(i, j)` and coordinate prefixes `s` (length
/// `i`) and `t` (length `j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZIndex {
    pub i: usize,
    pub j: usize,
    pub s: u64,
    pub t: u64,
}

impl ZIndex {
    fn is_prefix_of(&self, o: &ZIndex) -> bool {
        self.i <= o.i && self.j <= o.j && (o.s >> (o.i - self.i)) == self.s && (o.t >> (o.j - self.j)) == self.t
    }

    /// `s[k]`, counting from 1.
    fn bit_s(&self, k: usize) -> bool {
        (self.s >> (self.i - k)) & 1 == 1
    }

    fn bit_t(&self, k: usize) -> bool {
        (self.t >> (self.j - k)) & 1 == 1
    }
}

impl fmt::Display for ZIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, \"{}\", \"{}\")", self.i, self.j, bits(self.s, self.i), bits(self.t, self.j))
    }
}

/// The grid found inside a model of [`gamma`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridAnalysis {
    pub n: usize,
    /// Every z-world with its index.
    pub z_worlds: BTreeMap<usize, ZIndex>,
    /// Grid worlds by coordinates `(s, t)`.
    pub g_worlds: BTreeMap<(u64, u64), usize>,
    /// For each cell `(s, t)` with a right neighbour, the horizontal
    /// o-worlds seen by both cells that agree with the right cell on `p_n`.
    pub horizontal: BTreeMap<(u64, u64), Vec<usize>>,
    /// Likewise for each cell with an upper neighbour, on `q_n`.
    pub vertical: BTreeMap<(u64, u64), Vec<usize>>,
}

fn holds(a: &KripkeStructure, name: &str, w: usize) -> bool {
    a.holds(&PropLetter::new(name).expect("valid letter"), w)
}

/// Locates z-worlds, grid worlds and the o-worlds linking neighbouring
/// cells, and checks that every index occurs exactly once.
pub fn analyze_grid(a: &PointedStructure, n: usize) -> Result<GridAnalysis, TilingError> {
    if n == 0 {
        return Err(TilingError::ZeroN);
    }
    let s = &a.structure;
    let index_of = |w: usize| -> Result<ZIndex, TilingError> {
        let is: Vec<usize> = (0..=n).filter(|&i| holds(s, &format!("u{i}"), w)).collect();
        let js: Vec<usize> = (0..=n).filter(|&j| holds(s, &format!("v{j}"), w)).collect();
        let (&[i], &[j]) = (is.as_slice(), js.as_slice()) else {
            return Err(TilingError::NoCharacter(s.name(w).to_string()));
        };
        let sv = (1..=i).fold(0u64, |acc, k| acc * 2 + u64::from(holds(s, &format!("p{k}"), w)));
        let tv = (1..=j).fold(0u64, |acc, k| acc * 2 + u64::from(holds(s, &format!("q{k}"), w)));
        Ok(ZIndex { i, j, s: sv, t: tv })
    };
    let mut z_worlds = BTreeMap::new();
    let mut by_index: BTreeMap<ZIndex, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([a.world]);
    let mut seen = s.empty_set();
    seen.insert(a.world);
    while let Some(w) = queue.pop_front() {
        let x = index_of(w)?;
        if let Some(&other) = by_index.get(&x) {
            return Err(TilingError::DuplicateIndex(
                s.name(other).to_string(),
                s.name(w).to_string(),
                x,
            ));
        }
        by_index.insert(x, w);
        z_worlds.insert(w, x);
        for v in s.direct_successors(w).ones() {
            if holds(s, "z", v) && !seen.put(v) {
                queue.push_back(v);
            }
        }
    }
    for i in 0..=n {
        for j in 0..=n {
            for sv in 0..1u64 << i {
                for tv in 0..1u64 << j {
                    let x = ZIndex { i, j, s: sv, t: tv };
                    if !by_index.contains_key(&x) {
                        return Err(TilingError::MissingIndex(x));
                    }
                }
            }
        }
    }
    let side = side_of(n);
    let g_worlds: BTreeMap<(u64, u64), usize> = by_index
        .iter()
        .filter(|(x, _)| x.i == n && x.j == n)
        .map(|(x, &w)| ((x.s, x.t), w))
        .collect();
    let shared = |w1: usize, w2: usize, link: &str, bit: &str| -> Vec<usize> {
        let mut both = s.successors(w1).clone();
        both.intersect_with(s.successors(w2));
        both.ones()
            .filter(|&o| holds(s, link, o) && holds(s, bit, o) == holds(s, bit, w2))
            .collect()
    };
    let mut horizontal = BTreeMap::new();
    let mut vertical = BTreeMap::new();
    for sv in 0..side {
        for tv in 0..side {
            let w = g_worlds[&(sv, tv)];
            if sv + 1 < side {
                let os = shared(w, g_worlds[&(sv + 1, tv)], "oh", &format!("p{n}"));
                if os.is_empty() {
                    return Err(TilingError::MissingOWorld {
                        kind: "horizontal",
                        s: sv,
                        t: tv,
                    });
                }
                horizontal.insert((sv, tv), os);
            }
            if tv + 1 < side {
                let os = shared(w, g_worlds[&(sv, tv + 1)], "ov", &format!("q{n}"));
                if os.is_empty() {
                    return Err(TilingError::MissingOWorld {
                        kind: "vertical",
                        s: sv,
                        t: tv,
                    });
                }
                vertical.insert((sv, tv), os);
            }
        }
    }
    Ok(GridAnalysis {
        n,
        z_worlds,
        g_worlds,
        horizontal,
        vertical,
    })
}

/// Reads the colouring of the grid worlds.
pub fn decode_tiling(a: &PointedStructure, n: usize, sys: &TilingSystem) -> Result<TilingGrid, TilingError> {
    let g = analyze_grid(a, n)?;
    let side = side_of(n) as usize;
    let s = &a.structure;
    let mut cells = Vec::with_capacity(side * side);
    for tv in 0..side as u64 {
        for sv in 0..side as u64 {
            let w = g.g_worlds[&(sv, tv)];
            let mut found = sys.colors().iter().filter(|c| s.holds(&TilingSystem::colour_letter(c), w));
            let c = found.next().ok_or(TilingError::NoColour { s: sv, t: tv })?;
            if found.next().is_some() {
                return Err(TilingError::AmbiguousColour { s: sv, t: tv });
            }
            cells.push(c.clone());
        }
    }
    TilingGrid::new(side, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn pairs(ps: &[(&str, &str)]) -> Vec<(String, String)> {
        ps.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn mono() -> TilingSystem {
        TilingSystem::new(["a"], pairs(&[("a", "a")]), pairs(&[("a", "a")])).unwrap()
    }

    /// Colours alternate horizontally and stay fixed vertically.
    fn stripes() -> TilingSystem {
        TilingSystem::new(
            ["a", "b"],
            pairs(&[("a", "b"), ("b", "a")]),
            pairs(&[("a", "a"), ("b", "b")]),
        )
        .unwrap()
    }

    fn all_grids(sys: &TilingSystem, side: usize) -> Vec<TilingGrid> {
        let k = sys.colors().len();
        let cells = side * side;
        (0..k.pow(cells as u32))
            .map(|mut code| {
                let mut cs = Vec::with_capacity(cells);
                for _ in 0..cells {
                    cs.push(sys.colors()[code % k].clone());
                    code /= k;
                }
                TilingGrid::new(side, cs).unwrap()
            })
            .collect()
    }

    #[test]
    fn check_tiling_basics() {
        let one = TilingGrid::new(1, strings(&["a"])).unwrap();
        let open = TilingSystem::new(["a"], vec![], vec![]).unwrap();
        assert!(check_tiling(&open, &one, &[]).unwrap());
        let square = TilingGrid::from_fn(2, |_, _| "a".into());
        assert!(check_tiling(&mono(), &square, &[]).unwrap());
        let no_h = TilingSystem::new(["a"], vec![], pairs(&[("a", "a")])).unwrap();
        assert!(!check_tiling(&no_h, &square, &[]).unwrap());
        assert_eq!(
            check_tiling(&mono(), &TilingGrid::from_fn(2, |_, _| "x".into()), &[]),
            Err(TilingError::UnknownColour("x".into()))
        );
        let striped = TilingGrid::from_fn(2, |x, _| if x == 0 { "a" } else { "b" }.into());
        assert!(check_tiling(&stripes(), &striped, &strings(&["a", "b"])).unwrap());
        assert!(!check_tiling(&stripes(), &striped, &strings(&["b"])).unwrap());
        assert!(!check_tiling(&stripes(), &striped, &strings(&["a", "b", "a"])).unwrap());
    }

    #[test]
    fn system_validation() {
        assert_eq!(
            TilingSystem::new(Vec::<String>::new(), vec![], vec![]),
            Err(TilingError::NoColours)
        );
        assert_eq!(
            TilingSystem::new(["a b"], vec![], vec![]),
            Err(TilingError::InvalidColour("a b".into()))
        );
        assert_eq!(
            TilingSystem::new(["a"], pairs(&[("a", "b")]), vec![]),
            Err(TilingError::UnknownColour("b".into()))
        );
        assert_eq!(
            TilingInstance::new(mono(), 1, strings(&["a", "a", "a"])),
            Err(TilingError::InitialTooLong { len: 3, side: 2 })
        );
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"colors":["a","b"],"H":[["a","b"],["b","a"]],"V":[["a","a"],["b","b"]],"n":1,"initial":["a"]}"#;
        let inst = TilingInstance::from_json(text).unwrap();
        assert_eq!(inst.system, stripes());
        assert_eq!(inst.initial, strings(&["a"]));
        assert_eq!(TilingInstance::from_json(&inst.to_json()).unwrap(), inst);
        assert!(matches!(
            TilingInstance::from_json(r#"{"colors":["a"],"H":[],"V":[],"n":0}"#),
            Err(TilingError::Json(_))
        ));
    }

    #[test]
    fn schema_tally_at_n1() {
        let inst = TilingInstance::new(mono(), 1, strings(&["a"])).unwrap();
        let schemas = reduction_schemas(&inst);
        let count = |s: Schema| schemas.iter().filter(|(x, _)| *x == s).count();
        assert_eq!(count(Schema::Start), 1);
        assert_eq!(count(Schema::Character), 1);
        assert_eq!(count(Schema::GrowX), 4);
        assert_eq!(count(Schema::GrowY), 4);
        assert_eq!(count(Schema::KeepX), 2);
        assert_eq!(count(Schema::UniqueX), 4);
        assert_eq!(count(Schema::UniqueXY), 4);
        assert_eq!(count(Schema::LinkRight), 1);
        assert_eq!(count(Schema::MergeVertical), 1);
        assert_eq!(count(Schema::Colour), 1);
        assert_eq!(count(Schema::CopyHorizontal), 2);
        assert_eq!(count(Schema::Horizontal), 0);
        assert_eq!(count(Schema::Initial), 1);
        let f = reduction(&inst);
        assert_eq!(f.max_subscript(), Some(BigUint::from(1u32)));
        assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn empty_initial_adds_nothing() {
        let with = TilingInstance::new(stripes(), 2, vec![]).unwrap();
        assert!(theta_schemas(&with.initial, 2).is_empty());
        let all = reduction_schemas(&with);
        assert!(all.iter().all(|(s, _)| *s != Schema::Initial));
        // Forbidden pairs: 2 per constraint relation, 2 signs each.
        assert_eq!(all.iter().filter(|(s, _)| *s == Schema::Horizontal).count(), 4);
    }

    #[test]
    fn canonical_model_shape() {
        let s = canonical_model(1).unwrap();
        assert_eq!(s.structure.len(), 13);
        let props = s.structure.frame_properties();
        assert!(s.structure.is_reflexive() && s.structure.is_transitive());
        assert!(props.contains(crate::kripke::FrameClass::Tr));
        assert_eq!(s.structure.name(s.world), "z::");
        assert!(s.check(&gamma(1)));
        for n in 1..=3usize {
            let s = canonical_model(n).unwrap();
            let zs = ((1usize << (n + 1)) - 1).pow(2);
            let os = ((1usize << n) - 1) << n;
            assert_eq!(s.structure.len(), zs + 2 * os);
        }
        assert!(canonical_model(2).unwrap().check(&gamma(2)));
        assert_eq!(canonical_model(MAX_CANONICAL_N + 1), Err(TilingError::TooLarge(MAX_CANONICAL_N + 1)));
    }

    #[test]
    fn star_and_plus_patterns() {
        // For n = 3, `p2*` matches x-coordinates a01 and `p2+` matches a10.
        let s = canonical_model(3).unwrap();
        let a = &s.structure;
        let star = a.extension(&star(p, 2, 3));
        let plus = a.extension(&plus(p, 2, 3));
        let g = analyze_grid(&s, 3).unwrap();
        for (&(sv, _), &w) in &g.g_worlds {
            assert_eq!(star.contains(w), sv & 0b011 == 0b001);
            assert_eq!(plus.contains(w), sv & 0b011 == 0b010);
            if star.contains(w) {
                assert_eq!((sv + 1) & 0b011, 0b010);
            }
        }
    }

    #[test]
    fn analysis_of_canonical_model() {
        let s = canonical_model(1).unwrap();
        let g = analyze_grid(&s, 1).unwrap();
        assert_eq!(g.z_worlds.len(), 9);
        assert_eq!(g.g_worlds.len(), 4);
        let coords: BTreeSet<(u64, u64)> = g.g_worlds.keys().copied().collect();
        assert_eq!(coords, [(0, 0), (0, 1), (1, 0), (1, 1)].into());
        for ((sv, tv), os) in &g.horizontal {
            let right = g.g_worlds[&(sv + 1, *tv)];
            for &o in os {
                assert!(holds(&s.structure, "oh", o));
                assert_eq!(holds(&s.structure, "p1", o), holds(&s.structure, "p1", right));
            }
            assert_eq!(os.len(), 1);
        }
        assert_eq!(g.vertical.len(), 2);
    }

    #[test]
    fn duplicate_branch_is_rejected() {
        let s = canonical_model(1).unwrap();
        let a = &s.structure;
        let dup = a.world("z:0:").unwrap();
        let mut names: Vec<String> = a.names().to_vec();
        names.push("copy".into());
        let mut b = KripkeStructure::new(names).unwrap();
        for (x, y) in a.edges() {
            b.add_edge(x, y);
        }
        let c = a.len();
        for l in a.letters() {
            let mut set = b.empty_set();
            set.extend(a.valuation(l).ones());
            set.set(c, a.holds(l, dup));
            b.set_valuation(l.clone(), set);
        }
        for y in a.successors(dup).ones() {
            b.add_edge(c, if y == dup { c } else { y });
        }
        for x in 0..a.len() {
            if a.has_edge(x, dup) && x != dup {
                b.add_edge(x, c);
            }
        }
        let bad = PointedStructure::new(b, s.world);
        assert!(bad.structure.is_transitive());
        assert!(!bad.check(&gamma(1)));
        assert!(matches!(analyze_grid(&bad, 1), Err(TilingError::DuplicateIndex(..))));
    }

    #[test]
    fn expansion_satisfies_reduction() {
        let inst = TilingInstance::new(mono(), 1, strings(&["a"])).unwrap();
        let grid = TilingGrid::from_fn(2, |_, _| "a".into());
        let s = canonical_model(1).unwrap();
        let m = expand_with_tiling(&s, &grid, &inst.system).unwrap();
        assert!(m.check(&reduction(&inst)));
        let a = &m.structure;
        let ca = TilingSystem::colour_letter("a");
        for w in 0..a.len() {
            let name = a.name(w);
            let coloured = a.holds(&ca, w);
            let expected = match parse_canonical(name, 1).unwrap() {
                Canonical::Z(x) => x.i == 1 && x.j == 1,
                Canonical::H(..) | Canonical::V(..) => true,
            };
            assert_eq!(coloured, expected, "{name}");
        }
        assert_eq!(decode_tiling(&m, 1, &inst.system).unwrap(), grid);
    }

    #[test]
    fn invalid_grid_fails_constraints() {
        let sys = stripes();
        let inst = TilingInstance::new(sys.clone(), 1, vec![]).unwrap();
        let bad = TilingGrid::from_fn(2, |_, _| "a".into());
        assert!(!check_tiling(&sys, &bad, &[]).unwrap());
        let m = expand_with_tiling(&canonical_model(1).unwrap(), &bad, &sys).unwrap();
        assert!(m.check(&gamma(1)));
        let delta = Formula::conj(delta_schemas(&sys, 1).into_iter().map(|(_, f)| f));
        assert!(!m.check(&delta));
        assert!(!m.check(&reduction(&inst)));
    }

    #[test]
    fn dimension_mismatch() {
        let s = canonical_model(1).unwrap();
        let big = TilingGrid::from_fn(4, |_, _| "a".into());
        assert!(expand_with_tiling(&s, &big, &mono()).is_err());
        let three = TilingGrid::from_fn(3, |_, _| "a".into());
        assert!(matches!(
            expand_with_tiling(&s, &three, &mono()),
            Err(TilingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_colour_decodes_constant() {
        let inst = TilingInstance::new(mono(), 1, vec![]).unwrap();
        let grid = TilingGrid::from_fn(2, |_, _| "a".into());
        let m = expand_with_tiling(&canonical_model(1).unwrap(), &grid, &inst.system).unwrap();
        let out = decode_tiling(&m, 1, &inst.system).unwrap();
        assert!((0..2).all(|x| (0..2).all(|y| out.get(x, y) == "a")));
    }

    #[test]
    fn exhaustive_small_systems_at_n1() {
        let sys = stripes();
        let s = canonical_model(1).unwrap();
        for initial in [vec![], strings(&["a"]), strings(&["b", "a"]), strings(&["a", "a"])] {
            let inst = TilingInstance::new(sys.clone(), 1, initial.clone()).unwrap();
            let f = reduction(&inst);
            for grid in all_grids(&sys, 2) {
                let valid = check_tiling(&sys, &grid, &initial).unwrap();
                let m = expand_with_tiling(&s, &grid, &sys).unwrap();
                assert_eq!(m.check(&f), valid, "{grid}");
                if valid {
                    let back = decode_tiling(&m, 1, &sys).unwrap();
                    assert_eq!(back, grid);
                }
            }
        }
    }

    #[test]
    fn expansion_at_n2() {
        let sys = stripes();
        let grid = TilingGrid::from_fn(4, |x, _| if x % 2 == 0 { "a" } else { "b" }.into());
        let inst = TilingInstance::new(sys.clone(), 2, strings(&["a", "b", "a"])).unwrap();
        let m = expand_with_tiling(&canonical_model(2).unwrap(), &grid, &sys).unwrap();
        assert!(m.check(&reduction(&inst)));
        assert_eq!(decode_tiling(&m, 2, &sys).unwrap(), grid);
        let g = analyze_grid(&m, 2).unwrap();
        assert_eq!(g.z_worlds.len(), 49);
        assert_eq!(g.g_worlds.len(), 16);
    }

    proptest! {
        #[test]
        fn subscripts_at_most_one(
            k in 1usize..4,
            n in 1usize..4,
            h in proptest::collection::vec(any::<bool>(), 9),
            v in proptest::collection::vec(any::<bool>(), 9),
            init in proptest::collection::vec(0usize..3, 0..3),
        ) {
            let names: Vec<String> = (0..k).map(|c| format!("k{c}")).collect();
            let rel = |bits: &[bool]| -> Vec<(String, String)> {
                let mut out = Vec::new();
                for a in 0..k {
                    for b in 0..k {
                        if bits[a * 3 + b] {
                            out.push((names[a].clone(), names[b].clone()));
                        }
                    }
                }
                out
            };
            let sys = TilingSystem::new(names.clone(), rel(&h), rel(&v)).unwrap();
            let initial: Vec<String> = init.iter().map(|&c| names[c % k].clone()).collect();
            let inst = TilingInstance::new(sys, n, initial).unwrap();
            let f = reduction(&inst);
            prop_assert!(f.subscripts().iter().all(|c| **c <= BigUint::from(1u32)));
        }

        #[test]
        fn round_trip_valid_grids(cells in proptest::collection::vec(any::<bool>(), 4)) {
            // Accept every pair, so every grid is a tiling.
            let all = pairs(&[("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]);
            let sys = TilingSystem::new(["a", "b"], all.clone(), all).unwrap();
            let grid = TilingGrid::new(2, cells.iter().map(|&b| if b { "a" } else { "b" }.to_string()).collect()).unwrap();
            let init = vec![grid.get(0, 0).to_string()];
            let inst = TilingInstance::new(sys.clone(), 1, init.clone()).unwrap();
            let m = expand_with_tiling(&canonical_model(1).unwrap(), &grid, &sys).unwrap();
            prop_assert!(m.check(&reduction(&inst)));
            let back = decode_tiling(&m, 1, &sys).unwrap();
            prop_assert!(check_tiling(&sys, &back, &init).unwrap());
            prop_assert_eq!(back, grid);
        }
    }
}
