//! Graded modal formulas: syntax tree, concrete grammar, printing and size.
//!
//! The concrete syntax is ASCII:
//!
//! ```text
//! iff    := imp ('<->' imp)*            left associative
//! imp    := or ('->' imp)?              right associative
//! or     := and ('|' and)*
//! and    := unary ('&' unary)*
//! unary  := '~' unary
//!         | 'dia' ('>=' NUM | '<=' NUM)? unary
//!         | 'box' unary | 'boxdot' unary
//!         | atom
//! atom   := LETTER | 'true' | 'false' | '(' iff ')'
//! ```
//!
//! `box`, `dia` and `boxdot` are sugar and never appear in the tree:
//! `box φ` is `dia<=0 ~φ`, `dia φ` is `dia>=1 φ` and `boxdot φ` is `φ & box φ`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

const KEYWORDS: [&str; 5] = ["box", "dia", "boxdot", "true", "false"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("invalid proposition letter `{0}`")]
    InvalidLetter(String),
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

/// A proposition letter: a lowercase ASCII letter followed by ASCII
/// alphanumerics or underscores, and not a keyword.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropLetter(String);

impl PropLetter {
    pub fn new(name: impl Into<String>) -> Result<Self, FormulaError> {
        let name = name.into();
        if is_letter_name(&name) {
            Ok(PropLetter(name))
        } else {
            Err(FormulaError::InvalidLetter(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PropLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for PropLetter {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropLetter::new(s)
    }
}

fn is_letter_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&name)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Letter(PropLetter),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// True at `w` iff the body holds at no fewer than `count` successors of `w`.
    AtLeast(BigUint, Box<Formula>),
    /// True at `w` iff the body holds at no more than `count` successors of `w`.
    AtMost(BigUint, Box<Formula>),
}

impl Formula {
    /// Builds a letter from a name.
    ///
    /// Panics if `name` is not a valid letter; use [`PropLetter::new`] for
    /// untrusted input.
    pub fn letter(name: &str) -> Formula {
        match PropLetter::new(name) {
            Ok(l) => Formula::Letter(l),
            Err(e) => panic!("{e}"),
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn at_least(count: impl Into<BigUint>, f: Formula) -> Formula {
        Formula::AtLeast(count.into(), Box::new(f))
    }

    pub fn at_most(count: impl Into<BigUint>, f: Formula) -> Formula {
        Formula::AtMost(count.into(), Box::new(f))
    }

    /// `box φ`, stored as `dia<=0 ~φ`.
    pub fn box_(f: Formula) -> Formula {
        Formula::at_most(0u32, Formula::not(f))
    }

    /// `dia φ`, stored as `dia>=1 φ`.
    pub fn dia(f: Formula) -> Formula {
        Formula::at_least(1u32, f)
    }

    /// `boxdot φ`, stored as `φ & box φ`.
    pub fn boxdot(f: Formula) -> Formula {
        Formula::and(f.clone(), Formula::box_(f))
    }

    /// Right-nested conjunction; `true` when empty.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::True;
        };
        while let Some(f) = items.pop() {
            acc = Formula::and(f, acc);
        }
        acc
    }

    /// Right-nested disjunction; `false` when empty.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::False;
        };
        while let Some(f) = items.pop() {
            acc = Formula::or(f, acc);
        }
        acc
    }

    /// Number of symbols with subscripts in binary: one per connective or
    /// letter occurrence, plus `floor(log2 C) + 1` per subscript `C > 0`
    /// (one for `C = 0`).
    pub fn size(&self) -> u64 {
        match self {
            Formula::True | Formula::False | Formula::Letter(_) => 1,
            Formula::Not(a) => 1 + a.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                1 + a.size() + b.size()
            }
            Formula::AtLeast(c, a) | Formula::AtMost(c, a) => 1 + subscript_size(c) + a.size(),
        }
    }

    pub fn letters(&self) -> BTreeSet<PropLetter> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Letter(l) = f {
                out.insert(l.clone());
            }
        });
        out
    }

    /// Pre-order traversal of every subformula occurrence, `self` included.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Letter(_) => {}
            Formula::Not(a) | Formula::AtLeast(_, a) | Formula::AtMost(_, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub fn is_graded(&self) -> bool {
        matches!(self, Formula::AtLeast(..) | Formula::AtMost(..))
    }

    /// No graded operators anywhere.
    pub fn is_propositional(&self) -> bool {
        let mut prop = true;
        self.visit(&mut |f| prop &= !f.is_graded());
        prop
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Letter(_) => 0,
            Formula::Not(a) => a.modal_depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.modal_depth().max(b.modal_depth())
            }
            Formula::AtLeast(_, a) | Formula::AtMost(_, a) => 1 + a.modal_depth(),
        }
    }

    /// Every graded subscript, in pre-order.
    pub fn subscripts(&self) -> Vec<&BigUint> {
        let mut out = Vec::new();
        self.visit(&mut |f| match f {
            Formula::AtLeast(c, _) | Formula::AtMost(c, _) => out.push(c),
            _ => {}
        });
        out
    }

    pub fn max_subscript(&self) -> Option<BigUint> {
        self.subscripts().into_iter().max().cloned()
    }

    /// Replaces every occurrence of `target` by `replacement`.
    pub fn substitute(&self, target: &Formula, replacement: &Formula) -> Formula {
        if self == target {
            return replacement.clone();
        }
        let sub = |a: &Formula| Box::new(a.substitute(target, replacement));
        match self {
            Formula::True | Formula::False | Formula::Letter(_) => self.clone(),
            Formula::Not(a) => Formula::Not(sub(a)),
            Formula::And(a, b) => Formula::And(sub(a), sub(b)),
            Formula::Or(a, b) => Formula::Or(sub(a), sub(b)),
            Formula::Implies(a, b) => Formula::Implies(sub(a), sub(b)),
            Formula::Iff(a, b) => Formula::Iff(sub(a), sub(b)),
            Formula::AtLeast(c, a) => Formula::AtLeast(c.clone(), sub(a)),
            Formula::AtMost(c, a) => Formula::AtMost(c.clone(), sub(a)),
        }
    }

    /// Evaluates a formula whose graded subformulas are decided by `graded`.
    pub fn eval_with(
        &self,
        letter: &mut impl FnMut(&PropLetter) -> bool,
        graded: &mut impl FnMut(&Formula) -> bool,
    ) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Letter(l) => letter(l),
            Formula::Not(a) => !a.eval_with(letter, graded),
            Formula::And(a, b) => a.eval_with(letter, graded) && b.eval_with(letter, graded),
            Formula::Or(a, b) => a.eval_with(letter, graded) || b.eval_with(letter, graded),
            Formula::Implies(a, b) => !a.eval_with(letter, graded) || b.eval_with(letter, graded),
            Formula::Iff(a, b) => a.eval_with(letter, graded) == b.eval_with(letter, graded),
            Formula::AtLeast(..) | Formula::AtMost(..) => graded(self),
        }
    }
}

fn subscript_size(c: &BigUint) -> u64 {
    if c.is_zero() {
        1
    } else {
        c.bits()
    }
}

/// Converts a subscript to `usize` when it fits.
pub(crate) fn small(c: &BigUint) -> Option<usize> {
    c.to_usize()
}

/// `n` pairwise-distinct letters of the form `x<k>`, avoiding `avoid`.
///
/// Deterministic: the same inputs always give the same letters.
pub fn fresh_letters(n: usize, avoid: &BTreeSet<PropLetter>) -> Vec<PropLetter> {
    (0usize..)
        .map(|k| PropLetter(format!("x{k}")))
        .filter(|l| !avoid.contains(l))
        .take(n)
        .collect()
}

// ---------------------------------------------------------------------------
// Printing

const PREC_IFF: u8 = 1;
const PREC_IMP: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => PREC_IFF,
        Formula::Implies(..) => PREC_IMP,
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn write_child(out: &mut String, f: &Formula, paren: bool) {
    if paren {
        out.push('(');
        write_formula(out, f);
        out.push(')');
    } else {
        write_formula(out, f);
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Letter(l) => out.push_str(l.as_str()),
        Formula::Not(a) => {
            out.push('~');
            write_child(out, a, prec(a) < PREC_UNARY);
        }
        Formula::AtLeast(c, a) | Formula::AtMost(c, a) => {
            let op = if matches!(f, Formula::AtLeast(..)) { ">=" } else { "<=" };
            out.push_str("dia");
            out.push_str(op);
            out.push_str(&c.to_string());
            out.push(' ');
            write_child(out, a, prec(a) < PREC_UNARY);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Iff(a, b) => {
            let (p, op) = match f {
                Formula::And(..) => (PREC_AND, " & "),
                Formula::Or(..) => (PREC_OR, " | "),
                _ => (PREC_IFF, " <-> "),
            };
            // left associative
            write_child(out, a, prec(a) < p);
            out.push_str(op);
            write_child(out, b, prec(b) <= p);
        }
        Formula::Implies(a, b) => {
            write_child(out, a, prec(a) <= PREC_IMP);
            out.push_str(" -> ");
            write_child(out, b, prec(b) < PREC_IMP);
        }
    }
}

/// Renders in the concrete grammar; `parse(&render(f)) == Ok(f)`.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigUint),
    Tilde,
    Amp,
    Bar,
    Arrow,
    DArrow,
    LParen,
    RParen,
    Ge,
    Le,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::DArrow => f.write_str("`<->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FormulaError {
    FormulaError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let mut push = |tok: Tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            });
            *i += len;
            *col += len;
        };
        let next = chars.get(i + 1).copied();
        match c {
            '~' => push(Tok::Tilde, 1, &mut i, &mut col),
            '&' => push(Tok::Amp, 1, &mut i, &mut col),
            '|' => push(Tok::Bar, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '-' if next == Some('>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '-' if next.is_some_and(|d| d.is_ascii_digit()) => {
                return Err(syntax(l0, c0, "negative subscript"));
            }
            '>' if next == Some('=') => push(Tok::Ge, 2, &mut i, &mut col),
            '<' if next == Some('=') => push(Tok::Le, 2, &mut i, &mut col),
            '<' if next == Some('-') && chars.get(i + 2) == Some(&'>') => {
                push(Tok::DArrow, 3, &mut i, &mut col)
            }
            d if d.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_' || chars[i] == '.') {
                    return Err(syntax(l0, c0, "malformed subscript"));
                }
                let digits: String = chars[start..i].iter().collect();
                col += i - start;
                let n = digits
                    .parse::<BigUint>()
                    .map_err(|_| syntax(l0, c0, "malformed subscript"))?;
                out.push(Spanned {
                    tok: Tok::Num(n),
                    line: l0,
                    column: c0,
                });
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Spanned {
                    tok: Tok::Ident(word),
                    line: l0,
                    column: c0,
                });
            }
            other => return Err(syntax(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> &Spanned {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> FormulaError {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, message)
    }

    fn iff(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.imp()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn subscript(&mut self) -> Result<BigUint, FormulaError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            other => Err(self.error_here(format!("expected subscript, found {other}"))),
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(w) if w == "dia" => {
                self.bump();
                match self.peek() {
                    Tok::Ge => {
                        self.bump();
                        let c = self.subscript()?;
                        Ok(Formula::AtLeast(c, Box::new(self.unary()?)))
                    }
                    Tok::Le => {
                        self.bump();
                        let c = self.subscript()?;
                        Ok(Formula::AtMost(c, Box::new(self.unary()?)))
                    }
                    _ => Ok(Formula::dia(self.unary()?)),
                }
            }
            Tok::Ident(w) if w == "box" => {
                self.bump();
                Ok(Formula::box_(self.unary()?))
            }
            Tok::Ident(w) if w == "boxdot" => {
                self.bump();
                Ok(Formula::boxdot(self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(w) if w == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(w) if w == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(w) => match PropLetter::new(w.clone()) {
                Ok(l) => {
                    self.bump();
                    Ok(Formula::Letter(l))
                }
                Err(_) => Err(self.error_here(format!("invalid proposition letter `{w}`"))),
            },
            Tok::LParen => {
                self.bump();
                let f = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error_here(format!("expected `)`, found {}", self.peek())));
                }
                self.bump();
                Ok(f)
            }
            other => Err(self.error_here(format!("expected formula, found {other}"))),
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek())));
    }
    Ok(f)
}

impl FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> Formula {
        Formula::letter("p")
    }

    #[test]
    fn parse_letter() {
        assert_eq!(parse("p").unwrap(), p());
        assert_eq!(parse("  p  ").unwrap(), p());
    }

    #[test]
    fn parse_intro_formula() {
        let f = parse("q0 & dia>=2 (~q0 & q1 & dia>=1 (~q0 & ~q1)) & dia<=1 ~q1").unwrap();
        let q0 = Formula::letter("q0");
        let q1 = Formula::letter("q1");
        let inner = Formula::at_least(
            1u32,
            Formula::and(Formula::not(q0.clone()), Formula::not(q1.clone())),
        );
        let expected = Formula::and(
            Formula::and(
                q0.clone(),
                Formula::at_least(
                    2u32,
                    Formula::and(Formula::and(Formula::not(q0.clone()), q1.clone()), inner),
                ),
            ),
            Formula::at_most(1u32, Formula::not(q1)),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn zero_subscript_is_legal() {
        assert_eq!(parse("dia>=0 p").unwrap(), Formula::at_least(0u32, p()));
    }

    #[test]
    fn sugar_desugars() {
        assert_eq!(parse("box p").unwrap(), Formula::at_most(0u32, Formula::not(p())));
        assert_eq!(parse("dia p").unwrap(), Formula::at_least(1u32, p()));
        assert_eq!(
            parse("boxdot p").unwrap(),
            Formula::and(p(), Formula::at_most(0u32, Formula::not(p())))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let (a, b, c) = (Formula::letter("a"), Formula::letter("b"), Formula::letter("c"));
        assert_eq!(
            parse("a -> b -> c").unwrap(),
            Formula::implies(a.clone(), Formula::implies(b.clone(), c.clone()))
        );
        assert_eq!(
            parse("a | b & c").unwrap(),
            Formula::or(a.clone(), Formula::and(b.clone(), c.clone()))
        );
        assert_eq!(
            parse("~a & b").unwrap(),
            Formula::and(Formula::not(a.clone()), b.clone())
        );
        assert_eq!(
            parse("dia>=2 a & b").unwrap(),
            Formula::and(Formula::at_least(2u32, a.clone()), b.clone())
        );
        assert_eq!(
            parse("a <-> b -> c").unwrap(),
            Formula::iff(a, Formula::implies(b, c))
        );
    }

    #[test]
    fn big_subscripts() {
        let f = parse("dia>=123456789012345678901234567890 p").unwrap();
        assert_eq!(
            f.max_subscript().unwrap().to_string(),
            "123456789012345678901234567890"
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse("p &\n  & q") {
            Err(FormulaError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("dia>=-1 p"),
            Err(FormulaError::Syntax { column: 6, .. })
        ));
        assert!(parse("dia>=1x p").is_err());
        assert!(parse("dia>= p").is_err());
        assert!(parse("(p").is_err());
        assert!(parse("p q").is_err());
        assert!(parse("P").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn render_examples() {
        assert_eq!(render(&p()), "p");
        assert_eq!(render(&Formula::at_most(0u32, Formula::not(p()))), "dia<=0 ~p");
        assert_eq!(render(&Formula::box_(p())), "dia<=0 ~p");
        let f = parse("(a -> b) -> c").unwrap();
        assert_eq!(render(&f), "(a -> b) -> c");
        let f = parse("a & (b & c)").unwrap();
        assert_eq!(render(&f), "a & (b & c)");
    }

    #[test]
    fn size_examples() {
        assert_eq!(p().size(), 1);
        assert_eq!(Formula::at_least(0u32, p()).size(), 3);
        // dia>=2^n p has size n + 3: linear in n
        for n in 0..200u32 {
            let c = BigUint::from(1u32) << n;
            assert_eq!(Formula::at_least(c, p()).size(), n as u64 + 3);
        }
    }

    #[test]
    fn doubling_subscript_adds_one_symbol() {
        for c in 1u32..=64 {
            let a = Formula::at_least(c, p()).size();
            let b = Formula::at_least(2 * c, p()).size();
            assert_eq!(b, a + 1, "C = {c}");
        }
    }

    #[test]
    fn fresh_letters_basics() {
        let avoid: BTreeSet<_> = [PropLetter::new("p").unwrap()].into();
        assert!(fresh_letters(0, &avoid).is_empty());
        let two = fresh_letters(2, &avoid);
        assert_eq!(two.len(), 2);
        assert_ne!(two[0], two[1]);
        assert!(two.iter().all(|l| !avoid.contains(l)));
        let avoid: BTreeSet<_> = [PropLetter::new("x0").unwrap()].into();
        assert_eq!(
            fresh_letters(2, &avoid),
            vec![PropLetter::new("x1").unwrap(), PropLetter::new("x2").unwrap()]
        );
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            "[a-e][a-z0-9_]{0,2}"
                .prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
                .prop_map(|s| Formula::Letter(PropLetter::new(s).unwrap())),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
                (any::<u64>(), inner.clone()).prop_map(|(c, a)| Formula::at_least(c % 5000, a)),
                (any::<u64>(), inner).prop_map(|(c, a)| Formula::at_most(c, a)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn render_parse_round_trip(f in arb_formula()) {
            prop_assert_eq!(parse(&render(&f)).unwrap(), f);
        }

        #[test]
        fn size_is_monotone(f in arb_formula()) {
            let total = f.size();
            let mut ok = true;
            f.visit(&mut |g| ok &= g.size() <= total);
            prop_assert!(ok);
        }

        #[test]
        fn fresh_letters_deterministic(n in 0usize..20, names in proptest::collection::btree_set("x[0-9]{1,2}", 0..10)) {
            let avoid: BTreeSet<PropLetter> = names.into_iter().map(|s| PropLetter::new(s).unwrap()).collect();
            let a = fresh_letters(n, &avoid);
            prop_assert_eq!(&a, &fresh_letters(n, &avoid));
            prop_assert_eq!(a.len(), n);
            let set: BTreeSet<_> = a.iter().cloned().collect();
            prop_assert_eq!(set.len(), n);
            prop_assert!(a.iter().all(|l| !avoid.contains(l)));
        }
    }
}
