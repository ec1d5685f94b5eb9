//! Graded modal logic over frame classes generated by reflexivity,
//! seriality, symmetry, transitivity and the Euclidean property.
//!
//! The crate bundles a parser and model checker ([`formula`], [`kripke`]),
//! two decision pipelines ([`solver`]) backed by a one-variable counting
//! logic ([`c1`]) and a renaming normal form ([`normal_form`]), a
//! small-model extractor ([`minimize`]) and a tiling-problem formula
//! generator ([`tiling`]).

pub mod c1;
pub mod exec;
pub mod formula;
pub mod kripke;
pub mod minimize;
pub mod normal_form;
pub mod random;
pub mod solver;
pub mod tiling;

pub use exec::Execution;
pub use formula::{parse, render, Formula, FormulaError, PropLetter};
pub use kripke::{FrameClass, FrameClasses, FrameMetrics, KripkeError, KripkeStructure, PointedStructure};
pub use normal_form::{normalize, to_formula, NormalForm};
pub use solver::{brute_force, decide, OracleResult, SolverOptions, Verdict};
