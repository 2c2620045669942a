//! Quantifier-free definability of relations in finite algebras.
//!
//! A relation `R ⊆ A^k` is definable by a quantifier-free formula exactly
//! when every isomorphism between `k`-generated subalgebras preserves it.
//! Two deciders are provided: [`merging::merging_decide`] tracks orbits of
//! tuples under discovered subisomorphisms, and [`splitting::splitting_decide`]
//! refines a block of tuples by evaluating terms, producing a defining
//! formula when one exists. [`oracle`] holds brute-force reference versions.

pub mod algebra;
pub mod bench;
pub mod decision;
pub mod generate;
pub mod io;
pub mod isotype;
pub mod merging;
pub mod oracle;
pub mod parse;
pub mod preprocess;
pub mod relation;
pub mod splitting;
pub mod syntax;

pub use algebra::{Algebra, AlgebraError, Element, Operation};
pub use decision::{Counterexample, Decision};
pub use io::FormatError;
pub use isotype::{iso_type, subiso_from_signatures, IsoSignature, IsoType, Subisomorphism};
pub use oracle::{Graph, GraphError};
pub use parse::{parse_formula, parse_term, ParseError};
pub use relation::{Relation, RelationError};
pub use syntax::{EvalError, QfFormula, Term};
