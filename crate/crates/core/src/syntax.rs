//! Terms and quantifier-free formulas, their evaluation, and their printed form.
//!
//! The printed form is the text grammar accepted by [`crate::parse`]:
//! atoms are `t=s` or `t!=s`, connectives are `!`, `&`, `|` with that
//! precedence (tightest first). Printing flattens nested `&`/`|` but never
//! simplifies.

use std::fmt;

use thiserror::Error;

use crate::algebra::{Algebra, Element};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(usize),
    /// `App(symbol, [])` is the bare form of a constant symbol.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn app(symbol: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(symbol.into(), args)
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Largest variable index occurring in the term.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Term::Var(i) => Some(*i),
            Term::App(_, args) => args.iter().filter_map(Term::max_var).max(),
        }
    }

    /// Replaces `x_i` by `x_{map[i]}`.
    pub fn rename_vars(&self, map: &[usize]) -> Result<Term, EvalError> {
        Ok(match self {
            Term::Var(i) => Term::Var(*map.get(*i).ok_or(EvalError::VarOutOfRange {
                index: *i,
                len: map.len(),
            })?),
            Term::App(f, args) => Term::App(
                f.clone(),
                args.iter()
                    .map(|a| a.rename_vars(map))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QfFormula {
    True,
    False,
    Eq(Term, Term),
    Not(Box<QfFormula>),
    And(Vec<QfFormula>),
    Or(Vec<QfFormula>),
}

impl QfFormula {
    pub fn eq(t: Term, s: Term) -> QfFormula {
        QfFormula::Eq(t, s)
    }

    pub fn neq(t: Term, s: Term) -> QfFormula {
        QfFormula::Not(Box::new(QfFormula::Eq(t, s)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: QfFormula) -> QfFormula {
        QfFormula::Not(Box::new(phi))
    }

    /// Conjunction, splicing in children that are themselves conjunctions.
    pub fn and(parts: impl IntoIterator<Item = QfFormula>) -> QfFormula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                QfFormula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        QfFormula::And(out)
    }

    /// Disjunction, splicing in children that are themselves disjunctions.
    pub fn or(parts: impl IntoIterator<Item = QfFormula>) -> QfFormula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                QfFormula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        QfFormula::Or(out)
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            QfFormula::True | QfFormula::False => None,
            QfFormula::Eq(t, s) => t.max_var().max(s.max_var()),
            QfFormula::Not(p) => p.max_var(),
            QfFormula::And(ps) | QfFormula::Or(ps) => ps.iter().filter_map(|p| p.max_var()).max(),
        }
    }

    pub fn rename_vars(&self, map: &[usize]) -> Result<QfFormula, EvalError> {
        Ok(match self {
            QfFormula::True => QfFormula::True,
            QfFormula::False => QfFormula::False,
            QfFormula::Eq(t, s) => QfFormula::Eq(t.rename_vars(map)?, s.rename_vars(map)?),
            QfFormula::Not(p) => QfFormula::not(p.rename_vars(map)?),
            QfFormula::And(ps) => QfFormula::And(
                ps.iter()
                    .map(|p| p.rename_vars(map))
                    .collect::<Result<_, _>>()?,
            ),
            QfFormula::Or(ps) => QfFormula::Or(
                ps.iter()
                    .map(|p| p.rename_vars(map))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// Number of atomic subformulas.
    pub fn atom_count(&self) -> usize {
        match self {
            QfFormula::True | QfFormula::False => 0,
            QfFormula::Eq(..) => 1,
            QfFormula::Not(p) => p.atom_count(),
            QfFormula::And(ps) | QfFormula::Or(ps) => ps.iter().map(QfFormula::atom_count).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable x{index} is not covered by a tuple of length {len}")]
    VarOutOfRange { index: usize, len: usize },
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` applied to {found} arguments, expected {expected}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("element {element} is outside the universe 0..{size}")]
    ElementOutOfRange { element: Element, size: usize },
}

/// A term with symbols resolved to operation indices.
#[derive(Debug, Clone)]
enum Compiled {
    Var(usize),
    Const(Element),
    App(usize, Vec<Compiled>),
}

#[derive(Debug, Clone)]
enum CompiledFormula {
    Const(bool),
    Eq(Compiled, Compiled),
    Not(Box<CompiledFormula>),
    And(Vec<CompiledFormula>),
    Or(Vec<CompiledFormula>),
}

impl Algebra {
    fn compile_term(&self, t: &Term) -> Result<Compiled, EvalError> {
        match t {
            Term::Var(i) => Ok(Compiled::Var(*i)),
            Term::App(f, args) => {
                let idx = self
                    .op_index(f)
                    .ok_or_else(|| EvalError::UnknownSymbol(f.clone()))?;
                let op = self.operation(idx);
                if op.is_constant() && args.is_empty() {
                    return Ok(Compiled::Const(op.table()[0]));
                }
                if args.len() != op.arity() {
                    return Err(EvalError::ArityMismatch {
                        symbol: f.clone(),
                        expected: if op.is_constant() { 0 } else { op.arity() },
                        found: args.len(),
                    });
                }
                Ok(Compiled::App(
                    idx,
                    args.iter()
                        .map(|a| self.compile_term(a))
                        .collect::<Result<_, _>>()?,
                ))
            }
        }
    }

    fn compile_formula(&self, phi: &QfFormula) -> Result<CompiledFormula, EvalError> {
        Ok(match phi {
            QfFormula::True => CompiledFormula::Const(true),
            QfFormula::False => CompiledFormula::Const(false),
            QfFormula::Eq(t, s) => {
                CompiledFormula::Eq(self.compile_term(t)?, self.compile_term(s)?)
            }
            QfFormula::Not(p) => CompiledFormula::Not(Box::new(self.compile_formula(p)?)),
            QfFormula::And(ps) => CompiledFormula::And(
                ps.iter()
                    .map(|p| self.compile_formula(p))
                    .collect::<Result<_, _>>()?,
            ),
            QfFormula::Or(ps) => CompiledFormula::Or(
                ps.iter()
                    .map(|p| self.compile_formula(p))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    fn run_term(&self, t: &Compiled, a: &[Element], buf: &mut Vec<Element>) -> Element {
        match t {
            Compiled::Var(i) => a[*i],
            Compiled::Const(c) => *c,
            Compiled::App(op, args) => {
                let start = buf.len();
                for arg in args {
                    let v = self.run_term(arg, a, buf);
                    buf.push(v);
                }
                let v = self.apply(*op, &buf[start..]);
                buf.truncate(start);
                v
            }
        }
    }

    fn run_formula(&self, phi: &CompiledFormula, a: &[Element], buf: &mut Vec<Element>) -> bool {
        match phi {
            CompiledFormula::Const(b) => *b,
            CompiledFormula::Eq(t, s) => self.run_term(t, a, buf) == self.run_term(s, a, buf),
            CompiledFormula::Not(p) => !self.run_formula(p, a, buf),
            CompiledFormula::And(ps) => ps.iter().all(|p| self.run_formula(p, a, buf)),
            CompiledFormula::Or(ps) => ps.iter().any(|p| self.run_formula(p, a, buf)),
        }
    }

    fn check_assignment(&self, needed: Option<usize>, a: &[Element]) -> Result<(), EvalError> {
        if let Some(m) = needed {
            if m >= a.len() {
                return Err(EvalError::VarOutOfRange {
                    index: m,
                    len: a.len(),
                });
            }
        }
        match a.iter().find(|&&e| e >= self.size()) {
            Some(&e) => Err(EvalError::ElementOutOfRange {
                element: e,
                size: self.size(),
            }),
            None => Ok(()),
        }
    }

    /// Value of `t` under `x_i ↦ a[i]`.
    pub fn eval_term(&self, t: &Term, a: &[Element]) -> Result<Element, EvalError> {
        self.check_assignment(t.max_var(), a)?;
        let c = self.compile_term(t)?;
        Ok(self.run_term(&c, a, &mut Vec::new()))
    }

    pub fn eval_formula(&self, phi: &QfFormula, a: &[Element]) -> Result<bool, EvalError> {
        self.check_assignment(phi.max_var(), a)?;
        let c = self.compile_formula(phi)?;
        Ok(self.run_formula(&c, a, &mut Vec::new()))
    }

    /// `{ a ∈ A^k : A ⊨ φ(a) }`.
    pub fn extension(&self, phi: &QfFormula, k: usize) -> Result<Relation, EvalError> {
        if let Some(m) = phi.max_var() {
            if m >= k {
                return Err(EvalError::VarOutOfRange { index: m, len: k });
            }
        }
        let c = self.compile_formula(phi)?;
        let universe: Vec<Element> = (0..self.size()).collect();
        let mut out = Vec::new();
        let mut buf = Vec::new();
        crate::algebra::for_each_tuple(&universe, k, |t| {
            if self.run_formula(&c, t, &mut buf) {
                out.push(t.to_vec());
            }
        });
        Ok(Relation::new(k, out).expect("tuples have the requested arity"))
    }

    /// Replaces unary applications of constant symbols by the bare symbol.
    pub fn restore_constants(&self, t: &Term) -> Term {
        match t {
            Term::Var(i) => Term::Var(*i),
            Term::App(f, args) => {
                let constant = self
                    .op_index(f)
                    .map(|i| self.operation(i).is_constant())
                    .unwrap_or(false);
                if constant {
                    Term::App(f.clone(), Vec::new())
                } else {
                    Term::App(
                        f.clone(),
                        args.iter().map(|a| self.restore_constants(a)).collect(),
                    )
                }
            }
        }
    }

    pub fn restore_constants_in(&self, phi: &QfFormula) -> QfFormula {
        match phi {
            QfFormula::True => QfFormula::True,
            QfFormula::False => QfFormula::False,
            QfFormula::Eq(t, s) => {
                QfFormula::Eq(self.restore_constants(t), self.restore_constants(s))
            }
            QfFormula::Not(p) => QfFormula::not(self.restore_constants_in(p)),
            QfFormula::And(ps) => {
                QfFormula::And(ps.iter().map(|p| self.restore_constants_in(p)).collect())
            }
            QfFormula::Or(ps) => {
                QfFormula::Or(ps.iter().map(|p| self.restore_constants_in(p)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "x{i}"),
            Term::App(s, args) if args.is_empty() => write!(f, "{s}"),
            Term::App(s, args) => {
                write!(f, "{s}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

// Strips one-child conjunctions and disjunctions, which print as their child.
fn effective(mut phi: &QfFormula) -> &QfFormula {
    loop {
        match phi {
            QfFormula::And(ps) | QfFormula::Or(ps) if ps.len() == 1 => phi = &ps[0],
            _ => return phi,
        }
    }
}

fn collect_leaves<'a>(parts: &'a [QfFormula], conj: bool, out: &mut Vec<&'a QfFormula>) {
    for p in parts {
        match effective(p) {
            QfFormula::And(inner) if conj && inner.len() > 1 => collect_leaves(inner, conj, out),
            QfFormula::Or(inner) if !conj && inner.len() > 1 => collect_leaves(inner, conj, out),
            leaf => out.push(leaf),
        }
    }
}

fn is_compound(phi: &QfFormula) -> bool {
    matches!(phi, QfFormula::And(ps) | QfFormula::Or(ps) if ps.len() > 1)
}

impl fmt::Display for QfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match effective(self) {
            QfFormula::True => f.write_str("true"),
            QfFormula::False => f.write_str("false"),
            QfFormula::Eq(t, s) => write!(f, "{t}={s}"),
            QfFormula::Not(p) => match effective(p) {
                QfFormula::Eq(t, s) => write!(f, "{t}!={s}"),
                other if is_compound(other) => write!(f, "!({other})"),
                other => write!(f, "!{other}"),
            },
            QfFormula::And(ps) if ps.is_empty() => f.write_str("true"),
            QfFormula::Or(ps) if ps.is_empty() => f.write_str("false"),
            QfFormula::And(ps) => {
                let mut leaves = Vec::new();
                collect_leaves(ps, true, &mut leaves);
                for (i, leaf) in leaves.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    if matches!(leaf, QfFormula::Or(qs) if qs.len() > 1) {
                        write!(f, "({leaf})")?;
                    } else {
                        write!(f, "{leaf}")?;
                    }
                }
                Ok(())
            }
            QfFormula::Or(ps) => {
                let mut leaves = Vec::new();
                collect_leaves(ps, false, &mut leaves);
                for (i, leaf) in leaves.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{leaf}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::diamond;

    fn x(i: usize) -> Term {
        Term::Var(i)
    }

    #[test]
    fn eval_in_diamond() {
        let d = diamond();
        let (bot, u, u2, top) = (0, 1, 2, 3);
        let join = |a, b| Term::app("∨", vec![a, b]);
        assert_eq!(d.eval_term(&join(x(0), x(1)), &[u, u2]), Ok(top));
        let leq = QfFormula::eq(join(x(0), x(1)), x(1));
        assert_eq!(d.eval_formula(&leq, &[bot, u]), Ok(true));
        assert_eq!(d.eval_formula(&leq, &[u, u2]), Ok(false));
        assert_eq!(d.eval_formula(&QfFormula::True, &[u]), Ok(true));
        assert_eq!(d.eval_term(&x(0), &[u2, u]), Ok(u2));
    }

    #[test]
    fn eval_in_z2() {
        let z2 = Algebra::new(2, [("+", 2, vec![0, 1, 1, 0])]).unwrap();
        assert_eq!(z2.eval_term(&Term::app("+", vec![x(0), x(0)]), &[1]), Ok(0));
    }

    #[test]
    fn eval_errors() {
        let d = diamond();
        assert_eq!(
            d.eval_term(&x(2), &[0, 1]),
            Err(EvalError::VarOutOfRange { index: 2, len: 2 })
        );
        assert_eq!(
            d.eval_term(&Term::app("g", vec![x(0)]), &[0]),
            Err(EvalError::UnknownSymbol("g".into()))
        );
        assert!(matches!(
            d.eval_term(&Term::app("∧", vec![x(0)]), &[0]),
            Err(EvalError::ArityMismatch {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            d.eval_term(&x(0), &[7]),
            Err(EvalError::ElementOutOfRange { element: 7, .. })
        ));
    }

    #[test]
    fn extension_examples() {
        let d = diamond();
        let leq = QfFormula::eq(Term::app("∨", vec![x(0), x(1)]), x(1));
        // independent enumeration of the order: bot below all, top above all
        let mut expected = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                let below = a == b || a == 0 || b == 3;
                if below {
                    expected.push(vec![a, b]);
                }
            }
        }
        assert_eq!(expected.len(), 9);
        assert_eq!(
            d.extension(&leq, 2).unwrap(),
            Relation::new(2, expected).unwrap()
        );
        assert!(d.extension(&QfFormula::False, 2).unwrap().is_empty());
        assert_eq!(d.extension(&QfFormula::True, 1).unwrap().len(), 4);
        assert!(d.extension(&QfFormula::eq(x(3), x(0)), 2).is_err());
    }

    #[test]
    fn constants_evaluate_and_restore() {
        let alg = Algebra::new(3, [("c", 0, vec![2]), ("f", 1, vec![1, 2, 0])]).unwrap();
        let bare = Term::app("c", vec![]);
        let unary = Term::app("c", vec![x(0)]);
        assert_eq!(alg.eval_term(&bare, &[0]), Ok(2));
        assert_eq!(alg.eval_term(&unary, &[1]), Ok(2));
        let t = Term::app("f", vec![unary]);
        assert_eq!(alg.restore_constants(&t).to_string(), "f(c)");
    }

    #[test]
    fn printing() {
        let a = QfFormula::eq(Term::app("f", vec![x(0), x(1)]), x(1));
        assert_eq!(a.to_string(), "f(x0,x1)=x1");
        let b = QfFormula::neq(x(0), x(2));
        let phi = QfFormula::Or(vec![
            QfFormula::And(vec![a.clone(), b.clone()]),
            QfFormula::not(QfFormula::Or(vec![a.clone(), QfFormula::True])),
        ]);
        assert_eq!(
            phi.to_string(),
            "f(x0,x1)=x1 & x0!=x2 | !(f(x0,x1)=x1 | true)"
        );
        let nested = QfFormula::And(vec![QfFormula::Or(vec![a.clone(), b.clone()]), a.clone()]);
        assert_eq!(nested.to_string(), "(f(x0,x1)=x1 | x0!=x2) & f(x0,x1)=x1");
        assert_eq!(QfFormula::And(vec![]).to_string(), "true");
        assert_eq!(QfFormula::Or(vec![]).to_string(), "false");
    }

    #[test]
    fn depth_and_vars() {
        let t = Term::app("f", vec![Term::app("f", vec![x(0), x(4)]), x(1)]);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.max_var(), Some(4));
        assert_eq!(x(3).depth(), 0);
    }
}
