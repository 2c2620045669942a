//! Finite algebras with dense operation tables.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Elements of an algebra of size `n` are the integers `0..n`.
pub type Element = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("an algebra needs at least one element")]
    EmptyUniverse,
    #[error("operation symbol `{0}` is declared twice")]
    DuplicateSymbol(String),
    #[error("`{0}` cannot be used as an operation symbol")]
    InvalidSymbol(String),
    #[error("table of `{symbol}` has {found} entries, expected {expected}")]
    TableLength {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("table of `{symbol}` contains {value}, outside the universe 0..{size}")]
    ValueOutOfRange {
        symbol: String,
        value: usize,
        size: usize,
    },
    #[error("{found} element names given for a universe of size {expected}")]
    NameCount { expected: usize, found: usize },
    #[error("element name `{0}` is used twice")]
    DuplicateName(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("element {element} is outside the universe 0..{size}")]
    ElementOutOfRange { element: Element, size: usize },
    #[error("tuple must be nonempty")]
    EmptyTuple,
    #[error("universe of size {0} exceeds the supported maximum of {MAX_UNIVERSE}")]
    TooLarge(usize),
}

/// Largest supported universe. Tables are dense, so this is a memory bound.
pub const MAX_UNIVERSE: usize = 1 << 20;

/// A fundamental operation stored as a row-major table.
///
/// Constants are kept as unary operations whose table is constant; `constant`
/// records the rewrite so printed formulas can restore the bare symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    symbol: String,
    arity: usize,
    table: Vec<Element>,
    constant: bool,
}

impl Operation {
    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[Element] {
        &self.table
    }

    /// True when this operation was declared with arity 0.
    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

/// Returns whether `s` may be used as an operation symbol in formula text.
pub fn is_valid_symbol(s: &str) -> bool {
    if s.is_empty() || s == "true" || s == "false" || is_variable_name(s) {
        return false;
    }
    !s.chars()
        .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '=' | '!' | '&' | '|'))
}

pub(crate) fn is_variable_name(s: &str) -> bool {
    s.len() > 1 && s.starts_with('x') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

/// A finite algebra: universe `0..size` plus an ordered list of operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Algebra {
    size: usize,
    names: Option<Vec<String>>,
    ops: Vec<Operation>,
    by_symbol: HashMap<String, usize>,
}

impl Algebra {
    /// Builds an algebra from `(symbol, arity, table)` triples, in declared order.
    ///
    /// Tables are row-major: the entry for `(a0,..,a{r-1})` sits at
    /// `a0*n^(r-1) + .. + a{r-1}`. Arity-0 symbols become constant unary
    /// operations.
    pub fn new<S: Into<String>>(
        size: usize,
        ops: impl IntoIterator<Item = (S, usize, Vec<Element>)>,
    ) -> Result<Self, AlgebraError> {
        if size == 0 {
            return Err(AlgebraError::EmptyUniverse);
        }
        if size > MAX_UNIVERSE {
            return Err(AlgebraError::TooLarge(size));
        }
        let mut built = Vec::new();
        let mut by_symbol = HashMap::new();
        for (symbol, arity, table) in ops {
            let symbol = symbol.into();
            if !is_valid_symbol(&symbol) {
                return Err(AlgebraError::InvalidSymbol(symbol));
            }
            if by_symbol.contains_key(&symbol) {
                return Err(AlgebraError::DuplicateSymbol(symbol));
            }
            let expected = u32::try_from(arity)
                .ok()
                .and_then(|a| size.checked_pow(a))
                .unwrap_or(usize::MAX);
            if table.len() != expected {
                return Err(AlgebraError::TableLength {
                    symbol,
                    expected,
                    found: table.len(),
                });
            }
            if let Some(&value) = table.iter().find(|&&v| v >= size) {
                return Err(AlgebraError::ValueOutOfRange {
                    symbol,
                    value,
                    size,
                });
            }
            let op = if arity == 0 {
                Operation {
                    symbol: symbol.clone(),
                    arity: 1,
                    table: vec![table[0]; size],
                    constant: true,
                }
            } else {
                Operation {
                    symbol: symbol.clone(),
                    arity,
                    table,
                    constant: false,
                }
            };
            by_symbol.insert(symbol, built.len());
            built.push(op);
        }
        Ok(Algebra {
            size,
            names: None,
            ops: built,
            by_symbol,
        })
    }

    /// Attaches display names to the elements (`names[i]` names element `i`).
    pub fn with_element_names(mut self, names: Vec<String>) -> Result<Self, AlgebraError> {
        if names.len() != self.size {
            return Err(AlgebraError::NameCount {
                expected: self.size,
                found: names.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(AlgebraError::DuplicateName(name.clone()));
            }
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn operations(&self) -> &[Operation] {
        &self.ops
    }

    pub fn operation(&self, index: usize) -> &Operation {
        &self.ops[index]
    }

    pub fn op_index(&self, symbol: &str) -> Option<usize> {
        self.by_symbol.get(symbol).copied()
    }

    pub fn element_names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn element_name(&self, e: Element) -> String {
        match &self.names {
            Some(names) if e < names.len() => names[e].clone(),
            _ => e.to_string(),
        }
    }

    /// Resolves an element by display name, falling back to a decimal index.
    pub fn parse_element(&self, s: &str) -> Result<Element, AlgebraError> {
        let s = s.trim();
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| n == s) {
                return Ok(i);
            }
        }
        match s.parse::<usize>() {
            Ok(e) if e < self.size => Ok(e),
            Ok(e) => Err(AlgebraError::ElementOutOfRange {
                element: e,
                size: self.size,
            }),
            Err(_) => Err(AlgebraError::UnknownElement(s.to_string())),
        }
    }

    /// Distinct arities in ascending order.
    pub fn arities(&self) -> Vec<usize> {
        let mut a: Vec<usize> = self.ops.iter().map(|o| o.arity).collect();
        a.sort_unstable();
        a.dedup();
        a
    }

    /// Table lookup. `args.len()` must equal the arity of operation `op`.
    #[inline]
    pub fn apply(&self, op: usize, args: &[Element]) -> Element {
        let op = &self.ops[op];
        debug_assert_eq!(args.len(), op.arity);
        let idx = args.iter().fold(0usize, |acc, &a| acc * self.size + a);
        op.table[idx]
    }

    pub(crate) fn check_tuple(&self, a: &[Element]) -> Result<(), AlgebraError> {
        if a.is_empty() {
            return Err(AlgebraError::EmptyTuple);
        }
        match a.iter().find(|&&e| e >= self.size) {
            Some(&e) => Err(AlgebraError::ElementOutOfRange {
                element: e,
                size: self.size,
            }),
            None => Ok(()),
        }
    }

    /// The subuniverse generated by the entries of `a`, sorted ascending.
    ///
    /// Plain fixpoint iteration: every operation is applied to every argument
    /// tuple over the current set until nothing new appears.
    pub fn sg(&self, a: &[Element]) -> Result<Vec<Element>, AlgebraError> {
        self.check_tuple(a)?;
        let mut member = vec![false; self.size];
        let mut elems = Vec::new();
        for &x in a {
            if !member[x] {
                member[x] = true;
                elems.push(x);
            }
        }
        loop {
            let before = elems.len();
            let current = elems.clone();
            for op in 0..self.ops.len() {
                let r = self.ops[op].arity;
                for_each_tuple(&current, r, |args| {
                    let v = self.apply(op, args);
                    if !member[v] {
                        member[v] = true;
                        elems.push(v);
                    }
                });
            }
            if elems.len() == before {
                break;
            }
        }
        elems.sort_unstable();
        Ok(elems)
    }

    /// Whether `set` is nonempty and closed under every operation.
    pub fn is_subuniverse(&self, set: &[Element]) -> bool {
        if set.is_empty() || set.iter().any(|&e| e >= self.size) {
            return false;
        }
        let mut member = vec![false; self.size];
        for &e in set {
            member[e] = true;
        }
        (0..self.ops.len()).all(|op| {
            let mut closed = true;
            for_each_tuple(set, self.ops[op].arity, |args| {
                closed &= member[self.apply(op, args)];
            });
            closed
        })
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "algebra of size {} with [", self.size)?;
        for (i, op) in self.ops.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let arity = if op.constant { 0 } else { op.arity };
            write!(f, "{}/{}", op.symbol, arity)?;
        }
        write!(f, "]")
    }
}

/// Calls `f` on every `r`-tuple over `elems`, in lexicographic order of positions.
pub(crate) fn for_each_tuple(elems: &[Element], r: usize, mut f: impl FnMut(&[Element])) {
    if r == 0 {
        f(&[]);
        return;
    }
    if elems.is_empty() {
        return;
    }
    let mut pos = vec![0usize; r];
    let mut buf: Vec<Element> = vec![elems[0]; r];
    loop {
        f(&buf);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < elems.len() {
                buf[i] = elems[pos[i]];
                break;
            }
            pos[i] = 0;
            buf[i] = elems[0];
        }
    }
}
