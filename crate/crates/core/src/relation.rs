use std::collections::BTreeSet;

use thiserror::Error;

use crate::algebra::Element;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("relations must have arity at least 1")]
    ZeroArity,
    #[error("tuple {tuple:?} has length {len}, expected {arity}")]
    WrongLength {
        tuple: Vec<Element>,
        len: usize,
        arity: usize,
    },
    #[error("tuple {tuple:?} has an entry outside 0..{size}")]
    OutOfRange { tuple: Vec<Element>, size: usize },
}

/// A `k`-ary relation: a set of `k`-tuples, kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Vec<Element>>,
}

impl Relation {
    pub fn new(
        arity: usize,
        tuples: impl IntoIterator<Item = Vec<Element>>,
    ) -> Result<Self, RelationError> {
        if arity == 0 {
            return Err(RelationError::ZeroArity);
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(RelationError::WrongLength {
                    len: t.len(),
                    tuple: t,
                    arity,
                });
            }
            set.insert(t);
        }
        Ok(Relation { arity, tuples: set })
    }

    pub fn empty(arity: usize) -> Self {
        assert!(arity > 0, "relations must have arity at least 1");
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    /// All of `{0..n}^arity`.
    pub fn full(n: usize, arity: usize) -> Self {
        let mut r = Relation::empty(arity);
        let universe: Vec<Element> = (0..n).collect();
        crate::algebra::for_each_tuple(&universe, arity, |t| {
            r.tuples.insert(t.to_vec());
        });
        r
    }

    /// Checks every entry against a universe of size `n`.
    pub fn check_universe(&self, n: usize) -> Result<(), RelationError> {
        match self.tuples.iter().find(|t| t.iter().any(|&e| e >= n)) {
            Some(t) => Err(RelationError::OutOfRange {
                tuple: t.clone(),
                size: n,
            }),
            None => Ok(()),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Element]) -> bool {
        self.tuples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Element>> {
        self.tuples.iter()
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<Element>> {
        &self.tuples
    }

    pub fn insert(&mut self, t: Vec<Element>) -> Result<bool, RelationError> {
        if t.len() != self.arity {
            return Err(RelationError::WrongLength {
                len: t.len(),
                tuple: t,
                arity: self.arity,
            });
        }
        Ok(self.tuples.insert(t))
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        assert_eq!(self.arity, other.arity);
        Relation {
            arity: self.arity,
            tuples: self.tuples.intersection(&other.tuples).cloned().collect(),
        }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        assert_eq!(self.arity, other.arity);
        Relation {
            arity: self.arity,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        }
    }

    /// Complement inside `{0..n}^arity`.
    pub fn complement(&self, n: usize) -> Relation {
        let full = Relation::full(n, self.arity);
        Relation {
            arity: self.arity,
            tuples: full.tuples.difference(&self.tuples).cloned().collect(),
        }
    }
}

impl FromIterator<Vec<Element>> for Relation {
    /// Panics on an empty iterator or mixed lengths; use [`Relation::new`] otherwise.
    fn from_iter<I: IntoIterator<Item = Vec<Element>>>(iter: I) -> Self {
        let tuples: Vec<Vec<Element>> = iter.into_iter().collect();
        let arity = tuples
            .first()
            .map(Vec::len)
            .expect("empty relation literal");
        Relation::new(arity, tuples).expect("mixed tuple lengths")
    }
}
