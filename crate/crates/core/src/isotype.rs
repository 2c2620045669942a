//! Isomorphism types of tuples.
//!
//! [`iso_type`] lists the generated subuniverse of a tuple by applying the
//! operations, pass by pass, to every argument tuple that involves an element
//! first seen in the previous pass. The equality pattern of that list (which
//! positions hold equal values) identifies the tuple up to isomorphism: two
//! tuples with the same pattern are related by the subisomorphism that maps
//! the first-appearance lists onto each other.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Element};
use crate::syntax::Term;

/// Canonical partition of the evaluation list, stored as one label per
/// position: `labels[i]` is the block of position `i`, blocks numbered by
/// their least position. Equal labels mean equal partitions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsoType(Vec<u32>);

impl IsoType {
    pub fn labels(&self) -> &[u32] {
        &self.0
    }

    /// Number of evaluated positions.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Blocks sorted by least index, indices ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let count = self.0.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); count];
        for (i, &l) in self.0.iter().enumerate() {
            blocks[l as usize].push(i);
        }
        blocks
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoSignature {
    iso_type: IsoType,
    universe: Vec<Element>,
    depth: usize,
}

impl IsoSignature {
    pub fn iso_type(&self) -> &IsoType {
        &self.iso_type
    }

    pub fn partition(&self) -> Vec<Vec<usize>> {
        self.iso_type.blocks()
    }

    /// The generated subuniverse in first-appearance order.
    pub fn universe(&self) -> &[Element] {
        &self.universe
    }

    /// Number of closure passes run.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn into_parts(self) -> (IsoType, Vec<Element>) {
        (self.iso_type, self.universe)
    }
}

const UNSEEN: u32 = u32::MAX;

struct State {
    values: Vec<Element>,
    labels: Vec<u32>,
    universe: Vec<Element>,
    // positions of first occurrences (the set H), ascending
    first: Vec<usize>,
    slot: Vec<u32>,
}

impl State {
    fn record(&mut self, value: Element) {
        let idx = self.values.len();
        self.values.push(value);
        if self.slot[value] == UNSEEN {
            self.slot[value] = self.universe.len() as u32;
            self.universe.push(value);
            self.first.push(idx);
        }
        debug_assert_eq!(
            self.first
                .iter()
                .filter(|&&j| self.values[j] == value)
                .count(),
            1,
            "value {value} must occur exactly once among first occurrences"
        );
        self.labels.push(self.slot[value]);
    }
}

fn run(
    alg: &Algebra,
    a: &[Element],
    mut terms: Option<&mut Vec<Term>>,
) -> Result<IsoSignature, AlgebraError> {
    alg.check_tuple(a)?;
    let mut st = State {
        values: Vec::with_capacity(a.len() * 4),
        labels: Vec::with_capacity(a.len() * 4),
        universe: Vec::new(),
        first: Vec::new(),
        slot: vec![UNSEEN; alg.size()],
    };
    for &x in a {
        st.record(x);
    }
    if let Some(t) = terms.as_deref_mut() {
        t.extend((0..a.len()).map(Term::Var));
    }

    let arities = alg.arities();
    let mut by_arity: Vec<Vec<usize>> = vec![Vec::new(); arities.len()];
    for (i, op) in alg.operations().iter().enumerate() {
        let slot = arities.binary_search(&op.arity()).expect("arity listed");
        by_arity[slot].push(i);
    }

    // `first` is only ever appended to, so the positions found in the previous
    // pass are its suffix starting at `fresh_from`.
    let mut fresh_from = 0usize;
    let mut passes = 0usize;
    let mut args: Vec<Element> = Vec::new();
    while fresh_from < st.first.len() {
        passes += 1;
        let old: Vec<usize> = st.first.clone();
        for (r_slot, &r) in arities.iter().enumerate() {
            for &op in &by_arity[r_slot] {
                // lexicographic over positions in `old`; keep tuples touching a fresh one
                let mut pos = vec![0usize; r];
                'tuples: loop {
                    if pos.iter().any(|&p| p >= fresh_from) {
                        args.clear();
                        args.extend(pos.iter().map(|&p| st.values[old[p]]));
                        let value = alg.apply(op, &args);
                        if let Some(t) = terms.as_deref_mut() {
                            let sym = alg.operation(op).symbol().to_string();
                            let term =
                                Term::App(sym, pos.iter().map(|&p| t[old[p]].clone()).collect());
                            t.push(term);
                        }
                        st.record(value);
                    }
                    let mut i = r;
                    loop {
                        if i == 0 {
                            break 'tuples;
                        }
                        i -= 1;
                        pos[i] += 1;
                        if pos[i] < old.len() {
                            break;
                        }
                        pos[i] = 0;
                    }
                }
            }
        }
        fresh_from = old.len();
    }

    Ok(IsoSignature {
        iso_type: IsoType(st.labels),
        universe: st.universe,
        depth: passes,
    })
}

/// Computes the isomorphism type and the ordered generated subuniverse of `a`.
pub fn iso_type(alg: &Algebra, a: &[Element]) -> Result<IsoSignature, AlgebraError> {
    run(alg, a, None)
}

/// Like [`iso_type`], also returning the term that produced each evaluated position.
pub fn iso_type_with_terms(
    alg: &Algebra,
    a: &[Element],
) -> Result<(IsoSignature, Vec<Term>), AlgebraError> {
    let mut terms = Vec::new();
    let sig = run(alg, a, Some(&mut terms))?;
    Ok((sig, terms))
}

/// Memo table for signatures. Correctness never depends on a hit.
#[derive(Debug, Default)]
pub struct IsoTypeCache {
    inner: HashMap<Vec<Element>, IsoSignature>,
}

impl IsoTypeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, alg: &Algebra, a: &[Element]) -> Result<&IsoSignature, AlgebraError> {
        if !self.inner.contains_key(a) {
            let sig = iso_type(alg, a)?;
            self.inner.insert(a.to_vec(), sig);
        }
        Ok(&self.inner[a])
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubisoError {
    #[error("domain and image have different lengths")]
    LengthMismatch,
    #[error("element {0} appears twice in the domain")]
    RepeatedDomain(Element),
    #[error("element {0} appears twice in the image")]
    NotInjective(Element),
    #[error("element {0} is outside the universe")]
    OutOfRange(Element),
    #[error("the domain is not closed under `{symbol}`")]
    DomainNotClosed { symbol: String },
    #[error("`{symbol}` is not preserved at {args:?}")]
    NotPreserved { symbol: String, args: Vec<Element> },
}

/// An injective partial map `domain[j] ↦ image[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subisomorphism {
    domain: Vec<Element>,
    image: Vec<Element>,
}

impl Subisomorphism {
    /// Builds the map without checking the algebra conditions; see [`Self::verify`].
    pub fn new(domain: Vec<Element>, image: Vec<Element>) -> Result<Self, SubisoError> {
        if domain.len() != image.len() {
            return Err(SubisoError::LengthMismatch);
        }
        for (i, d) in domain.iter().enumerate() {
            if domain[..i].contains(d) {
                return Err(SubisoError::RepeatedDomain(*d));
            }
        }
        for (i, d) in image.iter().enumerate() {
            if image[..i].contains(d) {
                return Err(SubisoError::NotInjective(*d));
            }
        }
        Ok(Subisomorphism { domain, image })
    }

    pub fn identity(set: &[Element]) -> Self {
        Subisomorphism {
            domain: set.to_vec(),
            image: set.to_vec(),
        }
    }

    pub fn domain(&self) -> &[Element] {
        &self.domain
    }

    pub fn image(&self) -> &[Element] {
        &self.image
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Element, Element)> + '_ {
        self.domain.iter().copied().zip(self.image.iter().copied())
    }

    pub fn apply(&self, e: Element) -> Option<Element> {
        self.domain
            .iter()
            .position(|&d| d == e)
            .map(|j| self.image[j])
    }

    pub fn apply_tuple(&self, a: &[Element]) -> Option<Vec<Element>> {
        a.iter().map(|&e| self.apply(e)).collect()
    }

    pub fn inverse(&self) -> Self {
        Subisomorphism {
            domain: self.image.clone(),
            image: self.domain.clone(),
        }
    }

    /// The same map with pairs sorted by domain element.
    pub fn canonical(&self) -> Self {
        let mut pairs: Vec<_> = self.pairs().collect();
        pairs.sort_unstable();
        Subisomorphism {
            domain: pairs.iter().map(|p| p.0).collect(),
            image: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Dense lookup table over a universe of size `n`.
    pub fn to_dense(&self, n: usize) -> Vec<Option<Element>> {
        let mut map = vec![None; n];
        for (d, i) in self.pairs() {
            map[d] = Some(i);
        }
        map
    }

    /// Full table scan: the domain is a subuniverse and every operation commutes with the map.
    pub fn verify(&self, alg: &Algebra) -> Result<(), SubisoError> {
        let n = alg.size();
        if let Some(&e) = self.domain.iter().chain(&self.image).find(|&&e| e >= n) {
            return Err(SubisoError::OutOfRange(e));
        }
        let map = self.to_dense(n);
        for (op_idx, op) in alg.operations().iter().enumerate() {
            let mut failure = None;
            crate::algebra::for_each_tuple(&self.domain, op.arity(), |args| {
                if failure.is_some() {
                    return;
                }
                let v = alg.apply(op_idx, args);
                let Some(gv) = map[v] else {
                    failure = Some(SubisoError::DomainNotClosed {
                        symbol: op.symbol().to_string(),
                    });
                    return;
                };
                let image_args: Vec<Element> = args.iter().map(|&e| map[e].unwrap()).collect();
                if alg.apply(op_idx, &image_args) != gv {
                    failure = Some(SubisoError::NotPreserved {
                        symbol: op.symbol().to_string(),
                        args: args.to_vec(),
                    });
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Subisomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (d, e)) in self.pairs().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d}↦{e}")?;
        }
        f.write_str("}")
    }
}

/// The map `sig_a.universe[j] ↦ sig_b.universe[j]` when both types agree.
pub fn subiso_from_signatures(
    sig_a: &IsoSignature,
    sig_b: &IsoSignature,
) -> Option<Subisomorphism> {
    if sig_a.iso_type != sig_b.iso_type {
        return None;
    }
    debug_assert_eq!(sig_a.universe.len(), sig_b.universe.len());
    Some(Subisomorphism {
        domain: sig_a.universe.clone(),
        image: sig_b.universe.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::diamond;

    const BOT: Element = 0;
    const U: Element = 1;
    const U2: Element = 2;
    const TOP: Element = 3;

    fn expected_partition() -> Vec<Vec<usize>> {
        vec![
            vec![0, 3, 12, 14, 18, 21, 24],
            vec![1, 7, 16, 17, 19, 22, 25],
            vec![2, 4, 5, 6, 8, 9, 10, 11, 20, 23, 26],
            vec![13, 15, 27, 28, 29, 30, 31, 32, 33, 34],
        ]
    }

    #[test]
    fn worked_example_in_the_diamond() {
        let d = diamond();
        let sig = iso_type(&d, &[U, U2, BOT]).unwrap();
        assert_eq!(sig.partition(), expected_partition());
        assert_eq!(sig.universe(), &[U, U2, BOT, TOP]);
        assert_eq!(sig.depth(), 2);

        let other = iso_type(&d, &[U2, U, BOT]).unwrap();
        assert_eq!(other.partition(), expected_partition());
        assert_eq!(other.universe(), &[U2, U, BOT, TOP]);

        let gamma = subiso_from_signatures(&sig, &other).unwrap();
        assert_eq!(gamma.domain(), &[U, U2, BOT, TOP]);
        assert_eq!(gamma.image(), &[U2, U, BOT, TOP]);
        assert_eq!(gamma.verify(&d), Ok(()));
        assert_eq!(gamma.apply_tuple(&[U, U2, BOT]), Some(vec![U2, U, BOT]));
    }

    #[test]
    fn first_pass_state_matches_the_worked_example() {
        // positions 0..21 are the tuple plus the first pass
        let d = diamond();
        let (_, terms) = iso_type_with_terms(&d, &[U, U2, BOT]).unwrap();
        assert_eq!(terms.len(), 35);
        assert_eq!(terms[13].to_string(), "∨(x0,x1)");
        assert_eq!(terms[27].to_string(), "∧(∨(x0,x1),∨(x0,x1))");
        for (i, t) in terms.iter().enumerate() {
            let v = d.eval_term(t, &[U, U2, BOT]).unwrap();
            let block = expected_partition()
                .iter()
                .position(|b| b.contains(&i))
                .unwrap();
            assert_eq!(v, [U, U2, BOT, TOP][block], "position {i}");
        }
    }

    #[test]
    fn non_isomorphic_pair() {
        let d = diamond();
        let a = iso_type(&d, &[U, U2]).unwrap();
        let b = iso_type(&d, &[U, TOP]).unwrap();
        assert_eq!(a.universe().len(), 4);
        assert_eq!(b.universe().len(), 2);
        assert!(subiso_from_signatures(&a, &b).is_none());
    }

    #[test]
    fn trivial_algebra() {
        let alg = Algebra::new(1, [("f", 1, vec![0])]).unwrap();
        let sig = iso_type(&alg, &[0]).unwrap();
        assert_eq!(sig.partition(), vec![vec![0, 1]]);
        assert_eq!(sig.universe(), &[0]);
    }

    #[test]
    fn equal_tuples_give_identity() {
        let d = diamond();
        let sig = iso_type(&d, &[U, BOT]).unwrap();
        let gamma = subiso_from_signatures(&sig, &sig).unwrap();
        assert!(gamma.pairs().all(|(x, y)| x == y));
        assert_eq!(
            gamma
                .domain()
                .iter()
                .copied()
                .collect::<std::collections::BTreeSet<_>>(),
            d.sg(&[U, BOT]).unwrap().into_iter().collect()
        );
    }

    #[test]
    fn repeated_entries_share_blocks() {
        let d = diamond();
        let sig = iso_type(&d, &[U, U, BOT, U]).unwrap();
        let blocks = sig.partition();
        assert_eq!(blocks[0][..3], [0, 1, 3]);
        assert_eq!(blocks[1][0], 2);
        assert_eq!(iso_type(&d, &[]), Err(AlgebraError::EmptyTuple));
    }

    #[test]
    fn verify_rejects_bad_maps() {
        let d = diamond();
        // {⊥,⊤} → {u,⊤} is a subisomorphism, {⊥,u} → {⊤,u} is not
        assert_eq!(
            Subisomorphism::new(vec![BOT, TOP], vec![U, TOP])
                .unwrap()
                .verify(&d),
            Ok(())
        );
        assert!(Subisomorphism::new(vec![BOT, U], vec![TOP, U])
            .unwrap()
            .verify(&d)
            .is_err());
        assert!(Subisomorphism::new(vec![U, U2], vec![U, U2])
            .unwrap()
            .verify(&d)
            .is_err());
        assert_eq!(
            Subisomorphism::new(vec![BOT, U], vec![U, U]),
            Err(SubisoError::NotInjective(U))
        );
    }
}
