//! Reduction of an arbitrary target to targets of repetition-free tuples.
//!
//! A tuple is described by its pattern (which positions are equal) and its
//! squashed form (first occurrences only). `R` is definable iff each group
//! `{⌊ā⌋ : ā ∈ R, pat ā = θ}` is definable over repetition-free tuples, and
//! formulas for the groups recombine into one for `R`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::algebra::Element;
use crate::relation::Relation;
use crate::syntax::{EvalError, QfFormula, Term};

/// A partition of `{0..k-1}`, blocks sorted by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    blocks: Vec<Vec<usize>>,
    // block index of each position
    block_of: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from arbitrary blocks; returns `None` unless they
    /// partition `0..k` for some `k`.
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>) -> Option<Pattern> {
        for b in &mut blocks {
            b.sort_unstable();
            if b.is_empty() {
                return None;
            }
        }
        blocks.sort();
        let k: usize = blocks.iter().map(Vec::len).sum();
        let mut block_of = vec![usize::MAX; k];
        for (j, b) in blocks.iter().enumerate() {
            for &i in b {
                if i >= k || block_of[i] != usize::MAX {
                    return None;
                }
                block_of[i] = j;
            }
        }
        Some(Pattern { blocks, block_of })
    }

    pub fn discrete(k: usize) -> Pattern {
        Pattern {
            blocks: (0..k).map(|i| vec![i]).collect(),
            block_of: (0..k).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks, i.e. the length of squashed tuples.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Length of the tuples the pattern describes.
    pub fn arity(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    pub fn block_of(&self, position: usize) -> usize {
        self.block_of[position]
    }

    /// Re-expands a squashed tuple: entry `i` is `squashed[block of i]`.
    pub fn expand(&self, squashed: &[Element]) -> Vec<Element> {
        assert_eq!(
            squashed.len(),
            self.blocks.len(),
            "squashed tuple has the wrong length"
        );
        self.block_of.iter().map(|&j| squashed[j]).collect()
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.blocks
            .len()
            .cmp(&other.blocks.len())
            .then_with(|| self.blocks.cmp(&other.blocks))
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (j, b) in self.blocks.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (i, x) in b.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

pub fn pattern(a: &[Element]) -> Pattern {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut reps: Vec<Element> = Vec::new();
    let mut block_of = Vec::with_capacity(a.len());
    for (i, &x) in a.iter().enumerate() {
        match reps.iter().position(|&r| r == x) {
            Some(j) => {
                blocks[j].push(i);
                block_of.push(j);
            }
            None => {
                block_of.push(reps.len());
                reps.push(x);
                blocks.push(vec![i]);
            }
        }
    }
    Pattern { blocks, block_of }
}

/// Drops every entry equal to an earlier one.
pub fn squash(a: &[Element]) -> Vec<Element> {
    let mut out = Vec::with_capacity(a.len());
    for &x in a {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

pub fn is_repetition_free(a: &[Element]) -> bool {
    a.iter().enumerate().all(|(i, x)| !a[..i].contains(x))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetBundle {
    original_arity: usize,
    spec: BTreeSet<usize>,
    targets: Vec<(Pattern, Relation)>,
}

impl TargetBundle {
    pub fn original_arity(&self) -> usize {
        self.original_arity
    }

    /// Lengths of the squashed tuples of the target.
    pub fn spec(&self) -> &BTreeSet<usize> {
        &self.spec
    }

    pub fn targets(&self) -> &[(Pattern, Relation)] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// The union of all targets expanded back to the original arity.
    pub fn reassemble(&self) -> Relation {
        let mut r = Relation::empty(self.original_arity);
        for (theta, target) in &self.targets {
            for t in target.iter() {
                r.insert(theta.expand(t))
                    .expect("expanded tuple has the original arity");
            }
        }
        r
    }
}

pub fn decompose(r: &Relation) -> TargetBundle {
    let mut groups: BTreeMap<Pattern, Vec<Vec<Element>>> = BTreeMap::new();
    for t in r.iter() {
        groups.entry(pattern(t)).or_default().push(squash(t));
    }
    let spec = groups.keys().map(Pattern::len).collect();
    let targets = groups
        .into_iter()
        .map(|(theta, tuples)| {
            let arity = theta.len();
            (
                theta,
                Relation::new(arity, tuples).expect("squashed tuples match the pattern size"),
            )
        })
        .collect();
    TargetBundle {
        original_arity: r.arity(),
        spec,
        targets,
    }
}

/// Membership of `a` in each target; targets of another arity never contain it.
pub fn rel_type(a: &[Element], bundle: &TargetBundle) -> Vec<bool> {
    bundle
        .targets
        .iter()
        .map(|(_, r)| r.arity() == a.len() && r.contains(a))
        .collect()
}

/// All repetition-free `k`-tuples over `0..n`, lexicographically.
pub fn distinct_tuples(n: usize, k: usize) -> DistinctTuples {
    let next = if k == 0 || k > n {
        None
    } else {
        Some((0..k).collect())
    };
    DistinctTuples { n, next }
}

#[derive(Debug, Clone)]
pub struct DistinctTuples {
    n: usize,
    next: Option<Vec<Element>>,
}

impl Iterator for DistinctTuples {
    type Item = Vec<Element>;

    fn next(&mut self) -> Option<Vec<Element>> {
        let current = self.next.take()?;
        let n = self.n;
        let k = current.len();
        let mut t = current.clone();
        // advance the rightmost position that can take a larger unused value,
        // then fill the rest with the smallest unused values
        let mut i = k;
        while i > 0 {
            i -= 1;
            let used: Vec<bool> = {
                let mut u = vec![false; n];
                for &x in &t[..i] {
                    u[x] = true;
                }
                u
            };
            if let Some(v) = (t[i] + 1..n).find(|&v| !used[v]) {
                t[i] = v;
                let mut used = used;
                used[v] = true;
                let mut free = (0..n).filter(|&x| !used[x]);
                for slot in t.iter_mut().skip(i + 1) {
                    *slot = free.next().expect("enough unused values");
                }
                self.next = Some(t);
                break;
            }
        }
        Some(current)
    }
}

/// Number of repetition-free `k`-tuples over `n` elements.
pub fn falling_factorial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (n - k + 1..=n).product()
}

/// Lifts a formula for the squashed target of `theta` to the original arity:
/// variables are renamed to block representatives, then the equalities inside
/// each block and the disequalities between representatives are conjoined.
pub fn recombine(theta: &Pattern, phi: &QfFormula, k: usize) -> Result<QfFormula, EvalError> {
    assert_eq!(theta.arity(), k, "pattern arity differs from k");
    let reps: Vec<usize> = theta.blocks.iter().map(|b| b[0]).collect();
    let renamed = phi.rename_vars(&reps)?;
    let mut extra = Vec::new();
    for b in &theta.blocks {
        for &i in &b[1..] {
            extra.push(QfFormula::eq(Term::Var(b[0]), Term::Var(i)));
        }
    }
    for (i, &p) in reps.iter().enumerate() {
        for &q in &reps[i + 1..] {
            extra.push(QfFormula::neq(Term::Var(p), Term::Var(q)));
        }
    }
    if extra.is_empty() {
        return Ok(renamed);
    }
    if renamed == QfFormula::True {
        return Ok(QfFormula::and(extra));
    }
    Ok(QfFormula::and(std::iter::once(renamed).chain(extra)))
}

/// Disjunction of the recombined formulas; `False` when there are none.
pub fn assemble(parts: Vec<QfFormula>) -> QfFormula {
    match parts.len() {
        0 => QfFormula::False,
        1 => parts.into_iter().next().unwrap(),
        _ => QfFormula::or(parts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use crate::parse::parse_formula;

    #[test]
    fn pattern_and_squash_example() {
        let (a, b, c) = (7, 3, 5);
        let t = [a, a, b, c, b, c];
        assert_eq!(pattern(&t).blocks(), &[vec![0, 1], vec![2, 4], vec![3, 5]]);
        assert_eq!(squash(&t), vec![a, b, c]);
        assert!(pattern(&squash(&t)).is_discrete());
        assert_eq!(pattern(&t).expand(&[a, b, c]), t.to_vec());
        assert_eq!(pattern(&[2, 2, 2]).blocks(), &[vec![0, 1, 2]]);
        assert_eq!(squash(&[2, 2, 2]), vec![2]);
    }

    #[test]
    fn decompose_examples() {
        let r = Relation::new(2, [vec![0, 1], vec![0, 2], vec![0, 3]]).unwrap();
        let b = decompose(&r);
        assert_eq!(b.len(), 1);
        assert!(b.targets()[0].0.is_discrete());
        assert_eq!(b.targets()[0].1, r);
        assert_eq!(rel_type(&[0, 1], &b), vec![true]);
        assert_eq!(rel_type(&[1, 2], &b), vec![false]);
        assert_eq!(rel_type(&[0], &b), vec![false]);

        let b = decompose(&Relation::new(2, [vec![1, 1]]).unwrap());
        assert_eq!(b.targets()[0].0.blocks(), &[vec![0, 1]]);
        assert_eq!(b.targets()[0].1, Relation::new(1, [vec![1]]).unwrap());

        let b = decompose(&Relation::empty(3));
        assert!(b.is_empty() && b.spec().is_empty());
        assert!(rel_type(&[0], &b).is_empty());
    }

    #[test]
    fn patterns_ordered_by_size_first() {
        let r = Relation::new(
            3,
            [vec![0, 1, 2], vec![0, 0, 1], vec![0, 1, 0], vec![1, 1, 1]],
        )
        .unwrap();
        let b = decompose(&r);
        let blocks: Vec<_> = b
            .targets()
            .iter()
            .map(|(t, _)| t.blocks().to_vec())
            .collect();
        assert_eq!(
            blocks,
            vec![
                vec![vec![0, 1, 2]],
                vec![vec![0, 1], vec![2]],
                vec![vec![0, 2], vec![1]],
                vec![vec![0], vec![1], vec![2]],
            ]
        );
        assert_eq!(b.spec().iter().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(b.reassemble(), r);
    }

    #[test]
    fn distinct_tuple_counts() {
        assert_eq!(distinct_tuples(4, 2).count(), 12);
        assert_eq!(distinct_tuples(2, 3).count(), 0);
        let perms: Vec<_> = distinct_tuples(3, 3).collect();
        assert_eq!(
            perms,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        for (n, k) in [(5, 1), (5, 3), (6, 4), (4, 4)] {
            let all: Vec<_> = distinct_tuples(n, k).collect();
            assert_eq!(all.len(), falling_factorial(n, k));
            assert!(all.windows(2).all(|w| w[0] < w[1]));
            assert!(all.iter().all(|t| is_repetition_free(t)));
        }
    }

    #[test]
    fn recombine_example() {
        let theta = Pattern::from_blocks(vec![vec![0, 1], vec![2, 3], vec![4]]).unwrap();
        let phi = parse_formula("f(x0,x1)=x2").unwrap();
        let got = recombine(&theta, &phi, 5).unwrap();
        assert_eq!(
            got.to_string(),
            "f(x0,x2)=x4 & x0=x1 & x2=x3 & x0!=x2 & x0!=x4 & x2!=x4"
        );
        let single = Pattern::from_blocks(vec![vec![0, 1]]).unwrap();
        assert_eq!(
            recombine(&single, &parse_formula("x0=x0").unwrap(), 2)
                .unwrap()
                .to_string(),
            "x0=x0 & x0=x1"
        );
        let discrete = Pattern::discrete(2);
        assert_eq!(
            recombine(&discrete, &QfFormula::True, 2)
                .unwrap()
                .to_string(),
            "x0!=x1"
        );
        assert!(recombine(&single, &parse_formula("x1=x0").unwrap(), 2).is_err());
    }

    #[test]
    fn recombined_extension() {
        let alg = Algebra::new(3, [("s", 1, vec![1, 2, 0])]).unwrap();
        let theta = Pattern::from_blocks(vec![vec![0, 2], vec![1]]).unwrap();
        let phi = parse_formula("s(x0)=x1").unwrap();
        let lifted = recombine(&theta, &phi, 3).unwrap();
        let ext = alg.extension(&lifted, 3).unwrap();
        let inner = alg.extension(&phi, 2).unwrap();
        let expected: Relation = Relation::new(
            3,
            Relation::full(3, 3)
                .iter()
                .filter(|a| pattern(a) == theta && inner.contains(&squash(a)))
                .cloned(),
        )
        .unwrap();
        assert_eq!(ext, expected);
        assert_eq!(assemble(vec![]), QfFormula::False);
        assert_eq!(assemble(vec![phi.clone()]), phi);
    }
}
