//! Brute-force reference deciders and the graph-to-algebra construction.
//!
//! Everything here enumerates directly from the definitions and is meant for
//! small inputs only.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::algebra::{Algebra, Element};
use crate::decision::{Counterexample, DecideError, Decision};
use crate::isotype::Subisomorphism;
use crate::relation::Relation;

pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const MAX_GRAPH_VERTICES: usize = 1 << 12;

/// Subuniverses generated by at most `k` elements, ordered by size, then lexicographically.
pub fn enumerate_subuniverses(alg: &Algebra, k: usize) -> Vec<Vec<Element>> {
    let n = alg.size();
    let mut found: BTreeSet<(usize, Vec<Element>)> = BTreeSet::new();
    // sg depends only on the set of generators
    let mut gens: Vec<Element> = Vec::new();
    fn walk(
        alg: &Algebra,
        start: usize,
        k: usize,
        gens: &mut Vec<Element>,
        found: &mut BTreeSet<(usize, Vec<Element>)>,
    ) {
        if !gens.is_empty() {
            let s = alg.sg(gens).expect("nonempty in-range generators");
            found.insert((s.len(), s));
        }
        if gens.len() == k {
            return;
        }
        for x in start..alg.size() {
            gens.push(x);
            walk(alg, x + 1, k, gens, found);
            gens.pop();
        }
    }
    walk(alg, 0, k.min(n), &mut gens, &mut found);
    found.into_iter().map(|(_, s)| s).collect()
}

fn for_each_permutation(items: &[Element], f: &mut impl FnMut(&[Element]) -> bool) -> bool {
    // lexicographic over positions of `items`; stops when `f` returns false
    fn go(
        items: &[Element],
        used: &mut Vec<bool>,
        cur: &mut Vec<Element>,
        f: &mut impl FnMut(&[Element]) -> bool,
    ) -> bool {
        if cur.len() == items.len() {
            return f(cur);
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                cur.push(items[i]);
                let go_on = go(items, used, cur, f);
                cur.pop();
                used[i] = false;
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
    go(items, &mut vec![false; items.len()], &mut Vec::new(), f)
}

/// Visits every isomorphism between `k`-generated subuniverses, stopping early
/// when `visit` returns false.
pub fn for_each_subisomorphism(
    alg: &Algebra,
    k: usize,
    budget: u64,
    mut visit: impl FnMut(&Subisomorphism) -> bool,
) -> Result<(), DecideError> {
    let subs = enumerate_subuniverses(alg, k);
    let mut candidates = 0u64;
    let mut over_budget = false;
    let mut stopped = false;
    for s in &subs {
        for t in subs.iter().filter(|t| t.len() == s.len()) {
            for_each_permutation(t, &mut |image| {
                candidates += 1;
                if candidates > budget {
                    over_budget = true;
                    return false;
                }
                let gamma = Subisomorphism::new(s.clone(), image.to_vec()).expect("bijection");
                if gamma.verify(alg).is_ok() && !visit(&gamma) {
                    stopped = true;
                    return false;
                }
                true
            });
            if over_budget {
                return Err(DecideError::OracleBudget { limit: budget });
            }
            if stopped {
                return Ok(());
            }
        }
    }
    Ok(())
}

pub fn enumerate_subisomorphisms(
    alg: &Algebra,
    k: usize,
    budget: u64,
) -> Result<Vec<Subisomorphism>, DecideError> {
    let mut out = Vec::new();
    for_each_subisomorphism(alg, k, budget, |g| {
        out.push(g.clone());
        true
    })?;
    Ok(out)
}

/// `R` is definable iff every isomorphism between `arity(R)`-generated
/// subalgebras maps tuples of `R` into `R`.
pub fn oracle_definable(alg: &Algebra, r: &Relation, budget: u64) -> Result<Decision, DecideError> {
    r.check_universe(alg.size())?;
    if r.is_empty() {
        return Ok(Decision::Definable { formula: None });
    }
    let mut found = None;
    for_each_subisomorphism(alg, r.arity(), budget, |gamma| {
        let map = gamma.to_dense(alg.size());
        for a in r.iter() {
            let Some(image) = a.iter().map(|&x| map[x]).collect::<Option<Vec<_>>>() else {
                continue;
            };
            if !r.contains(&image) {
                found = Some(Counterexample {
                    witness_in: a.clone(),
                    witness_out: image,
                    gamma: gamma.clone(),
                });
                return false;
            }
        }
        true
    })?;
    Ok(match found {
        Some(c) => Decision::NotDefinable(c),
        None => Decision::Definable { formula: None },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} is out of range for {size} vertices")]
    OutOfRange { vertex: usize, size: usize },
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("graphs are limited to {MAX_GRAPH_VERTICES} vertices, got {0}")]
    TooLarge(usize),
}

/// A simple undirected graph on `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Edges may be listed in either orientation; they are stored symmetrically.
    pub fn new(
        vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Graph, GraphError> {
        if vertices > MAX_GRAPH_VERTICES {
            return Err(GraphError::TooLarge(vertices));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= vertices {
                    return Err(GraphError::OutOfRange {
                        vertex: v,
                        size: vertices,
                    });
                }
            }
            if a == b {
                return Err(GraphError::Loop(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Graph {
            vertices,
            edges: set,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    /// Each edge once, as `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// The algebra `G*` of a graph: vertices keep their numbers, `0̂ = m` and `1̂ = m+1`.
#[derive(Debug, Clone)]
pub struct GraphStar {
    pub algebra: Algebra,
    pub zero: Element,
    pub one: Element,
}

/// One binary `f` with `f(a,b) = 1̂` if `ab` is an edge or `a = b ∈ {0̂,1̂}`, else `0̂`.
pub fn graph_star(g: &Graph) -> GraphStar {
    let m = g.vertex_count();
    let n = m + 2;
    let (zero, one) = (m, m + 1);
    let mut table = vec![zero; n * n];
    for a in 0..n {
        for b in 0..n {
            let edge = a < m && b < m && g.has_edge(a, b);
            if edge || (a == b && a >= m) {
                table[a * n + b] = one;
            }
        }
    }
    GraphStar {
        algebra: Algebra::new(n, [("f", 2, table)]).expect("valid table"),
        zero,
        one,
    }
}

/// Definability of `r` (over the vertices) in the graph itself: every partial
/// isomorphism on at most `arity(r)` vertices must keep `r` invariant.
pub fn graph_oracle_definable(g: &Graph, r: &Relation, budget: u64) -> Result<bool, DecideError> {
    r.check_universe(g.vertex_count())?;
    let m = g.vertex_count();
    let mut candidates = 0u64;
    for a in r.iter() {
        let dom = crate::preprocess::squash(a);
        // injective images of `dom`, extended one vertex at a time
        let mut image: Vec<usize> = Vec::with_capacity(dom.len());
        let mut stack: Vec<usize> = vec![0];
        while let Some(next) = stack.pop() {
            if next >= m {
                image.pop();
                continue;
            }
            stack.push(next + 1);
            if image.contains(&next) {
                continue;
            }
            let i = image.len();
            let ok = (0..i).all(|j| g.has_edge(dom[j], dom[i]) == g.has_edge(image[j], next));
            if !ok {
                continue;
            }
            image.push(next);
            if image.len() == dom.len() {
                candidates += 1;
                if candidates > budget {
                    return Err(DecideError::OracleBudget { limit: budget });
                }
                let mapped: Vec<usize> = a
                    .iter()
                    .map(|x| image[dom.iter().position(|d| d == x).unwrap()])
                    .collect();
                if !r.contains(&mapped) {
                    return Ok(false);
                }
                image.pop();
            } else {
                stack.push(0);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::diamond;

    const BOT: Element = 0;
    const U: Element = 1;
    const U2: Element = 2;
    const TOP: Element = 3;

    fn order_pairs() -> Relation {
        let d = diamond();
        Relation::new(
            2,
            Relation::full(4, 2)
                .iter()
                .filter(|p| d.apply(1, p) == p[1])
                .cloned(),
        )
        .unwrap()
    }

    #[test]
    fn subuniverses_of_the_diamond() {
        let d = diamond();
        let subs = enumerate_subuniverses(&d, 2);
        for s in [
            vec![BOT, TOP],
            vec![U, TOP],
            vec![BOT, U],
            vec![BOT, U, U2, TOP],
        ] {
            assert!(subs.contains(&s), "{s:?}");
        }
        assert!(subs
            .windows(2)
            .all(|w| (w[0].len(), &w[0]) < (w[1].len(), &w[1])));
        assert!(subs.iter().all(|s| d.is_subuniverse(s)));
        let one = Algebra::new(1, [("f", 1, vec![0])]).unwrap();
        assert_eq!(enumerate_subuniverses(&one, 3), vec![vec![0]]);
        assert_eq!(
            enumerate_subisomorphisms(&one, 1, DEFAULT_BUDGET)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn subisomorphisms_of_the_diamond() {
        let d = diamond();
        let all = enumerate_subisomorphisms(&d, 2, DEFAULT_BUDGET).unwrap();
        let gamma = Subisomorphism::new(vec![BOT, TOP], vec![U, TOP]).unwrap();
        assert!(all.contains(&gamma));
        for s in enumerate_subuniverses(&d, 2) {
            assert!(all.contains(&Subisomorphism::identity(&s)));
        }
        let canon: std::collections::HashSet<_> =
            all.iter().map(Subisomorphism::canonical).collect();
        for g in &all {
            assert!(g.verify(&d).is_ok());
            assert!(canon.contains(&g.inverse().canonical()));
        }
        assert!(matches!(
            enumerate_subisomorphisms(&d, 2, 3),
            Err(DecideError::OracleBudget { limit: 3 })
        ));
    }

    #[test]
    fn oracle_on_the_diamond() {
        let d = diamond();
        let le = order_pairs();
        assert_eq!(le.len(), 9);
        assert!(oracle_definable(&d, &le, DEFAULT_BUDGET)
            .unwrap()
            .is_definable());

        let r = Relation::new(2, [vec![BOT, U], vec![BOT, U2], vec![BOT, TOP]]).unwrap();
        let dec = oracle_definable(&d, &r, DEFAULT_BUDGET).unwrap();
        let c = dec.counterexample().expect("not definable");
        assert!(c.verify(&d, &r).is_ok());
        assert!(oracle_definable(&d, &Relation::empty(2), DEFAULT_BUDGET)
            .unwrap()
            .is_definable());
    }

    #[test]
    fn graph_star_table() {
        let g = Graph::new(3, [(0, 1), (2, 1)]).unwrap();
        let star = graph_star(&g);
        assert_eq!(star.algebra.size(), 5);
        let f = |a, b| star.algebra.apply(0, &[a, b]);
        assert_eq!(f(0, 1), star.one);
        assert_eq!(f(1, 2), star.one);
        assert_eq!(f(0, 2), star.zero);
        assert_eq!(f(0, 0), star.zero);
        assert_eq!(f(star.zero, star.zero), star.one);
        assert_eq!(f(star.one, star.one), star.one);
        assert_eq!(f(star.zero, star.one), star.zero);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(Graph::new(2, [(1, 1)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn graph_oracle_examples() {
        // path 0-1-2 plus isolated 3
        let g = Graph::new(4, [(0, 1), (1, 2)]).unwrap();
        let edge_pairs =
            Relation::new(2, [vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 1]]).unwrap();
        assert!(graph_oracle_definable(&g, &edge_pairs, DEFAULT_BUDGET).unwrap());
        let one_edge = Relation::new(2, [vec![0, 1]]).unwrap();
        assert!(!graph_oracle_definable(&g, &one_edge, DEFAULT_BUDGET).unwrap());

        let single = Graph::new(2, [(0, 1)]).unwrap();
        let pairs = Relation::new(2, [vec![0, 1], vec![1, 0]]).unwrap();
        assert!(graph_oracle_definable(&single, &pairs, DEFAULT_BUDGET).unwrap());

        let empty = Graph::new(3, []).unwrap();
        let diagonal = Relation::new(2, (0..3).map(|i| vec![i, i])).unwrap();
        assert!(graph_oracle_definable(&empty, &diagonal, DEFAULT_BUDGET).unwrap());
        let unary = Relation::new(1, [vec![0]]).unwrap();
        assert!(!graph_oracle_definable(&empty, &unary, DEFAULT_BUDGET).unwrap());
    }
}
