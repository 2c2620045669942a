//! Seeded generators for algebras, graphs, formulas and relations.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)` (the
//! `rand_chacha` crate), so a seed fixes the output on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{Algebra, Element};
use crate::oracle::Graph;
use crate::relation::Relation;
use crate::syntax::{QfFormula, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("cyclic factors must have order at least 2, got {0}")]
    SmallFactor(usize),
    #[error("no factors given")]
    NoFactors,
    #[error("group of order {0} is too large")]
    TooLarge(usize),
    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("size must be at least {min}, got {size}")]
    TooSmall { size: usize, min: usize },
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One binary `f` and one ternary `g`.
pub const DEFAULT_SIGNATURE: &[(&str, usize)] = &[("f", 2), ("g", 3)];

/// Every table entry drawn uniformly and independently.
pub fn gen_random_algebra(n: usize, signature: &[(&str, usize)], seed: u64) -> Algebra {
    assert!(n >= 1, "universe must be nonempty");
    let mut rng = rng(seed);
    let ops: Vec<(&str, usize, Vec<Element>)> = signature
        .iter()
        .map(|&(sym, arity)| {
            let len = n.pow(arity as u32);
            (sym, arity, (0..len).map(|_| rng.gen_range(0..n)).collect())
        })
        .collect();
    Algebra::new(n, ops).expect("generated tables are valid")
}

/// `Z_{f0} × .. × Z_{fr}` with componentwise `+`; the first factor is the most significant digit.
pub fn gen_abelian_group(factors: &[usize]) -> Result<Algebra, GenError> {
    if factors.is_empty() {
        return Err(GenError::NoFactors);
    }
    if let Some(&f) = factors.iter().find(|&&f| f < 2) {
        return Err(GenError::SmallFactor(f));
    }
    let n = factors
        .iter()
        .try_fold(1usize, |acc, &f| acc.checked_mul(f))
        .unwrap_or(usize::MAX);
    if n > 1 << 12 {
        return Err(GenError::TooLarge(n));
    }
    let digits = |mut e: usize| -> Vec<usize> {
        let mut d = vec![0; factors.len()];
        for (i, &f) in factors.iter().enumerate().rev() {
            d[i] = e % f;
            e /= f;
        }
        d
    };
    let mut table = Vec::with_capacity(n * n);
    for a in 0..n {
        let da = digits(a);
        for b in 0..n {
            let db = digits(b);
            let sum = factors
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &f)| acc * f + (da[i] + db[i]) % f);
            table.push(sum);
        }
    }
    Ok(Algebra::new(n, [("+", 2, table)]).expect("group table is valid"))
}

/// Factors used for the abelian-group family at a power-of-two size:
/// `Z2^e` up to 8 elements, then the most `Z4` factors among at least three.
pub fn abelian_factors_for_size(size: usize) -> Result<Vec<usize>, GenError> {
    if size < 2 || !size.is_power_of_two() {
        return Err(GenError::NotPowerOfTwo(size));
    }
    let e = size.trailing_zeros() as usize;
    if e <= 3 {
        return Ok(vec![2; e]);
    }
    let m = 3.max(e.div_ceil(2));
    let fours = e - m;
    let mut f = vec![2; m - fours];
    f.extend(std::iter::repeat_n(4, fours));
    Ok(f)
}

/// Subsets of `m` atoms as bitmasks, with `∧`, `∨` and `¬`.
pub fn gen_boolean_algebra(m: usize) -> Result<Algebra, GenError> {
    if m == 0 {
        return Err(GenError::TooSmall { size: 0, min: 1 });
    }
    if m > 12 {
        return Err(GenError::TooLarge(1 << m.min(63)));
    }
    let n = 1usize << m;
    let mask = n - 1;
    let mut meet = Vec::with_capacity(n * n);
    let mut join = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            meet.push(a & b);
            join.push(a | b);
        }
    }
    let complement = (0..n).map(|a| !a & mask).collect();
    Ok(
        Algebra::new(n, [("∧", 2, meet), ("∨", 2, join), ("¬", 1, complement)])
            .expect("valid tables"),
    )
}

/// The four-element lattice `⊥ < u, u' < ⊤` with `∧` and `∨`.
pub fn diamond_lattice() -> Algebra {
    let b = gen_boolean_algebra(2).expect("m = 2");
    let ops: Vec<(&str, usize, Vec<Element>)> = b.operations()[..2]
        .iter()
        .map(|op| (op.symbol(), op.arity(), op.table().to_vec()))
        .collect();
    Algebra::new(4, ops)
        .expect("valid tables")
        .with_element_names(["⊥", "u", "u'", "⊤"].map(String::from).to_vec())
        .expect("four names")
}

/// Each edge present independently with probability `p`.
pub fn gen_random_graph(m: usize, p: f64, seed: u64) -> Graph {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(m, edges).expect("generated graph is valid")
}

/// Each tuple of `A^k` present independently with probability `p`.
pub fn gen_random_relation(n: usize, k: usize, p: f64, seed: u64) -> Relation {
    let mut rng = rng(seed);
    let full = Relation::full(n, k);
    Relation::new(k, full.iter().filter(|_| rng.gen_bool(p)).cloned()).expect("arity k")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormulaBounds {
    /// Maximum term depth.
    pub depth: usize,
    /// Maximum number of atoms.
    pub atoms: usize,
}

impl Default for FormulaBounds {
    fn default() -> Self {
        FormulaBounds { depth: 2, atoms: 8 }
    }
}

fn random_term(alg: &Algebra, k: usize, depth: usize, rng: &mut ChaCha8Rng) -> Term {
    let ops = alg.operations();
    if depth == 0 || ops.is_empty() || rng.gen_bool(0.3) {
        return Term::Var(rng.gen_range(0..k));
    }
    let i = rng.gen_range(0..ops.len());
    let args = (0..ops[i].arity())
        .map(|_| random_term(alg, k, depth - 1, rng))
        .collect();
    alg.restore_constants(&Term::App(ops[i].symbol().to_string(), args))
}

fn combine(mut parts: Vec<QfFormula>, rng: &mut ChaCha8Rng) -> QfFormula {
    if parts.len() == 1 {
        return parts.pop().unwrap();
    }
    let cut = rng.gen_range(1..parts.len());
    let right = parts.split_off(cut);
    let (l, r) = (combine(parts, rng), combine(right, rng));
    if rng.gen_bool(0.5) {
        QfFormula::And(vec![l, r])
    } else {
        QfFormula::Or(vec![l, r])
    }
}

/// A random boolean combination of between 1 and `bounds.atoms` equations
/// between terms of depth at most `bounds.depth` over `x0..x{k-1}`.
pub fn gen_random_formula(alg: &Algebra, k: usize, bounds: FormulaBounds, seed: u64) -> QfFormula {
    assert!(k >= 1 && bounds.atoms >= 1, "bounds must be positive");
    let mut rng = rng(seed);
    let count = rng.gen_range(1..=bounds.atoms);
    let mut atoms: Vec<QfFormula> = (0..count)
        .map(|_| {
            let t = random_term(alg, k, bounds.depth, &mut rng);
            let s = random_term(alg, k, bounds.depth, &mut rng);
            let atom = QfFormula::eq(t, s);
            if rng.gen_bool(1.0 / 3.0) {
                QfFormula::not(atom)
            } else {
                atom
            }
        })
        .collect();
    atoms.shuffle(&mut rng);
    combine(atoms, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::diamond;

    #[test]
    fn random_algebras_are_deterministic() {
        let a = gen_random_algebra(4, DEFAULT_SIGNATURE, 7);
        assert_eq!(a, gen_random_algebra(4, DEFAULT_SIGNATURE, 7));
        assert_eq!(a.operation(0).table().len(), 16);
        assert_eq!(a.operation(1).table().len(), 64);
        assert_ne!(a, gen_random_algebra(4, DEFAULT_SIGNATURE, 8));
    }

    #[test]
    fn entries_look_uniform() {
        let n = 5;
        let mut counts = vec![0usize; n];
        for seed in 0..1000 {
            let a = gen_random_algebra(n, &[("f", 1)], seed);
            counts[a.operation(0).table()[0]] += 1;
        }
        // binomial(1000, 1/5): mean 200, sd ~12.6
        let sd = (1000.0 * 0.2 * 0.8f64).sqrt();
        for c in counts {
            assert!((c as f64 - 200.0).abs() < 5.0 * sd, "{c}");
        }
    }

    #[test]
    fn cyclic_and_product_groups() {
        let z2 = gen_abelian_group(&[2]).unwrap();
        assert_eq!(z2.operation(0).table(), &[0, 1, 1, 0]);
        assert_eq!(gen_abelian_group(&[2, 2, 4]).unwrap().size(), 16);
        let g = gen_abelian_group(&[2, 4]).unwrap();
        let f = |a, b| g.apply(0, &[a, b]);
        for a in 0..8 {
            assert_eq!(f(0, a), a);
            assert!((0..8).any(|b| f(a, b) == 0));
            for b in 0..8 {
                assert_eq!(f(a, b), f(b, a));
                for c in 0..8 {
                    assert_eq!(f(f(a, b), c), f(a, f(b, c)));
                }
            }
        }
        assert!(gen_abelian_group(&[1]).is_err());
        assert!(gen_abelian_group(&[]).is_err());
    }

    #[test]
    fn family_factors() {
        assert_eq!(abelian_factors_for_size(4).unwrap(), vec![2, 2]);
        assert_eq!(abelian_factors_for_size(8).unwrap(), vec![2, 2, 2]);
        assert_eq!(abelian_factors_for_size(16).unwrap(), vec![2, 2, 4]);
        assert_eq!(abelian_factors_for_size(32).unwrap(), vec![2, 4, 4]);
        assert_eq!(abelian_factors_for_size(64).unwrap(), vec![4, 4, 4]);
        assert_eq!(abelian_factors_for_size(128).unwrap(), vec![2, 4, 4, 4]);
        assert!(abelian_factors_for_size(12).is_err());
    }

    #[test]
    fn boolean_algebras() {
        let b2 = gen_boolean_algebra(2).unwrap();
        let d = diamond();
        assert_eq!(b2.operation(0).table(), d.operation(0).table());
        assert_eq!(b2.operation(1).table(), d.operation(1).table());
        assert_eq!(diamond_lattice(), d);

        let b3 = gen_boolean_algebra(3).unwrap();
        let (meet, join, neg) = (0, 1, 2);
        for a in 0..8 {
            assert_eq!(b3.apply(neg, &[b3.apply(neg, &[a])]), a);
            for b in 0..8 {
                let lhs = b3.apply(neg, &[b3.apply(meet, &[a, b])]);
                let rhs = b3.apply(join, &[b3.apply(neg, &[a]), b3.apply(neg, &[b])]);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn random_formulas() {
        let d = diamond();
        let bounds = FormulaBounds::default();
        let phi = gen_random_formula(&d, 2, bounds, 3);
        assert_eq!(phi, gen_random_formula(&d, 2, bounds, 3));
        for seed in 0..50 {
            let phi = gen_random_formula(&d, 3, bounds, seed);
            assert!(phi.atom_count() <= 8);
            assert!(phi.max_var().unwrap() < 3);
            assert!(d.extension(&phi, 3).is_ok());
        }
    }

    #[test]
    fn random_graphs_and_relations() {
        let g = gen_random_graph(6, 0.5, 1);
        assert_eq!(g, gen_random_graph(6, 0.5, 1));
        assert!(g.edges().all(|(a, b)| a < b && b < 6));
        let r = gen_random_relation(3, 2, 0.5, 9);
        assert!(r.iter().all(|t| t.len() == 2 && t.iter().all(|&x| x < 3)));
        assert_eq!(gen_random_relation(3, 2, 1.0, 0).len(), 9);
    }
}
