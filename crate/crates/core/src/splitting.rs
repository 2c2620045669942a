//! The block-splitting decider.
//!
//! For each squashed target `R_θ ⊆ A^(m)` one block starts out holding all of
//! `A^(m)`. A mixed block (meeting both `R_θ` and its complement) is refined
//! by evaluating its next pending term `t` on every tuple and grouping the
//! tuples by which witness term `t` agrees with, if any. Terms are generated
//! a depth at a time from the witnesses, always using at least one witness
//! found at the previous depth. Full blocks contribute their formula to the
//! answer; a mixed block with nothing left to evaluate holds two isomorphic
//! tuples on opposite sides of the target.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;
use tracing::{debug, trace};

use crate::algebra::{Algebra, Element};
use crate::decision::{check_deadline, Counterexample, DecideError, Decision, Options};
use crate::isotype::{iso_type, subiso_from_signatures, IsoType, Subisomorphism};
use crate::preprocess::{assemble, decompose, distinct_tuples, recombine};
use crate::relation::Relation;
use crate::syntax::{QfFormula, Term};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplittingStats {
    /// Largest number of term generations any block went through.
    pub max_depth: usize,
    pub blocks_created: usize,
    /// Calls that produced more than one successor.
    pub splits: usize,
    pub full_blocks: usize,
    /// Calls to `process_mixed_block`.
    pub steps: usize,
    pub invariant_checks: usize,
}

/// A tuple in the target, one outside it, and a subisomorphism mapping the first to the second.
pub type Separation = (Vec<Element>, Vec<Element>, Subisomorphism);

type TermId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Var(usize),
    App(usize, Vec<TermId>),
}

#[derive(Debug, Default)]
struct Arena {
    nodes: Vec<Node>,
    lookup: HashMap<Node, TermId>,
}

impl Arena {
    fn intern(&mut self, node: Node) -> TermId {
        if let Some(&id) = self.lookup.get(&node) {
            return id;
        }
        let id = self.nodes.len() as TermId;
        self.nodes.push(node.clone());
        self.lookup.insert(node, id);
        id
    }

    fn term(&self, alg: &Algebra, id: TermId) -> Term {
        match &self.nodes[id as usize] {
            Node::Var(i) => Term::Var(*i),
            Node::App(op, args) => Term::App(
                alg.operation(*op).symbol().to_string(),
                args.iter().map(|&a| self.term(alg, a)).collect(),
            ),
        }
    }
}

/// A term waiting to be evaluated; arguments are positions in the block's witness list.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Pending {
    Var(usize),
    App(usize, Box<[usize]>),
}

/// One link of a block formula: the parent's conjunction plus some atoms.
#[derive(Debug)]
struct Conj {
    parent: Option<Rc<Conj>>,
    // (t, s, equal?)
    atoms: Vec<(TermId, TermId, bool)>,
}

#[derive(Debug, Clone)]
pub struct Block {
    id: usize,
    tuples: Vec<u32>,
    // row-major: value of witness p on tuple i at rows[i * width + p]
    rows: Vec<Element>,
    witnesses: Vec<TermId>,
    new_witnesses: Vec<usize>,
    pending: Rc<[Pending]>,
    cursor: usize,
    formula: Option<Rc<Conj>>,
    step: usize,
    depth: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Number of term generations so far.
    pub fn depth(&self) -> usize {
        self.depth
    }

    fn width(&self) -> usize {
        self.witnesses.len()
    }

    fn row(&self, i: usize) -> &[Element] {
        let w = self.width();
        &self.rows[i * w..(i + 1) * w]
    }

    fn is_terminal(&self) -> bool {
        self.cursor == self.pending.len() && self.new_witnesses.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Full,
    Disposable,
    Mixed,
    TerminalMixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("the block does not meet both the target and its complement")]
    NotMixed,
    #[error("the block still has terms to evaluate")]
    NotTerminal,
    #[error("the chosen tuples are not isomorphic")]
    NotIsomorphic,
}

/// All terms `f(s0,..,s{r-1})` over `witnesses` using at least one of
/// `new_witnesses`: arities ascending, then symbols in declared order, then
/// argument positions lexicographically.
pub fn generate_terms(alg: &Algebra, witnesses: &[Term], new_witnesses: &[Term]) -> Vec<Term> {
    let new: Vec<usize> = new_witnesses
        .iter()
        .filter_map(|t| witnesses.iter().position(|w| w == t))
        .collect();
    generate_positions(alg, witnesses.len(), &new)
        .into_iter()
        .map(|p| match p {
            Pending::Var(i) => Term::Var(i),
            Pending::App(op, args) => Term::App(
                alg.operation(op).symbol().to_string(),
                args.iter().map(|&a| witnesses[a].clone()).collect(),
            ),
        })
        .collect()
}

fn generate_positions(alg: &Algebra, width: usize, new: &[usize]) -> Vec<Pending> {
    let mut is_new = vec![false; width];
    for &p in new {
        is_new[p] = true;
    }
    let mut out = Vec::new();
    if width == 0 {
        return out;
    }
    for r in alg.arities() {
        for (op_idx, op) in alg.operations().iter().enumerate() {
            if op.arity() != r {
                continue;
            }
            let mut pos = vec![0usize; r];
            loop {
                if pos.iter().any(|&p| is_new[p]) {
                    out.push(Pending::App(op_idx, pos.clone().into_boxed_slice()));
                }
                let mut i = r;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    pos[i] += 1;
                    if pos[i] < width {
                        break;
                    }
                    pos[i] = 0;
                }
                if pos.iter().all(|&p| p == 0) {
                    break;
                }
            }
        }
    }
    out
}

/// Picks the first tuple inside and the first outside `target` and connects
/// them by the map between their generated subuniverses.
pub fn extract_counterexample(
    alg: &Algebra,
    tuples: &[Vec<Element>],
    target: &Relation,
) -> Result<(Vec<Element>, Vec<Element>, Subisomorphism), SplitError> {
    let a = tuples
        .iter()
        .find(|t| target.contains(t))
        .ok_or(SplitError::NotMixed)?;
    let b = tuples
        .iter()
        .find(|t| !target.contains(t))
        .ok_or(SplitError::NotMixed)?;
    let sa = iso_type(alg, a).map_err(|_| SplitError::NotIsomorphic)?;
    let sb = iso_type(alg, b).map_err(|_| SplitError::NotIsomorphic)?;
    let gamma = subiso_from_signatures(&sa, &sb).ok_or(SplitError::NotIsomorphic)?;
    Ok((a.clone(), b.clone(), gamma))
}

/// Block refinement for one target of repetition-free `m`-tuples.
pub struct Splitter<'a> {
    alg: &'a Algebra,
    m: usize,
    tuples: Vec<Vec<Element>>,
    in_target: Vec<bool>,
    arena: Arena,
    next_id: usize,
    check: bool,
    pub stats: SplittingStats,
}

impl<'a> Splitter<'a> {
    /// `target` must hold repetition-free tuples.
    pub fn new(alg: &'a Algebra, target: &Relation) -> Splitter<'a> {
        let m = target.arity();
        let tuples: Vec<Vec<Element>> = distinct_tuples(alg.size(), m).collect();
        let in_target = tuples.iter().map(|t| target.contains(t)).collect();
        let mut arena = Arena::default();
        for i in 0..m {
            arena.intern(Node::Var(i));
        }
        Splitter {
            alg,
            m,
            tuples,
            in_target,
            arena,
            next_id: 0,
            check: false,
            stats: SplittingStats::default(),
        }
    }

    fn fresh_id(&mut self) -> usize {
        self.next_id += 1;
        self.stats.blocks_created += 1;
        self.next_id
    }

    /// All of `A^(m)`, no witnesses, pending `x0..x{m-1}`, formula `true`.
    pub fn initial_block(&mut self) -> Block {
        let id = self.fresh_id();
        Block {
            id,
            tuples: (0..self.tuples.len() as u32).collect(),
            rows: Vec::new(),
            witnesses: Vec::new(),
            new_witnesses: Vec::new(),
            pending: (0..self.m).map(Pending::Var).collect(),
            cursor: 0,
            formula: None,
            step: 0,
            depth: 0,
        }
    }

    pub fn classify(&self, b: &Block) -> BlockKind {
        let inside = b
            .tuples
            .iter()
            .filter(|&&t| self.in_target[t as usize])
            .count();
        if inside == b.tuples.len() {
            BlockKind::Full
        } else if inside == 0 {
            BlockKind::Disposable
        } else if b.is_terminal() {
            BlockKind::TerminalMixed
        } else {
            BlockKind::Mixed
        }
    }

    pub fn tuples(&self, b: &Block) -> Vec<Vec<Element>> {
        b.tuples
            .iter()
            .map(|&t| self.tuples[t as usize].clone())
            .collect()
    }

    pub fn witnesses(&self, b: &Block) -> Vec<Term> {
        b.witnesses
            .iter()
            .map(|&w| self.arena.term(self.alg, w))
            .collect()
    }

    pub fn new_witnesses(&self, b: &Block) -> Vec<Term> {
        b.new_witnesses
            .iter()
            .map(|&p| self.arena.term(self.alg, b.witnesses[p]))
            .collect()
    }

    pub fn terms_to_process(&self, b: &Block) -> Vec<Term> {
        b.pending[b.cursor..]
            .iter()
            .map(|p| self.pending_term(b, p))
            .collect()
    }

    fn pending_term(&self, b: &Block, p: &Pending) -> Term {
        match p {
            Pending::Var(i) => Term::Var(*i),
            Pending::App(op, args) => Term::App(
                self.alg.operation(*op).symbol().to_string(),
                args.iter()
                    .map(|&a| self.arena.term(self.alg, b.witnesses[a]))
                    .collect(),
            ),
        }
    }

    /// The block formula; `true` for the root.
    pub fn formula(&self, b: &Block) -> QfFormula {
        let mut chain = Vec::new();
        let mut cur = b.formula.as_ref();
        while let Some(c) = cur {
            chain.push(c);
            cur = c.parent.as_ref();
        }
        let mut atoms = Vec::new();
        for c in chain.iter().rev() {
            for &(t, s, eq) in &c.atoms {
                let (t, s) = (self.arena.term(self.alg, t), self.arena.term(self.alg, s));
                atoms.push(if eq {
                    QfFormula::eq(t, s)
                } else {
                    QfFormula::neq(t, s)
                });
            }
        }
        match atoms.len() {
            0 => QfFormula::True,
            1 => atoms.pop().unwrap(),
            _ => QfFormula::And(atoms),
        }
    }

    /// Starts the next depth: fills the pending list from the witnesses and clears `new_witnesses`.
    fn refill(&mut self, b: &mut Block) {
        let generated = generate_positions(self.alg, b.width(), &b.new_witnesses);
        trace!(block = b.id, terms = generated.len(), "next depth");
        b.pending = generated.into();
        b.cursor = 0;
        b.new_witnesses.clear();
        b.depth += 1;
        self.stats.max_depth = self.stats.max_depth.max(b.depth);
    }

    /// One refinement step on a mixed, non-terminal block.
    pub fn process_mixed_block(&mut self, mut b: Block) -> Vec<Block> {
        self.stats.steps += 1;
        if b.cursor == b.pending.len() {
            self.refill(&mut b);
            if b.pending.is_empty() {
                // no operations: the block is now terminal
                return vec![b];
            }
        }
        let pending = b.pending[b.cursor].clone();
        b.cursor += 1;
        b.step += 1;

        let t = match &pending {
            Pending::Var(i) => self.arena.intern(Node::Var(*i)),
            Pending::App(op, args) => {
                let ids = args.iter().map(|&a| b.witnesses[a]).collect();
                self.arena.intern(Node::App(*op, ids))
            }
        };
        let width = b.width();
        let mut values = Vec::with_capacity(b.tuples.len());
        let mut args_buf = Vec::new();
        for i in 0..b.tuples.len() {
            let v = match &pending {
                Pending::Var(j) => self.tuples[b.tuples[i] as usize][*j],
                Pending::App(op, args) => {
                    let row = b.row(i);
                    args_buf.clear();
                    args_buf.extend(args.iter().map(|&a| row[a]));
                    self.alg.apply(*op, &args_buf)
                }
            };
            values.push(v);
        }
        // bucket[p] gets the tuples on which t agrees with witness p; `width` is the complement
        let mut bucket_of = Vec::with_capacity(b.tuples.len());
        let mut counts = vec![0usize; width + 1];
        for (i, &v) in values.iter().enumerate() {
            let p = b.row(i).iter().position(|&x| x == v).unwrap_or(width);
            counts[p] += 1;
            bucket_of.push(p);
        }

        let nonempty: Vec<usize> = (0..=width).filter(|&p| counts[p] > 0).collect();
        let single = nonempty.len() == 1;
        let mut successors = Vec::with_capacity(nonempty.len());
        for &p in &nonempty {
            let mut tuples = Vec::with_capacity(counts[p]);
            let complement = p == width;
            let new_width = if complement { width + 1 } else { width };
            let mut rows = Vec::with_capacity(counts[p] * new_width);
            for (i, &q) in bucket_of.iter().enumerate() {
                if q == p {
                    tuples.push(b.tuples[i]);
                    rows.extend_from_slice(b.row(i));
                    if complement {
                        rows.push(values[i]);
                    }
                }
            }
            let formula = if single {
                b.formula.clone()
            } else if complement {
                let atoms = nonempty
                    .iter()
                    .filter(|&&q| q < width)
                    .map(|&q| (t, b.witnesses[q], false))
                    .collect();
                Some(Rc::new(Conj {
                    parent: b.formula.clone(),
                    atoms,
                }))
            } else {
                Some(Rc::new(Conj {
                    parent: b.formula.clone(),
                    atoms: vec![(t, b.witnesses[p], true)],
                }))
            };
            let (witnesses, new_witnesses) = if complement {
                let mut w = b.witnesses.clone();
                w.push(t);
                let mut nw = b.new_witnesses.clone();
                nw.push(width);
                (w, nw)
            } else {
                (b.witnesses.clone(), b.new_witnesses.clone())
            };
            let id = if single { b.id } else { self.fresh_id() };
            successors.push(Block {
                id,
                tuples,
                rows,
                witnesses,
                new_witnesses,
                pending: b.pending.clone(),
                cursor: b.cursor,
                formula,
                step: b.step,
                depth: b.depth,
            });
        }
        if !single {
            self.stats.splits += 1;
            debug!(block = b.id, parts = successors.len(), "split");
        }
        if self.check {
            for s in &successors {
                self.check_block(s);
            }
        }
        successors
    }

    /// Runs the block loop; `Ok(formula)` over `x0..x{m-1}` or the separating pair.
    pub fn run(&mut self, options: &Options) -> Result<Result<QfFormula, Separation>, DecideError> {
        self.check = options.check_invariants;
        let mut stack = vec![self.initial_block()];
        let mut full: Vec<Block> = Vec::new();
        let mut disposed: Vec<Block> = Vec::new();
        let mut disjuncts = Vec::new();
        if self.check {
            self.check_block(&stack[0]);
        }
        let mut iterations = 0u64;
        while let Some(b) = stack.pop() {
            iterations += 1;
            if iterations.is_multiple_of(64) {
                check_deadline(options.deadline)?;
            }
            match self.classify(&b) {
                BlockKind::Full => {
                    disjuncts.push(self.formula(&b));
                    self.stats.full_blocks += 1;
                    full.push(b);
                }
                BlockKind::Disposable => {
                    if self.check {
                        disposed.push(b);
                    }
                }
                BlockKind::TerminalMixed => {
                    let members = self.tuples(&b);
                    if self.check {
                        self.check_terminal(&members);
                    }
                    let target = Relation::new(
                        self.m,
                        members.iter().filter(|t| self.tuple_in_target(t)).cloned(),
                    )
                    .expect("arity m");
                    let found = extract_counterexample(self.alg, &members, &target)
                        .expect("tuples of a terminal block are isomorphic");
                    return Ok(Err(found));
                }
                BlockKind::Mixed => {
                    let successors = self.process_mixed_block(b);
                    stack.extend(successors.into_iter().rev());
                }
            }
            if self.check {
                self.check_global(&stack, &full, &disposed);
            }
        }
        Ok(Ok(assemble(disjuncts)))
    }

    fn tuple_in_target(&self, t: &[Element]) -> bool {
        let id = self
            .tuples
            .binary_search_by(|x| x.as_slice().cmp(t))
            .expect("repetition-free");
        self.in_target[id]
    }

    // Witness separation, formula extension and term representation for one block.
    fn check_block(&mut self, b: &Block) {
        self.stats.invariant_checks += 1;
        for i in 0..b.tuples.len() {
            let row = b.row(i);
            for (p, x) in row.iter().enumerate() {
                assert!(
                    !row[..p].contains(x),
                    "two witnesses agree on a member tuple"
                );
            }
        }
        let phi = self.formula(b);
        let mut member = vec![false; self.tuples.len()];
        for &t in &b.tuples {
            member[t as usize] = true;
        }
        for (i, t) in self.tuples.iter().enumerate() {
            let holds = self
                .alg
                .eval_formula(&phi, t)
                .expect("formula over x0..x{m-1}");
            assert_eq!(
                holds, member[i],
                "block formula does not define the block at {t:?}"
            );
        }
        if b.depth <= 2 && self.alg.size() <= 4 {
            self.check_representation(b);
        }
    }

    fn check_representation(&self, b: &Block) {
        let members = self.tuples(b);
        let eval = |t: &Term| -> Vec<Element> {
            members
                .iter()
                .map(|a| self.alg.eval_term(t, a).expect("term over x0..x{m-1}"))
                .collect()
        };
        let witnesses = self.witnesses(b);
        let pending = self.terms_to_process(b);
        let represented: HashMap<Vec<Element>, usize> = witnesses
            .iter()
            .chain(&pending)
            .map(|t| (eval(t), t.depth()))
            .collect();
        let new_or_pending: std::collections::HashSet<Vec<Element>> = self
            .new_witnesses(b)
            .iter()
            .chain(&pending)
            .chain(witnesses.iter().filter(|w| w.depth() < b.depth))
            .map(eval)
            .collect();

        // values of all terms of depth <= d (`all`) and of exact depth d (`exact`) on the block
        let vars: Vec<Vec<Element>> = (0..self.m).map(|i| eval(&Term::Var(i))).collect();
        let mut all: Vec<Vec<Element>> = vars.clone();
        let mut exact: Vec<Vec<Element>> = vars;
        dedup(&mut all);
        dedup(&mut exact);
        for _ in 0..b.depth {
            let mut next_exact = Vec::new();
            for (op_idx, op) in self.alg.operations().iter().enumerate() {
                let r = op.arity();
                let count = all.len().pow(r as u32);
                for code in 0..count {
                    let mut c = code;
                    let mut picks = vec![0usize; r];
                    for slot in picks.iter_mut().rev() {
                        *slot = c % all.len();
                        c /= all.len();
                    }
                    if !picks.iter().any(|&p| exact.contains(&all[p])) {
                        continue;
                    }
                    let v: Vec<Element> = (0..members.len())
                        .map(|i| {
                            let args: Vec<Element> = picks.iter().map(|&p| all[p][i]).collect();
                            self.alg.apply(op_idx, &args)
                        })
                        .collect();
                    next_exact.push(v);
                }
            }
            dedup(&mut next_exact);
            all.extend(next_exact.iter().cloned());
            dedup(&mut all);
            exact = next_exact;
        }
        for v in &all {
            assert!(
                represented.contains_key(v),
                "a term of depth <= {} is not represented",
                b.depth
            );
        }
        for v in &exact {
            assert!(
                new_or_pending.contains(v),
                "a term of depth {} is not represented by the current generation",
                b.depth
            );
        }
    }

    // Disjointness and coverage of the target, and isomorphic tuples never separated.
    fn check_global(&mut self, stack: &[Block], full: &[Block], disposed: &[Block]) {
        self.stats.invariant_checks += 1;
        let mut owner = vec![usize::MAX; self.tuples.len()];
        for b in stack.iter().chain(full).chain(disposed) {
            for &t in &b.tuples {
                assert_eq!(owner[t as usize], usize::MAX, "blocks overlap");
                owner[t as usize] = b.id;
            }
        }
        for (i, &inside) in self.in_target.iter().enumerate() {
            if inside {
                assert_ne!(owner[i], usize::MAX, "a target tuple was lost");
            }
        }
        let mut by_type: HashMap<IsoType, usize> = HashMap::new();
        for (i, t) in self.tuples.iter().enumerate() {
            if owner[i] == usize::MAX {
                continue;
            }
            let ty = iso_type(self.alg, t).expect("valid tuple").into_parts().0;
            let block = *by_type.entry(ty).or_insert(owner[i]);
            assert_eq!(
                block, owner[i],
                "isomorphic tuples ended in different blocks"
            );
        }
    }

    fn check_terminal(&mut self, members: &[Vec<Element>]) {
        self.stats.invariant_checks += 1;
        let first = iso_type(self.alg, &members[0]).expect("valid tuple");
        for t in &members[1..] {
            assert_eq!(
                iso_type(self.alg, t).expect("valid tuple").iso_type(),
                first.iso_type(),
                "terminal block holds non-isomorphic tuples"
            );
        }
    }
}

fn dedup(v: &mut Vec<Vec<Element>>) {
    let mut seen = std::collections::HashSet::new();
    v.retain(|x| seen.insert(x.clone()));
}

pub fn splitting_decide(alg: &Algebra, r: &Relation) -> Result<Decision, DecideError> {
    splitting_decide_with(alg, r, &Options::default()).map(|(d, _)| d)
}

pub fn splitting_decide_with(
    alg: &Algebra,
    r: &Relation,
    options: &Options,
) -> Result<(Decision, SplittingStats), DecideError> {
    r.check_universe(alg.size())?;
    let bundle = decompose(r);
    let mut total = SplittingStats::default();
    let mut parts = Vec::with_capacity(bundle.len());
    for (theta, target) in bundle.targets() {
        let mut splitter = Splitter::new(alg, target);
        let outcome = splitter.run(options);
        merge_stats(&mut total, &splitter.stats);
        match outcome? {
            Ok(phi) => {
                let lifted =
                    recombine(theta, &phi, r.arity()).expect("formula over the squashed variables");
                parts.push(lifted);
            }
            Err((a, b, gamma)) => {
                debug!(pattern = %theta, ?a, ?b, "not definable");
                let c = Counterexample {
                    witness_in: theta.expand(&a),
                    witness_out: theta.expand(&b),
                    gamma,
                };
                return Ok((Decision::NotDefinable(c), total));
            }
        }
    }
    let formula = alg.restore_constants_in(&assemble(parts));
    Ok((
        Decision::Definable {
            formula: Some(formula),
        },
        total,
    ))
}

fn merge_stats(total: &mut SplittingStats, s: &SplittingStats) {
    total.max_depth = total.max_depth.max(s.max_depth);
    total.blocks_created += s.blocks_created;
    total.splits += s.splits;
    total.full_blocks += s.full_blocks;
    total.steps += s.steps;
    total.invariant_checks += s.invariant_checks;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{diamond, z2};

    const BOT: Element = 0;
    const U: Element = 1;
    const U2: Element = 2;
    const TOP: Element = 3;

    fn checked() -> Options {
        Options {
            check_invariants: true,
            deadline: None,
        }
    }

    fn x(i: usize) -> Term {
        Term::Var(i)
    }

    #[test]
    fn diamond_order_formula() {
        let d = diamond();
        let le = Relation::new(
            2,
            Relation::full(4, 2)
                .iter()
                .filter(|p| d.apply(1, p) == p[1])
                .cloned(),
        )
        .unwrap();
        let (dec, stats) = splitting_decide_with(&d, &le, &checked()).unwrap();
        let phi = dec.formula().expect("definable");
        assert_eq!(d.extension(phi, 2).unwrap(), le);
        assert!(stats.invariant_checks > 0);
    }

    #[test]
    fn diamond_counterexample() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, U], vec![BOT, U2], vec![BOT, TOP]]).unwrap();
        let (dec, _) = splitting_decide_with(&d, &r, &checked()).unwrap();
        let c = dec.counterexample().expect("not definable");
        assert_eq!(c.verify(&d, &r), Ok(()));
    }

    #[test]
    fn full_target_is_immediate() {
        let d = diamond();
        let all = Relation::new(2, distinct_tuples(4, 2)).unwrap();
        let (dec, stats) = splitting_decide_with(&d, &all, &checked()).unwrap();
        assert_eq!(d.extension(dec.formula().unwrap(), 2).unwrap(), all);
        assert_eq!(stats.steps, 0);
        assert_eq!(stats.full_blocks, 1);
    }

    #[test]
    fn hand_simulated_steps_in_z2() {
        let alg = z2();
        let target = Relation::new(2, [vec![0, 1]]).unwrap();
        let mut sp = Splitter::new(&alg, &target);
        let b0 = sp.initial_block();
        assert_eq!(sp.classify(&b0), BlockKind::Mixed);
        assert_eq!(sp.terms_to_process(&b0), vec![x(0), x(1)]);

        let mut next = sp.process_mixed_block(b0);
        assert_eq!(next.len(), 1);
        let b1 = next.pop().unwrap();
        assert_eq!(sp.witnesses(&b1), vec![x(0)]);
        assert_eq!(sp.new_witnesses(&b1), vec![x(0)]);
        assert_eq!(sp.formula(&b1), QfFormula::True);
        assert_eq!(b1.step(), 1);

        let mut next = sp.process_mixed_block(b1);
        assert_eq!(next.len(), 1);
        let b2 = next.pop().unwrap();
        assert_eq!(sp.witnesses(&b2), vec![x(0), x(1)]);
        assert_eq!(sp.formula(&b2), QfFormula::True);
        assert!(sp.terms_to_process(&b2).is_empty());

        // refill then pop x0+x0 = 0: equals x0 on (0,1) and x1 on (1,0)
        let next = sp.process_mixed_block(b2);
        assert_eq!(next.len(), 2);
        let plus = |a, b| Term::app("+", vec![a, b]);
        assert_eq!(sp.tuples(&next[0]), vec![vec![0, 1]]);
        assert_eq!(sp.formula(&next[0]), QfFormula::eq(plus(x(0), x(0)), x(0)));
        assert_eq!(sp.tuples(&next[1]), vec![vec![1, 0]]);
        assert_eq!(sp.formula(&next[1]), QfFormula::eq(plus(x(0), x(0)), x(1)));
        assert!(next
            .iter()
            .all(|b| b.depth() == 1 && sp.new_witnesses(b).is_empty()));
        assert_eq!(
            sp.terms_to_process(&next[0]),
            vec![plus(x(0), x(1)), plus(x(1), x(0)), plus(x(1), x(1))]
        );
        assert_eq!(sp.classify(&next[0]), BlockKind::Full);
        assert_eq!(sp.classify(&next[1]), BlockKind::Disposable);
    }

    #[test]
    fn refill_clears_new_witnesses() {
        let alg = z2();
        let target = Relation::new(2, [vec![0, 1]]).unwrap();
        let mut sp = Splitter::new(&alg, &target);
        let mut b = sp.initial_block();
        for _ in 0..2 {
            b = sp.process_mixed_block(b).pop().unwrap();
        }
        sp.refill(&mut b);
        assert!(sp.new_witnesses(&b).is_empty());
        assert_eq!(sp.terms_to_process(&b).len(), 4);
        assert_eq!(sp.witnesses(&b), vec![x(0), x(1)]);
    }

    #[test]
    fn generation_order() {
        let alg = z2();
        let got = generate_terms(&alg, &[x(0), x(1)], &[x(0), x(1)]);
        let plus = |a, b| Term::app("+", vec![a, b]);
        assert_eq!(
            got,
            vec![
                plus(x(0), x(0)),
                plus(x(0), x(1)),
                plus(x(1), x(0)),
                plus(x(1), x(1))
            ]
        );
        let only_second = generate_terms(&alg, &[x(0), x(1)], &[x(1)]);
        assert_eq!(
            only_second,
            vec![plus(x(0), x(1)), plus(x(1), x(0)), plus(x(1), x(1))]
        );
        let unary = Algebra::new(2, [("f", 1, vec![1, 0]), ("g", 1, vec![0, 0])]).unwrap();
        assert_eq!(
            generate_terms(&unary, &[x(0)], &[x(0)]),
            vec![Term::app("f", vec![x(0)]), Term::app("g", vec![x(0)])]
        );
        assert!(generate_terms(&alg, &[x(0)], &[]).is_empty());
    }

    #[test]
    fn counterexample_extraction() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, TOP]]).unwrap();
        let (a, b, gamma) =
            extract_counterexample(&d, &[vec![BOT, TOP], vec![U, TOP]], &r).unwrap();
        assert_eq!((a.clone(), b.clone()), (vec![BOT, TOP], vec![U, TOP]));
        assert_eq!(gamma.verify(&d), Ok(()));
        assert_eq!(gamma.apply_tuple(&a), Some(b));
        assert_eq!(
            extract_counterexample(&d, &[vec![BOT, TOP]], &r),
            Err(SplitError::NotMixed)
        );
    }

    #[test]
    fn no_operations() {
        let alg = Algebra::new(3, Vec::<(&str, usize, Vec<Element>)>::new()).unwrap();
        let r = Relation::new(1, [vec![0]]).unwrap();
        let dec = splitting_decide_with(&alg, &r, &checked()).unwrap().0;
        assert!(dec.counterexample().unwrap().verify(&alg, &r).is_ok());
        let all = Relation::full(3, 2);
        let dec = splitting_decide(&alg, &all).unwrap();
        assert_eq!(alg.extension(dec.formula().unwrap(), 2).unwrap(), all);
    }

    #[test]
    fn constants_are_printed_bare() {
        let alg = Algebra::new(3, [("s", 1, vec![1, 2, 0]), ("c", 0, vec![0])]).unwrap();
        let r = Relation::new(1, [vec![0]]).unwrap();
        let dec = splitting_decide_with(&alg, &r, &checked()).unwrap().0;
        let phi = dec.formula().unwrap();
        assert_eq!(alg.extension(phi, 1).unwrap(), r);
        assert!(
            phi.to_string().contains("=c") || phi.to_string().contains("c="),
            "{phi}"
        );
    }

    #[test]
    fn empty_target() {
        let d = diamond();
        let dec = splitting_decide(&d, &Relation::empty(3)).unwrap();
        assert_eq!(dec.formula(), Some(&QfFormula::False));
    }
}
