//! The orbit-merging decider.
//!
//! Repetition-free tuples of every arity in `spec(R)` start in singleton
//! orbits labelled with their membership vector. The decider walks the tree
//! of subuniverses depth first. A tuple whose type is unknown gets its
//! signature computed; if some orbit already carries that type, the
//! subisomorphism between the two generated subalgebras is used to merge
//! every pair of orbits it connects. Merging two orbits with different
//! membership vectors refutes definability.

use std::collections::HashMap;
use std::rc::Rc;

use tracing::{debug, trace};

use crate::algebra::{Algebra, Element};
pub use crate::decision::Options;
use crate::decision::{check_deadline, Counterexample, DecideError, Decision};
use crate::isotype::{iso_type, IsoSignature, IsoType, Subisomorphism};
use crate::preprocess::{decompose, distinct_tuples, rel_type, TargetBundle};
use crate::relation::Relation;
use crate::syntax::QfFormula;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergingStats {
    pub iso_type_calls: usize,
    pub merges: usize,
    pub pushes: usize,
    pub max_stack: usize,
    pub invariant_checks: usize,
}

#[derive(Debug, Clone)]
struct Tag {
    iso_type: Rc<IsoType>,
    universe: Rc<Vec<Element>>,
}

#[derive(Debug, Clone)]
struct Orbit {
    members: Vec<u32>,
    rt: u32,
    tag: Option<Tag>,
}

const NONE: u32 = u32::MAX;
const DENSE_LIMIT: usize = 1 << 24;

#[derive(Debug)]
enum TupleIndex {
    Dense(Vec<u32>),
    Sparse(HashMap<usize, u32>),
}

#[derive(Debug)]
struct ArityStore {
    k: usize,
    tuples: Vec<Vec<Element>>,
    index: TupleIndex,
    orbit_of: Vec<u32>,
    orbits: Vec<Option<Orbit>>,
    tags: HashMap<Rc<IsoType>, u32>,
}

impl ArityStore {
    fn code(n: usize, t: &[Element]) -> usize {
        t.iter().fold(0usize, |acc, &x| acc * n + x)
    }

    fn id(&self, n: usize, t: &[Element]) -> u32 {
        let code = Self::code(n, t);
        let id = match &self.index {
            TupleIndex::Dense(v) => v[code],
            TupleIndex::Sparse(m) => m.get(&code).copied().unwrap_or(NONE),
        };
        debug_assert_ne!(id, NONE, "{t:?} is not a repetition-free tuple");
        id
    }
}

/// Why two orbits could not be merged: `a` and `gamma(a)` have different membership vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub a: Vec<Element>,
    pub b: Vec<Element>,
    pub gamma: Subisomorphism,
}

/// A read-only view of one orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitView {
    pub members: Vec<Vec<Element>>,
    pub rel_type: Vec<bool>,
    pub iso_type: Option<IsoType>,
    pub universe: Option<Vec<Element>>,
}

/// The orbit partitions of `A^(k)` for every `k` in the spectrum of the target.
#[derive(Debug)]
pub struct OrbitStore {
    n: usize,
    slots: Vec<ArityStore>,
    rt_vectors: Vec<Vec<bool>>,
    merges: usize,
}

impl OrbitStore {
    pub fn new(alg: &Algebra, bundle: &TargetBundle) -> OrbitStore {
        let n = alg.size();
        let mut rt_ids: HashMap<Vec<bool>, u32> = HashMap::new();
        let mut rt_vectors = Vec::new();
        let mut slots = Vec::new();
        for &k in bundle.spec() {
            let tuples: Vec<Vec<Element>> = distinct_tuples(n, k).collect();
            let total = (n as u128).pow(k as u32);
            let mut index = if total <= DENSE_LIMIT as u128 {
                TupleIndex::Dense(vec![NONE; total as usize])
            } else {
                TupleIndex::Sparse(HashMap::new())
            };
            let mut orbit_of = Vec::with_capacity(tuples.len());
            let mut orbits = Vec::with_capacity(tuples.len());
            for (id, t) in tuples.iter().enumerate() {
                let code = ArityStore::code(n, t);
                match &mut index {
                    TupleIndex::Dense(v) => v[code] = id as u32,
                    TupleIndex::Sparse(m) => {
                        m.insert(code, id as u32);
                    }
                }
                let rt = rel_type(t, bundle);
                let next = rt_ids.len() as u32;
                let rt = *rt_ids.entry(rt.clone()).or_insert_with(|| {
                    rt_vectors.push(rt);
                    next
                });
                orbit_of.push(id as u32);
                orbits.push(Some(Orbit {
                    members: vec![id as u32],
                    rt,
                    tag: None,
                }));
            }
            slots.push(ArityStore {
                k,
                tuples,
                index,
                orbit_of,
                orbits,
                tags: HashMap::new(),
            });
        }
        OrbitStore {
            n,
            slots,
            rt_vectors,
            merges: 0,
        }
    }

    fn slot_of(&self, k: usize) -> Option<usize> {
        self.slots.iter().position(|s| s.k == k)
    }

    fn orbit(&self, slot: usize, id: u32) -> &Orbit {
        let s = &self.slots[slot];
        s.orbits[s.orbit_of[id as usize] as usize]
            .as_ref()
            .expect("live orbit")
    }

    fn is_tagged(&self, slot: usize, id: u32) -> bool {
        self.orbit(slot, id).tag.is_some()
    }

    /// Number of orbits of arity `k` (zero when `k` is not in the spectrum).
    pub fn orbit_count(&self, k: usize) -> usize {
        self.slot_of(k)
            .map(|s| self.slots[s].orbits.iter().filter(|o| o.is_some()).count())
            .unwrap_or(0)
    }

    /// The orbit of a repetition-free tuple whose length is in the spectrum.
    pub fn orbit_of(&self, t: &[Element]) -> Option<OrbitView> {
        let slot = self.slot_of(t.len())?;
        if t.iter().any(|&x| x >= self.n) || !crate::preprocess::is_repetition_free(t) {
            return None;
        }
        let s = &self.slots[slot];
        let o = self.orbit(slot, s.id(self.n, t));
        let mut members: Vec<Vec<Element>> = o
            .members
            .iter()
            .map(|&m| s.tuples[m as usize].clone())
            .collect();
        members.sort();
        Some(OrbitView {
            members,
            rel_type: self.rt_vectors[o.rt as usize].clone(),
            iso_type: o.tag.as_ref().map(|t| (*t.iso_type).clone()),
            universe: o.tag.as_ref().map(|t| (*t.universe).clone()),
        })
    }

    /// Annotates the orbit of `t` with its signature.
    ///
    /// Panics if the orbit already carries a different type, or if another
    /// orbit of the same arity carries this one.
    pub fn tag_orbit(&mut self, t: &[Element], sig: &IsoSignature) {
        let slot = self.slot_of(t.len()).expect("arity in the spectrum");
        let id = self.slots[slot].id(self.n, t);
        self.tag(slot, id, sig);
    }

    fn tag(&mut self, slot: usize, id: u32, sig: &IsoSignature) {
        let s = &mut self.slots[slot];
        let oid = s.orbit_of[id as usize];
        let orbit = s.orbits[oid as usize].as_mut().expect("live orbit");
        if let Some(existing) = &orbit.tag {
            assert_eq!(
                *existing.iso_type,
                *sig.iso_type(),
                "orbit retagged with a different type"
            );
            return;
        }
        let iso_type = Rc::new(sig.iso_type().clone());
        if let Some(&other) = s.tags.get(&iso_type) {
            panic!("type already tags orbit {other}; tags must be unique per arity");
        }
        s.tags.insert(iso_type.clone(), oid);
        orbit.tag = Some(Tag {
            iso_type,
            universe: Rc::new(sig.universe().to_vec()),
        });
    }

    /// Merges the orbits of `a` and `gamma(a)` for every repetition-free tuple
    /// `a` over the domain of `gamma` whose length is in the spectrum. Stops at
    /// the first pair with different membership vectors.
    pub fn try_merge_orbits(&mut self, gamma: &Subisomorphism) -> Result<(), Conflict> {
        let n = self.n;
        let map = gamma.to_dense(n);
        let mut dom = gamma.domain().to_vec();
        dom.sort_unstable();
        for slot in 0..self.slots.len() {
            let k = self.slots[slot].k;
            for pos in distinct_tuples(dom.len(), k) {
                let a: Vec<Element> = pos.iter().map(|&p| dom[p]).collect();
                let b: Vec<Element> = a.iter().map(|&x| map[x].expect("in domain")).collect();
                let s = &self.slots[slot];
                let (ia, ib) = (s.id(n, &a), s.id(n, &b));
                let (oa, ob) = (s.orbit_of[ia as usize], s.orbit_of[ib as usize]);
                if oa == ob {
                    continue;
                }
                let (rta, rtb) = (
                    s.orbits[oa as usize].as_ref().unwrap().rt,
                    s.orbits[ob as usize].as_ref().unwrap().rt,
                );
                if rta != rtb {
                    debug!(?a, ?b, "membership vectors differ");
                    return Err(Conflict {
                        a,
                        b,
                        gamma: gamma.clone(),
                    });
                }
                self.merge(slot, oa, ob);
            }
        }
        Ok(())
    }

    fn merge(&mut self, slot: usize, first: u32, second: u32) {
        self.merges += 1;
        let s = &mut self.slots[slot];
        let a = s.orbits[first as usize].take().unwrap();
        let b = s.orbits[second as usize].take().unwrap();
        debug_assert!(
            a.tag.is_none() || b.tag.is_none(),
            "two distinct tagged orbits are never connected"
        );
        let tag = a.tag.or(b.tag);
        let (keep, mut big, small) = if a.members.len() >= b.members.len() {
            (first, a.members, b.members)
        } else {
            (second, b.members, a.members)
        };
        for &m in &small {
            s.orbit_of[m as usize] = keep;
        }
        big.extend(small);
        if let Some(t) = &tag {
            s.tags.insert(t.iso_type.clone(), keep);
        }
        s.orbits[keep as usize] = Some(Orbit {
            members: big,
            rt: a.rt,
            tag,
        });
    }

    fn tuple(&self, slot: usize, id: u32) -> &[Element] {
        &self.slots[slot].tuples[id as usize]
    }

    /// Partition, uniform membership vector, isomorphic members, and tag
    /// consistency. Panics on a violation.
    fn check_orbits(
        &self,
        bundle: &TargetBundle,
        sigs: &mut HashMap<Vec<Element>, IsoSignature>,
        alg: &Algebra,
    ) {
        for s in &self.slots {
            let mut seen = vec![false; s.tuples.len()];
            let mut tagged = 0usize;
            for (oid, o) in s.orbits.iter().enumerate() {
                let Some(o) = o else { continue };
                assert!(!o.members.is_empty(), "empty orbit");
                for &m in &o.members {
                    assert!(!seen[m as usize], "tuple in two orbits");
                    seen[m as usize] = true;
                    assert_eq!(s.orbit_of[m as usize] as usize, oid, "stale orbit index");
                    assert_eq!(
                        rel_type(&s.tuples[m as usize], bundle),
                        self.rt_vectors[o.rt as usize],
                        "membership vector differs inside an orbit"
                    );
                }
                let mut sig = |t: &[Element]| -> IsoSignature {
                    sigs.entry(t.to_vec())
                        .or_insert_with(|| iso_type(alg, t).expect("valid tuple"))
                        .clone()
                };
                // a sample of members: the first few and the last few
                let sample: Vec<u32> = if o.members.len() <= 8 {
                    o.members.clone()
                } else {
                    o.members[..4]
                        .iter()
                        .chain(&o.members[o.members.len() - 4..])
                        .copied()
                        .collect()
                };
                let reference = sig(&s.tuples[sample[0] as usize]);
                for &m in &sample[1..] {
                    assert_eq!(
                        sig(&s.tuples[m as usize]).iso_type(),
                        reference.iso_type(),
                        "non-isomorphic tuples share an orbit"
                    );
                }
                if let Some(tag) = &o.tag {
                    tagged += 1;
                    assert_eq!(
                        *tag.iso_type,
                        *reference.iso_type(),
                        "tag differs from member type"
                    );
                    assert_eq!(
                        s.tags.get(&tag.iso_type),
                        Some(&(oid as u32)),
                        "tag index is stale"
                    );
                    let witnessed = o
                        .members
                        .iter()
                        .any(|&m| sig(&s.tuples[m as usize]).universe() == &tag.universe[..]);
                    assert!(witnessed, "tagged universe belongs to no member");
                }
            }
            assert!(seen.iter().all(|&x| x), "orbits do not cover every tuple");
            assert_eq!(tagged, s.tags.len(), "two orbits share a tag");
        }
    }
}

#[derive(Debug)]
struct Entry {
    sub_len: usize,
    sub: Rc<Vec<Element>>,
    pending: Vec<(usize, u32)>,
    cursor: usize,
    generators: Vec<(usize, u32)>,
}

fn pending_for(store: &OrbitStore, sub: &[Element]) -> Vec<(usize, u32)> {
    let mut sorted = sub.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for (slot, s) in store.slots.iter().enumerate() {
        for pos in distinct_tuples(sorted.len(), s.k) {
            let t: Vec<Element> = pos.iter().map(|&p| sorted[p]).collect();
            out.push((slot, s.id(store.n, &t)));
        }
    }
    out
}

pub fn merging_decide(alg: &Algebra, r: &Relation) -> Result<Decision, DecideError> {
    merging_decide_with(alg, r, &Options::default()).map(|(d, _)| d)
}

pub fn merging_decide_with(
    alg: &Algebra,
    r: &Relation,
    options: &Options,
) -> Result<(Decision, MergingStats), DecideError> {
    r.check_universe(alg.size())?;
    let mut stats = MergingStats::default();
    let bundle = decompose(r);
    if bundle.is_empty() {
        return Ok((
            Decision::Definable {
                formula: Some(QfFormula::False),
            },
            stats,
        ));
    }
    let mut store = OrbitStore::new(alg, &bundle);
    let mut check_sigs: HashMap<Vec<Element>, IsoSignature> = HashMap::new();
    let check = |store: &OrbitStore, stats: &mut MergingStats, sigs: &mut HashMap<_, _>| {
        if options.check_invariants {
            stats.invariant_checks += 1;
            store.check_orbits(&bundle, sigs, alg);
        }
    };
    check(&store, &mut stats, &mut check_sigs);

    let universe: Vec<Element> = (0..alg.size()).collect();
    let mut stack = vec![Entry {
        sub_len: alg.size(),
        pending: pending_for(&store, &universe),
        sub: Rc::new(universe),
        cursor: 0,
        generators: Vec::new(),
    }];
    stats.max_stack = 1;
    let mut steps = 0u64;

    while let Some(top) = stack.last_mut() {
        steps += 1;
        if steps.is_multiple_of(64) {
            check_deadline(options.deadline)?;
        }
        if top.cursor == top.pending.len() {
            let done = stack.pop().unwrap();
            if options.check_invariants {
                stats.invariant_checks += 1;
                for (slot, id) in pending_for(&store, &done.sub) {
                    assert!(
                        store.is_tagged(slot, id),
                        "{:?} left a finished subuniverse untagged",
                        store.tuple(slot, id)
                    );
                }
            }
            continue;
        }
        let (slot, id) = top.pending[top.cursor];
        top.cursor += 1;
        if store.is_tagged(slot, id) {
            continue;
        }
        let a = store.tuple(slot, id).to_vec();
        let sig = iso_type(alg, &a).expect("valid tuple");
        stats.iso_type_calls += 1;
        trace!(?a, universe = sig.universe().len(), "computed type");

        let known = if sig.universe().len() == top.sub_len {
            // only the generators' orbits can carry this type
            let hit = top.generators.iter().find_map(|&(gs, gid)| {
                let o = store.orbit(gs, gid);
                o.tag
                    .as_ref()
                    .filter(|t| *t.iso_type == *sig.iso_type())
                    .map(|t| t.universe.clone())
            });
            debug_assert_eq!(
                hit.is_some(),
                store.slots[slot].tags.contains_key(sig.iso_type()),
                "type tagged outside the generators"
            );
            if hit.is_none() {
                store.tag(slot, id, &sig);
                top.generators.push((slot, id));
            }
            hit
        } else {
            let s = &store.slots[slot];
            let hit = s.tags.get(sig.iso_type()).map(|&oid| {
                s.orbits[oid as usize]
                    .as_ref()
                    .unwrap()
                    .tag
                    .as_ref()
                    .unwrap()
                    .universe
                    .clone()
            });
            if hit.is_none() {
                store.tag(slot, id, &sig);
                let sub = sig.universe().to_vec();
                assert!(sub.len() < top.sub_len, "stack sizes must decrease");
                stats.pushes += 1;
                debug!(size = sub.len(), "entering subuniverse");
                stack.push(Entry {
                    sub_len: sub.len(),
                    pending: pending_for(&store, &sub),
                    sub: Rc::new(sub),
                    cursor: 0,
                    generators: vec![(slot, id)],
                });
                stats.max_stack = stats.max_stack.max(stack.len());
            }
            hit
        };

        if let Some(target_universe) = known {
            let gamma = Subisomorphism::new(sig.universe().to_vec(), target_universe.to_vec())
                .expect("universes list distinct elements");
            let before = store.merges;
            let result = store.try_merge_orbits(&gamma);
            stats.merges += store.merges - before;
            if let Err(conflict) = result {
                let c = counterexample(&bundle, conflict);
                debug!(witness_in = ?c.witness_in, witness_out = ?c.witness_out, "not definable");
                return Ok((Decision::NotDefinable(c), stats));
            }
        }
        check(&store, &mut stats, &mut check_sigs);
    }

    Ok((Decision::Definable { formula: None }, stats))
}

fn counterexample(bundle: &TargetBundle, c: Conflict) -> Counterexample {
    let (theta, target) = bundle
        .targets()
        .iter()
        .find(|(_, t)| t.arity() == c.a.len() && t.contains(&c.a) != t.contains(&c.b))
        .expect("differing membership vectors differ at some target");
    if target.contains(&c.a) {
        Counterexample {
            witness_in: theta.expand(&c.a),
            witness_out: theta.expand(&c.b),
            gamma: c.gamma,
        }
    } else {
        Counterexample {
            witness_in: theta.expand(&c.b),
            witness_out: theta.expand(&c.a),
            gamma: c.gamma.inverse(),
        }
    }
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

    #[test]
    fn diamond_order_is_definable() {
        let d = diamond();
        let le = Relation::new(
            2,
            Relation::full(4, 2)
                .iter()
                .filter(|p| d.apply(1, p) == p[1])
                .cloned(),
        )
        .unwrap();
        let (dec, stats) = merging_decide_with(&d, &le, &checked()).unwrap();
        assert!(dec.is_definable());
        assert!(stats.invariant_checks > 0);
    }

    #[test]
    fn diamond_counterexample() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, U], vec![BOT, U2], vec![BOT, TOP]]).unwrap();
        let (dec, _) = merging_decide_with(&d, &r, &checked()).unwrap();
        let c = dec.counterexample().expect("not definable");
        assert_eq!(c.verify(&d, &r), Ok(()));
    }

    #[test]
    fn empty_target() {
        let d = diamond();
        let dec = merging_decide(&d, &Relation::empty(2)).unwrap();
        assert_eq!(dec.formula(), Some(&QfFormula::False));
    }

    #[test]
    fn identity_merges_nothing() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, U]]).unwrap();
        let bundle = decompose(&r);
        let mut store = OrbitStore::new(&d, &bundle);
        assert_eq!(store.orbit_count(2), 12);
        assert!(store
            .try_merge_orbits(&Subisomorphism::identity(&[0, 1, 2, 3]))
            .is_ok());
        assert_eq!(store.orbit_count(2), 12);
    }

    #[test]
    fn merging_singletons() {
        let alg = z2();
        let r = Relation::new(2, [vec![0, 1], vec![1, 0]]).unwrap();
        let bundle = decompose(&r);
        let mut store = OrbitStore::new(&alg, &bundle);
        let swap = Subisomorphism::new(vec![0, 1], vec![1, 0]).unwrap();
        // swap is not an automorphism of Z2, but the store only looks at the map
        assert!(store.try_merge_orbits(&swap).is_ok());
        let view = store.orbit_of(&[0, 1]).unwrap();
        assert_eq!(view.members, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(view.rel_type, vec![true]);
    }

    #[test]
    fn rel_type_conflict() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, U], vec![BOT, U2], vec![BOT, TOP]]).unwrap();
        let bundle = decompose(&r);
        let mut store = OrbitStore::new(&d, &bundle);
        let gamma = Subisomorphism::new(vec![BOT, TOP], vec![U, TOP]).unwrap();
        let conflict = store.try_merge_orbits(&gamma).unwrap_err();
        assert_eq!(conflict.a, vec![BOT, TOP]);
        assert_eq!(conflict.b, vec![U, TOP]);
    }

    #[test]
    fn tags_survive_merges() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, TOP], vec![U, TOP]]).unwrap();
        let bundle = decompose(&r);
        let mut store = OrbitStore::new(&d, &bundle);
        let sig = iso_type(&d, &[BOT, TOP]).unwrap();
        store.tag_orbit(&[BOT, TOP], &sig);
        store.tag_orbit(&[BOT, TOP], &sig);
        let gamma = Subisomorphism::new(vec![BOT, TOP], vec![U, TOP]).unwrap();
        store.try_merge_orbits(&gamma).unwrap();
        let view = store.orbit_of(&[U, TOP]).unwrap();
        assert_eq!(view.iso_type.as_ref(), Some(sig.iso_type()));
        assert_eq!(view.universe.as_deref(), Some(&[BOT, TOP][..]));
    }

    #[test]
    #[should_panic(expected = "tags must be unique")]
    fn duplicate_tags_are_rejected() {
        let d = diamond();
        let r = Relation::new(2, [vec![BOT, TOP]]).unwrap();
        let mut store = OrbitStore::new(&d, &decompose(&r));
        let sig = iso_type(&d, &[BOT, TOP]).unwrap();
        store.tag_orbit(&[BOT, TOP], &sig);
        store.tag_orbit(&[U, TOP], &sig);
    }

    #[test]
    fn full_relation_in_z2() {
        let alg = z2();
        let all = Relation::full(2, 3);
        let (dec, _) = merging_decide_with(&alg, &all, &checked()).unwrap();
        assert!(dec.is_definable());
    }
}
