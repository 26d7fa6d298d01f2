//! Bottom-up tree automata recognising the encodings of instances that
//! satisfy a union of conjunctive queries.
//!
//! States are discovered lazily: transitions are computed on demand for
//! the labels and child states that actually occur, then cached. The
//! deterministic automaton is the subset construction over the same
//! lazy transitions, bounded by a state budget.

mod cq;

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::hash::Hash;
use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::encoding::{EncNode, TreeEncoding};
use crate::error::{Error, Result};
use crate::instance::World;
use crate::query::{CqQuery, UcqQuery};

pub use cq::{CqState, VarSlot};
use cq::CompiledCq;

pub type StateId = u32;
pub type LabelId = u32;

/// Default cap on the number of deterministic states.
pub const DEFAULT_DET_BUDGET: usize = 1_000_000;

const NONE: u32 = u32::MAX;

/// A node label as seen by the automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    /// Bitmask of assigned slots.
    pub mask: u32,
    /// `(own slot, parent slot)` for elements shared with the parent.
    pub overlap: SmallVec<[(u8, u8); 8]>,
    /// Query relation index and argument slots of the node's fact, if the
    /// node carries a fact over a query relation.
    pub fact: Option<(u16, SmallVec<[u8; 4]>)>,
}

#[derive(Debug)]
struct Interner<T> {
    items: Vec<T>,
    ids: FxHashMap<T, u32>,
}

impl<T: Clone + Eq + Hash> Interner<T> {
    fn new() -> Self {
        Interner {
            items: Vec::new(),
            ids: FxHashMap::default(),
        }
    }

    fn intern(&mut self, t: T) -> (u32, bool) {
        if let Some(&id) = self.ids.get(&t) {
            return (id, false);
        }
        let id = self.items.len() as u32;
        self.items.push(t.clone());
        self.ids.insert(t, id);
        (id, true)
    }
}

type Key = (LabelId, u32, u32);

fn key(label: LabelId, kids: &[StateId]) -> Key {
    match *kids {
        [] => (label, NONE, NONE),
        [a] => (label, a, NONE),
        [a, b] => (label, a.min(b), a.max(b)),
        _ => unreachable!("encodings are binary"),
    }
}

#[derive(Debug)]
struct NfaInner {
    states: Interner<(u16, CqState)>,
    labels: Interner<Label>,
    delta: FxHashMap<Key, Arc<[StateId]>>,
}

#[derive(Debug)]
struct Nfa {
    capacity: usize,
    relations: Vec<String>,
    disjuncts: Vec<CompiledCq>,
    inner: Mutex<NfaInner>,
}

impl Nfa {
    fn step(&self, label: LabelId, kids: &[StateId]) -> Arc<[StateId]> {
        let mut inner = self.inner.lock().expect("automaton lock");
        let k = key(label, kids);
        if let Some(t) = inner.delta.get(&k) {
            return t.clone();
        }
        let lab = inner.labels.items[label as usize].clone();
        let mut succ: Vec<(u16, CqState)> = Vec::new();
        if kids.is_empty() {
            for (d, cq) in self.disjuncts.iter().enumerate() {
                succ.extend(cq.step(&lab, &[]).into_iter().map(|s| (d as u16, s)));
            }
        } else {
            let states: Vec<&(u16, CqState)> =
                kids.iter().map(|&s| &inner.states.items[s as usize]).collect();
            let d = states[0].0;
            if states.iter().all(|s| s.0 == d) {
                let refs: Vec<&CqState> = states.iter().map(|s| &s.1).collect();
                succ.extend(self.disjuncts[d as usize].step(&lab, &refs).into_iter().map(|s| (d, s)));
            }
        }
        let mut ids: Vec<StateId> = succ.into_iter().map(|s| inner.states.intern(s).0).collect();
        ids.sort_unstable();
        ids.dedup();
        let ids: Arc<[StateId]> = ids.into();
        inner.delta.insert(k, ids.clone());
        ids
    }

    fn is_final(&self, s: StateId) -> bool {
        let inner = self.inner.lock().expect("automaton lock");
        let (d, st) = &inner.states.items[s as usize];
        self.disjuncts[*d as usize].is_final(st)
    }

    fn describe(&self, s: StateId) -> String {
        let inner = self.inner.lock().expect("automaton lock");
        let (d, st) = &inner.states.items[s as usize];
        format!("d{d} {}", self.disjuncts[*d as usize].describe(st))
    }
}

#[derive(Debug)]
struct DfaInner {
    subsets: Interner<Box<[StateId]>>,
    delta: FxHashMap<Key, StateId>,
    finals: Vec<bool>,
}

#[derive(Debug)]
struct Dfa {
    nfa: Arc<Nfa>,
    budget: usize,
    inner: Mutex<DfaInner>,
}

impl Dfa {
    fn step(&self, label: LabelId, kids: &[StateId]) -> Result<StateId> {
        let k = key(label, kids);
        let subsets: Vec<Box<[StateId]>> = {
            let inner = self.inner.lock().expect("automaton lock");
            if let Some(&t) = inner.delta.get(&k) {
                return Ok(t);
            }
            kids.iter().map(|&s| inner.subsets.items[s as usize].clone()).collect()
        };
        let mut union: BTreeSet<StateId> = BTreeSet::new();
        match subsets.as_slice() {
            [] => union.extend(self.nfa.step(label, &[]).iter().copied()),
            [a] => {
                for &s in a.iter() {
                    union.extend(self.nfa.step(label, &[s]).iter().copied());
                }
            }
            [a, b] => {
                for &s in a.iter() {
                    for &t in b.iter() {
                        union.extend(self.nfa.step(label, &[s, t]).iter().copied());
                    }
                }
            }
            _ => unreachable!("encodings are binary"),
        }
        let subset: Box<[StateId]> = union.into_iter().collect();
        let is_final = subset.iter().any(|&s| self.nfa.is_final(s));
        let mut inner = self.inner.lock().expect("automaton lock");
        let (id, fresh) = inner.subsets.intern(subset);
        if fresh {
            if inner.subsets.items.len() > self.budget {
                return Err(Error::BudgetExceeded(self.budget));
            }
            inner.finals.push(is_final);
        }
        inner.delta.insert(k, id);
        Ok(id)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Nondeterministic(Arc<Nfa>),
    Deterministic(Arc<Dfa>),
}

/// A bottom-up tree automaton over encoding labels of a fixed slot
/// capacity. Cloning shares the underlying lazily built tables.
#[derive(Debug, Clone)]
pub struct TreeAutomaton {
    kind: Kind,
}

/// Compiles a conjunctive query.
pub fn compile_cq(q: &CqQuery, slot_capacity: usize) -> Result<TreeAutomaton> {
    compile_ucq(
        &UcqQuery {
            disjuncts: vec![q.clone()],
        },
        slot_capacity,
    )
}

/// Compiles a union of conjunctive queries as the disjoint union of the
/// disjunct automata.
pub fn compile_ucq(q: &UcqQuery, slot_capacity: usize) -> Result<TreeAutomaton> {
    if slot_capacity > crate::encoding::MAX_SLOTS {
        return Err(Error::Unsupported(format!("slot capacity {slot_capacity}")));
    }
    for d in &q.disjuncts {
        let arity = d.max_arity();
        if arity > slot_capacity {
            return Err(Error::AtomTooWide {
                arity,
                capacity: slot_capacity,
            });
        }
        if d.atoms.len() > 64 || d.variables.len() > 255 {
            return Err(Error::Unsupported("more than 64 atoms or 255 variables in a disjunct".into()));
        }
    }
    let relations: Vec<String> = q
        .disjuncts
        .iter()
        .flat_map(|d| d.atoms.iter().map(|a| a.relation.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |r: &str| relations.binary_search_by(|x| x.as_str().cmp(r)).expect("query relation") as u16;
    let disjuncts = q.disjuncts.iter().map(|d| CompiledCq::new(d, index)).collect();
    let nfa = Nfa {
        capacity: slot_capacity,
        relations: relations.clone(),
        disjuncts,
        inner: Mutex::new(NfaInner {
            states: Interner::new(),
            labels: Interner::new(),
            delta: FxHashMap::default(),
        }),
    };
    Ok(TreeAutomaton {
        kind: Kind::Nondeterministic(Arc::new(nfa)),
    })
}

/// Subset construction restricted to reachable subsets, built lazily. The
/// empty subset is the sink. Exceeding `budget` states makes the
/// transition that would create the next state fail with
/// [`Error::BudgetExceeded`].
pub fn determinize(a: &TreeAutomaton, budget: usize) -> Result<TreeAutomaton> {
    let nfa = match &a.kind {
        Kind::Deterministic(_) => return Ok(a.clone()),
        Kind::Nondeterministic(n) => n.clone(),
    };
    let mut subsets = Interner::new();
    subsets.intern(Box::<[StateId]>::from([]));
    if budget < 1 {
        return Err(Error::BudgetExceeded(budget));
    }
    let dfa = Dfa {
        nfa,
        budget,
        inner: Mutex::new(DfaInner {
            subsets,
            delta: FxHashMap::default(),
            finals: vec![false],
        }),
    };
    Ok(TreeAutomaton {
        kind: Kind::Deterministic(Arc::new(dfa)),
    })
}

impl TreeAutomaton {
    fn nfa(&self) -> &Nfa {
        match &self.kind {
            Kind::Nondeterministic(n) => n,
            Kind::Deterministic(d) => &d.nfa,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, Kind::Deterministic(_))
    }

    pub fn slot_capacity(&self) -> usize {
        self.nfa().capacity
    }

    /// The sink state of a deterministic automaton.
    pub fn sink(&self) -> Option<StateId> {
        self.is_deterministic().then_some(0)
    }

    /// Number of states discovered so far.
    pub fn num_states(&self) -> usize {
        match &self.kind {
            Kind::Nondeterministic(n) => n.inner.lock().expect("automaton lock").states.items.len(),
            Kind::Deterministic(d) => d.inner.lock().expect("automaton lock").subsets.items.len(),
        }
    }

    /// Number of states of the underlying nondeterministic automaton
    /// discovered so far.
    pub fn num_nondeterministic_states(&self) -> usize {
        self.nfa().inner.lock().expect("automaton lock").states.items.len()
    }

    /// Number of cached transitions.
    pub fn num_transitions(&self) -> usize {
        match &self.kind {
            Kind::Nondeterministic(n) => n.inner.lock().expect("automaton lock").delta.len(),
            Kind::Deterministic(d) => d.inner.lock().expect("automaton lock").delta.len(),
        }
    }

    /// Number of query variables and atoms per disjunct.
    pub fn disjunct_sizes(&self) -> Vec<(usize, usize)> {
        self.nfa().disjuncts.iter().map(|d| (d.vars.len(), d.atoms.len())).collect()
    }

    /// Interns the label of `node`, with or without its fact.
    pub fn label(&self, node: &EncNode, with_fact: bool) -> Result<LabelId> {
        let nfa = self.nfa();
        if node.slots.len() != nfa.capacity {
            return Err(Error::CapacityMismatch {
                automaton: nfa.capacity,
                encoding: node.slots.len(),
            });
        }
        let fact = match &node.fact {
            Some(f) if with_fact => nfa
                .relations
                .binary_search(&f.relation)
                .ok()
                .map(|r| (r as u16, f.slots.iter().map(|&s| s as u8).collect())),
            _ => None,
        };
        let label = Label {
            mask: node.assigned_mask(),
            overlap: node.parent_overlap.iter().map(|&(a, b)| (a as u8, b as u8)).collect(),
            fact,
        };
        Ok(nfa.inner.lock().expect("automaton lock").labels.intern(label).0)
    }

    /// Successor states for a label and 0–2 child states. A deterministic
    /// automaton always returns exactly one state.
    pub fn step(&self, label: LabelId, kids: &[StateId]) -> Result<SmallVec<[StateId; 4]>> {
        match &self.kind {
            Kind::Nondeterministic(n) => Ok(n.step(label, kids).iter().copied().collect()),
            Kind::Deterministic(d) => Ok(SmallVec::from_elem(d.step(label, kids)?, 1)),
        }
    }

    pub fn is_final(&self, s: StateId) -> bool {
        match &self.kind {
            Kind::Nondeterministic(n) => n.is_final(s),
            Kind::Deterministic(d) => d.inner.lock().expect("automaton lock").finals[s as usize],
        }
    }

    /// Human-readable state descriptor.
    pub fn describe(&self, s: StateId) -> String {
        match &self.kind {
            Kind::Nondeterministic(n) => n.describe(s),
            Kind::Deterministic(d) => {
                let subset = d.inner.lock().expect("automaton lock").subsets.items[s as usize].clone();
                let ids: Vec<String> = subset.iter().map(|s| format!("q{s}")).collect();
                format!("{{{}}}", ids.join(","))
            }
        }
    }

    /// Text listing of the discovered states and cached transitions.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let det = self.is_deterministic();
        let _ = writeln!(
            out,
            "automaton {} capacity={} relations={}",
            if det { "deterministic" } else { "nondeterministic" },
            self.slot_capacity(),
            self.nfa().relations.join(",")
        );
        if det {
            let n = self.num_nondeterministic_states();
            let _ = writeln!(out, "base states {n}");
            for s in 0..n as u32 {
                let _ = writeln!(out, "  q{s} {}", self.nfa().describe(s));
            }
        }
        let n = self.num_states();
        let _ = writeln!(out, "states {n}");
        for s in 0..n as u32 {
            let fin = if self.is_final(s) { " final" } else { "" };
            let _ = writeln!(out, "  s{s} {}{fin}", self.describe(s));
        }
        let labels = self.nfa().inner.lock().expect("automaton lock").labels.items.clone();
        let mut rows: Vec<(Key, Vec<StateId>)> = match &self.kind {
            Kind::Nondeterministic(n) => {
                n.inner.lock().expect("automaton lock").delta.iter().map(|(k, v)| (*k, v.to_vec())).collect()
            }
            Kind::Deterministic(d) => {
                d.inner.lock().expect("automaton lock").delta.iter().map(|(k, &v)| (*k, vec![v])).collect()
            }
        };
        rows.sort();
        let _ = writeln!(out, "transitions {}", rows.len());
        for ((l, a, b), to) in rows {
            let kids: Vec<String> = [a, b].iter().filter(|&&s| s != NONE).map(|s| format!("s{s}")).collect();
            let to: Vec<String> = to.iter().map(|s| format!("s{s}")).collect();
            let _ = writeln!(
                out,
                "  {} ({}) -> {{{}}}",
                LabelDisplay(&labels[l as usize], &self.nfa().relations),
                kids.join(","),
                to.join(",")
            );
        }
        out
    }
}

struct LabelDisplay<'a>(&'a Label, &'a [String]);

impl fmt::Display for LabelDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.0;
        let ov: Vec<String> = l.overlap.iter().map(|(a, b)| format!("{a}>{b}")).collect();
        write!(f, "[mask={:b} overlap={}", l.mask, ov.join(","))?;
        match &l.fact {
            None => write!(f, " fact=-]"),
            Some((r, s)) => {
                let s: Vec<String> = s.iter().map(u8::to_string).collect();
                write!(f, " fact={}({})]", self.1[*r as usize], s.join(","))
            }
        }
    }
}

/// Runs the automaton bottom-up on an encoding without uncertain facts.
pub fn run_certain(a: &TreeAutomaton, enc: &TreeEncoding) -> Result<bool> {
    if enc.has_uncertain_facts() {
        return Err(Error::UncertainEncoding);
    }
    run_with(a, enc, |_| true)
}

/// Runs the automaton on the encoding of a possible world: uncertain
/// facts whose variable is not kept are treated as absent.
pub fn run_on_world(a: &TreeAutomaton, enc: &TreeEncoding, w: &World) -> Result<bool> {
    run_with(a, enc, |n| {
        n.fact.as_ref().and_then(|f| f.var).is_none_or(|v| w.contains(v))
    })
}

fn run_with(a: &TreeAutomaton, enc: &TreeEncoding, present: impl Fn(&EncNode) -> bool) -> Result<bool> {
    if enc.slot_capacity != a.slot_capacity() {
        return Err(Error::CapacityMismatch {
            automaton: a.slot_capacity(),
            encoding: enc.slot_capacity,
        });
    }
    let mut sets: Vec<Vec<StateId>> = vec![Vec::new(); enc.nodes.len()];
    for id in enc.postorder() {
        let node = &enc.nodes[id];
        let label = a.label(node, present(node))?;
        let mut out: BTreeSet<StateId> = BTreeSet::new();
        match node.children.as_slice() {
            [] => out.extend(a.step(label, &[])?),
            [c] => {
                for &s in &sets[*c] {
                    out.extend(a.step(label, &[s])?);
                }
            }
            [c1, c2] => {
                for &s in &sets[*c1] {
                    for &t in &sets[*c2] {
                        out.extend(a.step(label, &[s, t])?);
                    }
                }
            }
            _ => return Err(Error::InconsistentEncoding(format!("node {id} has more than two children"))),
        }
        sets[id] = out.into_iter().collect();
    }
    Ok(sets[enc.root()].iter().any(|&s| a.is_final(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceBuilder, TidInstance};
    use crate::query::{parse_query, Query};
    use crate::treedec::{decompose, Heuristic};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ucq(text: &str) -> UcqQuery {
        match parse_query(text).unwrap() {
            Query::Ucq(u) => u,
            Query::Rpq(_) => panic!("expected UCQ"),
        }
    }

    fn enc(inst: &TidInstance, h: Heuristic, cap: usize) -> TreeEncoding {
        let td = decompose(&inst.gaifman_graph(), h);
        crate::encoding::encode_with_capacity(inst, &td, cap).unwrap()
    }

    /// Naive backtracking homomorphism search over the facts of `inst`
    /// present in `w`.
    fn hom_exists(inst: &TidInstance, q: &CqQuery, w: &World) -> bool {
        let facts: Vec<(String, Vec<u32>)> = inst
            .facts()
            .iter()
            .filter(|f| f.var.is_none_or(|v| w.contains(v)))
            .map(|f| (f.relation.clone(), f.args.iter().map(|a| a.0).collect()))
            .collect();
        fn go(i: usize, q: &CqQuery, facts: &[(String, Vec<u32>)], h: &mut Vec<(String, u32)>) -> bool {
            let Some(atom) = q.atoms.get(i) else { return true };
            for (rel, args) in facts {
                if *rel != atom.relation || args.len() != atom.args.len() {
                    continue;
                }
                let mark = h.len();
                let ok = atom.args.iter().zip(args).all(|(x, &e)| match h.iter().find(|(y, _)| y == x) {
                    Some(&(_, f)) => f == e,
                    None => {
                        h.push((x.clone(), e));
                        true
                    }
                });
                if ok && go(i + 1, q, facts, h) {
                    return true;
                }
                h.truncate(mark);
            }
            false
        }
        go(0, q, &facts, &mut Vec::new())
    }

    fn random_instance(rng: &mut ChaCha8Rng, facts: usize, elems: usize) -> TidInstance {
        let mut b = InstanceBuilder::new();
        let names: Vec<String> = (0..elems).map(|i| format!("c{i}")).collect();
        let mut seen = BTreeSet::new();
        while seen.len() < facts {
            let unary = rng.gen_bool(0.25);
            let rel = if unary { "U" } else if rng.gen_bool(0.5) { "R" } else { "S" };
            let args: Vec<&str> = if unary {
                vec![&names[rng.gen_range(0..elems)]]
            } else {
                vec![&names[rng.gen_range(0..elems)], &names[rng.gen_range(0..elems)]]
            };
            if seen.insert((rel, args.clone())) {
                b.fact(rel, &args, 0.5);
            }
        }
        b.build().unwrap()
    }

    fn random_cq(rng: &mut ChaCha8Rng) -> CqQuery {
        let vars = ["x", "y", "z", "w"];
        let n = rng.gen_range(1..=3);
        let atoms = (0..n)
            .map(|_| {
                if rng.gen_bool(0.25) {
                    crate::query::Atom {
                        relation: "U".into(),
                        args: vec![vars[rng.gen_range(0..4)].into()],
                    }
                } else {
                    crate::query::Atom {
                        relation: if rng.gen_bool(0.5) { "R" } else { "S" }.into(),
                        args: vec![vars[rng.gen_range(0..4)].into(), vars[rng.gen_range(0..4)].into()],
                    }
                }
            })
            .collect();
        CqQuery::new(atoms)
    }

    fn all_worlds(inst: &TidInstance) -> Vec<World> {
        let vars: Vec<_> = inst.variables().map(|(v, _)| v).collect();
        (0u32..1 << vars.len())
            .map(|m| World::from_vars(vars.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, v)| *v)))
            .collect()
    }

    #[test]
    fn single_unary_atom() {
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a"], 0.5);
        let inst = b.build().unwrap();
        let a = compile_ucq(&ucq("q() :- R(x)."), 1).unwrap();
        let e = enc(&inst, Heuristic::MinFill, 1);
        assert!(run_on_world(&a, &e, &World::from_vars([crate::instance::VarId(1)])).unwrap());
        assert!(!run_on_world(&a, &e, &World::new()).unwrap());
        assert_eq!(run_certain(&a, &e), Err(Error::UncertainEncoding));
    }

    #[test]
    fn empty_query_accepts_everything() {
        let a = compile_ucq(&ucq("q() :- true."), 2).unwrap();
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 1.0).fact("S", &["b", "c"], 1.0);
        let inst = b.build().unwrap();
        assert!(run_certain(&a, &enc(&inst, Heuristic::MinFill, 2)).unwrap());
        assert_eq!(a.num_states(), 1);
        assert!(run_certain(&a, &enc(&TidInstance::empty(), Heuristic::MinFill, 2)).unwrap());
    }

    #[test]
    fn path_join_on_certain_instances() {
        let a = compile_ucq(&ucq("q() :- R(x, y), S(y, z)."), 2).unwrap();
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 1.0).fact("S", &["b", "c"], 1.0);
        assert!(run_certain(&a, &enc(&b.build().unwrap(), Heuristic::MinFill, 2)).unwrap());
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 1.0).fact("S", &["c", "d"], 1.0);
        assert!(!run_certain(&a, &enc(&b.build().unwrap(), Heuristic::MinFill, 2)).unwrap());
    }

    #[test]
    fn capacity_checks() {
        assert_eq!(
            compile_ucq(&ucq("q() :- T(x, y, z)."), 2).unwrap_err(),
            Error::AtomTooWide { arity: 3, capacity: 2 }
        );
        let a = compile_ucq(&ucq("q() :- R(x, y)."), 3).unwrap();
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 1.0);
        let e = enc(&b.build().unwrap(), Heuristic::MinFill, 2);
        assert!(matches!(run_certain(&a, &e), Err(Error::CapacityMismatch { .. })));
    }

    #[test]
    fn random_cqs_agree_with_homomorphism_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..60 {
            let (nf, ne) = (rng.gen_range(1..=8), rng.gen_range(2..=5));
            let inst = random_instance(&mut rng, nf, ne);
            let q = random_cq(&mut rng);
            let cap = (decompose(&inst.gaifman_graph(), Heuristic::MinFill).width + 1).max(2);
            let a = compile_cq(&q, cap).unwrap();
            let d = determinize(&a, DEFAULT_DET_BUDGET).unwrap();
            let e1 = enc(&inst, Heuristic::MinFill, cap);
            let e2 = enc(&inst, Heuristic::MinDegree, cap);
            for w in all_worlds(&inst) {
                let want = hom_exists(&inst, &q, &w);
                assert_eq!(run_on_world(&a, &e1, &w).unwrap(), want, "round {round}: {q} on {inst:?}");
                assert_eq!(run_on_world(&a, &e2, &w).unwrap(), want, "round {round}");
                assert_eq!(run_on_world(&d, &e1, &w).unwrap(), want, "round {round}");
            }
            let (vars, atoms) = a.disjunct_sizes()[0];
            let bound = (cap as f64 + 2.0).powi(vars as i32) * 2f64.powi(atoms as i32);
            assert!((a.num_states() as f64) <= bound);
            assert!(d.num_states() as f64 <= 2f64.powi(a.num_nondeterministic_states() as i32));
        }
    }

    #[test]
    fn unions_and_duplicated_disjuncts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let nf = rng.gen_range(1..=6);
            let inst = random_instance(&mut rng, nf, 4);
            let q1 = random_cq(&mut rng);
            let q2 = random_cq(&mut rng);
            let cap = (decompose(&inst.gaifman_graph(), Heuristic::MinFill).width + 1).max(2);
            let e = enc(&inst, Heuristic::MinFill, cap);
            let single = compile_cq(&q1, cap).unwrap();
            let dup = compile_ucq(&UcqQuery { disjuncts: vec![q1.clone(), q1.clone()] }, cap).unwrap();
            let both = compile_ucq(&UcqQuery { disjuncts: vec![q1.clone(), q2.clone()] }, cap).unwrap();
            for w in all_worlds(&inst) {
                let one = run_on_world(&single, &e, &w).unwrap();
                assert_eq!(run_on_world(&dup, &e, &w).unwrap(), one);
                let want = hom_exists(&inst, &q1, &w) || hom_exists(&inst, &q2, &w);
                assert_eq!(run_on_world(&both, &e, &w).unwrap(), want);
            }
        }
    }

    #[test]
    fn tiny_budget_is_reported() {
        let a = compile_ucq(&ucq("q() :- R(x, y), R(y, z)."), 2).unwrap();
        let d = determinize(&a, 2).unwrap();
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 1.0).fact("R", &["b", "c"], 1.0).fact("R", &["c", "d"], 1.0);
        let e = enc(&b.build().unwrap(), Heuristic::MinFill, 2);
        assert_eq!(run_certain(&d, &e), Err(Error::BudgetExceeded(2)));
        assert!(determinize(&d, 2).unwrap().is_deterministic());
    }

    #[test]
    fn dump_lists_states() {
        let a = compile_ucq(&ucq("q() :- R(x)."), 1).unwrap();
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a"], 1.0);
        run_certain(&a, &enc(&b.build().unwrap(), Heuristic::MinFill, 1)).unwrap();
        let text = a.dump();
        assert!(text.starts_with("automaton nondeterministic capacity=1 relations=R\n"), "{text}");
        assert!(text.contains("final"));
        assert!(text.contains("fact=R(0)"));
    }
}
